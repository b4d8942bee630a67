#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "drgame/analytic.hpp"
#include "drgame/game.hpp"
#include "drgame/metrics.hpp"
#include "drgame/random.hpp"
#include "drgame/solver.hpp"

namespace drgame {

/// Random valid instance: box bounds, reachable energy needs, preferred profile inside the box.
inline GameInstance random_instance(Rng& rng, std::size_t users, std::size_t hours, double alpha, Mechanism mechanism)
{
    GameInstance g;
    g.grid.hour_count = hours;
    g.alpha = alpha;
    g.mechanism = mechanism;
    g.cost_model.a0 = uniform(rng, 0.0, 5.0);
    g.cost_model.a1 = uniform(rng, -1.0, 1.0);
    g.cost_model.a2 = uniform(rng, 0.1, 1.0);
    for (std::size_t h = 0; h < hours; ++h) g.cost_model.nonflexible_load.push_back(uniform(rng, 0.0, 10.0));
    for (std::size_t n = 0; n < users; ++n) {
        ConsumerSpec c;
        c.id = "u" + std::to_string(n);
        for (std::size_t h = 0; h < hours; ++h) {
            const double lo = unit_uniform(rng) < 0.7 ? 0.0 : uniform(rng, 0.0, 0.5);
            c.lower_bounds.push_back(lo);
            c.upper_bounds.push_back(lo + uniform(rng, 0.2, 3.0));
        }
        double min_e = 0.0, max_e = 0.0;
        for (std::size_t h = 0; h < hours; ++h) {
            min_e += c.lower_bounds[h];
            max_e += c.upper_bounds[h];
        }
        c.energy_need = min_e + uniform(rng, 0.1, 0.9) * (max_e - min_e);
        DiagonalQP qp;
        qp.quad.assign(hours, 1.0);
        for (std::size_t h = 0; h < hours; ++h) qp.lin.push_back(-2.0 * uniform(rng, c.lower_bounds[h], c.upper_bounds[h]));
        qp.budget = c.energy_need;
        qp.lower = c.lower_bounds;
        qp.upper = c.upper_bounds;
        c.preferred_profile = solve_diagonal_qp(qp, 1e-12).x;
        c.preference_weight = uniform(rng, 0.2, 2.0);
        g.consumers.push_back(std::move(c));
    }
    g.validate();
    return g;
}

struct ValidationOptions {
    std::uint64_t seed = 1;
    /// Budget tolerance handed to every equilibrium solve; loosening it is the corruption hook.
    double solver_tol = default_budget_tol;
    /// Pass-improvement threshold of the dynamics in the closed-form and uniqueness checks.
    double improvement_tol = 1e-16;
    std::size_t scenarios = 8;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline std::string sci(double v)
{
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << v;
    return s.str();
}

inline CheckResult run_check(const std::string& name, const std::function<std::string(bool&)>& body)
{
    CheckResult r{name, true, {}};
    try {
        r.detail = body(r.passed);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    return r;
}

inline double max_closed_form_error(const analytic::TwoPeriodScenario& s, double alpha, Mechanism m,
                                    const BRDConfig& cfg)
{
    const auto g = analytic::to_game_instance(s, alpha, m);
    const auto eq = best_response_dynamics(g, cfg);
    double err = 0.0;
    if (m == Mechanism::DailyProportional && alpha == 0.0) {
        return std::abs(eq.loads.aggregate()[0] - analytic::dp_aggregate_peak(s, alpha));
    }
    const auto ref = m == Mechanism::DailyProportional ? analytic::dp_equilibrium(s, alpha)
                                                       : analytic::hp_equilibrium(s, alpha);
    for (std::size_t n = 0; n < s.users(); ++n) {
        err = std::max(err, std::abs(eq.loads(n, 0) - ref.peak[n]));
        err = std::max(err, std::abs(eq.loads(n, 1) - ref.offpeak[n]));
    }
    return err;
}

} // namespace detail

/// The oracle suite: every check compares the solvers against an independent reference.
inline std::vector<CheckResult> run_validation(const ValidationOptions& opt = {})
{
    std::vector<CheckResult> out;
    BRDConfig brd;
    brd.max_iterations = 2000;
    brd.improvement_tol = opt.improvement_tol;
    brd.budget_tol = opt.solver_tol;
    brd.order = PlayerOrder::Cyclic;
    brd.record_potential = false;

    for (const Mechanism m : {Mechanism::DailyProportional, Mechanism::HourlyProportional}) {
        const std::string name = std::string(to_string(m)) + "-closed-form-equilibrium";
        out.push_back(detail::run_check(name, [&](bool& ok) {
            Rng rng(mix_seed(opt.seed + 11));
            double worst = 0.0;
            for (std::size_t k = 0; k < opt.scenarios; ++k) {
                const auto s = analytic::random_scenario(rng, 2 + k % 9);
                for (const double alpha : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
                    worst = std::max(worst, detail::max_closed_form_error(s, alpha, m, brd));
                }
            }
            ok = worst <= 1e-6;
            return "max deviation " + detail::sci(worst);
        }));
    }

    for (const Mechanism m : {Mechanism::DailyProportional, Mechanism::HourlyProportional}) {
        const std::string name = std::string(to_string(m)) +
                                 (m == Mechanism::DailyProportional ? "-weighted-potential" : "-exact-potential");
        out.push_back(detail::run_check(name, [&](bool& ok) {
            Rng rng(mix_seed(opt.seed + 23));
            double worst = 0.0;
            for (std::size_t k = 0; k < 10 * opt.scenarios; ++k) {
                const auto g = random_instance(rng, 2 + k % 6, 2 + k % 5, uniform(rng, 0.0, 1.0), m);
                const auto base = random_feasible_loads(g, rng);
                auto moved = base;
                const auto other = random_feasible_loads(g, rng);
                const std::size_t n = k % g.users();
                moved.set_row(n, other.row(n));
                const double weight = m == Mechanism::DailyProportional ? g.consumers[n].energy_need / g.total_energy() : 1.0;
                const double df = objective(g, moved, n) - objective(g, base, n);
                const double dw = weight * (potential(g, moved) - potential(g, base));
                worst = std::max(worst, std::abs(df - dw) / std::max(1.0, std::abs(df)));
            }
            ok = worst <= 1e-9;
            return "max relative mismatch " + detail::sci(worst);
        }));
    }

    out.push_back(detail::run_check("potential-descent", [&](bool& ok) {
        Rng rng(mix_seed(opt.seed + 31));
        double worst = 0.0;
        for (std::size_t k = 0; k < 2 * opt.scenarios; ++k) {
            const Mechanism m = k % 2 ? Mechanism::HourlyProportional : Mechanism::DailyProportional;
            const auto g = random_instance(rng, 3 + k % 8, 4 + k % 6, uniform(rng, 0.0, 1.0), m);
            BRDConfig cfg;
            cfg.seed = k;
            cfg.budget_tol = opt.solver_tol;
            const auto eq = best_response_dynamics(g, random_feasible_loads(g, rng), cfg);
            const auto& t = eq.potential_trace;
            double scale = 1.0;
            for (double v : t) scale = std::max(scale, std::abs(v));
            for (std::size_t i = 1; i < t.size(); ++i) worst = std::max(worst, (t[i] - t[i - 1]) / scale);
        }
        ok = worst <= 1e-9;
        return "largest relative increase " + detail::sci(std::max(worst, 0.0));
    }));

    out.push_back(detail::run_check("equilibrium-uniqueness", [&](bool& ok) {
        Rng rng(mix_seed(opt.seed + 41));
        double worst = 0.0;
        BRDConfig cfg = brd;
        cfg.order = PlayerOrder::RandomSeeded;
        for (std::size_t k = 0; k < 2 * opt.scenarios; ++k) {
            const Mechanism m = k % 2 ? Mechanism::HourlyProportional : Mechanism::DailyProportional;
            const auto g = random_instance(rng, 2 + k % 6, 3 + k % 4, uniform(rng, 0.05, 1.0), m);
            cfg.seed = 2 * k;
            const auto a = best_response_dynamics(g, random_feasible_loads(g, rng), cfg);
            cfg.seed = 2 * k + 1;
            const auto b = best_response_dynamics(g, random_feasible_loads(g, rng), cfg);
            for (std::size_t i = 0; i < a.loads.values().size(); ++i) {
                worst = std::max(worst, std::abs(a.loads.values()[i] - b.loads.values()[i]));
            }
        }
        ok = worst <= 1e-5;
        return "max componentwise gap " + detail::sci(worst);
    }));

    out.push_back(detail::run_check("hp-system-cost-below-dp", [&](bool& ok) {
        Rng rng(mix_seed(opt.seed + 53));
        double worst = -1e300, closed_worst = -1e300;
        for (std::size_t k = 0; k < opt.scenarios; ++k) {
            const auto s = analytic::random_scenario(rng, 2 + k % 9);
            for (const double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                const auto c = analytic::closed_form_costs(s, alpha);
                closed_worst = std::max(closed_worst, c.hp_system_cost - c.dp_system_cost);
                const auto dp = analytic::to_game_instance(s, alpha, Mechanism::DailyProportional);
                const auto hp = analytic::to_game_instance(s, alpha, Mechanism::HourlyProportional);
                const double cd = system_cost(dp, best_response_dynamics(dp, brd).loads);
                const double ch = system_cost(hp, best_response_dynamics(hp, brd).loads);
                worst = std::max(worst, ch - cd);
            }
        }
        ok = closed_worst <= 1e-9 && worst <= 1e-9;
        return "max C_hp - C_dp: closed form " + detail::sci(closed_worst) + ", dynamics " + detail::sci(worst);
    }));

    out.push_back(detail::run_check("dp-social-cost-decreasing", [&](bool& ok) {
        Rng rng(mix_seed(opt.seed + 61));
        std::size_t violations = 0;
        for (std::size_t k = 0; k < opt.scenarios; ++k) {
            const auto s = analytic::random_scenario(rng, 2 + k % 9);
            double prev = analytic::closed_form_costs(s, 0.0).dp_social_cost;
            for (int i = 1; i <= 200; ++i) {
                const double v = analytic::closed_form_costs(s, i / 200.0).dp_social_cost;
                if (!(v < prev)) ++violations;
                prev = v;
            }
        }
        ok = violations == 0;
        return std::to_string(violations) + " non-decreasing steps";
    }));

    out.push_back(detail::run_check("cost-recovery", [&](bool& ok) {
        Rng rng(mix_seed(opt.seed + 71));
        double worst = 0.0;
        for (std::size_t k = 0; k < 20 * opt.scenarios; ++k) {
            const Mechanism m = k % 2 ? Mechanism::HourlyProportional : Mechanism::DailyProportional;
            const auto g = random_instance(rng, 1 + k % 7, 2 + k % 5, 0.5, m);
            const auto loads = random_feasible_loads(g, rng);
            double bills = 0.0;
            for (std::size_t n = 0; n < g.users(); ++n) bills += bill(g, loads, n);
            const double c = system_cost(g, loads);
            worst = std::max(worst, std::abs(bills - c) / std::max(1.0, std::abs(c)));
        }
        ok = worst <= 1e-9;
        return "max relative gap " + detail::sci(worst);
    }));

    out.push_back(detail::run_check("best-response-kkt", [&](bool& ok) {
        Rng rng(mix_seed(opt.seed + 83));
        double worst_kkt = 0.0, worst_budget = 0.0;
        for (std::size_t k = 0; k < 20 * opt.scenarios; ++k) {
            const auto g = random_instance(rng, 3, 2 + k % 6, uniform(rng, 0.0, 1.0),
                                           k % 2 ? Mechanism::HourlyProportional : Mechanism::DailyProportional);
            const auto loads = random_feasible_loads(g, rng);
            const auto qp = assemble_best_response(g, loads, k % 3);
            const auto sol = solve_diagonal_qp(qp, opt.solver_tol);
            double sum = 0.0, scale = 1.0;
            for (std::size_t h = 0; h < qp.quad.size(); ++h) {
                sum += sol.x[h];
                const double grad = 2.0 * qp.quad[h] * sol.x[h] + qp.lin[h] - sol.multiplier;
                scale = std::max({scale, std::abs(qp.lin[h]), std::abs(sol.multiplier)});
                double r = 0.0;
                if (sol.x[h] <= qp.lower[h]) {
                    r = std::max(0.0, -grad);
                } else if (sol.x[h] >= qp.upper[h]) {
                    r = std::max(0.0, grad);
                } else {
                    r = std::abs(grad);
                }
                worst_kkt = std::max(worst_kkt, r / scale);
            }
            worst_budget = std::max(worst_budget, std::abs(sum - qp.budget));
        }
        ok = worst_kkt <= 1e-7 && worst_budget <= 1e-9;
        return "max KKT residual " + detail::sci(worst_kkt) + ", budget error " + detail::sci(worst_budget);
    }));

    return out;
}

} // namespace drgame
