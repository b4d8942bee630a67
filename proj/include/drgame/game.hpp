#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "drgame/error.hpp"
#include "drgame/model.hpp"
#include "drgame/random.hpp"
#include "drgame/solver.hpp"

namespace drgame {

enum class PlayerOrder {
    /// A fresh seeded permutation of the users on every pass.
    RandomSeeded,
    Cyclic,
};

struct BRDConfig {
    /// Cap on full passes over the users.
    int max_iterations = 150;
    /// A pass whose summed objective improvement is at most this value (cents) ends the run.
    double improvement_tol = 1e-12;
    PlayerOrder order = PlayerOrder::RandomSeeded;
    std::uint64_t seed = 0;
    double budget_tol = default_budget_tol;
    /// Record the potential after every single-user update.
    bool record_potential = true;

    void validate() const
    {
        if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
        if (!(improvement_tol > 0.0)) throw ValidationError("improvement_tol must be positive");
        if (!(budget_tol > 0.0)) throw ValidationError("budget_tol must be positive");
    }
};

struct EquilibriumReport {
    LoadMatrix loads;
    int iterations_used = 0;
    bool converged = false;
    /// Potential at the start, then after every best response.
    std::vector<double> potential_trace;
    /// Improvement still available to each user at termination.
    std::vector<double> per_user_regret;
    std::uint64_t seed = 0;
};

struct EquilibriumCheck {
    std::vector<double> regret;
    double max_regret = 0.0;
    bool is_equilibrium = false;
};

/// Potential of the game: W^DP (weighted, weights E_n / E) or W^HP (exact).
inline double potential(const GameInstance& instance, const LoadMatrix& loads)
{
    if (loads.users() != instance.users() || loads.hours() != instance.hours()) {
        throw ValidationError("load matrix dimensions do not match the instance");
    }
    const auto& cost = instance.cost_model;
    const double a = instance.alpha;
    const auto aggregate = loads.aggregate();
    double value = 0.0;

    if (instance.mechanism == Mechanism::DailyProportional) {
        const double total = instance.total_energy();
        for (const auto& c : instance.consumers) {
            if (!(c.energy_need > 0.0)) {
                throw ValidationError("daily proportional potential needs E_n > 0 for every consumer ('" + c.id +
                                      "' has none)");
            }
        }
        if (a < 1.0) value += (1.0 - a) * total_flexible_cost(cost, aggregate);
        for (std::size_t n = 0; n < instance.users(); ++n) {
            value -= a * total / instance.consumers[n].energy_need * utility(instance.consumers[n], loads.row(n));
        }
        return value;
    }

    double shared = 0.0;
    for (std::size_t h = 0; h < instance.hours(); ++h) {
        double own_squares = 0.0;
        for (std::size_t n = 0; n < instance.users(); ++n) own_squares += loads(n, h) * loads(n, h);
        shared += 0.5 * cost.a2 * (aggregate[h] * aggregate[h] + own_squares) +
                  cost.linear_coefficient(h) * aggregate[h];
    }
    value += (1.0 - a) * shared;
    for (std::size_t n = 0; n < instance.users(); ++n) {
        value -= a * utility(instance.consumers[n], loads.row(n));
    }
    return value;
}

/// Regret of every user: f_n(l) - f_n(BR_n(l_{-n}), l_{-n}) >= 0. The profile is an
/// epsilon-NE when the largest regret is at most `tol`.
inline EquilibriumCheck verify_equilibrium(const GameInstance& instance, const LoadMatrix& loads, double tol,
                                           double budget_tol = default_budget_tol)
{
    check_feasible(instance, loads);
    const auto aggregate = loads.aggregate();
    EquilibriumCheck check;
    check.regret.resize(instance.users());
    for (std::size_t n = 0; n < instance.users(); ++n) {
        const auto qp = detail::assemble_best_response(instance, loads, n, aggregate);
        const auto sol = solve_diagonal_qp(qp, budget_tol);
        check.regret[n] = std::max(0.0, qp_decrease(qp, loads.row(n), sol.x, sol.multiplier));
    }
    check.max_regret = *std::max_element(check.regret.begin(), check.regret.end());
    check.is_equilibrium = check.max_regret <= tol;
    return check;
}

/// Best response dynamics: users repeatedly replace their load by an exact best
/// response to the others. Each pass visits every user once.
inline EquilibriumReport best_response_dynamics(const GameInstance& instance, const LoadMatrix& start,
                                                const BRDConfig& cfg = {})
{
    instance.validate();
    cfg.validate();
    check_feasible(instance, start);

    const std::size_t users = instance.users();
    const std::size_t hours = instance.hours();
    bool trace = cfg.record_potential;
    if (instance.mechanism == Mechanism::DailyProportional) {
        if (!(instance.total_energy() > 0.0)) {
            throw ValidationError("daily proportional billing needs positive total energy");
        }
        trace = trace && std::all_of(instance.consumers.begin(), instance.consumers.end(),
                                     [](const ConsumerSpec& c) { return c.energy_need > 0.0; });
    }

    EquilibriumReport report;
    report.seed = cfg.seed;
    report.loads = start;
    auto& loads = report.loads;
    if (trace) report.potential_trace.push_back(potential(instance, loads));

    std::vector<std::size_t> order(users);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(cfg.seed);

    for (int pass = 1; pass <= cfg.max_iterations; ++pass) {
        if (cfg.order == PlayerOrder::RandomSeeded) std::shuffle(order.begin(), order.end(), rng);
        auto aggregate = loads.aggregate();
        double improvement = 0.0;
        for (const std::size_t n : order) {
            const auto qp = detail::assemble_best_response(instance, loads, n, aggregate);
            const auto sol = solve_diagonal_qp(qp, cfg.budget_tol);
            improvement += std::max(0.0, qp_decrease(qp, loads.row(n), sol.x, sol.multiplier));
            for (std::size_t h = 0; h < hours; ++h) {
                aggregate[h] += sol.x[h] - loads(n, h);
                loads(n, h) = sol.x[h];
            }
            if (trace) report.potential_trace.push_back(potential(instance, loads));
        }
        report.iterations_used = pass;
        if (improvement <= cfg.improvement_tol) {
            report.converged = true;
            break;
        }
    }

    const auto check = verify_equilibrium(instance, loads, cfg.improvement_tol, cfg.budget_tol);
    report.per_user_regret = check.regret;
    return report;
}

/// Best response dynamics started from the preferred profiles.
inline EquilibriumReport best_response_dynamics(const GameInstance& instance, const BRDConfig& cfg = {})
{
    return best_response_dynamics(instance, instance.preferred_loads(), cfg);
}

/// A random point of the feasible set: a uniform draw in each user's box,
/// projected onto the energy constraint.
inline LoadMatrix random_feasible_loads(const GameInstance& instance, Rng& rng)
{
    LoadMatrix loads(instance.users(), instance.hours());
    for (std::size_t n = 0; n < instance.users(); ++n) {
        const auto& c = instance.consumers[n];
        DiagonalQP qp;
        qp.quad.assign(instance.hours(), 1.0);
        qp.lin.resize(instance.hours());
        for (std::size_t h = 0; h < instance.hours(); ++h) {
            qp.lin[h] = -2.0 * uniform(rng, c.lower_bounds[h], c.upper_bounds[h]);
        }
        qp.budget = c.energy_need;
        qp.lower = c.lower_bounds;
        qp.upper = c.upper_bounds;
        loads.set_row(n, solve_diagonal_qp(qp, 1e-12).x);
    }
    return loads;
}

} // namespace drgame
