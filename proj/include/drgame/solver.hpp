#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "drgame/error.hpp"
#include "drgame/model.hpp"

namespace drgame {

/// Absolute budget tolerance used when callers do not pass one.
inline constexpr double default_budget_tol = 1e-9;

/// min sum_h quad_h x_h^2 + lin_h x_h  s.t.  sum_h x_h = budget, lower <= x <= upper.
struct DiagonalQP {
    std::vector<double> quad;
    std::vector<double> lin;
    double budget = 0.0;
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t size() const { return quad.size(); }

    double evaluate(std::span<const double> x) const
    {
        double value = 0.0;
        for (std::size_t h = 0; h < size(); ++h) value += (quad[h] * x[h] + lin[h]) * x[h];
        return value;
    }

    void validate(double tol) const
    {
        const std::size_t n = quad.size();
        if (n == 0 || lin.size() != n || lower.size() != n || upper.size() != n) {
            throw ValidationError("diagonal QP vectors must be non-empty and of equal length");
        }
        double lo_sum = 0.0, hi_sum = 0.0;
        for (std::size_t h = 0; h < n; ++h) {
            if (!(quad[h] > 0.0) || !std::isfinite(quad[h])) {
                throw ValidationError("diagonal QP requires strictly positive quadratic terms");
            }
            if (!std::isfinite(lin[h]) || !(lower[h] <= upper[h])) {
                throw ValidationError("diagonal QP has invalid bounds or coefficients at index " +
                                      std::to_string(h));
            }
            lo_sum += lower[h];
            hi_sum += upper[h];
        }
        const double slack = std::max(tol, 1e-12 * std::max(1.0, std::abs(budget)));
        if (lo_sum > budget + slack || hi_sum < budget - slack) {
            throw ValidationError("diagonal QP budget " + std::to_string(budget) + " is outside [" +
                                  std::to_string(lo_sum) + ", " + std::to_string(hi_sum) + "]");
        }
    }
};

struct QPSolution {
    std::vector<double> x;
    /// Lagrange multiplier of the budget constraint.
    double multiplier = 0.0;
    int iterations = 0;
};

namespace detail {

inline double clipped_response(const DiagonalQP& qp, std::size_t h, double lambda)
{
    return std::clamp((lambda - qp.lin[h]) / (2.0 * qp.quad[h]), qp.lower[h], qp.upper[h]);
}

inline double response_sum(const DiagonalQP& qp, double lambda)
{
    double sum = 0.0;
    for (std::size_t h = 0; h < qp.size(); ++h) sum += clipped_response(qp, h, lambda);
    return sum;
}

} // namespace detail

/// Exact minimizer through the KKT conditions: x_h = clip((lambda - lin_h) / (2 quad_h))
/// with lambda located by bisection on the nondecreasing map lambda -> sum_h x_h.
inline QPSolution solve_diagonal_qp(const DiagonalQP& qp, double tol = default_budget_tol)
{
    if (!(tol > 0.0)) throw ValidationError("solver tolerance must be positive");
    qp.validate(tol);

    const std::size_t n = qp.size();
    double lam_lo = std::numeric_limits<double>::infinity();
    double lam_hi = -std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < n; ++h) {
        lam_lo = std::min(lam_lo, 2.0 * qp.quad[h] * qp.lower[h] + qp.lin[h]);
        lam_hi = std::max(lam_hi, 2.0 * qp.quad[h] * qp.upper[h] + qp.lin[h]);
    }

    QPSolution sol;
    auto finish = [&](double lambda) {
        sol.multiplier = lambda;
        sol.x.resize(n);
        for (std::size_t h = 0; h < n; ++h) sol.x[h] = detail::clipped_response(qp, h, lambda);
        return sol;
    };

    // At lam_lo every coordinate sits on its lower bound, at lam_hi on its upper bound.
    if (detail::response_sum(qp, lam_lo) >= qp.budget - tol) return finish(lam_lo);
    if (detail::response_sum(qp, lam_hi) <= qp.budget + tol) return finish(lam_hi);

    constexpr int max_iterations = 200;
    const double scale = std::max({1.0, std::abs(lam_lo), std::abs(lam_hi)});
    for (int it = 1; it <= max_iterations; ++it) {
        const double mid = 0.5 * (lam_lo + lam_hi);
        const double residual = detail::response_sum(qp, mid) - qp.budget;
        sol.iterations = it;
        if (std::abs(residual) <= tol || lam_hi - lam_lo <= 1e-13 * scale) return finish(mid);
        (residual < 0.0 ? lam_lo : lam_hi) = mid;
    }
    throw ConvergenceError("multiplier bisection did not converge (bracket [" + std::to_string(lam_lo) +
                           ", " + std::to_string(lam_hi) + "])");
}

/// Objective decrease qp(from) - qp(to) for two feasible points, where `to`
/// is the solver output with budget multiplier `multiplier`. Written as
/// sum_h (a - b)(q (a + b) + p - lambda) so that the value stays accurate when
/// the two points nearly coincide; the lambda term vanishes on the budget plane.
inline double qp_decrease(const DiagonalQP& qp, std::span<const double> from, std::span<const double> to,
                          double multiplier)
{
    double dec = 0.0;
    for (std::size_t h = 0; h < qp.size(); ++h) {
        const double d = from[h] - to[h];
        dec += d * (qp.quad[h] * (from[h] + to[h]) + qp.lin[h] - multiplier);
    }
    return dec;
}

namespace detail {

/// Block problem of user n for an objective of the form
///   (1 - alpha) * weight * sum_h [a1_h l^h + a2 ((l^h)^2 with coupling)] + alpha * omega ||l_n - pref||^2
/// where `coupling` multiplies a2 * L_{-n}^h in the linear term (2 for a shared
/// quadratic cost, 1 for the hourly per-unit bill).
inline DiagonalQP assemble_block(const GameInstance& instance, const LoadMatrix& loads, std::size_t n,
                                 std::span<const double> aggregate, double weight, double coupling)
{
    const auto& consumer = instance.consumers[n];
    const auto& cost = instance.cost_model;
    const double a = instance.alpha;
    const double omega = consumer.preference_weight;
    const std::size_t hours = instance.hours();

    DiagonalQP qp;
    qp.quad.resize(hours);
    qp.lin.resize(hours);
    qp.budget = consumer.energy_need;
    qp.lower = consumer.lower_bounds;
    qp.upper = consumer.upper_bounds;
    for (std::size_t h = 0; h < hours; ++h) {
        const double others = aggregate[h] - loads(n, h);
        qp.quad[h] = (1.0 - a) * weight * cost.a2 + a * omega;
        qp.lin[h] = (1.0 - a) * weight * (cost.linear_coefficient(h) + coupling * cost.a2 * others) -
                    2.0 * a * omega * consumer.preferred_profile[h];
        if (!(qp.quad[h] > 0.0)) {
            throw DegenerateError("objective of consumer '" + consumer.id +
                                  "' is constant in its own load (alpha = 1 with zero preference weight, "
                                  "or zero billing share at alpha = 0)");
        }
    }
    return qp;
}

inline DiagonalQP assemble_best_response(const GameInstance& instance, const LoadMatrix& loads, std::size_t n,
                                         std::span<const double> aggregate)
{
    if (instance.mechanism == Mechanism::DailyProportional) {
        const double total = instance.total_energy();
        if (!(total > 0.0)) throw ValidationError("daily proportional billing needs positive total energy");
        return assemble_block(instance, loads, n, aggregate, instance.consumers[n].energy_need / total, 2.0);
    }
    return assemble_block(instance, loads, n, aggregate, 1.0, 1.0);
}

inline double social_cost_given_aggregate(const GameInstance& instance, const LoadMatrix& loads,
                                          std::span<const double> aggregate)
{
    double value = 0.0;
    if (instance.alpha < 1.0) value += (1.0 - instance.alpha) * total_flexible_cost(instance.cost_model, aggregate);
    for (std::size_t n = 0; n < instance.users(); ++n) {
        value -= instance.alpha * utility(instance.consumers[n], loads.row(n));
    }
    return value;
}

} // namespace detail

/// The QP whose objective equals l_n -> f_n^alpha(l_n, l_{-n}) up to a constant.
/// DP: quad = (1-a) (E_n/E) a2 + a w,  lin = (1-a) (E_n/E) (a1_h + 2 a2 L_{-n}) - 2 a w pref.
/// HP: quad = (1-a) a2 + a w,          lin = (1-a) (a1_h + a2 L_{-n}) - 2 a w pref.
inline DiagonalQP assemble_best_response(const GameInstance& instance, const LoadMatrix& loads, std::size_t n)
{
    detail::check_user_index(instance, loads, n);
    const auto aggregate = loads.aggregate();
    return detail::assemble_best_response(instance, loads, n, aggregate);
}

/// Cyclic block-coordinate minimization of SC_alpha over the product of the
/// users' polytopes, starting from the preferred profiles. Stops when a full
/// cycle lowers SC by less than tol * max(1, |SC|).
inline LoadMatrix minimize_social_cost(const GameInstance& instance, double tol = 1e-10,
                                       double budget_tol = default_budget_tol)
{
    instance.validate();
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");

    LoadMatrix loads = instance.preferred_loads();
    auto aggregate = loads.aggregate();
    constexpr int max_cycles = 100000;

    for (int cycle = 0; cycle < max_cycles; ++cycle) {
        double decrease = 0.0;
        for (std::size_t n = 0; n < instance.users(); ++n) {
            // alpha = 1 with omega = 0: every feasible point is optimal; keep the preference.
            if (instance.alpha == 1.0 && instance.consumers[n].preference_weight == 0.0) continue;
            const auto qp = detail::assemble_block(instance, loads, n, aggregate, 1.0, 2.0);
            auto sol = solve_diagonal_qp(qp, budget_tol);
            decrease += std::max(0.0, qp_decrease(qp, loads.row(n), sol.x, sol.multiplier));
            for (std::size_t h = 0; h < instance.hours(); ++h) {
                aggregate[h] += sol.x[h] - loads(n, h);
                loads(n, h) = sol.x[h];
            }
        }
        aggregate = loads.aggregate();
        const double sc = detail::social_cost_given_aggregate(instance, loads, aggregate);
        if (decrease <= tol * std::max(1.0, std::abs(sc))) break;
    }
    return loads;
}

/// Minimizer of the system cost sum_h C_h(l^h) over the feasible set.
inline LoadMatrix minimize_system_cost(const GameInstance& instance, double tol = 1e-10,
                                       double budget_tol = default_budget_tol)
{
    return minimize_social_cost(instance.with(0.0, instance.mechanism), tol, budget_tol);
}

} // namespace drgame
