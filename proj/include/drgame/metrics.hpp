#pragma once

#include <cmath>
#include <optional>

#include "drgame/error.hpp"
#include "drgame/model.hpp"
#include "drgame/solver.hpp"

namespace drgame {

/// Sum of all users' objectives; by cost recovery (1 - a) C(l) - a sum_n u_n.
inline double social_cost(const GameInstance& instance, const LoadMatrix& loads)
{
    if (loads.users() != instance.users() || loads.hours() != instance.hours()) {
        throw ValidationError("load matrix dimensions do not match the instance");
    }
    const auto aggregate = loads.aggregate();
    double total = 0.0;
    for (std::size_t n = 0; n < instance.users(); ++n) {
        total += detail::objective_given_aggregate(instance, loads, n, aggregate);
    }
    return total;
}

inline double system_cost(const GameInstance& instance, const LoadMatrix& loads)
{
    if (loads.hours() != instance.hours()) throw ValidationError("load matrix dimensions do not match the instance");
    const auto aggregate = loads.aggregate();
    return total_flexible_cost(instance.cost_model, aggregate);
}

/// SC(eq) / SC*. The equilibrium is unique, so it is also the worst one. Returns
/// nullopt when SC* vanishes (alpha = 1), where only the limit value 1 is meaningful.
inline std::optional<double> price_of_anarchy(const GameInstance& instance, const LoadMatrix& eq_loads,
                                              double opt_social)
{
    if (opt_social < -1e-9) {
        throw Error("optimal social cost " + std::to_string(opt_social) + " is negative");
    }
    if (instance.alpha == 1.0 || opt_social <= 0.0) return std::nullopt;
    return social_cost(instance, eq_loads) / opt_social;
}

/// C(eq) / C*.
inline double price_of_efficiency(const GameInstance& instance, const LoadMatrix& eq_loads, double opt_system)
{
    if (!(opt_system > 0.0)) {
        throw DegenerateError("price of efficiency is undefined for a non-positive optimal system cost");
    }
    return system_cost(instance, eq_loads) / opt_system;
}

struct EfficiencyRecord {
    double alpha = 0.0;
    Mechanism mechanism = Mechanism::HourlyProportional;
    double social_cost_eq = 0.0;
    double social_cost_opt = 0.0;
    double system_cost_eq = 0.0;
    double system_cost_opt = 0.0;
    std::optional<double> poa;
    double poe = 1.0;

    /// PoA with the alpha -> 1 limit substituted where it is undefined.
    double poa_or_limit() const { return poa.value_or(1.0); }
};

inline EfficiencyRecord evaluate_efficiency(const GameInstance& instance, const LoadMatrix& eq_loads,
                                            double opt_social, double opt_system)
{
    EfficiencyRecord r;
    r.alpha = instance.alpha;
    r.mechanism = instance.mechanism;
    r.social_cost_eq = social_cost(instance, eq_loads);
    r.social_cost_opt = opt_social;
    r.system_cost_eq = system_cost(instance, eq_loads);
    r.system_cost_opt = opt_system;
    r.poa = price_of_anarchy(instance, eq_loads, opt_social);
    r.poe = price_of_efficiency(instance, eq_loads, opt_system);
    return r;
}

} // namespace drgame
