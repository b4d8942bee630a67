#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drgame/error.hpp"

namespace drgame {

// Units: energy in kWh per hour slot, money in cents.

enum class Mechanism { DailyProportional, HourlyProportional };

inline std::string_view to_string(Mechanism m)
{
    return m == Mechanism::DailyProportional ? "dp" : "hp";
}

inline Mechanism parse_mechanism(std::string_view s)
{
    if (s == "dp" || s == "DP") return Mechanism::DailyProportional;
    if (s == "hp" || s == "HP") return Mechanism::HourlyProportional;
    throw ValidationError("unknown billing mechanism '" + std::string(s) + "' (expected dp or hp)");
}

struct HorizonGrid {
    std::size_t hour_count = 24;

    void validate() const
    {
        if (hour_count < 2) throw ValidationError("horizon must contain at least 2 hours");
    }
};

/// One flexible consumer. The preferred profile is the schedule the consumer
/// would follow without incentives; it must itself be feasible.
struct ConsumerSpec {
    std::string id;
    std::vector<double> preferred_profile;
    double energy_need = 0.0;
    std::vector<double> lower_bounds;
    std::vector<double> upper_bounds;
    double preference_weight = 0.0;

    /// Relative tolerance for the energy balance of the preferred profile.
    static constexpr double energy_tolerance = 1e-9;

    void validate(std::size_t hours) const
    {
        auto fail = [&](const std::string& what) {
            throw ValidationError("consumer '" + id + "': " + what);
        };
        if (preferred_profile.size() != hours || lower_bounds.size() != hours ||
            upper_bounds.size() != hours) {
            fail("profile vectors must have length " + std::to_string(hours));
        }
        if (!std::isfinite(preference_weight) || preference_weight < 0.0) {
            fail("preference weight must be finite and >= 0");
        }
        if (!std::isfinite(energy_need) || energy_need < 0.0) fail("energy need must be finite and >= 0");
        const double slack = energy_tolerance * std::max(1.0, energy_need);
        double lo_sum = 0.0, hi_sum = 0.0, pref_sum = 0.0;
        for (std::size_t h = 0; h < hours; ++h) {
            const double lo = lower_bounds[h], hi = upper_bounds[h], pref = preferred_profile[h];
            if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(pref)) {
                fail("non-finite value at hour " + std::to_string(h));
            }
            if (lo < 0.0 || lo > hi) fail("bounds must satisfy 0 <= lower <= upper at hour " + std::to_string(h));
            if (pref < lo - slack || pref > hi + slack) {
                fail("preferred profile outside bounds at hour " + std::to_string(h));
            }
            lo_sum += lo;
            hi_sum += hi;
            pref_sum += pref;
        }
        if (std::abs(pref_sum - energy_need) > slack) {
            fail("preferred profile sums to " + std::to_string(pref_sum) + " but energy need is " +
                 std::to_string(energy_need));
        }
        if (lo_sum > energy_need + slack || hi_sum < energy_need - slack) {
            fail("energy need is not reachable within the power bounds");
        }
    }
};

/// Quadratic provider cost C~(L) = a0 + a1 L + a2 L^2 of the total load, and the
/// aggregate nonflexible load per hour. The cost attributed to flexible load at
/// hour h is C_h(l) = a1_h l + a2 l^2 with a1_h = a1 + 2 a2 NF_h.
struct CostModel {
    double a0 = 0.0;
    double a1 = 0.0;
    double a2 = 1.0;
    std::vector<double> nonflexible_load;

    double linear_coefficient(std::size_t hour) const
    {
        if (hour >= nonflexible_load.size()) {
            throw ValidationError("hour " + std::to_string(hour) + " out of range");
        }
        return a1 + 2.0 * a2 * nonflexible_load[hour];
    }

    double quadratic_coefficient() const { return a2; }

    void validate(std::size_t hours) const
    {
        if (!(a2 > 0.0) || !std::isfinite(a2)) throw ValidationError("cost model requires a2 > 0");
        if (!std::isfinite(a0) || !std::isfinite(a1)) throw ValidationError("cost coefficients must be finite");
        if (nonflexible_load.size() != hours) {
            throw ValidationError("nonflexible load must have length " + std::to_string(hours));
        }
        for (std::size_t h = 0; h < hours; ++h) {
            if (!(nonflexible_load[h] >= 0.0) || !std::isfinite(nonflexible_load[h])) {
                throw ValidationError("nonflexible load must be finite and >= 0 at hour " + std::to_string(h));
            }
        }
    }
};

/// Per-user, per-hour flexible consumption. Row n is the strategy of user n.
class LoadMatrix {
public:
    LoadMatrix() = default;
    LoadMatrix(std::size_t users, std::size_t hours, double fill = 0.0)
        : users_(users), hours_(hours), values_(users * hours, fill)
    {
    }

    std::size_t users() const { return users_; }
    std::size_t hours() const { return hours_; }

    double& operator()(std::size_t n, std::size_t h) { return values_[n * hours_ + h]; }
    double operator()(std::size_t n, std::size_t h) const { return values_[n * hours_ + h]; }

    std::span<double> row(std::size_t n) { return {values_.data() + n * hours_, hours_}; }
    std::span<const double> row(std::size_t n) const { return {values_.data() + n * hours_, hours_}; }

    void set_row(std::size_t n, std::span<const double> values)
    {
        if (values.size() != hours_) throw ValidationError("row length mismatch");
        std::copy(values.begin(), values.end(), row(n).begin());
    }

    /// Aggregate flexible load per hour.
    std::vector<double> aggregate() const
    {
        std::vector<double> total(hours_, 0.0);
        for (std::size_t n = 0; n < users_; ++n) {
            for (std::size_t h = 0; h < hours_; ++h) total[h] += (*this)(n, h);
        }
        return total;
    }

    const std::vector<double>& values() const { return values_; }

    friend bool operator==(const LoadMatrix&, const LoadMatrix&) = default;

private:
    std::size_t users_ = 0;
    std::size_t hours_ = 0;
    std::vector<double> values_;
};

/// The game G_alpha: consumers, cost model, preference factor and billing rule.
struct GameInstance {
    HorizonGrid grid;
    std::vector<ConsumerSpec> consumers;
    CostModel cost_model;
    double alpha = 0.0;
    Mechanism mechanism = Mechanism::HourlyProportional;

    std::size_t users() const { return consumers.size(); }
    std::size_t hours() const { return grid.hour_count; }

    double total_energy() const
    {
        return std::accumulate(consumers.begin(), consumers.end(), 0.0,
                               [](double acc, const ConsumerSpec& c) { return acc + c.energy_need; });
    }

    void validate() const
    {
        grid.validate();
        if (consumers.empty()) throw ValidationError("no consumers");
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
        cost_model.validate(hours());
        for (const auto& c : consumers) c.validate(hours());
    }

    LoadMatrix preferred_loads() const
    {
        LoadMatrix loads(users(), hours());
        for (std::size_t n = 0; n < users(); ++n) loads.set_row(n, consumers[n].preferred_profile);
        return loads;
    }

    GameInstance with(double new_alpha, Mechanism new_mechanism) const
    {
        GameInstance copy = *this;
        copy.alpha = new_alpha;
        copy.mechanism = new_mechanism;
        return copy;
    }
};

/// Throws ValidationError unless every row of `loads` lies in the user's
/// feasible polytope (bounds and energy balance) up to `tol`.
inline void check_feasible(const GameInstance& instance, const LoadMatrix& loads, double tol = 1e-7)
{
    if (loads.users() != instance.users() || loads.hours() != instance.hours()) {
        throw ValidationError("load matrix dimensions do not match the instance");
    }
    for (std::size_t n = 0; n < instance.users(); ++n) {
        const auto& c = instance.consumers[n];
        const double scale = std::max(1.0, c.energy_need);
        double sum = 0.0;
        for (std::size_t h = 0; h < instance.hours(); ++h) {
            const double v = loads(n, h);
            if (!(v >= c.lower_bounds[h] - tol * scale && v <= c.upper_bounds[h] + tol * scale)) {
                throw ValidationError("load of consumer '" + c.id + "' violates its bounds at hour " +
                                      std::to_string(h));
            }
            sum += v;
        }
        if (std::abs(sum - c.energy_need) > tol * scale) {
            throw ValidationError("load of consumer '" + c.id + "' does not meet its energy need");
        }
    }
}

inline double flexible_cost(const CostModel& cost, std::size_t hour, double agg_load)
{
    return cost.linear_coefficient(hour) * agg_load + cost.a2 * agg_load * agg_load;
}

/// Sum over hours of C_h at the given aggregate profile.
inline double total_flexible_cost(const CostModel& cost, std::span<const double> aggregate)
{
    double total = 0.0;
    for (std::size_t h = 0; h < aggregate.size(); ++h) total += flexible_cost(cost, h, aggregate[h]);
    return total;
}

/// u_n = -omega_n * ||profile - preferred||^2 (always <= 0).
inline double utility(const ConsumerSpec& consumer, std::span<const double> profile)
{
    if (profile.size() != consumer.preferred_profile.size()) {
        throw ValidationError("profile length mismatch for consumer '" + consumer.id + "'");
    }
    double dist = 0.0;
    for (std::size_t h = 0; h < profile.size(); ++h) {
        const double d = profile[h] - consumer.preferred_profile[h];
        dist += d * d;
    }
    return -consumer.preference_weight * dist;
}

namespace detail {

inline void check_user_index(const GameInstance& instance, const LoadMatrix& loads, std::size_t n)
{
    if (n >= instance.users()) throw ValidationError("consumer index out of range");
    if (loads.users() != instance.users() || loads.hours() != instance.hours()) {
        throw ValidationError("load matrix dimensions do not match the instance");
    }
}

/// Bill of user n given a precomputed aggregate profile.
inline double bill_given_aggregate(const GameInstance& instance, const LoadMatrix& loads, std::size_t n,
                                   std::span<const double> aggregate)
{
    const auto& cost = instance.cost_model;
    if (instance.mechanism == Mechanism::DailyProportional) {
        const double total = instance.total_energy();
        if (!(total > 0.0)) throw ValidationError("daily proportional billing needs positive total energy");
        return instance.consumers[n].energy_need / total * total_flexible_cost(cost, aggregate);
    }
    // Per-unit price form: l_n^h * C_h(l^h) / l^h = l_n^h * (a1_h + a2 l^h).
    double bill = 0.0;
    for (std::size_t h = 0; h < instance.hours(); ++h) {
        bill += loads(n, h) * (cost.linear_coefficient(h) + cost.a2 * aggregate[h]);
    }
    return bill;
}

inline double objective_given_aggregate(const GameInstance& instance, const LoadMatrix& loads, std::size_t n,
                                        std::span<const double> aggregate)
{
    const double a = instance.alpha;
    double value = -a * utility(instance.consumers[n], loads.row(n));
    if (a < 1.0) value += (1.0 - a) * bill_given_aggregate(instance, loads, n, aggregate);
    return value;
}

} // namespace detail

/// Bill of consumer n under the instance's mechanism. Daily proportional shares
/// use the declared energy needs E_n / E.
inline double bill(const GameInstance& instance, const LoadMatrix& loads, std::size_t n)
{
    detail::check_user_index(instance, loads, n);
    const auto aggregate = loads.aggregate();
    return detail::bill_given_aggregate(instance, loads, n, aggregate);
}

/// f_n^alpha = (1 - alpha) b_n - alpha u_n.
inline double objective(const GameInstance& instance, const LoadMatrix& loads, std::size_t n)
{
    detail::check_user_index(instance, loads, n);
    const auto aggregate = loads.aggregate();
    return detail::objective_given_aggregate(instance, loads, n, aggregate);
}

} // namespace drgame
