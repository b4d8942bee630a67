#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "drgame/error.hpp"
#include "drgame/model.hpp"
#include "drgame/random.hpp"

namespace drgame::analytic {

// Closed forms for the peak/off-peak game with C_h(l) = l^2, omega_n = 1, no
// nonflexible load and bounds 0 <= l_n^h.

struct TwoPeriodScenario {
    std::vector<double> preferred_peak;
    std::vector<double> energy;

    std::size_t users() const { return energy.size(); }
    double preferred_offpeak(std::size_t n) const { return energy[n] - preferred_peak[n]; }
    double total_energy() const { return std::accumulate(energy.begin(), energy.end(), 0.0); }
    double total_preferred_peak() const { return std::accumulate(preferred_peak.begin(), preferred_peak.end(), 0.0); }
    double total_preferred_offpeak() const { return total_energy() - total_preferred_peak(); }
    /// D = preferred peak minus preferred off-peak aggregate.
    double peak_gap() const { return total_preferred_peak() - total_preferred_offpeak(); }
    /// V_E = sum_n E_n^2 / E^2.
    double energy_concentration() const
    {
        const double e = total_energy();
        double s = 0.0;
        for (double en : energy) s += en * en;
        return s / (e * e);
    }

    /// Rejects scenarios outside the assumptions under which the closed forms hold.
    void validate() const
    {
        const std::size_t n_users = users();
        if (n_users == 0) throw ValidationError("two-period scenario needs at least one user");
        if (preferred_peak.size() != n_users) throw ValidationError("preferred_peak and energy differ in length");
        for (std::size_t n = 0; n < n_users; ++n) {
            if (!(energy[n] > 0.0)) throw ValidationError("user " + std::to_string(n) + " needs positive energy");
            if (preferred_peak[n] < 0.0 || preferred_peak[n] > energy[n]) {
                throw ValidationError("user " + std::to_string(n) + " preferred peak load outside [0, E_n]");
            }
        }
        const double e = total_energy();
        const double peak = total_preferred_peak();
        const double off = e - peak;
        const double eps = 1e-12 * std::max(1.0, e);
        if (peak < 0.5 * e - eps || off > 0.5 * e + eps) {
            throw ValidationError("preferred peak aggregate must be at least E/2");
        }
        for (std::size_t n = 0; n < n_users; ++n) {
            if (preferred_peak[n] / energy[n] + 0.5 < peak / e - eps) {
                throw ValidationError("daily proportional interior condition fails for user " + std::to_string(n));
            }
            if (2.0 * (static_cast<double>(n_users) - 1.0) * preferred_peak[n] < (peak - off) - energy[n] - eps) {
                throw ValidationError("hourly proportional interior condition fails for user " + std::to_string(n));
            }
        }
    }
};

struct TwoPeriodProfile {
    std::vector<double> peak;
    std::vector<double> offpeak;
};

/// phi(alpha) = 2 alpha / ((1 + alpha) + (1 - alpha) N).
inline double phi(double alpha, std::size_t users)
{
    return 2.0 * alpha / ((1.0 + alpha) + (1.0 - alpha) * static_cast<double>(users));
}

/// Unique DP equilibrium for alpha in (0, 1]. At alpha = 0 only the aggregate is determined.
inline TwoPeriodProfile dp_equilibrium(const TwoPeriodScenario& s, double alpha)
{
    s.validate();
    if (alpha == 0.0) {
        throw DegenerateError("DP equilibrium is not unique at alpha = 0; only the aggregate peak load is defined");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");
    const double e = s.total_energy();
    const double shift = 0.5 * (1.0 - alpha) * (s.total_preferred_offpeak() - s.total_preferred_peak());
    TwoPeriodProfile out;
    for (std::size_t n = 0; n < s.users(); ++n) {
        const double peak = s.preferred_peak[n] + s.energy[n] / e * shift;
        out.peak.push_back(peak);
        out.offpeak.push_back(s.energy[n] - peak);
    }
    return out;
}

inline TwoPeriodProfile hp_equilibrium(const TwoPeriodScenario& s, double alpha)
{
    s.validate();
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
    const double f = phi(alpha, s.users());
    const double agg_diff = s.total_preferred_offpeak() - s.total_preferred_peak();
    const double factor = (1.0 - alpha) / (2.0 * (1.0 + alpha));
    TwoPeriodProfile out;
    for (std::size_t n = 0; n < s.users(); ++n) {
        const double own_diff = s.preferred_offpeak(n) - s.preferred_peak[n];
        const double peak = s.preferred_peak[n] + factor * (f * agg_diff + own_diff);
        out.peak.push_back(peak);
        out.offpeak.push_back(s.energy[n] - peak);
    }
    return out;
}

/// Aggregate peak load at the DP equilibrium: E/2 + alpha D / 2 (valid for alpha = 0 too).
inline double dp_aggregate_peak(const TwoPeriodScenario& s, double alpha)
{
    return 0.5 * s.total_energy() + 0.5 * alpha * s.peak_gap();
}

inline double hp_aggregate_peak(const TwoPeriodScenario& s, double alpha)
{
    return 0.5 * s.total_energy() + 0.5 * phi(alpha, s.users()) * s.peak_gap();
}

struct ClosedFormCosts {
    double dp_system_cost = 0.0;
    double hp_system_cost = 0.0;
    double dp_social_cost = 0.0;
};

inline ClosedFormCosts closed_form_costs(const TwoPeriodScenario& s, double alpha)
{
    s.validate();
    const double e = s.total_energy();
    const double d = s.peak_gap();
    const double f = phi(alpha, s.users());
    const double ve = s.energy_concentration();
    ClosedFormCosts c;
    c.dp_system_cost = 0.5 * (e * e + alpha * alpha * d * d);
    c.hp_system_cost = 0.5 * (e * e + f * f * d * d);
    c.dp_social_cost = (1.0 - alpha) * (0.5 * e * e + 0.5 * d * d * (alpha * alpha + ve * (1.0 - alpha) * alpha));
    return c;
}

/// C^DP - C^HP written in factored form.
inline double system_cost_gap(const TwoPeriodScenario& s, double alpha)
{
    const double d = s.peak_gap();
    const double den = static_cast<double>(s.users()) * (1.0 - alpha) + (1.0 + alpha);
    return 0.5 * alpha * alpha * d * d * (1.0 - 4.0 / (den * den));
}

/// Minimal system cost of the framework, E^2 / 2 (aggregate split evenly).
inline double optimal_system_cost(const TwoPeriodScenario& s)
{
    const double e = s.total_energy();
    return 0.5 * e * e;
}

/// The equivalent general game: two hours, a2 = 1, a1 = 0, omega = 1, bounds [0, E_n].
inline GameInstance to_game_instance(const TwoPeriodScenario& s, double alpha, Mechanism mechanism)
{
    s.validate();
    GameInstance g;
    g.grid.hour_count = 2;
    g.cost_model.a0 = 0.0;
    g.cost_model.a1 = 0.0;
    g.cost_model.a2 = 1.0;
    g.cost_model.nonflexible_load = {0.0, 0.0};
    g.alpha = alpha;
    g.mechanism = mechanism;
    for (std::size_t n = 0; n < s.users(); ++n) {
        ConsumerSpec c;
        c.id = "u" + std::to_string(n);
        c.energy_need = s.energy[n];
        c.preferred_profile = {s.preferred_peak[n], s.preferred_offpeak(n)};
        c.lower_bounds = {0.0, 0.0};
        c.upper_bounds = {s.energy[n], s.energy[n]};
        c.preference_weight = 1.0;
        g.consumers.push_back(std::move(c));
    }
    return g;
}

/// Random scenario satisfying every assumption of the closed forms (rejection sampling).
inline TwoPeriodScenario random_scenario(Rng& rng, std::size_t users)
{
    for (;;) {
        TwoPeriodScenario s;
        for (std::size_t n = 0; n < users; ++n) {
            const double e = uniform(rng, 0.5, 3.0);
            s.energy.push_back(e);
            s.preferred_peak.push_back(e * uniform(rng, 0.2, 1.0));
        }
        try {
            s.validate();
            return s;
        } catch (const ValidationError&) {
        }
    }
}

} // namespace drgame::analytic
