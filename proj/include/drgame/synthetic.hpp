#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "drgame/random.hpp"
#include "drgame/scenario.hpp"

namespace drgame::io {

/// Knobs of the synthetic residential EV-charging population.
struct EvProfileParams {
    /// Day of the simulated month to emit; bounds are derived from the whole month.
    std::size_t day = 0;
    std::size_t month_days = 31;
    double energy_min = 2.0;  // kWh per day
    double energy_max = 12.0;
    double power_min = 3.3;   // kW charger rating
    double power_max = 7.2;
    /// Usual plug-in time as a fraction of the day, and the daily jitter in hours.
    double plug_in_min = 0.70;
    double plug_in_max = 0.85;
    std::int64_t plug_in_jitter = 1;
    /// Aggregate nonflexible load of 30 households: trough and peak-to-trough swing (kWh).
    double base_trough = 17.8;
    double base_swing = 41.0;
    /// Provider cost C~(L) = a0 + a1 L + a2 L^2 (cents).
    PriceCurve cost{71.1, -4.17, 0.295};
};

namespace detail {

/// Daily household shape: morning, midday and evening bumps on a 24-hour clock.
inline double household_shape(double clock_hour)
{
    auto bump = [&](double centre, double width) {
        double d = std::abs(clock_hour - centre);
        d = std::min(d, 24.0 - d);
        return std::exp(-0.5 * (d / width) * (d / width));
    };
    return 0.45 * bump(8.0, 1.5) + 0.35 * bump(13.0, 3.0) + bump(19.5, 2.5);
}

/// One day of EV charging: full power from the plug-in hour, remainder in the last hour.
inline std::vector<double> charging_block(std::size_t hours, std::size_t start, double energy, double power)
{
    std::vector<double> profile(hours, 0.0);
    const double rate = std::max(power, energy / static_cast<double>(hours));
    double left = energy;
    for (std::size_t k = 0; k < hours && left > 0.0; ++k) {
        const double v = std::min(rate, left);
        profile[(start + k) % hours] = v;
        left -= v;
    }
    return profile;
}

} // namespace detail

/// Deterministic stand-in for metered residential data: N households with an
/// evening EV-charging habit. The preferred profile is the charging record of
/// `params.day`; lower bounds are 0 and the upper bound of an hour is the
/// household's peak charging rate over the month if that hour was ever used, else 0.
inline ScenarioFile generate_synthetic_scenario(std::uint64_t seed, std::size_t users, std::size_t hours,
                                                const EvProfileParams& params = {})
{
    if (users < 1) throw ValidationError("synthetic scenario needs at least one user");
    if (hours < 2) throw ValidationError("synthetic scenario needs at least two hours");
    if (params.day >= params.month_days) throw ValidationError("day index outside the simulated month");

    ScenarioFile file;
    file.scenario_id = "synthetic-s" + std::to_string(seed) + "-d" + std::to_string(params.day + 1);
    file.hours = hours;
    file.seed = seed;
    file.cost.a0 = params.cost.a0;
    file.cost.a1 = params.cost.a1;
    file.cost.a2 = params.cost.a2;

    const double population = static_cast<double>(users) / 30.0;
    {
        Rng rng(mix_seed(seed ^ (0xD1B54A32D192ED03ULL * (params.day + 1))));
        const double level = uniform(rng, 0.92, 1.08);
        file.cost.nonflexible_load.resize(hours);
        for (std::size_t h = 0; h < hours; ++h) {
            const double clock = (static_cast<double>(h) + 0.5) * 24.0 / static_cast<double>(hours);
            const double noise = uniform(rng, 0.97, 1.03);
            file.cost.nonflexible_load[h] =
                population * level * noise * (params.base_trough + params.base_swing * detail::household_shape(clock));
        }
    }

    const auto first_plug = static_cast<std::int64_t>(std::lround(params.plug_in_min * static_cast<double>(hours)));
    const auto last_plug = static_cast<std::int64_t>(std::lround(params.plug_in_max * static_cast<double>(hours)));
    const auto h_count = static_cast<std::int64_t>(hours);

    for (std::size_t n = 0; n < users; ++n) {
        Rng rng(mix_seed(seed * 0x9E3779B97F4A7C15ULL + n + 1));
        const double power = uniform(rng, params.power_min, params.power_max);
        const std::int64_t habit = uniform_int(rng, first_plug, std::max(first_plug, last_plug));

        std::vector<double> upper(hours, 0.0);
        std::vector<double> today;
        for (std::size_t d = 0; d < params.month_days; ++d) {
            const double energy = uniform(rng, params.energy_min, params.energy_max);
            const std::int64_t shift = uniform_int(rng, -params.plug_in_jitter, params.plug_in_jitter);
            const auto start = static_cast<std::size_t>((((habit + shift) % h_count) + h_count) % h_count);
            auto profile = detail::charging_block(hours, start, energy, power);
            for (std::size_t h = 0; h < hours; ++h) upper[h] = std::max(upper[h], profile[h]);
            if (d == params.day) today = std::move(profile);
        }
        const double peak_rate = *std::max_element(upper.begin(), upper.end());
        for (double& u : upper) u = u > 0.0 ? peak_rate : 0.0;

        ConsumerRecord r;
        r.id = "ev" + std::string(n + 1 < 10 ? "0" : "") + std::to_string(n + 1);
        r.preferred = today;
        r.energy_need = 0.0;
        for (double v : today) r.energy_need += v;
        r.lower.assign(hours, 0.0);
        r.upper = std::move(upper);
        file.consumers.push_back(std::move(r));
    }
    return file;
}

} // namespace drgame::io
