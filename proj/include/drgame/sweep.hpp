#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "drgame/game.hpp"
#include "drgame/metrics.hpp"
#include "drgame/random.hpp"
#include "drgame/scenario.hpp"
#include "drgame/solver.hpp"

namespace drgame {

struct SweepConfig {
    std::vector<double> alpha_grid = even_grid(50);
    std::vector<Mechanism> mechanisms{Mechanism::DailyProportional, Mechanism::HourlyProportional};
    std::uint64_t seed = 0;
    BRDConfig brd{};
    /// Relative stopping tolerance of the centralized optimizations.
    double optimum_tol = 1e-10;
    /// Worker threads; 0 picks the hardware concurrency.
    unsigned workers = 0;

    /// n evenly spaced points on [0, 1], endpoints included.
    static std::vector<double> even_grid(std::size_t n)
    {
        if (n == 1) return {0.0};
        std::vector<double> grid(n);
        for (std::size_t i = 0; i < n; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(n - 1);
        return grid;
    }

    void validate() const
    {
        if (alpha_grid.empty()) throw ValidationError("alpha grid is empty");
        for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
            if (!(alpha_grid[i] >= 0.0 && alpha_grid[i] <= 1.0)) throw ValidationError("alpha grid values must lie in [0, 1]");
            if (i > 0 && !(alpha_grid[i] > alpha_grid[i - 1])) {
                throw ValidationError("alpha grid must be sorted and free of duplicates");
            }
        }
        if (mechanisms.empty()) throw ValidationError("no billing mechanism selected");
        brd.validate();
    }
};

/// Outcome of one (scenario, alpha, mechanism) equilibrium computation.
struct SweepCell {
    std::size_t alpha_index = 0;
    double alpha = 0.0;
    Mechanism mechanism = Mechanism::HourlyProportional;
    std::optional<std::string> error;
    bool converged = false;
    int iterations = 0;
    std::uint64_t seed = 0;
    EfficiencyRecord record;
    std::vector<double> aggregate_profile;
};

struct ScenarioReport {
    std::string scenario_id;
    std::uint64_t seed = 0;
    std::optional<double> omega;
    std::optional<double> system_cost_opt;
    std::vector<double> alpha_grid;
    /// Sorted by alpha, then mechanism.
    std::vector<SweepCell> per_alpha;
};

namespace detail {

/// Runs fn(i) for i in [0, count) on a bounded pool. fn must not throw.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn)
{
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
    };
    if (workers == 1) {
        work();
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
}

inline std::uint64_t cell_seed(std::uint64_t base, std::size_t day, std::size_t alpha_index, Mechanism m)
{
    const std::uint64_t key = (static_cast<std::uint64_t>(day) << 32) ^ (static_cast<std::uint64_t>(alpha_index) << 2) ^
                              (m == Mechanism::DailyProportional ? 1u : 2u);
    return mix_seed(base ^ mix_seed(key));
}

} // namespace detail

/// Equilibria and efficiency measures for every (scenario, alpha, mechanism).
/// C* is computed once per scenario, SC* once per (scenario, alpha); consumers
/// without a preference weight get the calibrated common weight. Failures are
/// recorded in the affected cells and do not stop the sweep. The result does not
/// depend on the number of workers.
inline std::vector<ScenarioReport> run_sweep(const std::vector<io::ScenarioFile>& scenarios, const SweepConfig& cfg)
{
    cfg.validate();
    const std::size_t days = scenarios.size();
    const std::size_t n_alpha = cfg.alpha_grid.size();
    const std::size_t n_mech = cfg.mechanisms.size();

    struct DayState {
        std::optional<GameInstance> skeleton;
        std::optional<std::string> error;
    };
    std::vector<DayState> state(days);
    std::vector<ScenarioReport> reports(days);

    detail::parallel_for(days, cfg.workers, [&](std::size_t d) {
        auto& report = reports[d];
        report.scenario_id = scenarios[d].scenario_id;
        report.seed = cfg.seed;
        report.alpha_grid = cfg.alpha_grid;
        try {
            io::ScenarioFile file = scenarios[d];
            if (!file.has_weights()) io::calibrate_weights(file, cfg.optimum_tol);
            if (file.has_weights() && !file.consumers.empty()) report.omega = file.consumers.front().preference_weight;
            auto skeleton = file.instantiate(0.0, Mechanism::HourlyProportional);
            report.system_cost_opt = system_cost(skeleton, minimize_system_cost(skeleton, cfg.optimum_tol, cfg.brd.budget_tol));
            state[d].skeleton = std::move(skeleton);
        } catch (const std::exception& e) {
            state[d].error = e.what();
        }
    });

    std::vector<std::optional<double>> social_opt(days * n_alpha);
    std::vector<std::string> social_error(days * n_alpha);
    detail::parallel_for(days * n_alpha, cfg.workers, [&](std::size_t job) {
        const std::size_t d = job / n_alpha, i = job % n_alpha;
        if (!state[d].skeleton) return;
        try {
            const auto g = state[d].skeleton->with(cfg.alpha_grid[i], Mechanism::HourlyProportional);
            social_opt[job] = social_cost(g, minimize_social_cost(g, cfg.optimum_tol, cfg.brd.budget_tol));
        } catch (const std::exception& e) {
            social_error[job] = e.what();
        }
    });

    std::vector<SweepCell> cells(days * n_alpha * n_mech);
    detail::parallel_for(cells.size(), cfg.workers, [&](std::size_t job) {
        const std::size_t d = job / (n_alpha * n_mech);
        const std::size_t i = (job / n_mech) % n_alpha;
        const std::size_t k = job % n_mech;
        auto& cell = cells[job];
        cell.alpha_index = i;
        cell.alpha = cfg.alpha_grid[i];
        cell.mechanism = cfg.mechanisms[k];
        cell.seed = detail::cell_seed(cfg.seed, d, i, cell.mechanism);
        if (state[d].error) {
            cell.error = *state[d].error;
            return;
        }
        if (!social_opt[d * n_alpha + i]) {
            cell.error = social_error[d * n_alpha + i];
            return;
        }
        try {
            const auto g = state[d].skeleton->with(cell.alpha, cell.mechanism);
            BRDConfig brd = cfg.brd;
            brd.seed = cell.seed;
            brd.record_potential = false;
            const auto eq = best_response_dynamics(g, brd);
            cell.converged = eq.converged;
            cell.iterations = eq.iterations_used;
            cell.record = evaluate_efficiency(g, eq.loads, *social_opt[d * n_alpha + i], *reports[d].system_cost_opt);
            cell.aggregate_profile = eq.loads.aggregate();
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    });

    for (std::size_t d = 0; d < days; ++d) {
        auto first = cells.begin() + static_cast<std::ptrdiff_t>(d * n_alpha * n_mech);
        reports[d].per_alpha.assign(first, first + static_cast<std::ptrdiff_t>(n_alpha * n_mech));
        std::sort(reports[d].per_alpha.begin(), reports[d].per_alpha.end(), [](const SweepCell& a, const SweepCell& b) {
            if (a.alpha_index != b.alpha_index) return a.alpha_index < b.alpha_index;
            return a.mechanism < b.mechanism;
        });
    }
    return reports;
}

} // namespace drgame
