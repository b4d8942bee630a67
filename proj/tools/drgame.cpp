// drgame: scenario generation, equilibrium solves, alpha sweeps and oracle checks.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drgame/game.hpp"
#include "drgame/metrics.hpp"
#include "drgame/report.hpp"
#include "drgame/scenario.hpp"
#include "drgame/sweep.hpp"
#include "drgame/synthetic.hpp"
#include "drgame/tariff.hpp"
#include "drgame/validation.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_invalid = 2;
constexpr int exit_not_converged = 3;

using drgame::Mechanism;

std::vector<Mechanism> parse_mechanisms(const std::string& s)
{
    if (s == "both") return {Mechanism::DailyProportional, Mechanism::HourlyProportional};
    return {drgame::parse_mechanism(s)};
}

/// Writes to --out, or stdout when no path is given.
void emit(const std::string& out_path, const std::function<void(std::ostream&)>& body)
{
    if (out_path.empty()) {
        body(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw drgame::Error("cannot open " + out_path + " for writing");
    body(out);
    if (!out) throw drgame::Error("failed writing " + out_path);
}

drgame::io::TariffPoint parse_point(const std::string& text)
{
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw drgame::ValidationError("tariff point '" + text + "' must be LOAD,PRICE");
    try {
        std::size_t used = 0;
        const double load = std::stod(text.substr(0, comma), &used);
        if (used != comma) throw std::invalid_argument("load");
        const std::string price_text = text.substr(comma + 1);
        const double price = std::stod(price_text, &used);
        if (used != price_text.size()) throw std::invalid_argument("price");
        return {load, price};
    } catch (const std::logic_error&) {
        throw drgame::ValidationError("tariff point '" + text + "' is not a pair of numbers");
    }
}

struct FitArgs {
    std::vector<std::string> points{"17.8,5.5", "33.8,8.0", "58.9,14.0"};
    std::string format = "text";
};

int run_fit(const FitArgs& a)
{
    if (a.points.size() != 3) throw drgame::ValidationError("exactly three tariff points are required");
    drgame::io::TariffPoints pts;
    for (std::size_t i = 0; i < 3; ++i) pts[i] = parse_point(a.points[i]);
    const auto curve = drgame::io::fit_price_curve(pts);
    if (a.format == "json") {
        nlohmann::ordered_json j;
        j["a0"] = curve.a0;
        j["a1"] = curve.a1;
        j["a2"] = curve.a2;
        std::cout << j.dump(2) << '\n';
    } else if (a.format == "text") {
        std::cout << "a0 " << drgame::io::format_number(curve.a0) << '\n'
                  << "a1 " << drgame::io::format_number(curve.a1) << '\n'
                  << "a2 " << drgame::io::format_number(curve.a2) << '\n';
    } else {
        throw drgame::ValidationError("fit-prices format must be text or json");
    }
    return exit_ok;
}

struct SolveArgs {
    std::string scenario;
    double alpha = 0.0;
    std::string mechanism = "hp";
    std::uint64_t seed = 0;
    int max_iters = 150;
    double tol = 1e-12;
    std::string out;
    std::string format = "json";
};

int run_solve(const SolveArgs& a)
{
    auto file = drgame::io::load_scenario(a.scenario);
    if (!file.has_weights()) drgame::io::calibrate_weights(file);
    const auto format = drgame::io::parse_report_format(a.format);
    const auto g = file.instantiate(a.alpha, drgame::parse_mechanism(a.mechanism));

    drgame::BRDConfig cfg;
    cfg.seed = a.seed;
    cfg.max_iterations = a.max_iters;
    cfg.improvement_tol = a.tol;
    cfg.record_potential = false;
    const auto eq = drgame::best_response_dynamics(g, cfg);

    const double sc_opt = drgame::social_cost(g, drgame::minimize_social_cost(g));
    const double c_opt = drgame::system_cost(g, drgame::minimize_system_cost(g));
    const auto metrics = drgame::evaluate_efficiency(g, eq.loads, sc_opt, c_opt);

    emit(a.out, [&](std::ostream& os) {
        if (format == drgame::io::ReportFormat::Json) {
            os << drgame::io::equilibrium_to_json(file.scenario_id, g, eq, metrics).dump(2) << '\n';
            return;
        }
        drgame::ScenarioReport rep;
        rep.scenario_id = file.scenario_id;
        rep.seed = a.seed;
        rep.alpha_grid = {a.alpha};
        drgame::SweepCell cell;
        cell.alpha = a.alpha;
        cell.mechanism = g.mechanism;
        cell.seed = a.seed;
        cell.converged = eq.converged;
        cell.iterations = eq.iterations_used;
        cell.record = metrics;
        cell.aggregate_profile = eq.loads.aggregate();
        rep.per_alpha.push_back(cell);
        drgame::io::write_report_csv({rep}, os);
    });
    if (!eq.converged) {
        std::cerr << "drgame: iteration cap of " << a.max_iters << " passes reached before convergence\n";
        return exit_not_converged;
    }
    return exit_ok;
}

struct SweepArgs {
    std::vector<std::string> scenarios;
    std::size_t synthetic_days = 0;
    std::size_t users = 30;
    std::size_t hours = 24;
    std::vector<double> alphas;
    std::size_t alpha_grid = 50;
    std::string mechanism = "both";
    std::uint64_t seed = 0;
    int max_iters = 150;
    double tol = 1e-12;
    unsigned workers = 0;
    std::string out;
    std::string format = "json";
};

int run_sweep_cmd(const SweepArgs& a)
{
    std::vector<drgame::io::ScenarioFile> files;
    for (const auto& path : a.scenarios) files.push_back(drgame::io::load_scenario(path));
    for (std::size_t d = 0; d < a.synthetic_days; ++d) {
        drgame::io::EvProfileParams p;
        p.month_days = std::max<std::size_t>(p.month_days, a.synthetic_days);
        p.day = d;
        files.push_back(drgame::io::generate_synthetic_scenario(a.seed, a.users, a.hours, p));
    }
    if (files.empty()) throw drgame::ValidationError("sweep needs --scenario or --synthetic-days");

    drgame::SweepConfig cfg;
    cfg.alpha_grid = a.alphas.empty() ? drgame::SweepConfig::even_grid(a.alpha_grid) : a.alphas;
    cfg.mechanisms = parse_mechanisms(a.mechanism);
    cfg.seed = a.seed;
    cfg.workers = a.workers;
    cfg.brd.max_iterations = a.max_iters;
    cfg.brd.improvement_tol = a.tol;
    const auto format = drgame::io::parse_report_format(a.format);
    const auto reports = drgame::run_sweep(files, cfg);
    emit(a.out, [&](std::ostream& os) { drgame::io::write_report(reports, os, format); });

    std::size_t failed = 0, capped = 0;
    for (const auto& r : reports) {
        for (const auto& c : r.per_alpha) {
            if (c.error) {
                ++failed;
            } else if (!c.converged) {
                ++capped;
            }
        }
    }
    if (failed + capped > 0) {
        std::cerr << "drgame: " << failed << " cells failed, " << capped << " cells hit the iteration cap\n";
    }
    return exit_ok;
}

struct ValidateArgs {
    std::uint64_t seed = 1;
    double solver_tol = drgame::default_budget_tol;
    double improvement_tol = 1e-16;
};

int run_validate(const ValidateArgs& a)
{
    drgame::ValidationOptions opt;
    opt.seed = a.seed;
    opt.solver_tol = a.solver_tol;
    opt.improvement_tol = a.improvement_tol;
    const auto results = drgame::run_validation(opt);
    std::size_t failed = 0;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  (" << r.detail << ")\n";
        if (!r.passed) ++failed;
    }
    std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
    return failed == 0 ? exit_ok : exit_failure;
}

struct GenerateArgs {
    std::uint64_t seed = 42;
    std::size_t users = 30;
    std::size_t hours = 24;
    std::size_t day = 1;
    bool calibrate = false;
    std::string out;
};

int run_generate(const GenerateArgs& a)
{
    drgame::io::EvProfileParams p;
    if (a.day < 1 || a.day > p.month_days) throw drgame::ValidationError("--day must lie in 1.." + std::to_string(p.month_days));
    p.day = a.day - 1;
    auto file = drgame::io::generate_synthetic_scenario(a.seed, a.users, a.hours, p);
    if (a.calibrate) {
        const double omega = drgame::io::calibrate_weights(file);
        std::cerr << "drgame: calibrated omega = " << drgame::io::format_number(omega) << '\n';
    }
    drgame::io::write_scenario(file, a.out);
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Demand-response billing games: equilibria, efficiency sweeps and oracle checks"};
    app.require_subcommand(1);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit-prices", "Fit a quadratic cost curve to three tariff points");
    fit_cmd->add_option("--point", fit.points, "Tariff point LOAD,PRICE (give three; default 17.8,5.5 33.8,8.0 58.9,14.0)")
        ->expected(3);
    fit_cmd->add_option("--format", fit.format, "text or json")->capture_default_str();

    SolveArgs solve;
    auto* solve_cmd = app.add_subcommand("solve", "Compute one equilibrium by best response dynamics");
    solve_cmd->add_option("--scenario", solve.scenario, "Scenario CSV")->required();
    solve_cmd->add_option("--alpha", solve.alpha, "Preference factor in [0, 1]")->required();
    solve_cmd->add_option("--mechanism", solve.mechanism, "dp or hp")->capture_default_str();
    solve_cmd->add_option("--seed", solve.seed, "Player-order seed")->capture_default_str();
    solve_cmd->add_option("--max-iters", solve.max_iters, "Cap on full passes")->capture_default_str();
    solve_cmd->add_option("--tol", solve.tol, "Pass improvement threshold (cents)")->capture_default_str();
    solve_cmd->add_option("--out", solve.out, "Output path (default stdout)");
    solve_cmd->add_option("--format", solve.format, "json or csv")->capture_default_str();

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Efficiency measures over an alpha grid");
    sweep_cmd->add_option("--scenario", sweep.scenarios, "Scenario CSV (repeatable)");
    sweep_cmd->add_option("--synthetic-days", sweep.synthetic_days, "Also sweep this many generated days (uses --seed)");
    sweep_cmd->add_option("--users", sweep.users, "Users per generated day")->capture_default_str();
    sweep_cmd->add_option("--hours", sweep.hours, "Hours per generated day")->capture_default_str();
    auto* alpha_opt = sweep_cmd->add_option("--alpha", sweep.alphas, "Explicit alpha values (repeatable)");
    sweep_cmd->add_option("--alpha-grid", sweep.alpha_grid, "Evenly spaced grid size on [0, 1]")
        ->capture_default_str()
        ->excludes(alpha_opt);
    sweep_cmd->add_option("--mechanism", sweep.mechanism, "dp, hp or both")->capture_default_str();
    sweep_cmd->add_option("--seed", sweep.seed, "Base seed")->capture_default_str();
    sweep_cmd->add_option("--max-iters", sweep.max_iters, "Cap on full passes")->capture_default_str();
    sweep_cmd->add_option("--tol", sweep.tol, "Pass improvement threshold (cents)")->capture_default_str();
    sweep_cmd->add_option("--workers", sweep.workers, "Worker threads (0 = all cores)")->capture_default_str();
    sweep_cmd->add_option("--out", sweep.out, "Output path (default stdout)");
    sweep_cmd->add_option("--format", sweep.format, "json or csv")->capture_default_str();

    ValidateArgs validate;
    auto* validate_cmd = app.add_subcommand("validate", "Run the oracle suite and print a summary");
    validate_cmd->add_option("--seed", validate.seed, "Seed of the random test cases")->capture_default_str();
    validate_cmd->add_option("--solver-tol", validate.solver_tol, "Budget tolerance of the inner solver")
        ->capture_default_str();
    validate_cmd->add_option("--brd-tol", validate.improvement_tol, "Pass improvement threshold of the dynamics")
        ->capture_default_str();

    GenerateArgs generate;
    auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic EV-charging scenario");
    generate_cmd->add_option("--seed", generate.seed, "Generator seed")->capture_default_str();
    generate_cmd->add_option("--users", generate.users, "Number of households")->capture_default_str();
    generate_cmd->add_option("--hours", generate.hours, "Hours in the horizon")->capture_default_str();
    generate_cmd->add_option("--day", generate.day, "Day of the simulated month (1-based)")->capture_default_str();
    generate_cmd->add_flag("--calibrate", generate.calibrate, "Store the calibrated preference weight");
    generate_cmd->add_option("--out", generate.out, "Output CSV (a .json sidecar is written next to it)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_invalid;
    }

    try {
        if (*fit_cmd) return run_fit(fit);
        if (*solve_cmd) return run_solve(solve);
        if (*sweep_cmd) return run_sweep_cmd(sweep);
        if (*validate_cmd) return run_validate(validate);
        if (*generate_cmd) return run_generate(generate);
    } catch (const drgame::ValidationError& e) {
        std::cerr << "drgame: " << e.what() << '\n';
        return exit_invalid;
    } catch (const std::exception& e) {
        std::cerr << "drgame: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_failure;
}
