#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "drgame/error.hpp"
#include "drgame/game.hpp"
#include "drgame/metrics.hpp"
#include "drgame/scenario.hpp"
#include "drgame/sweep.hpp"

namespace drgame::io {

enum class ReportFormat { Json, Csv };

inline ReportFormat parse_report_format(std::string_view s)
{
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    throw ValidationError("unknown output format '" + std::string(s) + "' (expected json or csv)");
}

inline nlohmann::ordered_json cell_to_json(const SweepCell& cell)
{
    nlohmann::ordered_json j;
    j["alpha"] = cell.alpha;
    j["mechanism"] = to_string(cell.mechanism);
    j["seed"] = cell.seed;
    if (cell.error) {
        j["converged"] = false;
        j["error"] = *cell.error;
        return j;
    }
    const auto& r = cell.record;
    j["converged"] = cell.converged;
    j["iterations"] = cell.iterations;
    j["SC"] = r.social_cost_eq;
    j["SC_opt"] = r.social_cost_opt;
    j["C"] = r.system_cost_eq;
    j["C_opt"] = r.system_cost_opt;
    j["PoA"] = r.poa ? nlohmann::ordered_json(*r.poa) : nlohmann::ordered_json(nullptr);
    j["PoA_limit"] = r.poa_or_limit();
    j["PoE"] = r.poe;
    j["aggregate_profile"] = cell.aggregate_profile;
    return j;
}

inline nlohmann::ordered_json report_to_json(const ScenarioReport& report)
{
    nlohmann::ordered_json j;
    j["scenario_id"] = report.scenario_id;
    j["seed"] = report.seed;
    j["omega"] = report.omega ? nlohmann::ordered_json(*report.omega) : nlohmann::ordered_json(nullptr);
    j["C_opt"] = report.system_cost_opt ? nlohmann::ordered_json(*report.system_cost_opt) : nlohmann::ordered_json(nullptr);
    j["alpha_grid"] = report.alpha_grid;
    auto& cells = j["per_alpha"] = nlohmann::ordered_json::array();
    for (const auto& c : report.per_alpha) cells.push_back(cell_to_json(c));
    return j;
}

namespace detail {

inline std::string csv_safe(std::string text)
{
    for (char& ch : text) {
        if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ';';
    }
    return text;
}

} // namespace detail

/// Long format, one value per line: day,alpha,mechanism,metric,value.
/// PoA uses the alpha -> 1 limit where undefined; load_h<k> rows carry the aggregate profile.
inline void write_report_csv(const std::vector<ScenarioReport>& reports, std::ostream& out)
{
    out << "day,alpha,mechanism,metric,value\n";
    for (const auto& rep : reports) {
        for (const auto& cell : rep.per_alpha) {
            const std::string prefix = detail::csv_safe(rep.scenario_id) + ',' + format_number(cell.alpha) + ',' +
                                       std::string(to_string(cell.mechanism)) + ',';
            auto row = [&](std::string_view metric, const std::string& value) {
                out << prefix << metric << ',' << value << '\n';
            };
            if (cell.error) {
                row("error", detail::csv_safe(*cell.error));
                continue;
            }
            const auto& r = cell.record;
            row("converged", cell.converged ? "1" : "0");
            row("iterations", std::to_string(cell.iterations));
            row("SC", format_number(r.social_cost_eq));
            row("SC_opt", format_number(r.social_cost_opt));
            row("C", format_number(r.system_cost_eq));
            row("C_opt", format_number(r.system_cost_opt));
            row("PoA", format_number(r.poa_or_limit()));
            row("PoE", format_number(r.poe));
            for (std::size_t h = 0; h < cell.aggregate_profile.size(); ++h) {
                row("load_h" + std::to_string(h), format_number(cell.aggregate_profile[h]));
            }
        }
    }
}

inline void write_report_json(const std::vector<ScenarioReport>& reports, std::ostream& out)
{
    auto all = nlohmann::ordered_json::array();
    for (const auto& r : reports) all.push_back(report_to_json(r));
    out << all.dump(2) << '\n';
}

inline void write_report(const std::vector<ScenarioReport>& reports, std::ostream& out, ReportFormat format)
{
    if (format == ReportFormat::Json) {
        write_report_json(reports, out);
    } else {
        write_report_csv(reports, out);
    }
}

inline void write_report(const std::vector<ScenarioReport>& reports, const std::filesystem::path& path,
                         ReportFormat format)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    write_report(reports, out, format);
    if (!out) throw Error("failed writing " + path.string());
}

/// Single equilibrium solve with its certificate and efficiency measures.
inline nlohmann::ordered_json equilibrium_to_json(const std::string& scenario_id, const GameInstance& instance,
                                                  const EquilibriumReport& eq, const EfficiencyRecord& metrics)
{
    nlohmann::ordered_json j;
    j["scenario_id"] = scenario_id;
    j["seed"] = eq.seed;
    j["alpha"] = instance.alpha;
    j["mechanism"] = to_string(instance.mechanism);
    j["converged"] = eq.converged;
    j["iterations"] = eq.iterations_used;
    double max_regret = 0.0;
    for (double r : eq.per_user_regret) max_regret = std::max(max_regret, r);
    j["max_regret"] = max_regret;
    j["SC"] = metrics.social_cost_eq;
    j["SC_opt"] = metrics.social_cost_opt;
    j["C"] = metrics.system_cost_eq;
    j["C_opt"] = metrics.system_cost_opt;
    j["PoA"] = metrics.poa ? nlohmann::ordered_json(*metrics.poa) : nlohmann::ordered_json(nullptr);
    j["PoA_limit"] = metrics.poa_or_limit();
    j["PoE"] = metrics.poe;
    j["aggregate_profile"] = eq.loads.aggregate();
    auto& users = j["loads"] = nlohmann::ordered_json::object();
    for (std::size_t n = 0; n < instance.users(); ++n) {
        const auto row = eq.loads.row(n);
        users[instance.consumers[n].id] = std::vector<double>(row.begin(), row.end());
    }
    j["per_user_regret"] = eq.per_user_regret;
    j["potential_trace_length"] = eq.potential_trace.size();
    return j;
}

} // namespace drgame::io
