#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "drgame/error.hpp"
#include "drgame/model.hpp"
#include "drgame/solver.hpp"
#include "drgame/tariff.hpp"

namespace drgame::io {

// Scenario files come in pairs: NAME.csv holds the hourly data, NAME.json the scalars.
//
// NAME.csv, header "kind,id,energy,omega,h0,...,h{H-1}", one row per record:
//   nonflexible,,,,<aggregate nonflexible load per hour>
//   preferred,<id>,<E_n>,<omega_n or empty>,<preferred profile>
//   lower,<id>,,,<lower bounds>
//   upper,<id>,,,<upper bounds>
// NAME.json: {"scenario_id": str, "hours": H, "cost": {"a0", "a1", "a2"}, "seed": optional u64}

struct ConsumerRecord {
    std::string id;
    double energy_need = 0.0;
    std::optional<double> preference_weight;
    std::vector<double> preferred;
    std::vector<double> lower;
    std::vector<double> upper;
};

struct ScenarioFile {
    std::string scenario_id;
    std::size_t hours = 24;
    CostModel cost;
    std::vector<ConsumerRecord> consumers;
    std::optional<std::uint64_t> seed;

    bool has_weights() const
    {
        for (const auto& c : consumers) {
            if (!c.preference_weight) return false;
        }
        return true;
    }

    /// Game instance; users without a weight get `default_weight`.
    GameInstance instantiate(double alpha, Mechanism mechanism, double default_weight = 0.0) const
    {
        GameInstance g;
        g.grid.hour_count = hours;
        g.cost_model = cost;
        g.alpha = alpha;
        g.mechanism = mechanism;
        for (const auto& r : consumers) {
            ConsumerSpec c;
            c.id = r.id;
            c.energy_need = r.energy_need;
            c.preferred_profile = r.preferred;
            c.lower_bounds = r.lower;
            c.upper_bounds = r.upper;
            c.preference_weight = r.preference_weight.value_or(default_weight);
            g.consumers.push_back(std::move(c));
        }
        g.validate();
        return g;
    }
};

/// Gives every consumer the common weight C* / sum_n ||l*_n - pref_n||^2. Returns it.
inline double calibrate_weights(ScenarioFile& file, double tol = 1e-10)
{
    const auto skeleton = file.instantiate(0.0, Mechanism::HourlyProportional);
    const auto optimum = minimize_system_cost(skeleton, tol);
    const double omega = calibrate_omega(skeleton, optimum);
    for (auto& c : file.consumers) c.preference_weight = omega;
    return omega;
}

/// Shortest text that parses back to the same double.
inline std::string format_number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        fields.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv)
{
    auto p = csv;
    p.replace_extension(".json");
    return p;
}

class RowError {
public:
    RowError(std::string file, std::size_t line) : file_(std::move(file)), line_(line) {}

    [[noreturn]] void fail(const std::string& what, std::string_view column = {}) const
    {
        std::string msg = file_ + ":" + std::to_string(line_);
        if (!column.empty()) msg += " (column " + std::string(column) + ")";
        throw ValidationError(msg + ": " + what);
    }

private:
    std::string file_;
    std::size_t line_;
};

inline double parse_number(const std::string& text, const RowError& where, std::string_view column)
{
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (text.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
        where.fail("'" + text + "' is not a finite number", column);
    }
    return v;
}

struct PendingConsumer {
    ConsumerRecord record;
    std::size_t preferred_line = 0;
    std::size_t lower_line = 0;
    std::size_t upper_line = 0;
};

} // namespace detail

/// Reads NAME.csv and its NAME.json sidecar and validates every consumer invariant.
/// Diagnostics carry file:line and the offending column.
inline ScenarioFile load_scenario(const std::filesystem::path& csv_path)
{
    if (!std::filesystem::is_regular_file(csv_path)) throw ValidationError("cannot open scenario " + csv_path.string());
    const auto json_path = detail::sidecar_path(csv_path);
    std::ifstream json_in(json_path);
    if (!json_in) throw ValidationError("cannot open scenario sidecar " + json_path.string());
    nlohmann::json meta;
    try {
        json_in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(json_path.string() + ": " + e.what());
    }

    ScenarioFile file;
    try {
        file.scenario_id = meta.at("scenario_id").get<std::string>();
        const auto h = meta.at("hours").get<std::int64_t>();
        if (h < 2) throw ValidationError(json_path.string() + ": hours must be >= 2");
        file.hours = static_cast<std::size_t>(h);
        const auto& cost = meta.at("cost");
        file.cost.a0 = cost.at("a0").get<double>();
        file.cost.a1 = cost.at("a1").get<double>();
        file.cost.a2 = cost.at("a2").get<double>();
        if (meta.contains("seed")) file.seed = meta.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(json_path.string() + ": " + e.what());
    }
    if (!(file.cost.a2 > 0.0)) throw ValidationError(json_path.string() + ": cost.a2 must be > 0");

    std::ifstream in(csv_path);
    if (!in) throw ValidationError("cannot open scenario " + csv_path.string());
    const std::string name = csv_path.string();
    const std::size_t hours = file.hours;

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ValidationError(name + ": empty file");
    ++line_no;
    {
        std::string expected = "kind,id,energy,omega";
        for (std::size_t h = 0; h < hours; ++h) expected += ",h" + std::to_string(h);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != expected) {
            detail::RowError(name, 1).fail("header does not match " + std::to_string(hours) +
                                           "-hour layout 'kind,id,energy,omega,h0,...'");
        }
    }

    std::optional<std::vector<double>> nonflexible;
    std::vector<detail::PendingConsumer> pending;
    std::map<std::string, std::size_t> index;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const detail::RowError where(name, line_no);
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != hours + 4) {
            where.fail("expected " + std::to_string(hours + 4) + " fields, found " + std::to_string(fields.size()));
        }
        std::vector<double> values(hours);
        for (std::size_t h = 0; h < hours; ++h) {
            values[h] = detail::parse_number(fields[h + 4], where, "h" + std::to_string(h));
        }
        const std::string& kind = fields[0];
        const std::string& id = fields[1];

        if (kind == "nonflexible") {
            if (nonflexible) where.fail("duplicate nonflexible row");
            for (std::size_t h = 0; h < hours; ++h) {
                if (values[h] < 0.0) where.fail("nonflexible load must be >= 0", "h" + std::to_string(h));
            }
            nonflexible = std::move(values);
            continue;
        }
        if (kind != "preferred" && kind != "lower" && kind != "upper") where.fail("unknown row kind '" + kind + "'");
        if (id.empty()) where.fail("missing consumer id", "id");

        auto [it, inserted] = index.try_emplace(id, pending.size());
        if (inserted) {
            pending.emplace_back();
            pending.back().record.id = id;
        }
        auto& p = pending[it->second];
        if (kind == "preferred") {
            if (p.preferred_line) where.fail("duplicate consumer id '" + id + "'", "id");
            p.preferred_line = line_no;
            p.record.energy_need = detail::parse_number(fields[2], where, "energy");
            if (p.record.energy_need < 0.0) where.fail("energy need must be >= 0", "energy");
            if (!fields[3].empty()) {
                const double w = detail::parse_number(fields[3], where, "omega");
                if (w < 0.0) where.fail("preference weight must be >= 0", "omega");
                p.record.preference_weight = w;
            }
            p.record.preferred = std::move(values);
        } else {
            const bool lower = kind == "lower";
            std::size_t& seen = lower ? p.lower_line : p.upper_line;
            if (seen) where.fail("duplicate " + kind + " row for consumer '" + id + "'");
            seen = line_no;
            (lower ? p.record.lower : p.record.upper) = std::move(values);
        }
    }

    if (!nonflexible) throw ValidationError(name + ": missing nonflexible row");
    file.cost.nonflexible_load = *nonflexible;
    if (pending.empty()) throw ValidationError(name + ": no consumers");

    for (auto& p : pending) {
        auto& r = p.record;
        if (!p.preferred_line || !p.lower_line || !p.upper_line) {
            throw ValidationError(name + ": consumer '" + r.id + "' needs preferred, lower and upper rows");
        }
        const detail::RowError at_pref(name, p.preferred_line);
        double pref_sum = 0.0, lo_sum = 0.0, hi_sum = 0.0;
        for (std::size_t h = 0; h < hours; ++h) {
            const std::string col = "h" + std::to_string(h);
            if (r.lower[h] < 0.0) detail::RowError(name, p.lower_line).fail("lower bound must be >= 0", col);
            if (r.lower[h] > r.upper[h]) {
                detail::RowError(name, p.upper_line).fail("upper bound below lower bound for '" + r.id + "'", col);
            }
            if (r.preferred[h] < r.lower[h] || r.preferred[h] > r.upper[h]) {
                at_pref.fail("preferred load of '" + r.id + "' outside its bounds", col);
            }
            pref_sum += r.preferred[h];
            lo_sum += r.lower[h];
            hi_sum += r.upper[h];
        }
        const double slack = ConsumerSpec::energy_tolerance * std::max(1.0, r.energy_need);
        if (std::abs(pref_sum - r.energy_need) > slack) {
            at_pref.fail("preferred profile of '" + r.id + "' sums to " + format_number(pref_sum) +
                             " but its energy need is " + format_number(r.energy_need),
                         "energy");
        }
        if (lo_sum > r.energy_need + slack || hi_sum < r.energy_need - slack) {
            at_pref.fail("energy need of '" + r.id + "' is not reachable within its bounds", "energy");
        }
        file.consumers.push_back(std::move(r));
    }
    return file;
}

/// Writes NAME.csv and NAME.json in canonical form (shortest round-trip numbers,
/// consumers in stored order).
inline void write_scenario(const ScenarioFile& file, const std::filesystem::path& csv_path)
{
    std::ostringstream csv;
    csv << "kind,id,energy,omega";
    for (std::size_t h = 0; h < file.hours; ++h) csv << ",h" << h;
    csv << '\n';
    auto row = [&](std::string_view kind, std::string_view id, std::string_view energy, std::string_view omega,
                   const std::vector<double>& values) {
        csv << kind << ',' << id << ',' << energy << ',' << omega;
        for (double v : values) csv << ',' << format_number(v);
        csv << '\n';
    };
    row("nonflexible", "", "", "", file.cost.nonflexible_load);
    for (const auto& c : file.consumers) {
        row("preferred", c.id, format_number(c.energy_need),
            c.preference_weight ? format_number(*c.preference_weight) : "", c.preferred);
        row("lower", c.id, "", "", c.lower);
        row("upper", c.id, "", "", c.upper);
    }

    nlohmann::ordered_json meta;
    meta["scenario_id"] = file.scenario_id;
    meta["hours"] = file.hours;
    meta["cost"] = {{"a0", file.cost.a0}, {"a1", file.cost.a1}, {"a2", file.cost.a2}};
    if (file.seed) meta["seed"] = *file.seed;

    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw Error("cannot write " + csv_path.string());
    out << csv.str();
    std::ofstream side(detail::sidecar_path(csv_path), std::ios::binary);
    if (!side) throw Error("cannot write " + detail::sidecar_path(csv_path).string());
    side << meta.dump(2) << '\n';
}

} // namespace drgame::io
