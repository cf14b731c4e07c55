#include "mpyro/tc_validation.hpp"

#include "mpyro/csv.hpp"
#include "mpyro/errors.hpp"
#include "mpyro/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace mpyro {

void ThermocoupleModel::validate() const {
    if (!(tau_s > 0.0) || !std::isfinite(tau_s))
        throw ArgumentError("thermocouple time constant must be positive");
}

double step_response_fraction(double exposure_s, double tau_s) {
    if (!(tau_s > 0.0))
        throw ArgumentError("time constant must be positive");
    if (!(exposure_s >= 0.0))
        throw ArgumentError("exposure must be non-negative");
    return -std::expm1(-exposure_s / tau_s);
}

double correct_step_reading(double measured_rise_c, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ArgumentError("response fraction must lie in (0, 1]");
    return measured_rise_c / fraction;
}

double correct_step_reading(double measured_c, double fraction, double ambient_c) {
    return ambient_c + correct_step_reading(measured_c - ambient_c, fraction);
}

double relative_difference(double t_stwip_c, double t_thermocouple_c) {
    if (t_thermocouple_c == 0.0)
        throw ArgumentError("thermocouple temperature must be non-zero");
    return (t_stwip_c - t_thermocouple_c) / t_thermocouple_c * 100.0;
}

ValidationRecord make_record(std::string label, std::string group, double t_thermocouple_c, double t_stwip_c) {
    return {std::move(label), std::move(group), t_thermocouple_c, t_stwip_c,
            relative_difference(t_stwip_c, t_thermocouple_c)};
}

namespace {

GroupSummary summary_of(std::string name, const std::vector<double>& values) {
    GroupSummary g;
    g.group = std::move(name);
    g.count = values.size();
    g.mean_pct = stats::mean(values);
    g.sd_pct = stats::sample_sd(values);
    return g;
}

} // namespace

ValidationSummary summarize(std::span<const ValidationRecord> records, DifferenceMeasure measure,
                            std::optional<int> table_decimals) {
    if (records.empty())
        throw ArgumentError("no validation records");
    if (table_decimals && (*table_decimals < 0 || *table_decimals > 12))
        throw ArgumentError("table decimals must be in [0, 12]");
    std::vector<std::string> order;
    std::vector<std::vector<double>> per_group;
    std::vector<double> all;
    for (const auto& r : records) {
        double v = measure == DifferenceMeasure::absolute ? std::abs(r.relative_diff_pct) : r.relative_diff_pct;
        if (table_decimals) {
            const double scale = std::pow(10.0, *table_decimals);
            v = std::trunc(v * scale) / scale;
        }
        auto it = std::find(order.begin(), order.end(), r.group);
        if (it == order.end()) {
            order.push_back(r.group);
            per_group.emplace_back();
            it = order.end() - 1;
        }
        per_group[static_cast<std::size_t>(it - order.begin())].push_back(v);
        all.push_back(v);
    }
    ValidationSummary s;
    for (std::size_t i = 0; i < order.size(); ++i)
        s.groups.push_back(summary_of(order[i], per_group[i]));
    s.overall = summary_of("overall", all);
    return s;
}

std::vector<ValidationRecord> read_validation_csv(std::istream& in, const ThermocoupleModel& model) {
    model.validate();
    const csv::Table t = csv::read(in);
    const auto label = t.column("label");
    const auto group = t.column("case");
    const auto stwip = t.column("t_stwip_C");
    const bool direct = t.has_column("t_thermocouple_C");
    if (!direct && !(t.has_column("measured_rise_C") && t.has_column("exposure_s")))
        throw ParseError(1, "need t_thermocouple_C or measured_rise_C and exposure_s columns");
    std::vector<ValidationRecord> out;
    for (const auto& row : t.rows) {
        double tc = 0.0;
        if (direct && !row.fields[t.column("t_thermocouple_C")].empty()) {
            tc = csv::to_double(row.fields[t.column("t_thermocouple_C")], row.line);
        } else {
            if (!t.has_column("measured_rise_C"))
                throw ParseError(row.line, "missing thermocouple temperature");
            const double measured = csv::to_double(row.fields[t.column("measured_rise_C")], row.line);
            const double exposure = csv::to_double(row.fields[t.column("exposure_s")], row.line);
            const double fraction = step_response_fraction(exposure, model.tau_s);
            if (!(fraction > 0.0))
                throw ParseError(row.line, "exposure must be positive");
            tc = model.ambient_c ? correct_step_reading(measured, fraction, *model.ambient_c)
                                 : correct_step_reading(measured, fraction);
        }
        const double ts = csv::to_double(row.fields[stwip], row.line);
        if (tc == 0.0)
            throw ParseError(row.line, "thermocouple temperature must be non-zero");
        out.push_back(make_record(row.fields[label], row.fields[group], tc, ts));
    }
    return out;
}

std::vector<ValidationRecord> read_validation_csv_file(const std::filesystem::path& path,
                                                       const ThermocoupleModel& model) {
    if (!std::filesystem::exists(path))
        throw IoError("no such file: " + path.string());
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    return read_validation_csv(in, model);
}

namespace {

nlohmann::json to_json(const GroupSummary& g) {
    return {{"case", g.group},
            {"count", g.count},
            {"mean_pct", g.mean_pct},
            {"sd_pct", g.sd_pct ? nlohmann::json(*g.sd_pct) : nlohmann::json(nullptr)}};
}

} // namespace

nlohmann::json to_json(std::span<const ValidationRecord> records, const ValidationSummary& summary) {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : records)
        j["rows"].push_back({{"label", r.label},
                             {"case", r.group},
                             {"t_thermocouple_C", r.t_thermocouple_c},
                             {"t_stwip_C", r.t_stwip_c},
                             {"relative_diff_pct", r.relative_diff_pct}});
    j["cases"] = nlohmann::json::array();
    for (const auto& g : summary.groups)
        j["cases"].push_back(to_json(g));
    j["overall"] = to_json(summary.overall);
    return j;
}

} // namespace mpyro
