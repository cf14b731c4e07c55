#pragma once

// Thermocouple comparison arithmetic: first-order step response correction
// and relative differences between thermocouple and pyrometer temperatures.

#include <json.hpp>

#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mpyro {

struct ThermocoupleModel {
    double tau_s = 0.33;
    std::optional<double> ambient_c;

    void validate() const;
};

/// 1 - exp(-exposure / tau).
double step_response_fraction(double exposure_s, double tau_s);

/// measured_rise / fraction.
double correct_step_reading(double measured_rise_c, double fraction);

/// Corrects the rise above ambient: ambient + (measured - ambient) / fraction.
double correct_step_reading(double measured_c, double fraction, double ambient_c);

/// (t_stwip - t_thermocouple) / t_thermocouple * 100.
double relative_difference(double t_stwip_c, double t_thermocouple_c);

struct ValidationRecord {
    std::string label;
    std::string group;
    double t_thermocouple_c = 0.0;
    double t_stwip_c = 0.0;
    double relative_diff_pct = 0.0; // signed
};

ValidationRecord make_record(std::string label, std::string group, double t_thermocouple_c, double t_stwip_c);

/// How relative differences enter the summary statistics. The published
/// table lists magnitudes, so absolute is the default.
enum class DifferenceMeasure { absolute, signed_value };

struct GroupSummary {
    std::string group;
    std::size_t count = 0;
    double mean_pct = 0.0;
    std::optional<double> sd_pct; // sample SD; absent for a single record
};

struct ValidationSummary {
    std::vector<GroupSummary> groups; // in order of first appearance
    GroupSummary overall;
};

/// ArgumentError on an empty record set. With table_decimals, each row's
/// difference is first truncated to that many decimals, the way a printed
/// table aggregates its displayed rows.
ValidationSummary summarize(std::span<const ValidationRecord> records,
                            DifferenceMeasure measure = DifferenceMeasure::absolute,
                            std::optional<int> table_decimals = std::nullopt);

/// CSV columns: label, case, t_stwip_C and either t_thermocouple_C or
/// measured_rise_C + exposure_s (corrected with the model).
std::vector<ValidationRecord> read_validation_csv(std::istream& in, const ThermocoupleModel& model = {});
std::vector<ValidationRecord> read_validation_csv_file(const std::filesystem::path& path,
                                                       const ThermocoupleModel& model = {});

nlohmann::json to_json(std::span<const ValidationRecord> records, const ValidationSummary& summary);

} // namespace mpyro
