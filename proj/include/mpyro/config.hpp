#pragma once

// Versioned JSON configuration of the processing pipeline.
//
// {
//   "version": 1,
//   "optics": {"lambda1_nm": 550, "lambda2_nm": 620, "a12": 1.601, "u_a12": 0.0163,
//              "emissivity_ratio": 1.0, "constants": "codata"},
//   "split_column": 64,
//   "segmentation": {"k_sigma": 3.0, "absolute_floor": 1600},
//   "registration": {"upscale_factor": 3, "ssim_gate": 0.80},
//   "limits": {"floor_k": 1300, "ceiling_k": 6000, "gap_min_ms": 100},
//   "average_mode": "ratio_of_means",
//   "workers": 0,
//   "in_flight": 1024
// }
//
// Every key is optional; omitted keys keep their defaults. Unknown keys are
// rejected. Validation failures throw ConfigError whose message begins with
// the JSON pointer of the offending field.

#include "mpyro/radiometry.hpp"
#include "mpyro/thermography.hpp"

#include <json.hpp>

#include <filesystem>

namespace mpyro {

inline constexpr int kConfigVersion = 1;

struct PipelineConfig {
    OpticsConfig optics;
    int split_column = 64;
    SegmentationParams segmentation;
    RegistrationParams registration;
    ThermographyLimits limits;
    AverageMode average_mode = AverageMode::ratio_of_means;
    int workers = 0; // 0: hardware concurrency
    std::size_t in_flight = 1024;

    void validate() const;
    int effective_workers() const;
    ObserveParams observe_params(const StreamHeader& header, bool full_path) const;
};

OpticsConfig optics_from_json(const nlohmann::json& j, const std::string& pointer = "/optics");
nlohmann::json to_json(const OpticsConfig& cfg);

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& cfg);

/// IoError when missing, ParseError on malformed JSON, ConfigError on schema violations.
PipelineConfig load_config(const std::filesystem::path& path);

} // namespace mpyro
