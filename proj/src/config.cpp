#include "mpyro/config.hpp"

#include <fstream>
#include <set>
#include <thread>

namespace mpyro {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& pointer, std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw ConfigError(pointer + ": expected an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : j.items())
        if (!keys.contains(item.key()))
            throw ConfigError(pointer + "/" + item.key() + ": unknown field");
}

double number_at(const json& j, const char* key, const std::string& pointer, double fallback) {
    if (!j.contains(key))
        return fallback;
    const auto& v = j.at(key);
    if (!v.is_number())
        throw ConfigError(pointer + "/" + key + ": expected a number");
    return v.get<double>();
}

long long integer_at(const json& j, const char* key, const std::string& pointer, long long fallback) {
    if (!j.contains(key))
        return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer())
        throw ConfigError(pointer + "/" + key + ": expected an integer");
    return v.get<long long>();
}

// Re-throws module validation errors with the pointer of the owning section.
template <typename F>
void validate_at(const std::string& pointer, F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        throw ConfigError(pointer + ": " + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(pointer + ": " + e.what());
    }
}

} // namespace

void PipelineConfig::validate() const {
    validate_at("/optics", [&] { optics.validate(); });
    if (split_column <= 0)
        throw ConfigError("/split_column: must be positive");
    validate_at("/segmentation", [&] { segmentation.validate(); });
    validate_at("/registration", [&] { registration.validate(); });
    validate_at("/limits", [&] { limits.validate(); });
    if (workers < 0)
        throw ConfigError("/workers: must be >= 0");
    if (in_flight < 1)
        throw ConfigError("/in_flight: must be >= 1");
}

int PipelineConfig::effective_workers() const {
    if (workers > 0)
        return workers;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

ObserveParams PipelineConfig::observe_params(const StreamHeader& header, bool full_path) const {
    if (split_column >= static_cast<int>(header.width))
        throw ConfigError("/split_column: " + std::to_string(split_column) + " is outside a frame of width "
                          + std::to_string(header.width));
    ObserveParams p;
    p.split_column = split_column;
    p.segmentation = segmentation;
    p.registration = registration;
    p.registration.segmentation = segmentation;
    p.limits = limits;
    p.average_mode = average_mode;
    p.full_path = full_path;
    p.quantization_step = header.quantization_step();
    p.pixel_pitch_um = header.pixel_pitch_um;
    return p;
}

OpticsConfig optics_from_json(const json& j, const std::string& pointer) {
    require_object(j, pointer, {"lambda1_nm", "lambda2_nm", "a12", "u_a12", "emissivity_ratio", "constants"});
    OpticsConfig cfg;
    cfg.lambda1 = nanometres(number_at(j, "lambda1_nm", pointer, 550.0));
    cfg.lambda2 = nanometres(number_at(j, "lambda2_nm", pointer, 620.0));
    cfg.a12 = number_at(j, "a12", pointer, cfg.a12);
    cfg.u_a12 = number_at(j, "u_a12", pointer, cfg.u_a12);
    cfg.emissivity_ratio = number_at(j, "emissivity_ratio", pointer, cfg.emissivity_ratio);
    if (j.contains("constants")) {
        const auto& c = j.at("constants");
        if (c == "codata")
            cfg.constants = PhysicalConstants::codata();
        else if (c == "rounded")
            cfg.constants = PhysicalConstants::rounded();
        else
            throw ConfigError(pointer + "/constants: expected \"codata\" or \"rounded\"");
    }
    validate_at(pointer, [&] { cfg.validate(); });
    return cfg;
}

json to_json(const OpticsConfig& cfg) {
    const auto rounded = PhysicalConstants::rounded();
    const bool is_rounded = cfg.constants.planck == rounded.planck && cfg.constants.light_speed == rounded.light_speed;
    return {{"lambda1_nm", cfg.lambda1 * 1e9},
            {"lambda2_nm", cfg.lambda2 * 1e9},
            {"a12", cfg.a12},
            {"u_a12", cfg.u_a12},
            {"emissivity_ratio", cfg.emissivity_ratio},
            {"constants", is_rounded ? "rounded" : "codata"}};
}

PipelineConfig config_from_json(const json& j) {
    require_object(j, "", {"version", "optics", "split_column", "segmentation", "registration", "limits",
                           "average_mode", "workers", "in_flight"});
    if (!j.contains("version"))
        throw ConfigError("/version: missing");
    if (integer_at(j, "version", "", 0) != kConfigVersion)
        throw ConfigError("/version: unsupported version (expected " + std::to_string(kConfigVersion) + ")");

    PipelineConfig cfg;
    if (j.contains("optics"))
        cfg.optics = optics_from_json(j.at("optics"), "/optics");
    cfg.split_column = static_cast<int>(integer_at(j, "split_column", "", cfg.split_column));
    if (j.contains("segmentation")) {
        const auto& s = j.at("segmentation");
        require_object(s, "/segmentation", {"k_sigma", "absolute_floor"});
        cfg.segmentation.k_sigma = number_at(s, "k_sigma", "/segmentation", cfg.segmentation.k_sigma);
        cfg.segmentation.absolute_floor =
            number_at(s, "absolute_floor", "/segmentation", cfg.segmentation.absolute_floor);
    }
    if (j.contains("registration")) {
        const auto& r = j.at("registration");
        require_object(r, "/registration", {"upscale_factor", "ssim_gate", "min_peak", "min_correlation"});
        cfg.registration.upscale_factor =
            static_cast<int>(integer_at(r, "upscale_factor", "/registration", cfg.registration.upscale_factor));
        cfg.registration.ssim_gate = number_at(r, "ssim_gate", "/registration", cfg.registration.ssim_gate);
        cfg.registration.min_peak = number_at(r, "min_peak", "/registration", cfg.registration.min_peak);
        cfg.registration.min_correlation =
            number_at(r, "min_correlation", "/registration", cfg.registration.min_correlation);
    }
    cfg.registration.segmentation = cfg.segmentation;
    if (j.contains("limits")) {
        const auto& l = j.at("limits");
        require_object(l, "/limits", {"floor_k", "ceiling_k", "gap_min_ms"});
        cfg.limits.floor_k = number_at(l, "floor_k", "/limits", cfg.limits.floor_k);
        cfg.limits.ceiling_k = number_at(l, "ceiling_k", "/limits", cfg.limits.ceiling_k);
        cfg.limits.gap_min_ms = number_at(l, "gap_min_ms", "/limits", cfg.limits.gap_min_ms);
    }
    if (j.contains("average_mode")) {
        const auto& m = j.at("average_mode");
        if (m == "ratio_of_means")
            cfg.average_mode = AverageMode::ratio_of_means;
        else if (m == "mean_of_ratios")
            cfg.average_mode = AverageMode::mean_of_ratios;
        else
            throw ConfigError("/average_mode: expected \"ratio_of_means\" or \"mean_of_ratios\"");
    }
    cfg.workers = static_cast<int>(integer_at(j, "workers", "", cfg.workers));
    const long long in_flight = integer_at(j, "in_flight", "", static_cast<long long>(cfg.in_flight));
    if (in_flight < 1)
        throw ConfigError("/in_flight: must be >= 1");
    cfg.in_flight = static_cast<std::size_t>(in_flight);
    cfg.validate();
    return cfg;
}

json to_json(const PipelineConfig& cfg) {
    return {{"version", kConfigVersion},
            {"optics", to_json(cfg.optics)},
            {"split_column", cfg.split_column},
            {"segmentation", {{"k_sigma", cfg.segmentation.k_sigma}, {"absolute_floor", cfg.segmentation.absolute_floor}}},
            {"registration",
             {{"upscale_factor", cfg.registration.upscale_factor},
              {"ssim_gate", cfg.registration.ssim_gate},
              {"min_peak", cfg.registration.min_peak},
              {"min_correlation", cfg.registration.min_correlation}}},
            {"limits",
             {{"floor_k", cfg.limits.floor_k}, {"ceiling_k", cfg.limits.ceiling_k}, {"gap_min_ms", cfg.limits.gap_min_ms}}},
            {"average_mode", cfg.average_mode == AverageMode::ratio_of_means ? "ratio_of_means" : "mean_of_ratios"},
            {"workers", cfg.workers},
            {"in_flight", cfg.in_flight}};
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(0, "malformed config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace mpyro
