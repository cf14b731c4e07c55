#include "mpyro/config.hpp"
#include "mpyro/errors.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace mpyro;
using nlohmann::json;

namespace {

std::string error_of(const json& j) {
    try {
        config_from_json(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

} // namespace

TEST_CASE("shipped config equals the defaults") {
    const auto cfg = load_config(MPYRO_DATA_DIR "/config.json");
    CHECK(to_json(cfg) == to_json(PipelineConfig{}));
    CHECK(cfg.optics.a12 == 1.601);
    CHECK(cfg.registration.upscale_factor == 3);
    CHECK(cfg.limits.ceiling_k == 6000.0);
}

TEST_CASE("json round trip") {
    PipelineConfig cfg;
    cfg.optics.a12 = 1.58;
    cfg.optics.constants = PhysicalConstants::rounded();
    cfg.split_column = 60;
    cfg.registration.ssim_gate = 0.7;
    cfg.limits.gap_min_ms = 250;
    cfg.average_mode = AverageMode::mean_of_ratios;
    cfg.workers = 3;
    const auto back = config_from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
    CHECK(back.optics.constants.planck == PhysicalConstants::rounded().planck);
    CHECK(back.average_mode == AverageMode::mean_of_ratios);
}

TEST_CASE("partial documents keep defaults") {
    const auto cfg = config_from_json(json{{"version", 1}, {"optics", {{"a12", 1.59}}}});
    CHECK(cfg.optics.a12 == 1.59);
    CHECK(cfg.optics.lambda1 == doctest::Approx(550e-9));
    CHECK(cfg.split_column == 64);
}

TEST_CASE("errors carry a json pointer") {
    CHECK(starts_with(error_of(json{{"version", 2}}), "/version"));
    CHECK(starts_with(error_of(json{{"version", 1}, {"optics", {{"a12", -1}}}}), "/optics"));
    CHECK(starts_with(error_of(json{{"version", 1}, {"optics", {{"a12", "x"}}}}), "/optics/a12"));
    CHECK(starts_with(error_of(json{{"version", 1}, {"optics", {{"lambda1_nm", 700}}}}), "/optics"));
    CHECK(starts_with(error_of(json{{"version", 1}, {"optics", {{"constants", "cgs"}}}}), "/optics/constants"));
    CHECK(starts_with(error_of(json{{"version", 1}, {"registration", {{"upscale_factor", 0}}}}), "/registration"));
    CHECK(starts_with(error_of(json{{"version", 1}, {"limits", {{"floor_k", 7000}}}}), "/limits"));
    CHECK(starts_with(error_of(json{{"version", 1}, {"workers", -2}}), "/workers"));
    CHECK(starts_with(error_of(json{{"version", 1}, {"in_flight", 0}}), "/in_flight"));
    CHECK(starts_with(error_of(json{{"version", 1}, {"split_column", 0}}), "/split_column"));
    CHECK(starts_with(error_of(json{{"version", 1}, {"average_mode", "median"}}), "/average_mode"));
}

TEST_CASE("unknown keys are rejected") {
    CHECK(starts_with(error_of(json{{"version", 1}, {"colour", 1}}), "/colour"));
    CHECK(starts_with(error_of(json{{"version", 1}, {"segmentation", {{"k", 2}}}}), "/segmentation/k"));
}

TEST_CASE("loading files") {
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
    const auto path = std::filesystem::temp_directory_path() / "mpyro_bad_config.json";
    {
        std::ofstream out(path);
        out << "{\"version\": 1,";
    }
    CHECK_THROWS_AS(load_config(path), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("observe params follow the stream") {
    PipelineConfig cfg;
    StreamHeader h;
    h.width = 128;
    h.height = 48;
    h.bit_depth = 12;
    const auto p = cfg.observe_params(h, true);
    CHECK(p.full_path);
    CHECK(p.quantization_step == 16.0);
    CHECK(p.split_column == 64);
    h.bit_depth = 16;
    CHECK(cfg.observe_params(h, false).quantization_step == 1.0);
    cfg.split_column = 200;
    CHECK_THROWS_AS(cfg.observe_params(h, false), ConfigError);
    cfg = {};
    cfg.workers = 0;
    CHECK(cfg.effective_workers() >= 1);
}
