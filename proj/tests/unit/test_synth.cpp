#include "mpyro/errors.hpp"
#include "mpyro/segmentation.hpp"
#include "mpyro/synth.hpp"
#include "mpyro/thermography.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace mpyro;

namespace {

SyntheticLayerScript small_script(std::initializer_list<std::pair<double, bool>> segments, std::uint32_t fps) {
    SyntheticLayerScript script;
    script.fps = fps;
    SyntheticScene scene;
    scene.noise_sigma = 30.0;
    scene.seed = 9;
    for (const auto& [ms, on] : segments) {
        ScriptSegment s;
        s.duration_ms = ms;
        if (on) s.scene = scene;
        script.segments.push_back(s);
    }
    return script;
}

} // namespace

TEST_CASE("uniform scene renders the forward-model ratio") {
    const OpticsConfig cfg;
    SyntheticScene scene;
    scene.match_optics(cfg);
    scene.peak_k = 2900.0;
    scene.psf_sigma = 0.0;
    scene.supersample = 1;
    const auto geom = FrameGeometry::from(cfg);
    const auto rendered = render_pair(scene, geom);
    CHECK_FALSE(rendered.saturated);
    const auto [s620, s550] = split_frame(rendered.frame, geom.split_column);
    const Mask fp = footprint(scene, geom);
    const double expected = ratio_from_temperature(Temperature(2900.0), cfg);
    std::size_t n = 0;
    for (int y = 0; y < fp.height(); ++y)
        for (int x = 0; x < fp.width(); ++x)
            if (fp(x, y)) {
                ++n;
                const double a = s550.pixels(x, y) / 16.0, b = s620.pixels(x, y) / 16.0;
                // each channel is rounded to the nearest native count
                const double bound = expected * (0.5 / a + 0.5 / b);
                CHECK(std::abs(a / b - expected) <= bound);
            }
    CHECK(n > 100);
}

TEST_CASE("exposure places the brighter channel at peak_counts") {
    SyntheticScene scene;
    scene.psf_sigma = 0.0;
    const auto rendered = render_pair(scene);
    std::uint16_t peak = 0;
    for (auto v : rendered.frame.pixels.values()) peak = std::max(peak, v);
    CHECK(peak == upscale_12_to_16(3000));
}

TEST_CASE("zero temperature field is a dark frame") {
    SyntheticScene scene;
    scene.temperature_field = Grid<double>(64, 48, 0.0);
    const auto rendered = render_pair(scene);
    for (auto v : rendered.frame.pixels.values()) CHECK(v == 0);
    const auto [s620, s550] = split_frame(rendered.frame, 64);
    CHECK_FALSE(segment(s620).has_value());
    CHECK_FALSE(segment(s550).has_value());
}

TEST_CASE("rendering is deterministic per seed") {
    SyntheticScene scene;
    scene.noise_sigma = 60.0;
    scene.seed = 4;
    const auto a = render_pair(scene, {}, 12);
    const auto b = render_pair(scene, {}, 12);
    CHECK(a.frame.pixels == b.frame.pixels);
    const auto c = render_pair(scene, {}, 13);
    CHECK_FALSE(a.frame.pixels == c.frame.pixels);
    scene.seed = 5;
    CHECK_FALSE(render_pair(scene, {}, 12).frame.pixels == a.frame.pixels);
}

TEST_CASE("overexposure saturates and clips") {
    SyntheticScene scene;
    scene.peak_counts.reset();
    scene.exposure_scale = 1e-6;
    const auto rendered = render_pair(scene);
    CHECK(rendered.saturated);
    for (auto v : rendered.frame.pixels.values()) CHECK(v <= 65520);
}

TEST_CASE("planck and wien renders agree closely") {
    SyntheticScene scene;
    scene.psf_sigma = 0.0;
    scene.peak_counts.reset();
    scene.exposure_scale = effective_exposure(SyntheticScene{}, {});
    const auto wien = render_pair(scene);
    scene.planck = true;
    const auto planck = render_pair(scene);
    int worst = 0;
    for (std::size_t i = 0; i < wien.frame.pixels.size(); ++i)
        worst = std::max(worst, std::abs(wien.frame.pixels.data()[i] - planck.frame.pixels.data()[i]));
    CHECK(worst <= 16);
}

TEST_CASE("empty script") {
    SyntheticLayerScript script;
    std::stringstream buf;
    const auto h = render_stream(script, buf);
    CHECK(h.frame_count == 0);
    StreamDecoder dec(buf);
    CHECK_FALSE(dec.next().has_value());
}

TEST_CASE("ten-frame script round trip") {
    const auto script = small_script({{2.0, true}, {1.0, false}, {2.0, true}}, 2000);
    CHECK(script.frame_count() == 10);
    std::vector<Frame> direct;
    render_frames(script, [&](const RenderedFrame& f) { direct.push_back(f.frame); });
    REQUIRE(direct.size() == 10);

    std::stringstream buf;
    const auto h = render_stream(script, buf);
    CHECK(h.frame_count == 10);
    CHECK(h.bit_depth == 12);
    StreamDecoder dec(buf);
    for (std::size_t i = 0; i < 10; ++i) {
        const auto f = dec.next();
        REQUIRE(f.has_value());
        CHECK(f->pixels == direct[i].pixels);
        CHECK(f->timestamp_ms == doctest::Approx(static_cast<double>(i) * 0.5));
    }
    CHECK_FALSE(dec.next().has_value());

    ScriptFrameSource src(script);
    src.seek(7);
    CHECK(src.next()->pixels == direct[7].pixels);
}

TEST_CASE("five bars recovered from a rendered script") {
    auto script = small_script({{40.0, true}, {120.0, false}}, 1000);
    const auto one = script.segments;
    for (int i = 1; i < 5; ++i) script.segments.insert(script.segments.end(), one.begin(), one.end());
    ScriptFrameSource src(script);
    ObserveParams params;
    params.quantization_step = 16.0;
    std::vector<MeltPoolObservation> series;
    while (auto f = src.next()) series.push_back(observe_frame(*f, OpticsConfig{}, params).observation);
    CHECK(series.size() == 800);
    const auto bars = segment_bars(series, 100.0);
    CHECK(bars.size() == 5);
}

TEST_CASE("script json") {
    const auto j = nlohmann::json::parse(R"({
        "version": 1, "fps": 1000,
        "scenes": {"a": {"peak_k": 2500, "noise_fraction": 0.01, "transform": {"rotation_deg": 2}}},
        "segments": [{"duration_ms": 3, "scene": "a"}, {"duration_ms": 2, "laser_off": true}],
        "repeat": 2})");
    const auto script = script_from_json(j);
    CHECK(script.frame_count() == 10);
    REQUIRE(script.segments[0].scene.has_value());
    CHECK(script.segments[0].scene->peak_k == 2500);
    CHECK(script.segments[0].scene->noise_sigma == doctest::Approx(30.0));
    CHECK(script.segments[0].scene->applied_transform.rotation == doctest::Approx(2 * 3.14159265358979 / 180));
    CHECK_FALSE(script.segments[1].scene.has_value());

    auto expect_pointer = [](const char* text, const std::string& prefix) {
        try {
            script_from_json(nlohmann::json::parse(text));
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).rfind(prefix, 0) == 0);
        }
    };
    expect_pointer(R"({"version": 2, "segments": []})", "/version");
    expect_pointer(R"({"version": 1, "segments": [{"duration_ms": 0, "laser_off": true}]})", "/segments/0/duration_ms");
    expect_pointer(R"({"version": 1, "segments": [{"duration_ms": 5, "scene": "nope"}]})", "/segments/0/scene");
    expect_pointer(R"({"version": 1, "bogus": 1, "segments": []})", "/bogus");
    expect_pointer(R"({"version": 1, "scenes": {"a": {"peak_k": -5}}, "segments": []})", "/scenes/a");
}
