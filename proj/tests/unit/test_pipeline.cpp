#include "mpyro/errors.hpp"
#include "mpyro/pipeline.hpp"
#include "mpyro/synth.hpp"

#include <doctest.h>

#include <sstream>

using namespace mpyro;

namespace {

SyntheticLayerScript script(std::uint32_t fps) {
    SyntheticLayerScript s;
    s.fps = fps;
    SyntheticScene hot;
    hot.peak_k = 3100;
    hot.noise_sigma = 30;
    hot.seed = 3;
    SyntheticScene warm = hot;
    warm.peak_k = 2500;
    warm.applied_transform = {1.01, 0.01, 0.4, -0.3};
    s.segments = {{20.0, hot}, {15.0, std::nullopt}, {20.0, warm}};
    return s;
}

std::string run_csv(FrameSource& src, int workers, std::size_t in_flight, bool full, PipelineReport* report = nullptr) {
    PipelineConfig cfg;
    cfg.workers = workers;
    cfg.in_flight = in_flight;
    PipelineRunOptions opt;
    opt.full_path = full;
    std::ostringstream out;
    write_observation_header(out);
    std::uint64_t expected = 0;
    const auto r = run_pipeline(src, cfg, opt, [&](const FrameResult& fr) {
        CHECK(fr.observation.frame_index >= expected);
        expected = fr.observation.frame_index + 1;
        write_observation_row(out, fr.observation);
    });
    if (report) *report = r;
    return out.str();
}

} // namespace

TEST_CASE("window frames") {
    auto w = window_frames(0.0, 1.0, 30000, 100000);
    CHECK(w.first == 0);
    CHECK(w.second == 30);
    w = window_frames(5250.0, 9250.0, 30000, 435000);
    CHECK(w.second - w.first == 120000);
    w = window_frames(100.0, 200.0, 1000, 50);
    CHECK(w.first == 50);
    CHECK(w.second == 50);
    CHECK_THROWS_AS(window_frames(5.0, 1.0, 1000, 10), ArgumentError);
}

TEST_CASE("ordered and deterministic across worker counts") {
    ScriptFrameSource a(script(1000));
    PipelineReport report;
    const auto one = run_csv(a, 1, 1024, false, &report);
    CHECK(report.frames == 55);
    CHECK(report.status_counts["ok"] == 40);
    CHECK(report.status_counts["laser_off"] == 15);
    ScriptFrameSource b(script(1000));
    CHECK(run_csv(b, 4, 7, false) == one);
    ScriptFrameSource c(script(1000));
    CHECK(run_csv(c, 3, 1, false) == one);
}

TEST_CASE("full path determinism") {
    ScriptFrameSource a(script(500));
    PipelineReport report;
    const auto one = run_csv(a, 1, 64, true, &report);
    CHECK(report.registrations_accepted > 0);
    ScriptFrameSource b(script(500));
    CHECK(run_csv(b, 2, 5, true) == one);
}

TEST_CASE("window option") {
    ScriptFrameSource src(script(1000));
    PipelineConfig cfg;
    cfg.workers = 1;
    PipelineRunOptions opt;
    opt.window_ms = std::make_pair(10.0, 30.0);
    std::vector<std::uint64_t> seen;
    const auto r = run_pipeline(src, cfg, opt, [&](const FrameResult& fr) { seen.push_back(fr.observation.frame_index); });
    CHECK(r.frames == 20);
    REQUIRE(seen.size() == 20);
    CHECK(seen.front() == 10);
    CHECK(seen.back() == 29);
}

TEST_CASE("decode error is reported after earlier frames") {
    std::stringstream buf;
    render_stream(script(1000), buf);
    std::string bytes = buf.str();
    bytes.resize(bytes.size() - 128 * 48 * 2 * 5 - 10);
    std::istringstream in(bytes);
    StreamDecoder dec(in);
    PipelineConfig cfg;
    cfg.workers = 2;
    std::uint64_t delivered = 0;
    const auto r = run_pipeline(dec, cfg, {}, [&](const FrameResult&) { ++delivered; });
    REQUIRE(r.decode_error.has_value());
    CHECK(*r.decode_error_frame == 49);
    CHECK(delivered == 49);
    CHECK(r.frames == 49);
}

TEST_CASE("bench report") {
    BenchOptions opt;
    opt.fast_frames = 200;
    opt.full_frames = 4;
    opt.worker_counts = {1, 2};
    const auto rep = run_bench(PipelineConfig{}, opt);
    REQUIRE(rep.find("fast", 1) != nullptr);
    REQUIRE(rep.find("full", 2) != nullptr);
    CHECK(rep.find("fast", 1)->frames == 200);
    CHECK(rep.find("fast", 1)->frames_per_second > 0);
    CHECK(rep.find("slow", 1) == nullptr);
    const auto j = to_json(rep);
    CHECK(j.contains("rows"));
}
