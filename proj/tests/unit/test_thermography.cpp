#include "mpyro/errors.hpp"
#include "mpyro/synth.hpp"
#include "mpyro/thermography.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

using namespace mpyro;

namespace {

OpticsConfig rounded_optics() {
    OpticsConfig cfg;
    cfg.constants = PhysicalConstants::rounded();
    return cfg;
}

SubImage filled(int w, int h, float v) {
    SubImage s;
    s.pixels = Image(w, h, v);
    return s;
}

ObserveParams fast_params() {
    ObserveParams p;
    p.quantization_step = 16.0;
    return p;
}

SyntheticScene oracle_scene(const OpticsConfig& cfg, double t_k) {
    SyntheticScene scene;
    scene.match_optics(cfg);
    scene.peak_k = t_k;
    return scene;
}

MeltPoolObservation present(std::uint64_t index, double t_ms, double i12 = 1.2) {
    MeltPoolObservation o;
    o.frame_index = index;
    o.timestamp_ms = t_ms;
    o.i12 = i12;
    o.t_k = 3000.0;
    o.status = ObservationStatus::ok;
    return o;
}

MeltPoolObservation dark(std::uint64_t index, double t_ms) {
    MeltPoolObservation o;
    o.frame_index = index;
    o.timestamp_ms = t_ms;
    return o;
}

// fps frames per second; segments of (duration ms, laser on)
std::vector<MeltPoolObservation> timeline(double fps, std::initializer_list<std::pair<double, bool>> segments) {
    std::vector<MeltPoolObservation> out;
    std::uint64_t i = 0;
    for (const auto& [ms, on] : segments) {
        const auto n = static_cast<std::uint64_t>(std::llround(ms * fps / 1000.0));
        for (std::uint64_t k = 0; k < n; ++k, ++i) {
            const double t = static_cast<double>(i) * 1000.0 / fps;
            out.push_back(on ? present(i, t) : dark(i, t));
        }
    }
    return out;
}

} // namespace

TEST_CASE("ratio map arithmetic") {
    const SubImage a = filled(4, 3, 5000);
    const auto same = ratio_map(a, a, 1600);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) {
            CHECK(same.valid(x, y) == 1);
            CHECK(same.values(x, y) == 1.0f);
        }

    SubImage i550 = filled(2, 1, 2200), i620 = filled(2, 1, 2000);
    i550.pixels(1, 0) = 100;
    const auto rm = ratio_map(i550, i620, 1600);
    CHECK(rm.values(0, 0) == doctest::Approx(1.1));
    CHECK(rm.valid(1, 0) == 0);
    CHECK(rm.values(1, 0) == 0.0f);
}

TEST_CASE("oracle ratio map at uniform temperature") {
    const OpticsConfig cfg;
    const auto scene = oracle_scene(cfg, 3000.0);
    const auto geom = FrameGeometry::from(cfg);
    const auto rendered = render_pair(scene, geom);
    const auto [s620, s550] = split_frame(rendered.frame, geom.split_column);
    const auto rm = ratio_map(s550, s620, 1600);
    const double expected = ratio_from_temperature(Temperature(3000.0), cfg);
    std::size_t n = 0;
    double worst = 0;
    for (int y = 0; y < rm.valid.height(); ++y)
        for (int x = 0; x < rm.valid.width(); ++x)
            if (rm.valid(x, y)) {
                ++n;
                worst = std::max(worst, std::abs(rm.values(x, y) / expected - 1.0));
            }
    CHECK(n > 50);
    CHECK(worst < 0.01);
}

TEST_CASE("temperature map classification") {
    const auto cfg = rounded_optics();
    RatioMap rm;
    rm.values = Image(4, 1, 0.0f);
    rm.valid = Mask(4, 1, 1);
    rm.i550 = Image(4, 1, 2200.0f);
    rm.i620 = Image(4, 1, 2000.0f);
    rm.values(0, 0) = 1.1f;
    rm.values(1, 0) = 3.5f;
    rm.values(2, 0) = 0.05f;
    rm.valid(3, 0) = 0;
    const auto tm = temperature_map(rm, cfg, {}, 16.0);
    CHECK(tm.status_at(0, 0) == PixelStatus::valid);
    CHECK(tm.kelvin(0, 0) == doctest::Approx(3033.46).epsilon(1e-4));
    CHECK(tm.status_at(1, 0) == PixelStatus::above_range);
    CHECK(tm.status_at(2, 0) == PixelStatus::below_floor);
    CHECK(tm.status_at(3, 0) == PixelStatus::background);
    CHECK(tm.kelvin(3, 0) == 0.0);
    REQUIRE(tm.uncertainty.has_value());
    CHECK((*tm.uncertainty)(0, 0) > 0.0);
    CHECK(tm.count(PixelStatus::valid) + tm.count(PixelStatus::above_range) + tm.count(PixelStatus::below_floor)
              + tm.count(PixelStatus::background) + tm.count(PixelStatus::suspect)
          == 4);

    RatioMap uniform;
    uniform.values = Image(5, 5, 1.1f);
    uniform.valid = Mask(5, 5, 1);
    uniform.i550 = Image(5, 5, 2200.0f);
    uniform.i620 = Image(5, 5, 2000.0f);
    const auto tu = temperature_map(uniform, cfg);
    CHECK_FALSE(tu.uncertainty.has_value());
    CHECK(tu.count(PixelStatus::valid) == 25);
    CHECK(*tu.mean_valid() == doctest::Approx(3033.46).epsilon(1e-4));
}

TEST_CASE("suspect temperatures above the ceiling") {
    const OpticsConfig cfg;
    RatioMap rm;
    const double r = ratio_from_temperature(Temperature(8000.0), cfg);
    rm.values = Image(1, 1, static_cast<float>(r));
    rm.valid = Mask(1, 1, 1);
    rm.i550 = rm.i620 = Image(1, 1, 5000.0f);
    CHECK(temperature_map(rm, cfg).status_at(0, 0) == PixelStatus::suspect);
}

TEST_CASE("dark frame is laser off") {
    Frame f;
    f.pixels = Grid<std::uint16_t>(128, 48, 0);
    const auto r = observe_frame(f, OpticsConfig{}, fast_params());
    CHECK(r.observation.status == ObservationStatus::laser_off);
    CHECK_FALSE(r.observation.t_k.has_value());
    CHECK_FALSE(r.observation.melt_pool_present());
}

TEST_CASE("oracle frame at 3033.46 K") {
    const OpticsConfig cfg;
    const auto scene = oracle_scene(cfg, 3033.46);
    const auto rendered = render_pair(scene, FrameGeometry::from(cfg));
    const auto r = observe_frame(rendered.frame, cfg, fast_params());
    CHECK(r.observation.status == ObservationStatus::ok);
    REQUIRE(r.observation.t_k.has_value());
    CHECK(std::abs(*r.observation.t_k - 3033.46) <= 15.0);
    CHECK(*r.observation.i12 == doctest::Approx(*r.observation.mean_i550 / *r.observation.mean_i620));
    REQUIRE(r.observation.u_t.has_value());
    CHECK(*r.observation.u_t > 0.0);
    REQUIRE(r.observation.morphology.has_value());
    CHECK(r.observation.morphology->area_um2 > 0.0);
    CHECK_FALSE(r.observation.registration.attempted);
    CHECK_FALSE(r.map.has_value());
}

TEST_CASE("one pixel misregistration on the fast path") {
    const OpticsConfig cfg;
    auto scene = oracle_scene(cfg, 3033.46);
    scene.applied_transform = {1.0, 0.0, 1.0, 0.0};
    const auto rendered = render_pair(scene, FrameGeometry::from(cfg));
    const auto r = observe_frame(rendered.frame, cfg, fast_params());
    REQUIRE(r.observation.t_k.has_value());
    CHECK(std::abs(*r.observation.t_k - 3033.46) <= 25.0);
}

TEST_CASE("full path map agrees with the average") {
    const OpticsConfig cfg;
    const auto scene = oracle_scene(cfg, 2800.0);
    const auto rendered = render_pair(scene, FrameGeometry::from(cfg));
    auto params = fast_params();
    params.full_path = true;
    const auto r = observe_frame(rendered.frame, cfg, params);
    CHECK(r.observation.registration.attempted);
    CHECK(r.observation.registration.accepted);
    REQUIRE(r.map.has_value());
    const auto map_mean = r.map->mean_valid();
    REQUIRE(map_mean.has_value());
    REQUIRE(r.observation.t_k.has_value());
    CHECK(*map_mean == doctest::Approx(*r.observation.t_k).epsilon(0.01));
    CHECK(*map_mean == doctest::Approx(2800.0).epsilon(0.005));

    params.average_mode = AverageMode::mean_of_ratios;
    const auto m = observe_frame(rendered.frame, cfg, params);
    REQUIRE(m.observation.t_k.has_value());
    CHECK(*m.observation.t_k == doctest::Approx(*r.observation.t_k).epsilon(0.005));
}

TEST_CASE("common-mode exposure invariance") {
    const OpticsConfig cfg;
    auto scene = oracle_scene(cfg, 2500.0);
    scene.peak_counts = 1500.0;
    const auto a = observe_frame(render_pair(scene, FrameGeometry::from(cfg)).frame, cfg, fast_params());
    scene.peak_counts = 3000.0;
    const auto b = observe_frame(render_pair(scene, FrameGeometry::from(cfg)).frame, cfg, fast_params());
    REQUIRE(a.observation.t_k.has_value());
    REQUIRE(b.observation.t_k.has_value());
    CHECK(*a.observation.i12 == doctest::Approx(*b.observation.i12).epsilon(0.002));
    CHECK(std::abs(*a.observation.t_k - *b.observation.t_k) < 5.0);
}

TEST_CASE("segment bars") {
    CHECK(segment_bars({}).empty());

    const auto one = timeline(1000, {{50, false}, {300, true}, {40, false}, {300, true}});
    const auto bars1 = segment_bars(one);
    REQUIRE(bars1.size() == 1);
    CHECK(bars1[0].start_frame == 50);
    CHECK(bars1[0].end_frame == one.size() - 1);

    const auto five = timeline(1000, {{400, true}, {200, false}, {400, true}, {200, false}, {400, true},
                                      {200, false}, {400, true}, {200, false}, {400, true}, {200, false}});
    const auto bars = segment_bars(five);
    REQUIRE(bars.size() == 5);
    for (std::size_t i = 0; i < bars.size(); ++i) {
        CHECK(bars[i].bar_index == static_cast<int>(i));
        CHECK(bars[i].start_frame == i * 600);
        CHECK(bars[i].end_frame == i * 600 + 399);
        if (i > 0) CHECK(bars[i].start_frame > bars[i - 1].end_frame);
    }
}

TEST_CASE("extract window") {
    const auto series = timeline(1000, {{14500, true}});
    CHECK(extract_window(series, 5250, 9250).size() == 4000);
    CHECK(extract_window(series, 3000, 3000).empty());
    const auto all = extract_window(series, -1, 1e9);
    CHECK(all.size() == series.size());
    CHECK(all.data() == series.data());
    CHECK_THROWS_AS(extract_window(series, 10, 5), ArgumentError);
}

TEST_CASE("i12 histogram") {
    const std::vector<double> edges{1.0, 1.1, 1.2, 1.3};
    std::vector<MeltPoolObservation> same{present(0, 0, 1.15), present(1, 1, 1.16), present(2, 2, 1.17)};
    auto h = i12_histogram(same, edges);
    CHECK(h.bins[1] == 1.0);
    CHECK(h.total == 3);

    std::vector<MeltPoolObservation> two{present(0, 0, 1.05), present(1, 1, 1.25), dark(2, 2)};
    h = i12_histogram(two, edges);
    CHECK(h.bins[0] == 0.5);
    CHECK(h.bins[2] == 0.5);

    std::vector<MeltPoolObservation> spread{present(0, 0, 0.5), present(1, 1, 1.3), present(2, 2, 1.12)};
    h = i12_histogram(spread, edges);
    CHECK(h.underflow + h.overflow + std::accumulate(h.bins.begin(), h.bins.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.overflow == doctest::Approx(1.0 / 3));

    std::vector<MeltPoolObservation> none{dark(0, 0)};
    CHECK_THROWS_AS(i12_histogram(none, edges), ArgumentError);
}

TEST_CASE("oracle layer histogram concentrates near the true ratio") {
    const OpticsConfig cfg;
    auto scene = oracle_scene(cfg, 2600.0);
    scene.noise_sigma = 0.02 * *scene.peak_counts;
    std::vector<MeltPoolObservation> series;
    for (std::uint64_t i = 0; i < 40; ++i)
        series.push_back(observe_frame(render_pair(scene, FrameGeometry::from(cfg), i).frame, cfg, fast_params()).observation);
    std::vector<double> edges;
    for (int i = 0; i <= 30; ++i) edges.push_back(0.5 + 0.05 * i);
    const auto h = i12_histogram(series, edges);
    const double truth = ratio_from_temperature(Temperature(2600.0), cfg);
    const auto bin = static_cast<int>((truth - 0.5) / 0.05);
    double mass = 0;
    for (int b = std::max(0, bin - 2); b <= std::min(29, bin + 2); ++b) mass += h.bins[static_cast<std::size_t>(b)];
    CHECK(mass == doctest::Approx(1.0));
}

TEST_CASE("moving average") {
    const std::vector<double> v{0, 100, 0};
    const auto s = moving_average(v, 3);
    CHECK(s[0] == doctest::Approx(50));
    CHECK(s[1] == doctest::Approx(100.0 / 3));
    CHECK(s[2] == doctest::Approx(50));
    CHECK(moving_average(v, 1) == v);
    const std::vector<double> c(7, 4.5);
    CHECK(moving_average(c, 5) == c);
    CHECK_THROWS_AS(moving_average(v, 2), ArgumentError);
    CHECK_THROWS_AS(moving_average(v, 0), ArgumentError);
}

TEST_CASE("layer summary") {
    const auto five = timeline(1000, {{100, true}, {200, false}, {100, true}});
    const auto bars = segment_bars(five);
    const auto j = layer_summary(five, bars);
    REQUIRE(j["bars"].size() == 2);
    CHECK(j["bars"][0]["mean_T_K"].get<double>() == doctest::Approx(3000.0));
}

TEST_CASE("observation csv round trip") {
    MeltPoolObservation a = present(7, 0.25, 1.1);
    a.mean_i550 = 2200;
    a.mean_i620 = 2000;
    a.u_t = 31.7;
    a.morphology = Morphology{120, 80, 7200};
    a.registration.attempted = true;
    a.registration.accepted = true;
    a.registration.ssim = 0.93;
    MeltPoolObservation b = dark(8, 0.5);

    std::stringstream buf;
    write_observation_header(buf);
    write_observation_row(buf, a);
    write_observation_row(buf, b);
    const auto back = read_observations_csv(buf);
    REQUIRE(back.size() == 2);
    CHECK(back[0].frame_index == 7);
    CHECK(back[0].timestamp_ms == doctest::Approx(0.25));
    CHECK(*back[0].i12 == doctest::Approx(1.1));
    CHECK(*back[0].t_k == doctest::Approx(3000.0));
    CHECK(back[0].morphology->width_um == doctest::Approx(120));
    CHECK(back[0].status == ObservationStatus::ok);
    CHECK(back[1].status == ObservationStatus::laser_off);
    CHECK_FALSE(back[1].t_k.has_value());

    std::istringstream bad("frame_idx,t_ms\n1,x\n");
    CHECK_THROWS_AS(read_observations_csv(bad), ParseError);
}

TEST_CASE("status names") {
    for (auto s : {ObservationStatus::ok, ObservationStatus::laser_off, ObservationStatus::single_channel,
                   ObservationStatus::below_floor, ObservationStatus::above_range, ObservationStatus::suspect,
                   ObservationStatus::error})
        CHECK(observation_status_from_string(to_string(s)) == s);
}
