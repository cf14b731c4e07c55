#include "mpyro/synth.hpp"

#include "mpyro/config.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace mpyro {

using nlohmann::json;

void SyntheticScene::match_optics(const OpticsConfig& cfg) {
    transmission_550 = cfg.a12;
    transmission_620 = 1.0;
    emissivity_550 = cfg.emissivity_ratio;
    emissivity_620 = 1.0;
}

void SyntheticScene::validate() const {
    if (!(peak_k >= 0.0) || !(background_k >= 0.0) || !std::isfinite(peak_k) || !std::isfinite(background_k))
        throw ConfigError("scene temperatures must be finite and >= 0");
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0))
        throw ConfigError("scene sigma must be positive");
    if (!(emissivity_550 > 0.0) || !(emissivity_620 > 0.0))
        throw ConfigError("scene emissivities must be positive");
    if (!(transmission_550 > 0.0) || !(transmission_620 > 0.0))
        throw ConfigError("scene transmissions must be positive");
    if (peak_counts && !(*peak_counts > 0.0))
        throw ConfigError("scene peak_counts must be positive");
    if (!peak_counts && !(exposure_scale >= 0.0))
        throw ConfigError("scene exposure_scale must be >= 0");
    if (!(noise_sigma >= 0.0))
        throw ConfigError("scene noise_sigma must be >= 0");
    if (!(applied_transform.scale > 0.0))
        throw ConfigError("scene transform scale must be positive");
    if (supersample < 1)
        throw ConfigError("scene supersample must be >= 1");
    if (!(psf_sigma >= 0.0) || !std::isfinite(psf_sigma))
        throw ConfigError("scene psf_sigma must be finite and >= 0");
    if (temperature_field)
        for (double t : temperature_field->values())
            if (!(t >= 0.0) || !std::isfinite(t))
                throw ConfigError("temperature field values must be finite and >= 0");
}

FrameGeometry FrameGeometry::from(const OpticsConfig& cfg) {
    FrameGeometry g;
    g.lambda_550 = cfg.lambda1;
    g.lambda_620 = cfg.lambda2;
    g.constants = cfg.constants;
    return g;
}

namespace {

int width_620(const FrameGeometry& g) {
    return g.split_column;
}

int width_550(const FrameGeometry& g) {
    return static_cast<int>(g.width) - g.split_column;
}

void check_geometry(const FrameGeometry& g) {
    if (g.width == 0 || g.height == 0 || g.split_column <= 0 || g.split_column >= static_cast<int>(g.width))
        throw ConfigError("frame geometry: split column must lie inside the frame");
}

double radiance(const SyntheticScene& scene, const FrameGeometry& g, bool is550, double t_k) {
    if (!(t_k > 0.0))
        return 0.0;
    const double lambda = is550 ? g.lambda_550 : g.lambda_620;
    const double eps = is550 ? scene.emissivity_550 : scene.emissivity_620;
    const double a = is550 ? scene.transmission_550 : scene.transmission_620;
    const Temperature t(t_k);
    if (scene.planck)
        return eps * a * planck_radiance(lambda, t, g.constants);
    return wien_radiance(lambda, t, eps, a, g.constants);
}

double max_temperature(const SyntheticScene& scene) {
    if (scene.temperature_field) {
        double m = 0.0;
        for (double t : scene.temperature_field->values())
            m = std::max(m, t);
        return m;
    }
    return std::max(scene.peak_k, scene.background_k);
}

Vec2 scene_center(const SyntheticScene& scene, const FrameGeometry& g) {
    if (scene.center)
        return *scene.center;
    return {(width_620(g) - 1) / 2.0, (g.height - 1) / 2.0};
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Gaussian blur with zero (dark) borders.
void blur_separable(std::vector<double>& img, int w, int h, double sigma) {
    const int r = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i)
        sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& v : k)
        v /= sum;
    std::vector<double> tmp(img.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = std::max(-r, -x); i <= std::min(r, w - 1 - x); ++i)
                acc += k[i + r] * img[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = std::max(-r, -y); i <= std::min(r, h - 1 - y); ++i)
                acc += k[i + r] * tmp[static_cast<std::size_t>(y + i) * w + x];
            img[static_cast<std::size_t>(y) * w + x] = acc;
        }
}

// Noise-free native counts for the whole frame, row-major.
std::vector<double> clean_counts(const SyntheticScene& scene, const FrameGeometry& g) {
    scene.validate();
    check_geometry(g);
    const int w = static_cast<int>(g.width);
    const int h = static_cast<int>(g.height);
    std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
    const double exposure = effective_exposure(scene, g);
    if (exposure == 0.0)
        return out;

    const int s = scene.supersample;
    const SimilarityTransform inv = scene.applied_transform.inverse();
    const Vec2 c620{(width_620(g) - 1) / 2.0, (h - 1) / 2.0};
    const Vec2 c550{(width_550(g) - 1) / 2.0, (h - 1) / 2.0};
    for (const bool is550 : {false, true}) {
        const int cw = is550 ? width_550(g) : width_620(g);
        const int x0 = is550 ? g.split_column : 0;
        const int fw = cw * s;
        const int fh = h * s;
        // Radiance on the supersampled grid, sensor coordinates.
        std::vector<double> fine(static_cast<std::size_t>(fw) * fh);
        for (int v = 0; v < fh; ++v) {
            for (int u = 0; u < fw; ++u) {
                const double px = (u + 0.5) / s - 0.5;
                const double py = (v + 0.5) / s - 0.5;
                Vec2 q{px, py};
                if (is550) {
                    const Vec2 r = inv.apply({px - c550.x, py - c550.y});
                    q = {r.x + c620.x, r.y + c620.y};
                }
                fine[static_cast<std::size_t>(v) * fw + u] =
                    radiance(scene, g, is550, scene_temperature(scene, g, q.x, q.y));
            }
        }
        if (scene.psf_sigma > 0.0)
            blur_separable(fine, fw, fh, scene.psf_sigma * s);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < cw; ++x) {
                double acc = 0.0;
                for (int j = 0; j < s; ++j)
                    for (int i = 0; i < s; ++i)
                        acc += fine[static_cast<std::size_t>(y * s + j) * fw + (x * s + i)];
                out[static_cast<std::size_t>(y) * w + (x0 + x)] = exposure * acc / (s * s);
            }
        }
    }
    return out;
}

RenderedFrame finish_frame(const std::vector<double>& clean, const SyntheticScene* scene, const FrameGeometry& g,
                           std::uint64_t index, std::uint32_t fps) {
    RenderedFrame r;
    r.frame.index = index;
    r.frame.timestamp_ms = frame_timestamp_ms(index, fps);
    r.frame.pixels = Grid<std::uint16_t>(static_cast<int>(g.width), static_cast<int>(g.height), 0);
    const bool noisy = scene != nullptr && scene->noise_sigma > 0.0;
    std::mt19937_64 rng(noisy ? splitmix64(scene->seed ^ splitmix64(index)) : 0);
    std::normal_distribution<double> noise(0.0, noisy ? scene->noise_sigma : 1.0);
    auto dst = r.frame.pixels.values();
    for (std::size_t i = 0; i < clean.size(); ++i) {
        double v = clean[i];
        if (noisy)
            v += noise(rng);
        double q = std::round(v);
        if (q > 4095.0) {
            q = 4095.0;
            r.saturated = true;
        }
        q = std::max(q, 0.0);
        dst[i] = static_cast<std::uint16_t>(static_cast<int>(q) * 16);
    }
    return r;
}

} // namespace

double scene_temperature(const SyntheticScene& scene, const FrameGeometry& g, double x, double y) {
    if (scene.temperature_field) {
        const int ix = static_cast<int>(std::floor(x + 0.5));
        const int iy = static_cast<int>(std::floor(y + 0.5));
        if (!scene.temperature_field->contains(ix, iy))
            return 0.0;
        return (*scene.temperature_field)(ix, iy);
    }
    const Vec2 c = scene_center(scene, g);
    const double u = (x - c.x) / scene.sigma_x;
    const double v = (y - c.y) / scene.sigma_y;
    const double rho2 = u * u + v * v;
    if (scene.profile == BlobProfile::uniform)
        return rho2 <= 1.0 ? scene.peak_k : scene.background_k;
    return scene.background_k + (scene.peak_k - scene.background_k) * std::exp(-0.5 * rho2);
}

double effective_exposure(const SyntheticScene& scene, const FrameGeometry& g) {
    if (!scene.peak_counts)
        return scene.exposure_scale;
    const double t_max = max_temperature(scene);
    const double brightest = std::max(radiance(scene, g, true, t_max), radiance(scene, g, false, t_max));
    return brightest > 0.0 ? *scene.peak_counts / brightest : 0.0;
}

RenderedFrame render_pair(const SyntheticScene& scene, const FrameGeometry& geom, std::uint64_t frame_index) {
    return finish_frame(clean_counts(scene, geom), &scene, geom, frame_index, 30000);
}

Mask footprint(const SyntheticScene& scene, const FrameGeometry& g) {
    check_geometry(g);
    Mask m(width_620(g), static_cast<int>(g.height), 0);
    const Vec2 c = scene_center(scene, g);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            if (scene.temperature_field) {
                m(x, y) = scene_temperature(scene, g, x, y) > 0.0;
                continue;
            }
            const double u = (x - c.x) / scene.sigma_x;
            const double v = (y - c.y) / scene.sigma_y;
            m(x, y) = u * u + v * v <= 1.0;
        }
    return m;
}

// --- Scripts ---------------------------------------------------------------

std::uint64_t SyntheticLayerScript::segment_frames(std::size_t i) const {
    return static_cast<std::uint64_t>(std::llround(segments.at(i).duration_ms * fps / 1000.0));
}

std::uint64_t SyntheticLayerScript::frame_count() const {
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < segments.size(); ++i)
        n += segment_frames(i);
    return n;
}

void SyntheticLayerScript::validate() const {
    if (fps == 0)
        throw ConfigError("script fps must be positive");
    check_geometry(geometry);
    if (!(pixel_pitch_um > 0.0f))
        throw ConfigError("script pixel pitch must be positive");
    for (const auto& s : segments) {
        if (!(s.duration_ms > 0.0) || !std::isfinite(s.duration_ms))
            throw ConfigError("segment durations must be positive");
        if (s.scene)
            s.scene->validate();
    }
}

ScriptFrameSource::ScriptFrameSource(SyntheticLayerScript script) : script_(std::move(script)) {
    script_.validate();
    header_.width = script_.geometry.width;
    header_.height = script_.geometry.height;
    header_.fps = script_.fps;
    header_.bit_depth = 12;
    header_.frame_count = script_.frame_count();
    header_.pixel_pitch_um = script_.pixel_pitch_um;
    std::uint64_t start = 0;
    for (std::size_t i = 0; i < script_.segments.size(); ++i) {
        starts_.push_back(start);
        start += script_.segment_frames(i);
    }
}

std::optional<Frame> ScriptFrameSource::next() {
    auto r = next_rendered();
    if (!r)
        return std::nullopt;
    return std::move(r->frame);
}

std::optional<RenderedFrame> ScriptFrameSource::next_rendered() {
    if (next_index_ >= header_.frame_count)
        return std::nullopt;
    const std::uint64_t index = next_index_++;
    const auto it = std::upper_bound(starts_.begin(), starts_.end(), index);
    const auto seg = static_cast<std::size_t>(it - starts_.begin()) - 1;
    if (seg != cached_segment_) {
        const auto& scene = script_.segments[seg].scene;
        cached_ = scene ? clean_counts(*scene, script_.geometry)
                        : std::vector<double>(header_.pixels_per_frame(), 0.0);
        cached_segment_ = seg;
    }
    const auto& scene = script_.segments[seg].scene;
    return finish_frame(cached_, scene ? &*scene : nullptr, script_.geometry, index, script_.fps);
}

void ScriptFrameSource::seek(std::uint64_t index) {
    if (index > header_.frame_count)
        throw ArgumentError("seek beyond the end of the script");
    next_index_ = index;
}

void render_frames(const SyntheticLayerScript& script, const std::function<void(const RenderedFrame&)>& emit) {
    ScriptFrameSource source(script);
    while (auto r = source.next_rendered())
        emit(*r);
}

StreamHeader render_stream(const SyntheticLayerScript& script, std::ostream& sink) {
    ScriptFrameSource source(script);
    StreamEncoder encoder(sink, source.header());
    while (auto r = source.next_rendered()) {
        encoder.write(r->frame);
        if (!sink)
            throw IoError("failed writing synthetic stream at frame " + std::to_string(r->frame.index));
    }
    encoder.finish();
    sink.flush();
    if (!sink)
        throw IoError("failed writing synthetic stream");
    return source.header();
}

// --- JSON ------------------------------------------------------------------

namespace {

void check_keys(const json& j, const std::string& pointer, std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw ConfigError(pointer + ": expected an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            known = known || item.key() == k;
        if (!known)
            throw ConfigError(pointer + "/" + item.key() + ": unknown field");
    }
}

double num(const json& j, const char* key, const std::string& pointer, double fallback) {
    if (!j.contains(key))
        return fallback;
    if (!j.at(key).is_number())
        throw ConfigError(pointer + "/" + key + ": expected a number");
    return j.at(key).get<double>();
}

std::pair<double, double> pair_of(const json& j, const char* key, const std::string& pointer,
                                  std::pair<double, double> fallback) {
    if (!j.contains(key))
        return fallback;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(pointer + "/" + key + ": expected an array of two numbers");
    return {v[0].get<double>(), v[1].get<double>()};
}

template <typename F>
void rethrow_at(const std::string& pointer, F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (!msg.empty() && msg.front() == '/')
            throw;
        throw ConfigError(pointer + ": " + msg);
    }
}

} // namespace

SyntheticScene scene_from_json(const json& j, const OpticsConfig& cfg, const std::string& pointer) {
    check_keys(j, pointer,
               {"profile", "peak_k", "background_k", "center", "sigma_px", "temperature_field", "emissivity",
                "peak_counts", "exposure_scale", "noise_sigma", "noise_fraction", "transform", "seed", "planck",
                "supersample", "psf_sigma_px"});
    SyntheticScene s;
    s.match_optics(cfg);
    if (j.contains("profile")) {
        const auto& p = j.at("profile");
        if (p == "uniform")
            s.profile = BlobProfile::uniform;
        else if (p == "gaussian")
            s.profile = BlobProfile::gaussian;
        else
            throw ConfigError(pointer + "/profile: expected \"uniform\" or \"gaussian\"");
    }
    s.peak_k = num(j, "peak_k", pointer, s.peak_k);
    s.background_k = num(j, "background_k", pointer, s.background_k);
    if (j.contains("center")) {
        const auto [x, y] = pair_of(j, "center", pointer, {0, 0});
        s.center = Vec2{x, y};
    }
    std::tie(s.sigma_x, s.sigma_y) = pair_of(j, "sigma_px", pointer, {s.sigma_x, s.sigma_y});
    if (j.contains("temperature_field")) {
        const auto& rows = j.at("temperature_field");
        const std::string ptr = pointer + "/temperature_field";
        if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty())
            throw ConfigError(ptr + ": expected a non-empty array of rows");
        const int h = static_cast<int>(rows.size());
        const int w = static_cast<int>(rows[0].size());
        Grid<double> field(w, h);
        for (int y = 0; y < h; ++y) {
            if (!rows[y].is_array() || static_cast<int>(rows[y].size()) != w)
                throw ConfigError(ptr + "/" + std::to_string(y) + ": row length differs");
            for (int x = 0; x < w; ++x) {
                if (!rows[y][x].is_number())
                    throw ConfigError(ptr + "/" + std::to_string(y) + "/" + std::to_string(x) + ": expected a number");
                field(x, y) = rows[y][x].get<double>();
            }
        }
        s.temperature_field = std::move(field);
    }
    std::tie(s.emissivity_550, s.emissivity_620) =
        pair_of(j, "emissivity", pointer, {s.emissivity_550, s.emissivity_620});
    if (j.contains("exposure_scale") && j.contains("peak_counts"))
        throw ConfigError(pointer + "/exposure_scale: give either peak_counts or exposure_scale");
    if (j.contains("exposure_scale")) {
        s.peak_counts.reset();
        s.exposure_scale = num(j, "exposure_scale", pointer, 0.0);
    } else {
        s.peak_counts = num(j, "peak_counts", pointer, *s.peak_counts);
    }
    s.noise_sigma = num(j, "noise_sigma", pointer, 0.0);
    if (j.contains("noise_fraction")) {
        if (j.contains("noise_sigma"))
            throw ConfigError(pointer + "/noise_fraction: give either noise_sigma or noise_fraction");
        if (!s.peak_counts)
            throw ConfigError(pointer + "/noise_fraction: requires peak_counts");
        s.noise_sigma = num(j, "noise_fraction", pointer, 0.0) * *s.peak_counts;
    }
    if (j.contains("transform")) {
        const auto& t = j.at("transform");
        const std::string ptr = pointer + "/transform";
        check_keys(t, ptr, {"scale", "rotation_deg", "dx", "dy"});
        s.applied_transform.scale = num(t, "scale", ptr, 1.0);
        s.applied_transform.rotation = num(t, "rotation_deg", ptr, 0.0) * std::numbers::pi / 180.0;
        s.applied_transform.dx = num(t, "dx", ptr, 0.0);
        s.applied_transform.dy = num(t, "dy", ptr, 0.0);
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned())
            throw ConfigError(pointer + "/seed: expected a non-negative integer");
        s.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("planck")) {
        if (!j.at("planck").is_boolean())
            throw ConfigError(pointer + "/planck: expected a boolean");
        s.planck = j.at("planck").get<bool>();
    }
    if (j.contains("supersample")) {
        if (!j.at("supersample").is_number_integer())
            throw ConfigError(pointer + "/supersample: expected an integer");
        s.supersample = j.at("supersample").get<int>();
    }
    s.psf_sigma = num(j, "psf_sigma_px", pointer, s.psf_sigma);
    rethrow_at(pointer, [&] { s.validate(); });
    return s;
}

SyntheticLayerScript script_from_json(const json& j) {
    check_keys(j, "", {"version", "fps", "width", "height", "split_column", "pixel_pitch_um", "optics", "scenes",
                       "segments", "repeat"});
    if (!j.contains("version") || j.at("version") != 1)
        throw ConfigError("/version: expected 1");
    OpticsConfig cfg;
    if (j.contains("optics"))
        cfg = optics_from_json(j.at("optics"), "/optics");

    SyntheticLayerScript script;
    script.geometry = FrameGeometry::from(cfg);
    auto uint_field = [&](const char* key, std::uint32_t fallback) {
        if (!j.contains(key))
            return fallback;
        if (!j.at(key).is_number_unsigned() || j.at(key).get<std::uint64_t>() == 0)
            throw ConfigError(std::string("/") + key + ": expected a positive integer");
        return j.at(key).get<std::uint32_t>();
    };
    script.fps = uint_field("fps", script.fps);
    script.geometry.width = uint_field("width", script.geometry.width);
    script.geometry.height = uint_field("height", script.geometry.height);
    script.geometry.split_column =
        static_cast<int>(uint_field("split_column", static_cast<std::uint32_t>(script.geometry.width / 2)));
    script.pixel_pitch_um = static_cast<float>(num(j, "pixel_pitch_um", "", script.pixel_pitch_um));
    rethrow_at("/split_column", [&] { check_geometry(script.geometry); });

    std::map<std::string, SyntheticScene> scenes;
    if (j.contains("scenes")) {
        if (!j.at("scenes").is_object())
            throw ConfigError("/scenes: expected an object");
        for (const auto& item : j.at("scenes").items())
            scenes.emplace(item.key(), scene_from_json(item.value(), cfg, "/scenes/" + item.key()));
    }

    if (!j.contains("segments") || !j.at("segments").is_array())
        throw ConfigError("/segments: expected an array");
    std::vector<ScriptSegment> once;
    const auto& segs = j.at("segments");
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::string ptr = "/segments/" + std::to_string(i);
        const auto& seg = segs[i];
        check_keys(seg, ptr, {"duration_ms", "scene", "laser_off"});
        ScriptSegment out;
        if (!seg.contains("duration_ms"))
            throw ConfigError(ptr + "/duration_ms: missing");
        out.duration_ms = num(seg, "duration_ms", ptr, 0.0);
        if (!(out.duration_ms > 0.0))
            throw ConfigError(ptr + "/duration_ms: must be > 0");
        const bool off = seg.contains("laser_off") && seg.at("laser_off") == true;
        if (off && seg.contains("scene"))
            throw ConfigError(ptr + "/scene: a laser-off segment has no scene");
        if (!off) {
            if (!seg.contains("scene"))
                throw ConfigError(ptr + "/scene: missing (or set laser_off)");
            const auto& sc = seg.at("scene");
            if (sc.is_string()) {
                const auto it = scenes.find(sc.get<std::string>());
                if (it == scenes.end())
                    throw ConfigError(ptr + "/scene: unknown scene \"" + sc.get<std::string>() + "\"");
                out.scene = it->second;
            } else {
                out.scene = scene_from_json(sc, cfg, ptr + "/scene");
            }
        }
        once.push_back(std::move(out));
    }
    int repeat = 1;
    if (j.contains("repeat")) {
        if (!j.at("repeat").is_number_integer() || j.at("repeat").get<int>() < 1)
            throw ConfigError("/repeat: expected an integer >= 1");
        repeat = j.at("repeat").get<int>();
    }
    for (int r = 0; r < repeat; ++r)
        for (const auto& s : once)
            script.segments.push_back(s);
    return script;
}

} // namespace mpyro
