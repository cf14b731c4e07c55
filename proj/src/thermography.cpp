#include "mpyro/thermography.hpp"

#include "mpyro/csv.hpp"
#include "mpyro/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace mpyro {

void ThermographyLimits::validate() const {
    if (!(floor_k > 0.0) || !(ceiling_k > floor_k))
        throw ConfigError("limits need 0 < floor_k < ceiling_k");
    if (!(gap_min_ms >= 0.0) || !std::isfinite(gap_min_ms))
        throw ConfigError("gap_min_ms must be finite and >= 0");
}

RatioMap ratio_map(const SubImage& warped550, const SubImage& ref620, double floor) {
    const int w = ref620.width();
    const int h = ref620.height();
    if (warped550.width() != w || warped550.height() != h)
        throw ArgumentError("ratio map inputs must have the same dimensions");
    RatioMap rm{Image(w, h, 0.0f), Mask(w, h, 0), warped550.pixels, ref620.pixels};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double a = warped550.pixels(x, y);
            const double b = ref620.pixels(x, y);
            if (a >= floor && b >= floor && b > 0.0) {
                rm.values(x, y) = static_cast<float>(a / b);
                rm.valid(x, y) = 1;
            }
        }
    return rm;
}

std::string to_string(PixelStatus s) {
    switch (s) {
    case PixelStatus::background: return "background";
    case PixelStatus::valid: return "valid";
    case PixelStatus::below_floor: return "below_floor";
    case PixelStatus::above_range: return "above_range";
    case PixelStatus::suspect: return "suspect";
    }
    return "unknown";
}

std::size_t TemperatureMap::count(PixelStatus s) const {
    return static_cast<std::size_t>(
        std::count(status.values().begin(), status.values().end(), static_cast<std::uint8_t>(s)));
}

std::optional<double> TemperatureMap::mean_valid() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < kelvin.size(); ++i)
        if (status.values()[i] == static_cast<std::uint8_t>(PixelStatus::valid)) {
            sum += kelvin.values()[i];
            ++n;
        }
    if (n == 0)
        return std::nullopt;
    return sum / static_cast<double>(n);
}

TemperatureMap temperature_map(const RatioMap& rm, const OpticsConfig& cfg, const ThermographyLimits& limits,
                               double quantization_step) {
    const int w = rm.values.width();
    const int h = rm.values.height();
    TemperatureMap tm{Grid<double>(w, h, 0.0), Grid<std::uint8_t>(w, h, 0), std::nullopt};
    const bool with_u = quantization_step > 0.0;
    if (with_u)
        tm.uncertainty = Grid<double>(w, h, 0.0);
    const double singular = singular_ratio(cfg);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!rm.valid(x, y))
                continue;
            const double i12 = rm.values(x, y);
            if (i12 >= singular) {
                tm.status(x, y) = static_cast<std::uint8_t>(PixelStatus::above_range);
                continue;
            }
            double t = 0.0;
            try {
                t = temperature_from_ratio(i12, cfg).kelvin();
            } catch (const RatioAboveRangeError&) {
                tm.status(x, y) = static_cast<std::uint8_t>(PixelStatus::above_range);
                continue;
            }
            tm.kelvin(x, y) = t;
            PixelStatus s = PixelStatus::valid;
            if (t < limits.floor_k)
                s = PixelStatus::below_floor;
            else if (t > limits.ceiling_k)
                s = PixelStatus::suspect;
            tm.status(x, y) = static_cast<std::uint8_t>(s);
            if (with_u && s == PixelStatus::valid) {
                const double u_i12 = intensity_ratio_uncertainty(rm.i550(x, y), rm.i620(x, y), quantization_step);
                (*tm.uncertainty)(x, y) = temperature_uncertainty(i12, cfg.u_a12, u_i12, cfg).u_t_total;
            }
        }
    }
    return tm;
}

std::string to_string(ObservationStatus s) {
    switch (s) {
    case ObservationStatus::ok: return "ok";
    case ObservationStatus::laser_off: return "laser_off";
    case ObservationStatus::single_channel: return "single_channel";
    case ObservationStatus::below_floor: return "below_floor";
    case ObservationStatus::above_range: return "above_range";
    case ObservationStatus::suspect: return "suspect";
    case ObservationStatus::error: return "error";
    }
    return "error";
}

ObservationStatus observation_status_from_string(const std::string& s) {
    for (auto st : {ObservationStatus::ok, ObservationStatus::laser_off, ObservationStatus::single_channel,
                    ObservationStatus::below_floor, ObservationStatus::above_range, ObservationStatus::suspect,
                    ObservationStatus::error})
        if (to_string(st) == s)
            return st;
    throw ArgumentError("unknown observation status \"" + s + "\"");
}

// --- Per-frame observation -------------------------------------------------

namespace {

// Mean of per-pixel ratios over the reference mask where both channels clear
// the floor.
std::optional<double> mean_of_ratios(const MeltPoolRegion& region, const SubImage& i550, const SubImage& i620,
                                     double floor) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto p : region.mask) {
        const double a = i550.pixels(p.x, p.y);
        const double b = i620.pixels(p.x, p.y);
        if (a >= floor && b >= floor) {
            sum += a / b;
            ++n;
        }
    }
    if (n == 0)
        return std::nullopt;
    return sum / static_cast<double>(n);
}

void observe(const Frame& frame, const OpticsConfig& cfg, const ObserveParams& params, FrameResult& result) {
    auto& obs = result.observation;
    const auto [s620, s550] = split_frame(frame, params.split_column);
    const auto seg620 = segment(s620, params.segmentation);
    const auto seg550 = segment(s550, params.segmentation);
    if (seg620)
        obs.mean_i620 = seg620->mean_intensity;
    if (seg550)
        obs.mean_i550 = seg550->mean_intensity;
    if (!seg620 && !seg550) {
        obs.status = ObservationStatus::laser_off;
        return;
    }
    if (!seg620 || !seg550) {
        obs.status = ObservationStatus::single_channel;
        return;
    }
    obs.morphology = morphology(*seg620, params.pixel_pitch_um);

    std::optional<RegistrationResult> reg;
    if (params.full_path) {
        reg = register_pair(s550, s620, params.registration);
        obs.registration.attempted = true;
        obs.registration.accepted = reg->accepted;
        obs.registration.ssim = reg->ssim;
        obs.registration.transform = reg->transform;
        obs.registration.reason = reg->reason;
        if (reg->accepted) {
            const RatioMap rm = ratio_map(reg->warped, reg->reference_resampled, params.segmentation.absolute_floor);
            result.map = temperature_map(rm, cfg, params.limits, params.quantization_step);
        }
    }

    double i12 = *obs.mean_i550 / *obs.mean_i620;
    if (params.average_mode == AverageMode::mean_of_ratios) {
        const bool aligned = reg && reg->accepted;
        const auto r = aligned ? mean_of_ratios(*seg620, reg->warped, reg->reference_resampled,
                                                params.segmentation.absolute_floor)
                               : mean_of_ratios(*seg620, s550, s620, params.segmentation.absolute_floor);
        if (!r) {
            obs.status = ObservationStatus::error;
            obs.message = "no pixel pair above the floor";
            return;
        }
        i12 = *r;
    }
    obs.i12 = i12;
    if (i12 >= singular_ratio(cfg)) {
        obs.status = ObservationStatus::above_range;
        return;
    }
    const double t = temperature_from_ratio(i12, cfg).kelvin();
    obs.t_k = t;
    const double u_i12 = intensity_ratio_uncertainty(*obs.mean_i550, *obs.mean_i620, params.quantization_step);
    obs.u_t = temperature_uncertainty(i12, cfg.u_a12, u_i12, cfg).u_t_total;
    if (t < params.limits.floor_k)
        obs.status = ObservationStatus::below_floor;
    else if (t > params.limits.ceiling_k)
        obs.status = ObservationStatus::suspect;
    else
        obs.status = ObservationStatus::ok;
}

} // namespace

FrameResult observe_frame(const Frame& frame, const OpticsConfig& cfg, const ObserveParams& params) {
    FrameResult result;
    result.observation.frame_index = frame.index;
    result.observation.timestamp_ms = frame.timestamp_ms;
    try {
        observe(frame, cfg, params, result);
    } catch (const std::exception& e) {
        result.observation.status = ObservationStatus::error;
        result.observation.message = e.what();
        result.map.reset();
    }
    return result;
}

// --- Series analytics ------------------------------------------------------

std::vector<BarSegment> segment_bars(std::span<const MeltPoolObservation> series, double gap_min_ms) {
    std::vector<BarSegment> bars;
    std::optional<std::size_t> last_present;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!series[i].melt_pool_present())
            continue;
        // The laser-off run spans from the first frame after the previous
        // present one up to this frame.
        const bool starts_bar = bars.empty()
                                || (i != *last_present + 1
                                    && series[i].timestamp_ms - series[*last_present + 1].timestamp_ms >= gap_min_ms);
        if (starts_bar) {
            BarSegment b;
            b.bar_index = static_cast<int>(bars.size());
            b.first = i;
            b.start_frame = series[i].frame_index;
            b.start_ms = series[i].timestamp_ms;
            bars.push_back(b);
        }
        auto& b = bars.back();
        b.last = i;
        b.end_frame = series[i].frame_index;
        b.end_ms = series[i].timestamp_ms;
        last_present = i;
    }
    return bars;
}

std::span<const MeltPoolObservation> extract_window(std::span<const MeltPoolObservation> series, double start_ms,
                                                    double end_ms) {
    if (start_ms > end_ms)
        throw ArgumentError("window start must not exceed its end");
    const auto lo = std::lower_bound(series.begin(), series.end(), start_ms,
                                     [](const MeltPoolObservation& o, double t) { return o.timestamp_ms < t; });
    const auto hi = std::lower_bound(lo, series.end(), end_ms,
                                     [](const MeltPoolObservation& o, double t) { return o.timestamp_ms < t; });
    return {lo, hi};
}

Histogram i12_histogram(std::span<const MeltPoolObservation> series, std::span<const double> bin_edges) {
    if (bin_edges.size() < 2)
        throw ArgumentError("histogram needs at least two bin edges");
    for (std::size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i] > bin_edges[i - 1]))
            throw ArgumentError("histogram bin edges must be strictly increasing");
    Histogram h;
    h.edges.assign(bin_edges.begin(), bin_edges.end());
    h.bins.assign(bin_edges.size() - 1, 0.0);
    std::vector<std::size_t> counts(h.bins.size(), 0);
    std::size_t under = 0;
    std::size_t over = 0;
    for (const auto& o : series) {
        if (!o.i12 || !std::isfinite(*o.i12))
            continue;
        const double v = *o.i12;
        ++h.total;
        if (v < bin_edges.front())
            ++under;
        else if (v >= bin_edges.back())
            ++over;
        else
            ++counts[static_cast<std::size_t>(std::upper_bound(bin_edges.begin(), bin_edges.end(), v)
                                              - bin_edges.begin())
                     - 1];
    }
    if (h.total == 0)
        throw ArgumentError("no observations with an intensity ratio");
    const double n = static_cast<double>(h.total);
    for (std::size_t i = 0; i < counts.size(); ++i)
        h.bins[i] = static_cast<double>(counts[i]) / n;
    h.underflow = static_cast<double>(under) / n;
    h.overflow = static_cast<double>(over) / n;
    return h;
}

std::vector<double> moving_average(std::span<const double> values, int window) {
    if (window < 1 || window % 2 == 0)
        throw ArgumentError("moving average window must be odd and >= 1");
    const auto n = static_cast<std::ptrdiff_t>(values.size());
    const std::ptrdiff_t r = window / 2;
    std::vector<double> prefix(values.size() + 1, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i)
        prefix[i + 1] = prefix[i] + values[i];
    std::vector<double> out(values.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - r);
        const std::ptrdiff_t hi = std::min(n - 1, i + r);
        if (window == 1)
            out[i] = values[i];
        else
            out[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    }
    return out;
}

nlohmann::json layer_summary(std::span<const MeltPoolObservation> series, std::span<const BarSegment> bars) {
    nlohmann::json j;
    j["observations"] = series.size();
    j["bar_count"] = bars.size();
    j["bars"] = nlohmann::json::array();
    for (const auto& b : bars) {
        double sum = 0.0;
        double lo = INFINITY;
        double hi = -INFINITY;
        std::size_t n = 0;
        for (std::size_t i = b.first; i <= b.last && i < series.size(); ++i) {
            const auto& o = series[i];
            if (o.status != ObservationStatus::ok || !o.t_k)
                continue;
            sum += *o.t_k;
            lo = std::min(lo, *o.t_k);
            hi = std::max(hi, *o.t_k);
            ++n;
        }
        nlohmann::json jb{{"bar", b.bar_index},
                          {"start_frame", b.start_frame},
                          {"end_frame", b.end_frame},
                          {"start_ms", b.start_ms},
                          {"end_ms", b.end_ms},
                          {"observations", b.last - b.first + 1},
                          {"temperature_observations", n}};
        if (n > 0) {
            jb["mean_T_K"] = sum / static_cast<double>(n);
            jb["min_T_K"] = lo;
            jb["max_T_K"] = hi;
        } else {
            jb["mean_T_K"] = nullptr;
            jb["min_T_K"] = nullptr;
            jb["max_T_K"] = nullptr;
        }
        j["bars"].push_back(std::move(jb));
    }
    return j;
}

// --- CSV -------------------------------------------------------------------

namespace {

constexpr const char* kObservationColumns[] = {"frame_idx", "t_ms",     "mean_i550", "mean_i620", "i12",
                                               "T_K",       "T_C",      "U_T_K",     "width_um",  "length_um",
                                               "area_um2",  "ssim",     "reg_accepted", "status"};

void put(std::string& line, const char* fmt, std::optional<double> v) {
    line += ',';
    if (!v)
        return;
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, *v);
    line += buf;
}

} // namespace

void write_observation_header(std::ostream& out) {
    std::string line;
    for (const char* c : kObservationColumns) {
        if (!line.empty())
            line += ',';
        line += c;
    }
    out << line << '\n';
}

void write_observation_row(std::ostream& out, const MeltPoolObservation& o) {
    std::string line = std::to_string(o.frame_index);
    put(line, "%.6f", o.timestamp_ms);
    put(line, "%.4f", o.mean_i550);
    put(line, "%.4f", o.mean_i620);
    put(line, "%.8f", o.i12);
    put(line, "%.4f", o.t_k);
    put(line, "%.4f", o.t_k ? std::optional<double>(*o.t_k - kCelsiusOffset) : std::nullopt);
    put(line, "%.4f", o.u_t);
    put(line, "%.1f", o.morphology ? std::optional<double>(o.morphology->width_um) : std::nullopt);
    put(line, "%.1f", o.morphology ? std::optional<double>(o.morphology->length_um) : std::nullopt);
    put(line, "%.1f", o.morphology ? std::optional<double>(o.morphology->area_um2) : std::nullopt);
    put(line, "%.6f", o.registration.attempted ? std::optional<double>(o.registration.ssim) : std::nullopt);
    line += ',';
    if (o.registration.attempted)
        line += o.registration.accepted ? '1' : '0';
    line += ',';
    line += to_string(o.status);
    line += '\n';
    out << line;
}

std::vector<MeltPoolObservation> read_observations_csv(std::istream& in) {
    const csv::Table table = csv::read(in);
    std::vector<std::size_t> col;
    for (const char* c : kObservationColumns)
        col.push_back(table.column(c));
    auto opt = [](const csv::Row& row, std::size_t c) -> std::optional<double> {
        if (row.fields[c].empty())
            return std::nullopt;
        return csv::to_double(row.fields[c], row.line);
    };
    std::vector<MeltPoolObservation> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        MeltPoolObservation o;
        const double idx = csv::to_double(row.fields[col[0]], row.line);
        if (idx < 0 || idx != std::floor(idx))
            throw ParseError(row.line, "frame_idx must be a non-negative integer");
        o.frame_index = static_cast<std::uint64_t>(idx);
        o.timestamp_ms = csv::to_double(row.fields[col[1]], row.line);
        o.mean_i550 = opt(row, col[2]);
        o.mean_i620 = opt(row, col[3]);
        o.i12 = opt(row, col[4]);
        o.t_k = opt(row, col[5]);
        o.u_t = opt(row, col[7]);
        if (const auto w = opt(row, col[8])) {
            const auto l = opt(row, col[9]);
            const auto a = opt(row, col[10]);
            o.morphology = Morphology{*w, l.value_or(0.0), a.value_or(0.0)};
        }
        if (const auto s = opt(row, col[11])) {
            o.registration.attempted = true;
            o.registration.ssim = *s;
            o.registration.accepted = row.fields[col[12]] == "1";
        }
        try {
            o.status = observation_status_from_string(row.fields[col[13]]);
        } catch (const ArgumentError& e) {
            throw ParseError(row.line, e.what());
        }
        if (!out.empty() && o.timestamp_ms < out.back().timestamp_ms)
            throw ParseError(row.line, "rows are not in time order");
        out.push_back(std::move(o));
    }
    return out;
}

std::vector<MeltPoolObservation> read_observations_csv_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw IoError("no such file: " + path.string());
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    return read_observations_csv(in);
}

std::filesystem::path write_temperature_map(const std::filesystem::path& dir, std::uint64_t frame_index,
                                            const TemperatureMap& map, double kelvin_scale) {
    if (!(kelvin_scale > 0.0))
        throw ArgumentError("kelvin scale must be positive");
    std::filesystem::create_directories(dir);
    char stem[32];
    std::snprintf(stem, sizeof stem, "map_%08llu", static_cast<unsigned long long>(frame_index));
    const auto pgm = dir / (std::string(stem) + ".pgm");
    const auto side = dir / (std::string(stem) + ".csv");

    const int w = map.kelvin.width();
    const int h = map.kelvin.height();
    Grid<std::uint16_t> img(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (map.status_at(x, y) == PixelStatus::valid)
                img(x, y) = static_cast<std::uint16_t>(std::clamp(std::round(map.kelvin(x, y) * kelvin_scale), 0.0, 65535.0));
    char scale[64];
    std::snprintf(scale, sizeof scale, "kelvin_scale %g", kelvin_scale);
    write_pgm_file(pgm, img, {scale, "frame " + std::to_string(frame_index)});

    std::ofstream out(side);
    if (!out)
        throw IoError("cannot write " + side.string());
    out << "x,y,kelvin,status\n";
    char buf[96];
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.4f,%s\n", x, y, map.kelvin(x, y),
                          to_string(map.status_at(x, y)).c_str());
            out << buf;
        }
    if (!out)
        throw IoError("failed writing " + side.string());
    return pgm;
}

} // namespace mpyro
