#include "mpyro/calibration.hpp"
#include "mpyro/config.hpp"
#include "mpyro/errors.hpp"
#include "mpyro/frame_io.hpp"
#include "mpyro/pipeline.hpp"
#include "mpyro/radiometry.hpp"
#include "mpyro/registration.hpp"
#include "mpyro/segmentation.hpp"
#include "mpyro/synth.hpp"
#include "mpyro/tc_validation.hpp"
#include "mpyro/thermography.hpp"
#include "mpyro/uncertainty.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>

namespace py = pybind11;
using nlohmann::json;

namespace {

// Configs and scenes cross the boundary as JSON text; the Python layer
// serializes dicts.
mpyro::PipelineConfig parse_config(const std::string& text) {
    return text.empty() ? mpyro::PipelineConfig{} : mpyro::config_from_json(json::parse(text));
}

mpyro::OpticsConfig parse_optics(const std::string& text) {
    return text.empty() ? mpyro::OpticsConfig{} : mpyro::optics_from_json(json::parse(text));
}

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

template <typename T>
py::array_t<T> to_array(const mpyro::Grid<T>& g) {
    py::array_t<T> out({g.height(), g.width()});
    std::memcpy(out.mutable_data(), g.data().data(), g.size() * sizeof(T));
    return out;
}

template <typename T, typename Src>
mpyro::Grid<T> to_grid(const py::array_t<Src, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2)
        throw mpyro::ArgumentError("expected a 2-D array");
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    std::vector<T> data(a.data(), a.data() + a.size());
    return mpyro::Grid<T>(w, h, std::move(data));
}

mpyro::SubImage to_subimage(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    mpyro::SubImage s;
    s.pixels = to_grid<float, float>(a);
    return s;
}

json observation_json(const mpyro::MeltPoolObservation& o) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
    json j{{"frame_index", o.frame_index},
           {"timestamp_ms", o.timestamp_ms},
           {"mean_i550", opt(o.mean_i550)},
           {"mean_i620", opt(o.mean_i620)},
           {"i12", opt(o.i12)},
           {"T_K", opt(o.t_k)},
           {"U_T_K", opt(o.u_t)},
           {"status", mpyro::to_string(o.status)},
           {"message", o.message}};
    if (o.morphology)
        j["morphology"] = {{"width_um", o.morphology->width_um},
                           {"length_um", o.morphology->length_um},
                           {"area_um2", o.morphology->area_um2}};
    else
        j["morphology"] = nullptr;
    if (o.registration.attempted)
        j["registration"] = {{"accepted", o.registration.accepted},
                             {"ssim", o.registration.ssim},
                             {"scale", o.registration.transform.scale},
                             {"rotation_deg", o.registration.transform.rotation * 180.0 / 3.14159265358979323846},
                             {"dx", o.registration.transform.dx},
                             {"dy", o.registration.transform.dy},
                             {"reason", o.registration.reason}};
    else
        j["registration"] = nullptr;
    return j;
}

json budget_json(const mpyro::UncertaintyBudget& b) {
    return {{"temperature_k", b.temperature_k},       {"u_t_total", b.u_t_total},
            {"u_t_from_a12", b.u_t_from_a12},         {"u_t_from_i12", b.u_t_from_i12},
            {"sensitivity_a12", b.sensitivity_a12},   {"sensitivity_i12", b.sensitivity_i12},
            {"relative_celsius", b.relative_celsius}, {"relative_kelvin", b.relative_kelvin}};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Two-wavelength melt-pool pyrometry core";

    auto base = py::register_exception<mpyro::Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<mpyro::DomainError>(m, "DomainError", base.ptr());
    py::register_exception<mpyro::ArgumentError>(m, "ArgumentError", base.ptr());
    py::register_exception<mpyro::FormatError>(m, "FormatError", base.ptr());
    py::register_exception<mpyro::ParseError>(m, "ParseError", base.ptr());
    py::register_exception<mpyro::IoError>(m, "IoError", base.ptr());
    py::register_exception<mpyro::ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<mpyro::RegistrationError>(m, "RegistrationError", base.ptr());

    m.def("default_config", [] { return to_py(mpyro::to_json(mpyro::PipelineConfig{})); });

    m.def(
        "temperature_from_ratio",
        [](double i12, const std::string& optics) {
            return mpyro::temperature_from_ratio(i12, parse_optics(optics)).kelvin();
        },
        py::arg("i12"), py::arg("optics") = "");
    m.def(
        "ratio_from_temperature",
        [](double t_k, const std::string& optics) {
            return mpyro::ratio_from_temperature(mpyro::Temperature(t_k), parse_optics(optics));
        },
        py::arg("t_k"), py::arg("optics") = "");
    m.def(
        "singular_ratio", [](const std::string& optics) { return mpyro::singular_ratio(parse_optics(optics)); },
        py::arg("optics") = "");
    m.def(
        "temperature_uncertainty",
        [](double i12, double u_a12, double u_i12, const std::string& optics, double u_transform) {
            return to_py(budget_json(mpyro::temperature_uncertainty(i12, u_a12, u_i12, parse_optics(optics), u_transform)));
        },
        py::arg("i12"), py::arg("u_a12"), py::arg("u_i12"), py::arg("optics") = "", py::arg("u_transform") = 0.0);
    m.def("intensity_ratio_uncertainty", &mpyro::intensity_ratio_uncertainty, py::arg("i1"), py::arg("i2"),
          py::arg("quantization_step"));
    m.def(
        "uncertainty_curve",
        [](double lo, double hi, int n, double u_a12, double u_i12, const std::string& optics) {
            const auto c = mpyro::uncertainty_curve(lo, hi, n, u_a12, u_i12, parse_optics(optics));
            json rows = json::array();
            for (const auto& r : c.rows) {
                auto b = budget_json(r.budget);
                b["i12"] = r.i12;
                rows.push_back(b);
            }
            return to_py({{"rows", rows}, {"clipped", c.clipped}});
        },
        py::arg("lo"), py::arg("hi"), py::arg("points"), py::arg("u_a12"), py::arg("u_i12"), py::arg("optics") = "");

    m.def(
        "calibrate",
        [](const std::vector<std::pair<std::string, double>>& measurements) {
            std::vector<mpyro::LocationMeasurement> ms;
            for (const auto& [loc, a12] : measurements)
                ms.push_back({loc, a12});
            return to_py(mpyro::to_json(mpyro::calibrate(ms)));
        },
        py::arg("measurements"));
    m.def(
        "one_way_anova",
        [](const std::vector<std::vector<double>>& groups, double alpha) {
            const auto r = mpyro::one_way_anova(groups, alpha);
            return py::make_tuple(r.f, r.p);
        },
        py::arg("groups"), py::arg("alpha") = 0.05);

    m.def("step_response_fraction", &mpyro::step_response_fraction, py::arg("exposure_s"), py::arg("tau_s"));
    m.def("correct_step_reading", py::overload_cast<double, double>(&mpyro::correct_step_reading),
          py::arg("measured_rise_c"), py::arg("fraction"));
    m.def("relative_difference", &mpyro::relative_difference, py::arg("t_stwip_c"), py::arg("t_thermocouple_c"));
    m.def(
        "validate_thermocouples",
        [](const std::vector<std::tuple<std::string, std::string, double, double>>& rows, bool signed_values,
           std::optional<int> table_decimals) {
            std::vector<mpyro::ValidationRecord> records;
            for (const auto& [label, group, tc, stwip] : rows)
                records.push_back(mpyro::make_record(label, group, tc, stwip));
            const auto s = mpyro::summarize(
                records, signed_values ? mpyro::DifferenceMeasure::signed_value : mpyro::DifferenceMeasure::absolute,
                table_decimals);
            return to_py(mpyro::to_json(records, s));
        },
        py::arg("rows"), py::arg("signed_values") = false, py::arg("table_decimals") = py::none());

    m.def(
        "render_frame",
        [](const std::string& scene, std::uint64_t frame_index) {
            const mpyro::OpticsConfig optics;
            const auto s = mpyro::scene_from_json(json::parse(scene), optics);
            const auto r = mpyro::render_pair(s, mpyro::FrameGeometry::from(optics), frame_index);
            return py::make_tuple(to_array(r.frame.pixels), r.saturated);
        },
        py::arg("scene"), py::arg("frame_index") = 0);
    m.def(
        "render_script",
        [](const std::string& script, const std::string& path) {
            const auto s = mpyro::script_from_json(json::parse(script));
            std::ofstream out(path, std::ios::binary);
            if (!out)
                throw mpyro::IoError("cannot write " + path);
            return mpyro::render_stream(s, out).frame_count;
        },
        py::arg("script"), py::arg("path"));
    m.def(
        "read_stream",
        [](const std::string& path, std::uint64_t start, std::uint64_t count) {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw mpyro::IoError("cannot open " + path);
            mpyro::StreamDecoder dec(in);
            const auto& h = dec.header();
            dec.seek(std::min(start, h.frame_count));
            const auto n = std::min(count, h.frame_count - std::min(start, h.frame_count));
            py::array_t<std::uint16_t> out({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(h.height),
                                            static_cast<py::ssize_t>(h.width)});
            auto* dst = out.mutable_data();
            for (std::uint64_t i = 0; i < n; ++i) {
                const auto f = dec.next();
                std::memcpy(dst + i * h.pixels_per_frame(), f->pixels.data().data(),
                            h.pixels_per_frame() * sizeof(std::uint16_t));
            }
            json header{{"width", h.width},         {"height", h.height},
                        {"fps", h.fps},             {"bit_depth", h.bit_depth},
                        {"frame_count", h.frame_count}, {"pixel_pitch_um", h.pixel_pitch_um}};
            return py::make_tuple(out, to_py(header));
        },
        py::arg("path"), py::arg("start") = 0, py::arg("count") = std::numeric_limits<std::uint64_t>::max());

    m.def(
        "observe_frame",
        [](const py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast>& pixels,
           const std::string& config, bool full_path, int bit_depth, std::uint64_t frame_index, double timestamp_ms) {
            const auto cfg = parse_config(config);
            mpyro::Frame f;
            f.index = frame_index;
            f.timestamp_ms = timestamp_ms;
            f.pixels = to_grid<std::uint16_t, std::uint16_t>(pixels);
            mpyro::StreamHeader h;
            h.width = static_cast<std::uint32_t>(f.pixels.width());
            h.height = static_cast<std::uint32_t>(f.pixels.height());
            h.bit_depth = static_cast<std::uint16_t>(bit_depth);
            mpyro::FrameResult r;
            {
                py::gil_scoped_release release;
                r = mpyro::observe_frame(f, cfg.optics, cfg.observe_params(h, full_path));
            }
            py::dict out = to_py(observation_json(r.observation));
            if (r.map) {
                out["temperature_map"] = to_array(r.map->kelvin);
                out["status_map"] = to_array(r.map->status);
            }
            return out;
        },
        py::arg("pixels"), py::arg("config") = "", py::arg("full_path") = false, py::arg("bit_depth") = 12,
        py::arg("frame_index") = 0, py::arg("timestamp_ms") = 0.0);

    m.def(
        "process_stream",
        [](const std::string& path, const std::string& config, bool full_path, std::optional<double> start_ms,
           std::optional<double> end_ms, int workers) {
            auto cfg = parse_config(config);
            if (workers >= 0)
                cfg.workers = workers;
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw mpyro::IoError("cannot open " + path);
            mpyro::StreamDecoder dec(in);
            mpyro::PipelineRunOptions opt;
            opt.full_path = full_path;
            if (start_ms || end_ms)
                opt.window_ms = std::make_pair(start_ms.value_or(0.0), end_ms.value_or(1e300));
            std::vector<mpyro::MeltPoolObservation> series;
            mpyro::PipelineReport report;
            {
                py::gil_scoped_release release;
                report = mpyro::run_pipeline(dec, cfg, opt, [&](const mpyro::FrameResult& r) {
                    series.push_back(r.observation);
                });
            }
            json rows = json::array();
            for (const auto& o : series)
                rows.push_back(observation_json(o));
            const auto bars = mpyro::segment_bars(series, cfg.limits.gap_min_ms);
            return to_py({{"observations", rows},
                          {"report", mpyro::to_json(report)},
                          {"layer_summary", mpyro::layer_summary(series, bars)}});
        },
        py::arg("path"), py::arg("config") = "", py::arg("full_path") = false, py::arg("start_ms") = py::none(),
        py::arg("end_ms") = py::none(), py::arg("workers") = -1);

    m.def(
        "segment",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& img, double k_sigma,
           double absolute_floor, double pitch_um) -> py::object {
            mpyro::SegmentationParams p;
            p.k_sigma = k_sigma;
            p.absolute_floor = absolute_floor;
            const auto s = to_subimage(img);
            const auto r = mpyro::segment(s, p);
            if (!r)
                return py::none();
            const auto morph = mpyro::morphology(*r, pitch_um);
            py::dict out;
            out["mask"] = to_array(r->to_mask(s.width(), s.height()));
            out["peak"] = py::make_tuple(r->peak.x, r->peak.y);
            out["mean_intensity"] = r->mean_intensity;
            out["max_intensity"] = r->max_intensity;
            out["bbox"] = py::make_tuple(r->bbox.x_min, r->bbox.y_min, r->bbox.x_max, r->bbox.y_max);
            out["width_um"] = morph.width_um;
            out["length_um"] = morph.length_um;
            out["area_um2"] = morph.area_um2;
            return std::move(out);
        },
        py::arg("image"), py::arg("k_sigma") = 3.0, py::arg("absolute_floor") = 1600.0, py::arg("pitch_um") = 20.0);

    m.def(
        "register_pair",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& moving,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& reference) {
            const auto mv = to_subimage(moving);
            const auto ref = to_subimage(reference);
            mpyro::RegistrationResult r;
            {
                py::gil_scoped_release release;
                r = mpyro::register_pair(mv, ref);
            }
            py::dict out;
            out["scale"] = r.transform.scale;
            out["rotation_deg"] = r.transform.rotation * 180.0 / 3.14159265358979323846;
            out["dx"] = r.transform.dx;
            out["dy"] = r.transform.dy;
            out["ssim"] = r.ssim;
            out["accepted"] = r.accepted;
            out["reason"] = r.reason;
            out["warped"] = to_array(r.warped.pixels);
            return out;
        },
        py::arg("moving"), py::arg("reference"));
    m.def(
        "ssim",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& b) {
            return mpyro::ssim(to_subimage(a), to_subimage(b));
        },
        py::arg("a"), py::arg("b"));
}
