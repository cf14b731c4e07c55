// Command-line front end: calibrate, synth, process, analyze, validate-tc,
// bench, uncertainty-curve.
//
// Exit codes: 0 success, 1 other failure, 2 missing input, 3 parse or decode
// error, 4 configuration error.

#include "mpyro/calibration.hpp"
#include "mpyro/config.hpp"
#include "mpyro/csv.hpp"
#include "mpyro/pipeline.hpp"
#include "mpyro/synth.hpp"
#include "mpyro/tc_validation.hpp"
#include "mpyro/thermography.hpp"
#include "mpyro/uncertainty.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kMissingInput = 2, kParseError = 3, kConfigError = 4 };

// Error carrying its exit code, for conditions detected by the CLI itself.
struct CliError : std::runtime_error {
    CliError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
    int code;
};

void require_file(const std::string& path) {
    if (!fs::exists(path))
        throw CliError(kMissingInput, "no such file: " + path);
}

mpyro::PipelineConfig config_or_default(const std::string& path) {
    if (path.empty())
        return {};
    require_file(path);
    return mpyro::load_config(path);
}

std::pair<double, double> parse_window(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw CliError(kConfigError, "window must be start_ms:end_ms, got '" + text + "'");
    try {
        std::size_t used_a = 0;
        std::size_t used_b = 0;
        const double a = std::stod(text.substr(0, colon), &used_a);
        const double b = std::stod(text.substr(colon + 1), &used_b);
        if (used_a != colon || used_b != text.size() - colon - 1 || a > b)
            throw std::invalid_argument("window");
        return {a, b};
    } catch (const std::logic_error&) {
        throw CliError(kConfigError, "invalid window '" + text + "'");
    }
}

// Writes text to path, or to stdout for an empty path or "-".
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text))
        throw mpyro::IoError("cannot write " + path);
}

std::string dump(const json& j) {
    return j.dump(2) + "\n";
}

// --- calibrate -------------------------------------------------------------

struct CalibrateArgs {
    std::string manifest;
    std::string response;
    std::string config;
    std::string out;
};

// Manifest CSV: `location,a12` with direct values, or `location,inlet,outlet`
// naming spectrum CSVs relative to the manifest.
int cmd_calibrate(const CalibrateArgs& a) {
    require_file(a.manifest);
    const auto cfg = config_or_default(a.config);
    const auto table = mpyro::csv::read_file(a.manifest);
    const std::size_t loc = table.column("location");
    std::vector<mpyro::LocationMeasurement> measurements;
    if (table.has_column("a12")) {
        const std::size_t col = table.column("a12");
        for (const auto& row : table.rows)
            measurements.push_back({row.fields[loc], mpyro::csv::to_double(row.fields[col], row.line)});
    } else {
        const std::size_t in_col = table.column("inlet");
        const std::size_t out_col = table.column("outlet");
        mpyro::LensCameraResponse response;
        if (!a.response.empty()) {
            require_file(a.response);
            response = mpyro::LensCameraResponse::read_csv_file(a.response, cfg.optics);
        }
        const fs::path base = fs::path(a.manifest).parent_path();
        for (const auto& row : table.rows) {
            const fs::path inlet = base / row.fields[in_col];
            const fs::path outlet = base / row.fields[out_col];
            require_file(inlet.string());
            require_file(outlet.string());
            const auto si = mpyro::Spectrum::read_csv_file(inlet.string());
            const auto so = mpyro::Spectrum::read_csv_file(outlet.string());
            measurements.push_back({row.fields[loc], mpyro::a12_from_spectra(si, so, response, cfg.optics)});
        }
    }
    if (measurements.empty())
        throw CliError(kMissingInput, "manifest lists no measurements");
    const auto result = mpyro::calibrate(measurements);
    emit(a.out, dump(mpyro::to_json(result)));
    return kOk;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
    std::string script;
    std::string out;
    std::string pgm_dir;
};

int cmd_synth(const SynthArgs& a) {
    require_file(a.script);
    std::ifstream in(a.script);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw mpyro::ParseError(0, "malformed script " + a.script + ": " + e.what());
    }
    const auto script = mpyro::script_from_json(j);
    if (a.out.empty() == a.pgm_dir.empty())
        throw CliError(kConfigError, "give exactly one of --out and --pgm-dir");

    if (!a.out.empty()) {
        std::ofstream out(a.out, std::ios::binary);
        if (!out)
            throw mpyro::IoError("cannot write " + a.out);
        const auto header = mpyro::render_stream(script, out);
        std::cerr << "wrote " << header.frame_count << " frames to " << a.out << "\n";
        return kOk;
    }
    fs::create_directories(a.pgm_dir);
    std::uint64_t n = 0;
    mpyro::render_frames(script, [&](const mpyro::RenderedFrame& r) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%08llu.pgm", static_cast<unsigned long long>(r.frame.index));
        mpyro::write_pgm_file(fs::path(a.pgm_dir) / name, r.frame.pixels);
        ++n;
    });
    std::cerr << "wrote " << n << " frames to " << a.pgm_dir << "\n";
    return kOk;
}

// --- process ---------------------------------------------------------------

struct ProcessArgs {
    std::string input;
    std::string config;
    std::string out;
    std::string summary;
    std::string maps;
    std::string window;
    bool full = false;
    int workers = -1;
    unsigned fps = 30000;
    double map_scale = 10.0;
};

int cmd_process(const ProcessArgs& a) {
    if (!fs::exists(a.input))
        throw CliError(kMissingInput, "no such input: " + a.input);
    auto cfg = config_or_default(a.config);
    if (a.workers >= 0)
        cfg.workers = a.workers;
    cfg.validate();

    std::unique_ptr<mpyro::FrameSource> source;
    if (fs::is_directory(a.input))
        source = std::make_unique<mpyro::PgmDirectorySource>(a.input, a.fps);
    else
        source = std::make_unique<mpyro::FileStreamSource>(a.input);

    mpyro::PipelineRunOptions options;
    options.full_path = a.full || !a.maps.empty();
    if (!a.window.empty())
        options.window_ms = parse_window(a.window);
    if (!a.maps.empty()) {
        fs::create_directories(a.maps);
        options.maps_dir = fs::path(a.maps);
        options.map_kelvin_scale = a.map_scale;
    }

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!a.out.empty() && a.out != "-") {
        file.open(a.out, std::ios::binary);
        if (!file)
            throw mpyro::IoError("cannot write " + a.out);
        out = &file;
    }
    mpyro::write_observation_header(*out);
    const auto report = mpyro::run_pipeline(*source, cfg, options, [&](const mpyro::FrameResult& r) {
        mpyro::write_observation_row(*out, r.observation);
    });
    out->flush();

    json j = mpyro::to_json(report);
    j["input"] = a.input;
    j["full_path"] = options.full_path;
    if (options.window_ms)
        j["window_ms"] = {options.window_ms->first, options.window_ms->second};
    j["config"] = mpyro::to_json(cfg);
    if (!a.summary.empty())
        emit(a.summary, dump(j));
    std::cerr << "processed " << report.frames << " frames in " << report.seconds << " s\n";
    if (report.decode_error) {
        std::cerr << "decode error at frame " << *report.decode_error_frame << ": " << *report.decode_error << "\n";
        return kParseError;
    }
    return kOk;
}

// --- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
    std::string csv;
    std::string out;
    std::vector<std::string> windows;
    std::string bins = "0.5:2.0:30";
    double gap_ms = 100.0;
    int smooth = 0;
};

std::vector<double> parse_bins(const std::string& text) {
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;
    char c1 = 0;
    char c2 = 0;
    std::istringstream s(text);
    if (!(s >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1 || !(hi > lo))
        throw CliError(kConfigError, "bins must be lo:hi:count with hi > lo, got '" + text + "'");
    std::vector<double> edges(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i)
        edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / n;
    return edges;
}

json window_stats(std::span<const mpyro::MeltPoolObservation> w) {
    std::vector<double> t;
    for (const auto& o : w)
        if (o.status == mpyro::ObservationStatus::ok && o.t_k)
            t.push_back(*o.t_k);
    json j{{"observations", w.size()}, {"temperature_observations", t.size()}};
    if (!t.empty()) {
        double s = 0.0;
        for (double v : t)
            s += v;
        j["mean_T_K"] = s / static_cast<double>(t.size());
    } else {
        j["mean_T_K"] = nullptr;
    }
    return j;
}

int cmd_analyze(const AnalyzeArgs& a) {
    require_file(a.csv);
    const auto series = mpyro::read_observations_csv_file(a.csv);
    const auto bars = mpyro::segment_bars(series, a.gap_ms);
    json j = mpyro::layer_summary(series, bars);

    const auto edges = parse_bins(a.bins);
    const auto h = mpyro::i12_histogram(series, edges);
    j["i12_histogram"] = {{"edges", h.edges}, {"density", h.bins}, {"underflow", h.underflow},
                          {"overflow", h.overflow}, {"total", h.total}};

    j["windows"] = json::array();
    for (const auto& w : a.windows) {
        const auto [start, end] = parse_window(w);
        json jw = window_stats(mpyro::extract_window(series, start, end));
        jw["start_ms"] = start;
        jw["end_ms"] = end;
        j["windows"].push_back(std::move(jw));
    }

    if (a.smooth > 0) {
        std::vector<double> t;
        for (const auto& o : series)
            if (o.status == mpyro::ObservationStatus::ok && o.t_k)
                t.push_back(*o.t_k);
        j["smoothed_T_K"] = mpyro::moving_average(t, a.smooth);
    }
    emit(a.out, dump(j));
    std::cerr << bars.size() << " bars in " << series.size() << " observations\n";
    return kOk;
}

// --- validate-tc -----------------------------------------------------------

struct ValidateArgs {
    std::string csv;
    std::string out;
    double tau = 0.33;
    double ambient = 0.0;
    bool has_ambient = false;
    bool signed_values = false;
    int table_decimals = -1;
};

int cmd_validate_tc(const ValidateArgs& a) {
    require_file(a.csv);
    mpyro::ThermocoupleModel model;
    model.tau_s = a.tau;
    if (a.has_ambient)
        model.ambient_c = a.ambient;
    try {
        model.validate();
    } catch (const mpyro::Error& e) {
        throw CliError(kConfigError, e.what());
    }
    const auto records = mpyro::read_validation_csv_file(a.csv, model);
    if (records.empty())
        throw CliError(kMissingInput, "no validation records in " + a.csv);
    const auto summary = mpyro::summarize(
        records, a.signed_values ? mpyro::DifferenceMeasure::signed_value : mpyro::DifferenceMeasure::absolute,
        a.table_decimals >= 0 ? std::optional<int>(a.table_decimals) : std::nullopt);
    auto j = mpyro::to_json(records, summary);
    j["measure"] = a.signed_values ? "signed" : "absolute";
    j["table_decimals"] = a.table_decimals >= 0 ? nlohmann::json(a.table_decimals) : nlohmann::json();
    emit(a.out, dump(j));
    return kOk;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
    std::string config;
    std::string out;
    std::uint64_t fast_frames = 20000;
    std::uint64_t full_frames = 300;
    std::vector<int> workers;
};

int cmd_bench(const BenchArgs& a) {
    const auto cfg = config_or_default(a.config);
    mpyro::BenchOptions options;
    options.fast_frames = a.fast_frames;
    options.full_frames = a.full_frames;
    options.worker_counts = a.workers;
    const auto report = mpyro::run_bench(cfg, options);
    emit(a.out, dump(mpyro::to_json(report)));
    for (const auto& r : report.rows)
        std::cerr << r.path << " path, " << r.workers << " worker(s): " << r.frames_per_second << " frames/s\n";
    return kOk;
}

// --- uncertainty-curve -----------------------------------------------------

struct CurveArgs {
    std::string config;
    std::string out;
    double lo = 0.5;
    double hi = 2.0;
    int points = 151;
    double u_a12 = -1.0;
    double u_i12 = 0.0003;
};

int cmd_uncertainty_curve(const CurveArgs& a) {
    const auto cfg = config_or_default(a.config);
    const double u_a12 = a.u_a12 >= 0.0 ? a.u_a12 : cfg.optics.u_a12;
    const auto curve = mpyro::uncertainty_curve(a.lo, a.hi, a.points, u_a12, a.u_i12, cfg.optics);
    std::ostringstream s;
    mpyro::write_uncertainty_csv(s, curve);
    emit(a.out, s.str());
    if (curve.clipped)
        std::cerr << "range clipped below the singular ratio\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-wavelength imaging pyrometry for melt-pool monitoring"};
    app.require_subcommand(1);

    CalibrateArgs cal;
    auto* c = app.add_subcommand("calibrate", "Transmission ratio A12 from a measurement manifest");
    c->add_option("manifest", cal.manifest, "CSV: location,a12 or location,inlet,outlet")->required();
    c->add_option("--response", cal.response, "CSV: wavelength_nm,lens_transmission,camera_response");
    c->add_option("--config", cal.config, "Pipeline config (optics section)");
    c->add_option("-o,--out", cal.out, "Report JSON (default stdout)");

    SynthArgs syn;
    auto* s = app.add_subcommand("synth", "Render a synthetic layer script");
    s->add_option("script", syn.script, "Script JSON")->required();
    s->add_option("-o,--out", syn.out, "MPV1 stream to write");
    s->add_option("--pgm-dir", syn.pgm_dir, "Write frame_%08d.pgm files instead");

    ProcessArgs pro;
    auto* p = app.add_subcommand("process", "Per-frame temperatures from a stream or PGM directory");
    p->add_option("input", pro.input, "MPV1 file or PGM directory")->required();
    p->add_option("--config", pro.config, "Pipeline config JSON");
    p->add_option("-o,--out", pro.out, "Per-frame CSV (default stdout)");
    p->add_option("--summary", pro.summary, "Run summary JSON");
    p->add_option("--maps", pro.maps, "Directory for temperature maps (implies --full)");
    p->add_option("--window", pro.window, "start_ms:end_ms");
    p->add_flag("--full", pro.full, "Register channels and compute pixel-wise maps");
    p->add_option("--workers", pro.workers, "Worker threads (overrides config; 0 = all cores)");
    p->add_option("--fps", pro.fps, "Frame rate of a PGM directory");
    p->add_option("--map-scale", pro.map_scale, "PGM counts per kelvin");

    AnalyzeArgs ana;
    auto* an = app.add_subcommand("analyze", "Bars, windows and ratio histogram of a per-frame CSV");
    an->add_option("csv", ana.csv, "Per-frame CSV from process")->required();
    an->add_option("-o,--out", ana.out, "Summary JSON (default stdout)");
    an->add_option("--window", ana.windows, "start_ms:end_ms (repeatable)");
    an->add_option("--bins", ana.bins, "i12 histogram lo:hi:count");
    an->add_option("--gap-ms", ana.gap_ms, "Laser-off time separating bars");
    an->add_option("--smooth", ana.smooth, "Odd moving-average window over T");

    ValidateArgs val;
    auto* v = app.add_subcommand("validate-tc", "Thermocouple comparison table");
    v->add_option("csv", val.csv, "CSV: label,case,t_stwip_C,t_thermocouple_C")->required();
    v->add_option("-o,--out", val.out, "Report JSON (default stdout)");
    v->add_option("--tau", val.tau, "Thermocouple time constant, s");
    auto* amb = v->add_option("--ambient", val.ambient, "Ambient temperature for step correction, C");
    v->add_flag("--signed", val.signed_values, "Summarize signed differences");
    v->add_option("--table-decimals", val.table_decimals,
                  "Truncate row differences to this many decimals before summarizing")
        ->check(CLI::Range(0, 12));

    BenchArgs ben;
    auto* b = app.add_subcommand("bench", "Throughput of the fast and full paths");
    b->add_option("--config", ben.config, "Pipeline config JSON");
    b->add_option("-o,--out", ben.out, "Report JSON (default stdout)");
    b->add_option("--fast-frames", ben.fast_frames, "Frames for the fast path");
    b->add_option("--full-frames", ben.full_frames, "Frames for the full path");
    b->add_option("--workers", ben.workers, "Worker counts")->delimiter(',');

    CurveArgs cur;
    auto* u = app.add_subcommand("uncertainty-curve", "Temperature uncertainty over a ratio range");
    u->add_option("--config", cur.config, "Pipeline config JSON");
    u->add_option("-o,--out", cur.out, "CSV (default stdout)");
    u->add_option("--lo", cur.lo, "Lowest ratio");
    u->add_option("--hi", cur.hi, "Highest ratio");
    u->add_option("--points", cur.points, "Number of ratios");
    u->add_option("--u-a12", cur.u_a12, "A12 uncertainty (default from config)");
    u->add_option("--u-i12", cur.u_i12, "Ratio uncertainty");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kFailure;
    }
    val.has_ambient = amb->count() > 0;

    try {
        if (*c)
            return cmd_calibrate(cal);
        if (*s)
            return cmd_synth(syn);
        if (*p)
            return cmd_process(pro);
        if (*an)
            return cmd_analyze(ana);
        if (*v)
            return cmd_validate_tc(val);
        if (*b)
            return cmd_bench(ben);
        if (*u)
            return cmd_uncertainty_curve(cur);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const mpyro::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const mpyro::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const mpyro::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const mpyro::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMissingInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
