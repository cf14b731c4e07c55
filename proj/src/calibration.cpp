#include "mpyro/calibration.hpp"

#include "mpyro/csv.hpp"
#include "mpyro/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

namespace mpyro {

Spectrum::Spectrum(std::vector<SpectrumSample> samples) : samples_(std::move(samples)) {
    if (samples_.size() < 2)
        throw ArgumentError("a spectrum needs at least 2 samples");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!(samples_[i].intensity >= 0.0))
            throw ArgumentError("spectrum intensities must be non-negative");
        if (i > 0 && !(samples_[i].wavelength_nm > samples_[i - 1].wavelength_nm))
            throw ArgumentError("spectrum wavelengths must be strictly increasing");
    }
}

double Spectrum::at(double wavelength_nm) const {
    if (!(wavelength_nm >= min_wavelength() && wavelength_nm <= max_wavelength()))
        throw RangeError("wavelength " + std::to_string(wavelength_nm) + " nm outside spectrum range ["
                         + std::to_string(min_wavelength()) + ", " + std::to_string(max_wavelength())
                         + "]");
    const auto hi = std::lower_bound(samples_.begin(), samples_.end(), wavelength_nm,
                                     [](const SpectrumSample& s, double w) { return s.wavelength_nm < w; });
    if (hi->wavelength_nm == wavelength_nm)
        return hi->intensity;
    const auto lo = hi - 1;
    const double f = (wavelength_nm - lo->wavelength_nm) / (hi->wavelength_nm - lo->wavelength_nm);
    return lo->intensity + f * (hi->intensity - lo->intensity);
}

Spectrum Spectrum::read_csv(std::istream& in) {
    const auto table = csv::read(in);
    const auto wl = table.column("wavelength_nm");
    const auto iv = table.column("intensity");
    std::vector<SpectrumSample> samples;
    samples.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        samples.push_back({csv::to_double(row.fields[wl], row.line), csv::to_double(row.fields[iv], row.line)});
        if (samples.size() > 1 && !(samples.back().wavelength_nm > samples[samples.size() - 2].wavelength_nm))
            throw ParseError(row.line, "line " + std::to_string(row.line) + ": wavelengths must increase");
        if (samples.back().intensity < 0.0)
            throw ParseError(row.line, "line " + std::to_string(row.line) + ": negative intensity");
    }
    if (samples.size() < 2)
        throw ParseError(0, "spectrum needs at least 2 samples");
    return Spectrum(std::move(samples));
}

Spectrum Spectrum::read_csv_file(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw IoError("file not found: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    return read_csv(in);
}

void LensCameraResponse::validate() const {
    for (double v : {t_flen_1, t_flen_2, r_cam_1, r_cam_2})
        if (!(v > 0.0 && v <= 1.0))
            throw ArgumentError("lens transmission and camera response must lie in (0, 1]");
}

LensCameraResponse LensCameraResponse::read_csv_file(const std::string& path, const OpticsConfig& cfg) {
    const auto table = csv::read_file(path);
    const auto wl = table.column("wavelength_nm");
    const auto lt = table.column("lens_transmission");
    const auto cr = table.column("camera_response");
    std::vector<SpectrumSample> lens;
    std::vector<SpectrumSample> camera;
    for (const auto& row : table.rows) {
        const double w = csv::to_double(row.fields[wl], row.line);
        lens.push_back({w, csv::to_double(row.fields[lt], row.line)});
        camera.push_back({w, csv::to_double(row.fields[cr], row.line)});
    }
    const Spectrum lens_curve(std::move(lens));
    const Spectrum camera_curve(std::move(camera));
    const double nm1 = cfg.lambda1 * 1e9;
    const double nm2 = cfg.lambda2 * 1e9;
    LensCameraResponse r{lens_curve.at(nm1), lens_curve.at(nm2), camera_curve.at(nm1), camera_curve.at(nm2)};
    r.validate();
    return r;
}

double system_transmission(const Spectrum& inlet, const Spectrum& outlet, double wavelength_nm) {
    const double in = inlet.at(wavelength_nm);
    if (!(in > 0.0))
        throw DomainError("inlet intensity is zero at " + std::to_string(wavelength_nm) + " nm");
    return outlet.at(wavelength_nm) / in;
}

double a12_from_spectra(const Spectrum& inlet, const Spectrum& outlet, const LensCameraResponse& response,
                        const OpticsConfig& cfg) {
    response.validate();
    const double t1 = system_transmission(inlet, outlet, cfg.lambda1 * 1e9);
    const double t2 = system_transmission(inlet, outlet, cfg.lambda2 * 1e9);
    if (!(t2 > 0.0))
        throw DomainError("outlet intensity is zero at lambda2");
    const double optics = (response.t_flen_1 * response.r_cam_1) / (response.t_flen_2 * response.r_cam_2);
    return optics * t1 / t2;
}

A12Aggregate aggregate_a12(const std::vector<LocationMeasurement>& measurements) {
    if (measurements.empty())
        throw ArgumentError("no A12 measurements to aggregate");

    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> by_location;
    for (const auto& m : measurements) {
        auto [it, inserted] = by_location.try_emplace(m.location);
        if (inserted)
            order.push_back(m.location);
        it->second.push_back(m.a12);
    }

    A12Aggregate agg;
    std::vector<double> means;
    for (const auto& label : order) {
        const double m = stats::mean(by_location[label]);
        agg.per_location.emplace_back(label, m);
        means.push_back(m);
    }
    agg.mean = stats::mean(means);
    agg.sd = stats::population_sd(means);
    return agg;
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups, double alpha) {
    if (groups.size() < 2)
        throw ArgumentError("ANOVA needs at least 2 groups");
    std::size_t n_total = 0;
    double grand_sum = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2)
            throw ArgumentError("ANOVA needs at least 2 values per group");
        n_total += g.size();
        for (double v : g)
            grand_sum += v;
    }
    const double grand_mean = grand_sum / static_cast<double>(n_total);

    double ss_between = 0.0;
    double ss_within = 0.0;
    for (const auto& g : groups) {
        const double m = stats::mean(g);
        ss_between += static_cast<double>(g.size()) * (m - grand_mean) * (m - grand_mean);
        for (double v : g)
            ss_within += (v - m) * (v - m);
    }

    AnovaResult r;
    r.df_between = static_cast<int>(groups.size()) - 1;
    r.df_within = static_cast<int>(n_total - groups.size());
    const double ms_between = ss_between / r.df_between;
    const double ms_within = ss_within / r.df_within;

    // Sums of squares below this are rounding noise relative to the data scale.
    const double scale = std::max(1.0, grand_mean * grand_mean) * static_cast<double>(n_total);
    const double eps = 1e-24 * scale;
    if (ss_within <= eps) {
        if (ss_between <= eps) {
            r.f = 0.0;
            r.p = 1.0;
        } else {
            r.f = std::numeric_limits<double>::infinity();
            r.f_infinite = true;
            r.p = 0.0;
        }
    } else {
        r.f = ms_between / ms_within;
        r.p = stats::f_distribution_sf(r.f, r.df_between, r.df_within);
    }
    r.reject = r.p < alpha;
    return r;
}

CalibrationResult calibrate(const std::vector<LocationMeasurement>& measurements) {
    const auto agg = aggregate_a12(measurements);
    CalibrationResult result;
    result.a12_mean = agg.mean;
    result.a12_sd = agg.sd;
    result.per_location = agg.per_location;

    std::vector<std::vector<double>> groups;
    for (const auto& [label, mean] : agg.per_location) {
        auto& g = groups.emplace_back();
        for (const auto& m : measurements)
            if (m.location == label)
                g.push_back(m.a12);
    }
    const bool anova_possible = groups.size() >= 2
                                && std::all_of(groups.begin(), groups.end(),
                                               [](const auto& g) { return g.size() >= 2; });
    if (anova_possible)
        result.anova = one_way_anova(groups);
    return result;
}

nlohmann::json to_json(const CalibrationResult& result) {
    nlohmann::json j;
    j["a12_mean"] = result.a12_mean;
    j["a12_sd"] = result.a12_sd;
    j["per_location"] = nlohmann::json::array();
    for (const auto& [label, value] : result.per_location)
        j["per_location"].push_back({{"location", label}, {"a12", value}});
    if (result.anova) {
        const auto& a = *result.anova;
        // JSON has no infinity; an infinite F is reported as null with a flag.
        j["anova"] = {{"F", a.f_infinite ? nlohmann::json(nullptr) : nlohmann::json(a.f)},
                      {"F_infinite", a.f_infinite},
                      {"p", a.p},
                      {"df_between", a.df_between},
                      {"df_within", a.df_within},
                      {"reject", a.reject}};
    } else {
        j["anova"] = nullptr;
    }
    return j;
}

} // namespace mpyro
