#pragma once

// Characterization of the two-wavelength transmission ratio A12 from
// spectrometer inlet/outlet readings, aggregation over build-plate
// locations, and a one-way ANOVA test of the location effect.

#include "mpyro/radiometry.hpp"

#include <json.hpp>

#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mpyro {

struct SpectrumSample {
    double wavelength_nm;
    double intensity;
};

class Spectrum {
public:
    /// Requires >= 2 samples, strictly increasing wavelengths, intensities >= 0.
    explicit Spectrum(std::vector<SpectrumSample> samples);

    /// Linear interpolation; RangeError outside [min, max] wavelength.
    double at(double wavelength_nm) const;

    double min_wavelength() const { return samples_.front().wavelength_nm; }
    double max_wavelength() const { return samples_.back().wavelength_nm; }
    const std::vector<SpectrumSample>& samples() const { return samples_; }

    /// Header `wavelength_nm,intensity`, one sample per line.
    static Spectrum read_csv(std::istream& in);
    static Spectrum read_csv_file(const std::string& path);

private:
    std::vector<SpectrumSample> samples_;
};

/// Focus-lens transmission and camera spectral response at lambda1 / lambda2.
struct LensCameraResponse {
    double t_flen_1 = 0.98;
    double t_flen_2 = 1.0;
    double r_cam_1 = 0.85;
    double r_cam_2 = 0.98;

    void validate() const;

    /// Header `wavelength_nm,lens_transmission,camera_response`; sampled
    /// linearly at the two working wavelengths.
    static LensCameraResponse read_csv_file(const std::string& path, const OpticsConfig& cfg);
};

/// Outlet / inlet quotient at one wavelength.
double system_transmission(const Spectrum& inlet, const Spectrum& outlet, double wavelength_nm);

double a12_from_spectra(const Spectrum& inlet, const Spectrum& outlet,
                        const LensCameraResponse& response, const OpticsConfig& cfg);

struct LocationMeasurement {
    std::string location;
    double a12;
};

struct A12Aggregate {
    double mean = 0.0;
    double sd = 0.0; // population SD over location means
    std::vector<std::pair<std::string, double>> per_location; // first-appearance order
};

/// Averages per location first, then takes mean and population SD over the
/// location means.
A12Aggregate aggregate_a12(const std::vector<LocationMeasurement>& measurements);

struct AnovaResult {
    double f = 0.0;
    double p = 1.0;
    int df_between = 0;
    int df_within = 0;
    bool reject = false;      // p < alpha
    bool f_infinite = false;  // zero within-group variance with unequal means
};

/// Classical one-way ANOVA. Needs >= 2 groups of >= 2 values each.
AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups, double alpha = 0.05);

struct CalibrationResult {
    double a12_mean = 0.0;
    double a12_sd = 0.0;
    std::vector<std::pair<std::string, double>> per_location;
    std::optional<AnovaResult> anova;
};

/// Groups raw measurements by location, aggregates them and runs the ANOVA
/// when every location has at least two measurements.
CalibrationResult calibrate(const std::vector<LocationMeasurement>& measurements);

nlohmann::json to_json(const CalibrationResult& result);

} // namespace mpyro
