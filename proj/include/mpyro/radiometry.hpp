#pragma once

// Scalar radiometric core for two-wavelength ratio pyrometry.
//
// All wavelengths are in metres and all temperatures in kelvin. Celsius only
// appears through Temperature::celsius() at presentation boundaries.

#include "mpyro/errors.hpp"

namespace mpyro {

inline constexpr double kCelsiusOffset = 273.15;

constexpr double nanometres(double nm) { return nm * 1e-9; }

struct PhysicalConstants {
    double planck;       // J s
    double light_speed;  // m / s
    double boltzmann;    // J / K

    /// CODATA 2018 exact values. Library default.
    static constexpr PhysicalConstants codata() { return {6.62607015e-34, 2.99792458e8, 1.380649e-23}; }
    /// Rounded values used for the published worked examples (h = 6.626e-34, c = 3e8).
    static constexpr PhysicalConstants rounded() { return {6.626e-34, 3.0e8, 1.380649e-23}; }

    /// Second radiation constant hc/k_B in m K.
    constexpr double hc_over_k() const { return planck * light_speed / boltzmann; }

    void validate() const;
};

class Temperature {
public:
    /// Throws DomainError unless kelvin is finite and > 0.
    explicit Temperature(double kelvin);

    static Temperature from_celsius(double celsius) { return Temperature(celsius + kCelsiusOffset); }

    double kelvin() const noexcept { return kelvin_; }
    double celsius() const noexcept { return kelvin_ - kCelsiusOffset; }

    friend bool operator==(Temperature, Temperature) = default;
    friend auto operator<=>(Temperature, Temperature) = default;

private:
    double kelvin_;
};

/// Optical parameters of a two-wavelength system. Channel 1 is the shorter
/// wavelength (550 nm), channel 2 the longer one (620 nm).
struct OpticsConfig {
    double lambda1 = nanometres(550.0);
    double lambda2 = nanometres(620.0);
    double a12 = 1.601;              // transmission ratio A1 / A2
    double u_a12 = 0.0163;           // standard uncertainty of a12
    double emissivity_ratio = 1.0;   // eps1 / eps2
    PhysicalConstants constants = PhysicalConstants::codata();

    /// Enforces 0 < lambda1 < lambda2, a12 > 0, u_a12 >= 0, emissivity_ratio > 0.
    void validate() const;
};

/// Planck's law, 2hc^2 / (lambda^5 (exp(hc / (k lambda T)) - 1)) in W sr^-1 m^-3.
double planck_radiance(double lambda, Temperature t,
                       const PhysicalConstants& constants = PhysicalConstants::codata());

/// Wien approximation scaled by emissivity and optical transmission.
/// emissivity and transmission may be zero; negative values are a DomainError.
double wien_radiance(double lambda, Temperature t, double emissivity, double transmission,
                     const PhysicalConstants& constants = PhysicalConstants::codata());

/// (hc/k)(1/lambda2 - 1/lambda1), in kelvin. Negative for lambda1 < lambda2.
double ratio_numerator(const OpticsConfig& cfg);

/// ln(i12) - ln(eps1/eps2) - ln(a12) - 5 ln(lambda2/lambda1). Vanishes at the singular ratio.
double ratio_denominator(double i12, const OpticsConfig& cfg);

/// Inverts the two-wavelength intensity ratio I1/I2 to a temperature.
/// Throws DomainError for i12 <= 0 and RatioAboveRangeError for i12 >= singular_ratio(cfg).
Temperature temperature_from_ratio(double i12, const OpticsConfig& cfg);

/// Forward model: the ratio I1/I2 a grey body at temperature t produces.
double ratio_from_temperature(Temperature t, const OpticsConfig& cfg);

/// (eps1/eps2) a12 (lambda2/lambda1)^5: the infinite-temperature asymptote of the ratio.
double singular_ratio(const OpticsConfig& cfg);

/// hc/(k T): wavelengths well below this keep the Wien approximation valid.
double wien_validity_limit(Temperature t,
                           const PhysicalConstants& constants = PhysicalConstants::codata());

/// 1500 um K / T, the wavelength of best temperature sensitivity.
double optimal_wavelength(Temperature t);

} // namespace mpyro
