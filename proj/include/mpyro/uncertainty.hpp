#pragma once

// Root-sum-square propagation of transmission-ratio and intensity-ratio
// uncertainty into temperature uncertainty. Wavelength uncertainty is taken
// as zero.

#include "mpyro/radiometry.hpp"

#include <iosfwd>
#include <vector>

namespace mpyro {

struct UncertaintyBudget {
    double temperature_k = 0.0;
    double u_t_total = 0.0;        // K
    double u_t_from_a12 = 0.0;     // K
    double u_t_from_i12 = 0.0;     // K
    double sensitivity_a12 = 0.0;  // dT/dA12, K per unit A12 (signed)
    double sensitivity_i12 = 0.0;  // dT/dI12, K per unit I12 (signed)
    double relative_celsius = 0.0; // u_t_total / T(degC)
    double relative_kelvin = 0.0;  // u_t_total / T(K)
};

/// Signed partial derivative of temperature_from_ratio with respect to a12.
double sensitivity_wrt_a12(double i12, const OpticsConfig& cfg);

/// Signed partial derivative of temperature_from_ratio with respect to i12.
double sensitivity_wrt_i12(double i12, const OpticsConfig& cfg);

/// u_transform is an extra ratio uncertainty from image registration. It is
/// excluded from the budget by default (0) and, when given, is combined in
/// quadrature with u_i12.
UncertaintyBudget temperature_uncertainty(double i12, double u_a12, double u_i12,
                                          const OpticsConfig& cfg, double u_transform = 0.0);

/// Ratio uncertainty caused by sensor quantization: each intensity carries a
/// half-step rounding uncertainty.
double intensity_ratio_uncertainty(double i1, double i2, double quantization_step);

struct UncertaintySample {
    double i12;
    UncertaintyBudget budget;
};

struct UncertaintyCurve {
    std::vector<UncertaintySample> rows;
    /// Set when the requested range reached the singular ratio and was clipped.
    bool clipped = false;
};

/// n_points evenly spaced ratios over [i12_lo, i12_hi], both ends included.
UncertaintyCurve uncertainty_curve(double i12_lo, double i12_hi, int n_points, double u_a12,
                                   double u_i12, const OpticsConfig& cfg);

/// Columns: i12,T_K,T_C,U_T_K,U_T_from_A12,U_T_from_I12,rel_pct
void write_uncertainty_csv(std::ostream& out, const UncertaintyCurve& curve);

} // namespace mpyro
