#include "mpyro/uncertainty.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace mpyro {

namespace {

// Shared factor N / D^2 of both sensitivities. Also validates the domain.
double shared_factor(double i12, const OpticsConfig& cfg) {
    if (!(i12 > 0.0) || !std::isfinite(i12))
        throw DomainError("intensity ratio must be finite and positive");
    const double d = ratio_denominator(i12, cfg);
    if (i12 >= singular_ratio(cfg) || !(d < 0.0))
        throw RatioAboveRangeError("intensity ratio is above the measurable range");
    return ratio_numerator(cfg) / (d * d);
}

} // namespace

double sensitivity_wrt_a12(double i12, const OpticsConfig& cfg) {
    // T = N / D with dD/dA12 = -1/A12
    return shared_factor(i12, cfg) / cfg.a12;
}

double sensitivity_wrt_i12(double i12, const OpticsConfig& cfg) {
    // dD/dI12 = 1/I12
    return -shared_factor(i12, cfg) / i12;
}

UncertaintyBudget temperature_uncertainty(double i12, double u_a12, double u_i12,
                                          const OpticsConfig& cfg, double u_transform) {
    if (!(u_a12 >= 0.0) || !(u_i12 >= 0.0) || !(u_transform >= 0.0))
        throw DomainError("uncertainties must be non-negative");

    UncertaintyBudget b;
    b.temperature_k = temperature_from_ratio(i12, cfg).kelvin();
    b.sensitivity_a12 = sensitivity_wrt_a12(i12, cfg);
    b.sensitivity_i12 = sensitivity_wrt_i12(i12, cfg);

    const double u_ratio = std::hypot(u_i12, u_transform);
    b.u_t_from_a12 = std::abs(b.sensitivity_a12 * u_a12);
    b.u_t_from_i12 = std::abs(b.sensitivity_i12 * u_ratio);
    b.u_t_total = std::sqrt(b.u_t_from_a12 * b.u_t_from_a12 + b.u_t_from_i12 * b.u_t_from_i12);
    b.relative_celsius = b.u_t_total / (b.temperature_k - kCelsiusOffset);
    b.relative_kelvin = b.u_t_total / b.temperature_k;
    return b;
}

double intensity_ratio_uncertainty(double i1, double i2, double quantization_step) {
    if (!(i1 > 0.0) || !(i2 > 0.0))
        throw DomainError("intensities must be positive");
    if (!(quantization_step >= 0.0))
        throw DomainError("quantization step must be non-negative");
    const double u = 0.5 * quantization_step;
    return std::hypot(u / i2, i1 * u / (i2 * i2));
}

UncertaintyCurve uncertainty_curve(double i12_lo, double i12_hi, int n_points, double u_a12,
                                   double u_i12, const OpticsConfig& cfg) {
    if (n_points < 2)
        throw ArgumentError("uncertainty curve needs at least 2 points");
    if (!(i12_lo > 0.0) || !(i12_lo < i12_hi))
        throw DomainError("ratio range must satisfy 0 < lo < hi");

    UncertaintyCurve curve;
    const double limit = singular_ratio(cfg) * (1.0 - 1e-6);
    if (i12_lo >= limit)
        throw DomainError("ratio range lies entirely above the measurable range");
    if (i12_hi > limit) {
        i12_hi = limit;
        curve.clipped = true;
    }

    curve.rows.reserve(static_cast<std::size_t>(n_points));
    const double step = (i12_hi - i12_lo) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) {
        const double i12 = (i == n_points - 1) ? i12_hi : i12_lo + step * i;
        curve.rows.push_back({i12, temperature_uncertainty(i12, u_a12, u_i12, cfg)});
    }
    return curve;
}

void write_uncertainty_csv(std::ostream& out, const UncertaintyCurve& curve) {
    out << "i12,T_K,T_C,U_T_K,U_T_from_A12,U_T_from_I12,rel_pct\n";
    char line[256];
    for (const auto& row : curve.rows) {
        const auto& b = row.budget;
        std::snprintf(line, sizeof line, "%.6f,%.4f,%.4f,%.6f,%.6f,%.6f,%.6f\n", row.i12,
                      b.temperature_k, b.temperature_k - kCelsiusOffset, b.u_t_total,
                      b.u_t_from_a12, b.u_t_from_i12, 100.0 * b.relative_celsius);
        out << line;
    }
}

} // namespace mpyro
