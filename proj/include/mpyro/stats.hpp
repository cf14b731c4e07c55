#pragma once

#include <optional>
#include <span>

namespace mpyro::stats {

double mean(std::span<const double> values);

/// Standard deviation with divisor N.
double population_sd(std::span<const double> values);

/// Standard deviation with divisor N - 1. Absent for fewer than two values.
std::optional<double> sample_sd(std::span<const double> values);

/// Regularized incomplete beta function I_x(a, b), a, b > 0, x in [0, 1].
/// Continued-fraction evaluation (modified Lentz), relative accuracy ~1e-12.
double regularized_incomplete_beta(double a, double b, double x);

/// Upper tail P(F > f) of the F distribution with (d1, d2) degrees of freedom.
double f_distribution_sf(double f, double d1, double d2);

} // namespace mpyro::stats
