#include "mpyro/stats.hpp"

#include "mpyro/errors.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace mpyro::stats {

double mean(std::span<const double> values) {
    if (values.empty())
        throw ArgumentError("mean of an empty sequence");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

namespace {

// Deviations are taken about the first value, so equal inputs give exactly 0.
double sum_sq_dev(std::span<const double> values) {
    if (values.empty())
        return 0.0;
    const double shift = values.front();
    double s = 0.0;
    for (double v : values)
        s += v - shift;
    const double m = s / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values)
        ss += (v - shift - m) * (v - shift - m);
    return ss;
}

// Continued fraction for I_x(a, b), Numerical Recipes betacf with Lentz's method.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 1000;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny)
        d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny)
            d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny)
            c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny)
            d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny)
            c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps)
            return h;
    }
    throw RangeError("incomplete beta continued fraction did not converge");
}

} // namespace

double population_sd(std::span<const double> values) {
    return std::sqrt(sum_sq_dev(values) / static_cast<double>(values.size()));
}

std::optional<double> sample_sd(std::span<const double> values) {
    if (values.size() < 2)
        return std::nullopt;
    return std::sqrt(sum_sq_dev(values) / static_cast<double>(values.size() - 1));
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw DomainError("incomplete beta requires a, b > 0");
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError("incomplete beta requires x in [0, 1]");
    if (x == 0.0 || x == 1.0)
        return x;

    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x)
                             + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_distribution_sf(double f, double d1, double d2) {
    if (!(d1 > 0.0) || !(d2 > 0.0))
        throw DomainError("F distribution degrees of freedom must be positive");
    if (std::isnan(f))
        throw DomainError("F statistic is NaN");
    if (f <= 0.0)
        return 1.0;
    if (std::isinf(f))
        return 0.0;
    return regularized_incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

} // namespace mpyro::stats
