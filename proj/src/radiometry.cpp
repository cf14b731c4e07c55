#include "mpyro/radiometry.hpp"

#include <cmath>
#include <string>

namespace mpyro {

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw DomainError(std::string(what) + " must be finite and positive, got " + std::to_string(v));
}

constexpr double kOptimalLambdaT = 1500e-6; // m K

} // namespace

void PhysicalConstants::validate() const {
    require_positive(planck, "Planck constant");
    require_positive(light_speed, "speed of light");
    require_positive(boltzmann, "Boltzmann constant");
}

Temperature::Temperature(double kelvin) : kelvin_(kelvin) {
    require_positive(kelvin, "temperature (K)");
}

void OpticsConfig::validate() const {
    require_positive(lambda1, "lambda1");
    require_positive(lambda2, "lambda2");
    if (!(lambda1 < lambda2))
        throw DomainError("lambda1 must be shorter than lambda2");
    require_positive(a12, "a12");
    if (!(u_a12 >= 0.0) || !std::isfinite(u_a12))
        throw DomainError("u_a12 must be finite and non-negative");
    require_positive(emissivity_ratio, "emissivity ratio");
    constants.validate();
}

double planck_radiance(double lambda, Temperature t, const PhysicalConstants& constants) {
    require_positive(lambda, "wavelength");
    const double h = constants.planck;
    const double c = constants.light_speed;
    const double x = constants.hc_over_k() / (lambda * t.kelvin());
    return 2.0 * h * c * c / (std::pow(lambda, 5) * std::expm1(x));
}

double wien_radiance(double lambda, Temperature t, double emissivity, double transmission,
                     const PhysicalConstants& constants) {
    require_positive(lambda, "wavelength");
    if (!(emissivity >= 0.0) || !(transmission >= 0.0))
        throw DomainError("emissivity and transmission must be non-negative");
    const double h = constants.planck;
    const double c = constants.light_speed;
    const double x = constants.hc_over_k() / (lambda * t.kelvin());
    return 2.0 * h * c * c * emissivity * transmission / (std::pow(lambda, 5) * std::exp(x));
}

double ratio_numerator(const OpticsConfig& cfg) {
    return cfg.constants.hc_over_k() * (1.0 / cfg.lambda2 - 1.0 / cfg.lambda1);
}

double ratio_denominator(double i12, const OpticsConfig& cfg) {
    // i12 and the emissivity ratio only enter through their quotient.
    return std::log(i12 / cfg.emissivity_ratio) - std::log(cfg.a12)
           - 5.0 * std::log(cfg.lambda2 / cfg.lambda1);
}

double singular_ratio(const OpticsConfig& cfg) {
    return cfg.emissivity_ratio * cfg.a12 * std::pow(cfg.lambda2 / cfg.lambda1, 5);
}

Temperature temperature_from_ratio(double i12, const OpticsConfig& cfg) {
    if (!(i12 > 0.0) || !std::isfinite(i12))
        throw DomainError("intensity ratio must be finite and positive");
    const double denom = ratio_denominator(i12, cfg);
    const double grey_ratio = i12 / cfg.emissivity_ratio;
    if (i12 >= singular_ratio(cfg) || grey_ratio >= cfg.a12 * std::pow(cfg.lambda2 / cfg.lambda1, 5)
        || !(denom < 0.0))
        throw RatioAboveRangeError("intensity ratio " + std::to_string(i12)
                                   + " is above the measurable range (singular ratio "
                                   + std::to_string(singular_ratio(cfg)) + ")");
    return Temperature(ratio_numerator(cfg) / denom);
}

double ratio_from_temperature(Temperature t, const OpticsConfig& cfg) {
    return singular_ratio(cfg) * std::exp(ratio_numerator(cfg) / t.kelvin());
}

double wien_validity_limit(Temperature t, const PhysicalConstants& constants) {
    return constants.hc_over_k() / t.kelvin();
}

double optimal_wavelength(Temperature t) {
    return kOptimalLambdaT / t.kelvin();
}

} // namespace mpyro
