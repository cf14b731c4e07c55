#include "mpyro/errors.hpp"
#include "mpyro/radiometry.hpp"

#include <doctest.h>

#include <cmath>

using namespace mpyro;

namespace {

OpticsConfig rounded_optics() {
    OpticsConfig cfg;
    cfg.constants = PhysicalConstants::rounded();
    return cfg;
}

// Closed-form inversion in extended precision.
long double oracle_temperature(long double i12, long double a12, long double l1, long double l2, long double h,
                               long double c, long double k) {
    const long double n = h * c / k * (1.0L / l2 - 1.0L / l1);
    return n / (std::log(i12) - 5.0L * std::log(l2 / l1) - std::log(a12));
}

long double oracle_planck(long double lambda, long double t, long double h, long double c, long double k) {
    return 2.0L * h * c * c / (std::pow(lambda, 5.0L) * std::expm1(h * c / (k * lambda * t)));
}

} // namespace

TEST_CASE("planck radiance decays in the far tail") {
    const Temperature t(3000.0);
    CHECK(planck_radiance(1.0, t) < planck_radiance(1e-6, t));
}

TEST_CASE("planck radiance matches an extended-precision evaluation") {
    const auto pc = PhysicalConstants::rounded();
    const long double expected = oracle_planck(550e-9L, 3033.46L, 6.626e-34L, 3e8L, 1.380649e-23L);
    const double got = planck_radiance(550e-9, Temperature(3033.46), pc);
    CHECK(got == doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
    CHECK(got == doctest::Approx(4.2366214115987691e11).epsilon(1e-12));
}

TEST_CASE("planck and wien channel ratios agree below 4000 K") {
    for (double tk : {1500.0, 2500.0, 3000.0, 4000.0}) {
        const Temperature t(tk);
        const double planck = planck_radiance(550e-9, t) / planck_radiance(620e-9, t);
        const double wien = wien_radiance(550e-9, t, 1, 1) / wien_radiance(620e-9, t, 1, 1);
        CHECK(std::abs(planck / wien - 1.0) < 0.005);
    }
}

TEST_CASE("wien radiance") {
    const Temperature t(2000.0);
    // Wien drops the -1 of Planck's denominator: relative gap exp(-hc / k lambda T).
    const double x = PhysicalConstants::codata().hc_over_k() / (550e-9 * 2000.0);
    const double gap = 1.0 - wien_radiance(550e-9, t, 1, 1) / planck_radiance(550e-9, t);
    CHECK(gap == doctest::Approx(std::exp(-x)).epsilon(1e-5));
    CHECK(gap < 3e-6);
    CHECK(wien_radiance(550e-9, t, 1, 0) == 0.0);
    CHECK(wien_radiance(550e-9, t, 0.8, 1) == 2.0 * wien_radiance(550e-9, t, 0.4, 1));
    CHECK_THROWS_AS(wien_radiance(550e-9, t, -0.1, 1), DomainError);
}

TEST_CASE("temperature from ratio at the worked value") {
    const auto cfg = rounded_optics();
    const Temperature t = temperature_from_ratio(1.1, cfg);
    const long double expected = oracle_temperature(1.1L, 1.601L, 550e-9L, 620e-9L, 6.626e-34L, 3e8L, 1.380649e-23L);
    CHECK(t.kelvin() == doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
    CHECK(std::abs(t.celsius() - 2760.3) < 1.0);
}

TEST_CASE("ratio inversion round trip") {
    const OpticsConfig cfg;
    for (double tk : {1500.0, 2500.0, 4000.0}) {
        const double r = ratio_from_temperature(Temperature(tk), cfg);
        CHECK(temperature_from_ratio(r, cfg).kelvin() == doctest::Approx(tk).epsilon(1e-9));
    }
    const auto rounded = rounded_optics();
    CHECK(ratio_from_temperature(temperature_from_ratio(1.1, rounded), rounded) == doctest::Approx(1.1).epsilon(1e-12));
    CHECK(ratio_from_temperature(Temperature(3033.46), rounded) == doctest::Approx(1.1).epsilon(1e-4));
}

TEST_CASE("singular ratio") {
    const OpticsConfig cfg;
    const double expected = 1.601 * std::pow(620.0 / 550.0, 5.0);
    CHECK(singular_ratio(cfg) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(std::abs(singular_ratio(cfg) - 2.9143) < 1e-4);
    CHECK_THROWS_AS(temperature_from_ratio(singular_ratio(cfg), cfg), RatioAboveRangeError);
    CHECK_THROWS_AS(temperature_from_ratio(3.5, cfg), RatioAboveRangeError);
    CHECK_THROWS_AS(temperature_from_ratio(0.0, cfg), DomainError);
    CHECK(ratio_from_temperature(Temperature(1e9), cfg) == doctest::Approx(expected).epsilon(1e-4));

    OpticsConfig doubled = cfg;
    doubled.a12 *= 2.0;
    CHECK(singular_ratio(doubled) == doctest::Approx(2.0 * singular_ratio(cfg)));
}

TEST_CASE("identical channels give unit ratio") {
    OpticsConfig cfg;
    cfg.a12 = 1.0;
    cfg.lambda2 = cfg.lambda1;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    // The forward model itself needs no ordering of wavelengths.
    for (double tk : {1000.0, 3000.0})
        CHECK(wien_radiance(cfg.lambda1, Temperature(tk), 1, 1) / wien_radiance(cfg.lambda2, Temperature(tk), 1, 1)
              == doctest::Approx(1.0));
}

TEST_CASE("wavelength selection") {
    const auto pc = PhysicalConstants::rounded();
    CHECK(std::abs(wien_validity_limit(Temperature(4000), pc) * 1e9 - 3599.0) < 1.0);
    CHECK(std::abs(wien_validity_limit(Temperature(2000), pc) * 1e9 - 7199.0) < 1.0);
    CHECK(wien_validity_limit(Temperature(1), pc) == doctest::Approx(6.626e-34 * 3e8 / 1.380649e-23));
    CHECK(optimal_wavelength(Temperature(2000)) == doctest::Approx(750e-9).epsilon(1e-12));
    CHECK(optimal_wavelength(Temperature(4000)) == doctest::Approx(375e-9).epsilon(1e-12));
    CHECK(optimal_wavelength(Temperature(1500)) == doctest::Approx(1000e-9).epsilon(1e-12));
}

TEST_CASE("temperature domain") {
    CHECK_THROWS_AS(Temperature(0.0), DomainError);
    CHECK_THROWS_AS(Temperature(-5.0), DomainError);
    CHECK_THROWS_AS(Temperature(NAN), DomainError);
    CHECK(Temperature::from_celsius(0.0).kelvin() == 273.15);
}
