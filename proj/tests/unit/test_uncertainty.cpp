#include "mpyro/errors.hpp"
#include "mpyro/uncertainty.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace mpyro;

namespace {

OpticsConfig rounded_optics() {
    OpticsConfig cfg;
    cfg.constants = PhysicalConstants::rounded();
    return cfg;
}

double t_of(double i12, double a12, OpticsConfig cfg) {
    cfg.a12 = a12;
    return temperature_from_ratio(i12, cfg).kelvin();
}

} // namespace

TEST_CASE("sensitivities at the worked value") {
    const auto cfg = rounded_optics();
    CHECK(std::abs(std::abs(sensitivity_wrt_a12(1.1, cfg)) - 1944.7) < 0.5);
    CHECK(std::abs(std::abs(sensitivity_wrt_i12(1.1, cfg)) - 2830.3) < 0.5);
}

TEST_CASE("sensitivities match central differences") {
    const auto cfg = rounded_optics();
    for (int i = 0; i < 50; ++i) {
        const double i12 = 0.5 + 1.5 * i / 49.0;
        const double h = 1e-6;
        const double fd_a = (t_of(i12, cfg.a12 + h, cfg) - t_of(i12, cfg.a12 - h, cfg)) / (2 * h);
        const double fd_i = (t_of(i12 + h, cfg.a12, cfg) - t_of(i12 - h, cfg.a12, cfg)) / (2 * h);
        CHECK(std::abs(sensitivity_wrt_a12(i12, cfg) / fd_a - 1.0) < 1e-4);
        CHECK(std::abs(sensitivity_wrt_i12(i12, cfg) / fd_i - 1.0) < 1e-4);
        CHECK(std::abs(sensitivity_wrt_i12(i12, cfg) / sensitivity_wrt_a12(i12, cfg))
              == doctest::Approx(cfg.a12 / i12).epsilon(1e-14));
    }
}

TEST_CASE("equal wavelengths have no sensitivity") {
    OpticsConfig cfg;
    cfg.lambda2 = cfg.lambda1;
    CHECK(std::abs(ratio_numerator(cfg)) == 0.0);
}

TEST_CASE("uncertainty budget at the worked value") {
    const auto b = temperature_uncertainty(1.1, 0.0163, 0.0003, rounded_optics());
    CHECK(std::abs(b.u_t_total - 31.71) < 0.1);
    CHECK(std::abs(b.u_t_from_i12 - 0.849) < 0.005);
    CHECK(std::abs(b.temperature_k - kCelsiusOffset - 2760.3) < 1.0);
    CHECK(b.u_t_total * b.u_t_total
          == doctest::Approx(b.u_t_from_a12 * b.u_t_from_a12 + b.u_t_from_i12 * b.u_t_from_i12).epsilon(1e-12));
}

TEST_CASE("relative uncertainty at the top of the range") {
    const auto b = temperature_uncertainty(2.0, 0.0163, 0.0003, rounded_optics());
    CHECK(std::abs(100.0 * b.relative_celsius - 2.80) < 0.05);
}

TEST_CASE("zero inputs give zero uncertainty") {
    CHECK(temperature_uncertainty(1.1, 0.0, 0.0, OpticsConfig{}).u_t_total == 0.0);
}

TEST_CASE("registration term enters in quadrature with the ratio term") {
    const OpticsConfig cfg;
    const auto a = temperature_uncertainty(1.1, 0.0, 0.0005, cfg);
    const auto b = temperature_uncertainty(1.1, 0.0, 0.0003, cfg, 0.0004);
    CHECK(b.u_t_total == doctest::Approx(a.u_t_total).epsilon(1e-12));
}

TEST_CASE("quantization ratio uncertainty") {
    const double expected = std::hypot(0.5 / 2000.0, 2400.0 * 0.5 / (2000.0 * 2000.0));
    CHECK(intensity_ratio_uncertainty(2400, 2000, 1) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(std::abs(intensity_ratio_uncertainty(2400, 2000, 1) - 3.905e-4) < 1e-5);
    CHECK(intensity_ratio_uncertainty(200, 200, 1) == doctest::Approx(std::sqrt(2.0) * 0.5 / 200.0));
    CHECK(intensity_ratio_uncertainty(200, 200, 0) == 0.0);
}

TEST_CASE("uncertainty curve") {
    const auto cfg = rounded_optics();
    const auto curve = uncertainty_curve(0.5, 2.0, 151, 0.0163, 0.0003, cfg);
    REQUIRE(curve.rows.size() == 151);
    CHECK_FALSE(curve.clipped);
    std::size_t best = 0;
    for (std::size_t i = 0; i < curve.rows.size(); ++i) {
        const auto& b = curve.rows[i].budget;
        CHECK(b.u_t_total * b.u_t_total
              == doctest::Approx(b.u_t_from_a12 * b.u_t_from_a12 + b.u_t_from_i12 * b.u_t_from_i12).epsilon(1e-12));
        if (b.relative_celsius > curve.rows[best].budget.relative_celsius)
            best = i;
    }
    CHECK(curve.rows[best].i12 == 2.0);
    CHECK(std::abs(100.0 * curve.rows[best].budget.relative_celsius - 2.80) < 0.05);

    const auto ends = uncertainty_curve(0.5, 2.0, 2, 0.0163, 0.0003, cfg);
    REQUIRE(ends.rows.size() == 2);
    CHECK(ends.rows[0].i12 == 0.5);
    CHECK(ends.rows[1].i12 == 2.0);

    std::ostringstream out;
    write_uncertainty_csv(out, ends);
    CHECK(out.str().rfind("i12,T_K,T_C,U_T_K,U_T_from_A12,U_T_from_I12,rel_pct\n", 0) == 0);
}

TEST_CASE("curve reaching the singular ratio is clipped") {
    const auto curve = uncertainty_curve(0.5, 3.5, 31, 0.0163, 0.0003, OpticsConfig{});
    CHECK(curve.clipped);
    for (const auto& r : curve.rows)
        CHECK(r.i12 < singular_ratio(OpticsConfig{}));
}
