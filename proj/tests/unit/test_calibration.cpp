#include "mpyro/calibration.hpp"
#include "mpyro/errors.hpp"
#include "mpyro/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace mpyro;

namespace {

Spectrum flat(double value) {
    return Spectrum({{400.0, value}, {800.0, value}});
}

// Brute-force one-way ANOVA F from sums of squares.
double oracle_f(const std::vector<std::vector<double>>& groups) {
    double grand = 0.0;
    std::size_t n = 0;
    for (const auto& g : groups)
        for (double v : g) {
            grand += v;
            ++n;
        }
    grand /= static_cast<double>(n);
    double ssb = 0.0;
    double ssw = 0.0;
    for (const auto& g : groups) {
        double m = 0.0;
        for (double v : g)
            m += v;
        m /= static_cast<double>(g.size());
        ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        for (double v : g)
            ssw += (v - m) * (v - m);
    }
    const double dfb = static_cast<double>(groups.size() - 1);
    const double dfw = static_cast<double>(n - groups.size());
    return (ssb / dfb) / (ssw / dfw);
}

} // namespace

TEST_CASE("system transmission") {
    CHECK(system_transmission(flat(800), flat(800), 550) == 1.0);
    CHECK(system_transmission(flat(1000), flat(500), 620) == 0.5);
    // Inlet 1000 -> 2000 and outlet 300 -> 900 over 500..700 nm; at 585 nm
    // inlet = 1425 and outlet = 555.
    const Spectrum inlet({{500, 1000}, {700, 2000}});
    const Spectrum outlet({{500, 300}, {700, 900}});
    CHECK(system_transmission(inlet, outlet, 585) == doctest::Approx(555.0 / 1425.0).epsilon(1e-14));
    CHECK_THROWS_AS(system_transmission(inlet, outlet, 720), RangeError);
}

TEST_CASE("spectrum validation and parsing") {
    CHECK_THROWS(Spectrum({{500, 1}}));
    CHECK_THROWS(Spectrum({{500, 1}, {500, 2}}));
    CHECK_THROWS(Spectrum({{500, -1}, {600, 2}}));
    std::istringstream good("wavelength_nm,intensity\n500,10\n600,20\n");
    CHECK(Spectrum::read_csv(good).at(550) == doctest::Approx(15.0));
    std::istringstream bad("wavelength_nm,intensity\n500,10\n600,x\n");
    try {
        Spectrum::read_csv(bad);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("transmission ratio from spectra") {
    OpticsConfig cfg;
    CHECK(a12_from_spectra(flat(1000), flat(1000), LensCameraResponse{}, cfg)
          == doctest::Approx(0.98 * 0.85 / (1.0 * 0.98)).epsilon(1e-14));
    const LensCameraResponse unit{1, 1, 1, 1};
    CHECK(a12_from_spectra(flat(700), flat(700), unit, cfg) == 1.0);

    // Spectrometer quotient 1.8835 at 550 / 620 nm.
    const Spectrum outlet({{500, 941.75}, {550, 941.75}, {620, 500.0}, {700, 500.0}});
    CHECK(std::abs(a12_from_spectra(flat(1000), outlet, LensCameraResponse{}, cfg) - 1.601) < 0.001);

    // Uniform rescaling of either spectrum cancels.
    const Spectrum inlet({{500, 1000}, {700, 2000}});
    const Spectrum inlet3({{500, 3000}, {700, 6000}});
    CHECK(a12_from_spectra(inlet, outlet, unit, cfg)
          == doctest::Approx(a12_from_spectra(inlet3, outlet, unit, cfg)).epsilon(1e-14));
}

TEST_CASE("aggregation over locations") {
    const std::vector<LocationMeasurement> table{
        {"center", 1.608}, {"bottom_right", 1.610}, {"top_left", 1.622}, {"bottom_left", 1.579}, {"top_right", 1.585}};
    const auto agg = aggregate_a12(table);
    CHECK(std::abs(agg.mean - 1.6008) < 1e-12);
    CHECK(std::abs(agg.sd - 0.0162) < 0.001);
    CHECK(agg.sd == doctest::Approx(0.016191355718).epsilon(1e-9));
    REQUIRE(agg.per_location.size() == 5);
    CHECK(agg.per_location[2].first == "top_left");

    CHECK(aggregate_a12({{"a", 1.6}, {"b", 1.6}, {"c", 1.6}}).sd == 0.0);
    const auto two = aggregate_a12({{"a", 1.0}, {"b", 3.0}});
    CHECK(two.mean == 2.0);
    CHECK(two.sd == 1.0);

    // Repeated measurements are averaged per location first.
    const auto rep = aggregate_a12({{"a", 1.0}, {"a", 3.0}, {"b", 4.0}});
    CHECK(rep.mean == 3.0);
    CHECK(rep.sd == 1.0);
    CHECK_THROWS(aggregate_a12({}));
}

TEST_CASE("one-way ANOVA") {
    const auto equal = one_way_anova({{1, 2, 3}, {1, 2, 3}});
    CHECK(equal.f == 0.0);
    CHECK_FALSE(equal.reject);

    const auto separated = one_way_anova({{0, 0, 0, 0}, {10, 10, 10, 10}});
    CHECK(separated.f_infinite);
    CHECK(separated.reject);

    const std::vector<std::vector<double>> groups{{1.608, 1.611, 1.604, 1.606, 1.612},
                                                  {1.598, 1.603, 1.590, 1.601, 1.596},
                                                  {1.620, 1.625, 1.618, 1.622, 1.624}};
    const auto r = one_way_anova(groups);
    CHECK(r.df_between == 2);
    CHECK(r.df_within == 12);
    CHECK(r.f == doctest::Approx(oracle_f(groups)).epsilon(1e-10));
    // scipy.stats.f_oneway on the same table.
    CHECK(r.f == doctest::Approx(49.38255033557148).epsilon(1e-9));
    CHECK(r.p == doctest::Approx(1.6168502456719432e-06).epsilon(1e-8));
    CHECK(r.reject);

    CHECK_THROWS(one_way_anova({{1, 2, 3}}));
    CHECK_THROWS(one_way_anova({{1, 2}, {3}}));
}

TEST_CASE("calibration report") {
    std::vector<LocationMeasurement> m;
    const double offsets[] = {-0.002, 0.001, 0.0, 0.003, -0.002};
    const std::vector<std::pair<std::string, double>> locs{
        {"center", 1.608}, {"bottom_right", 1.610}, {"top_left", 1.622}, {"bottom_left", 1.579}, {"top_right", 1.585}};
    for (const auto& [name, value] : locs)
        for (double o : offsets)
            m.push_back({name, value + o});
    const auto result = calibrate(m);
    CHECK(result.a12_mean == doctest::Approx(1.6008).epsilon(1e-12));
    REQUIRE(result.anova.has_value());
    CHECK(result.anova->df_between == 4);
    CHECK(result.anova->df_within == 20);
    const auto j = to_json(result);
    CHECK(j["per_location"].size() == 5);
    CHECK(j.contains("anova"));

    // A single value per location leaves the ANOVA out.
    CHECK_FALSE(calibrate({{"a", 1.6}, {"b", 1.61}}).anova.has_value());
}
