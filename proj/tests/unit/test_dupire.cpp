#include "rslv/black_scholes.hpp"
#include "rslv/dupire.hpp"
#include "rslv/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rslv;

namespace {

CallGrid bs_grid(double sigma, double r, double t0 = 0.4, double t1 = 2.0, double k0 = 0.7, double k1 = 1.4) {
    CallGrid g;
    for (double t = t0; t <= t1 + 1e-9; t += 0.02) g.t.push_back(t);
    for (double k = k0; k <= k1 + 1e-9; k += 0.02) g.strikes.push_back(k);
    for (double t : g.t)
        for (double k : g.strikes) g.prices.push_back(bs_call(1.0, k, t, sigma, r));
    return g;
}

}  // namespace

TEST(VolSurface, ConstantAndClamping) {
    const auto s = VolSurface::constant(0.2);
    EXPECT_DOUBLE_EQ(s.eval(0.3, -1.0), 0.2);
    EXPECT_DOUBLE_EQ(s.dx(0.3, 0.5), 0.0);
    const auto c = VolSurface::constant(0.9, {0.1, 0.5});
    EXPECT_DOUBLE_EQ(c.eval(1.0, 0.0), 0.5);
    EXPECT_THROW(VolSurface::constant(0.2, {0.5, 0.1}), DomainError);
}

TEST(VolSurface, TabulatedFlatAndInterpolated) {
    const auto flat = VolSurface::tabulated({0.0, 1.0}, {-1.0, 1.0}, {0.2, 0.2, 0.2, 0.2});
    EXPECT_NEAR(flat.eval(0.5, 0.3), 0.2, 1e-15);
    EXPECT_NEAR(flat.eval(5.0, 9.0), 0.2, 1e-15);
    const auto lin = VolSurface::tabulated({0.0}, {0.0, 1.0}, {0.2, 0.4});
    EXPECT_NEAR(lin.eval(0.0, 0.5), 0.3, 1e-14);
    EXPECT_NEAR(lin.dx(0.0, 0.5), 0.2, 1e-12);
    EXPECT_THROW(VolSurface::tabulated({0.0}, {1.0, 0.0}, {0.2, 0.2}), DomainError);
    EXPECT_THROW(VolSurface::tabulated({0.0}, {0.0, 1.0}, {0.2}), DomainError);
}

TEST(VolSurface, ParametricDerivative) {
    const auto s = VolSurface::parametric(0.3, -0.1, 0.5);
    const double h = 1e-6;
    EXPECT_NEAR(s.dx(0.5, 0.2), (s.eval(0.5, 0.2 + h) - s.eval(0.5, 0.2 - h)) / (2 * h), 1e-7);
    EXPECT_THROW(VolSurface::parametric(0.3, 0.1, 0.0), DomainError);
}

class DupireFlat : public ::testing::TestWithParam<std::tuple<double, double>> {};

TEST_P(DupireFlat, RecoversBlackScholesVolatility) {
    const auto [sigma, r] = GetParam();
    DupireDiagnostics diag;
    const VolSurface s = dupire_from_calls(bs_grid(sigma, r), r, {}, &diag);
    EXPECT_EQ(diag.flagged, 0u);
    for (double t : {0.5, 1.0, 1.5})
        for (double x : {-0.2, 0.0, 0.2}) EXPECT_NEAR(s.eval(t, x), sigma, 0.01) << "t=" << t << " x=" << x;
}

INSTANTIATE_TEST_SUITE_P(Levels, DupireFlat,
                         ::testing::Values(std::make_tuple(0.2, 0.0), std::make_tuple(0.2, 0.05),
                                           std::make_tuple(0.1, 0.0), std::make_tuple(0.3, 0.0)));

TEST(Dupire, ButterflyArbitrageIsRejected) {
    CallGrid g = bs_grid(0.2, 0.0);
    const std::size_t nk = g.strikes.size();
    for (std::size_t it = 0; it < g.t.size(); ++it) g.prices[it * nk + nk / 2] += 0.05;
    EXPECT_THROW(dupire_from_calls(g, 0.0), ArbitrageError);
}

TEST(Dupire, TooSmallGridIsRejected) {
    CallGrid g;
    g.t = {1.0};
    g.strikes = {0.9, 1.0, 1.1};
    g.prices = {0.12, 0.08, 0.05};
    EXPECT_THROW(dupire_from_calls(g, 0.0), DomainError);
}

TEST(Dupire, CsvParsing) {
    const CallGrid g = parse_call_grid_csv("t,K,C\n0.5,0.9,0.12\n0.5,1.0,0.06\n1.0,0.9,0.15\n1.0,1.0,0.08\n");
    ASSERT_EQ(g.t.size(), 2u);
    ASSERT_EQ(g.strikes.size(), 2u);
    EXPECT_DOUBLE_EQ(g.at(1, 0), 0.15);
    EXPECT_THROW(parse_call_grid_csv("a,b,c\n"), ConfigError);
    EXPECT_THROW(parse_call_grid_csv(""), ConfigError);
    EXPECT_THROW(parse_call_grid_csv("t,K,C\n0.5,x,0.1\n"), ConfigError);
    EXPECT_THROW(parse_call_grid_csv("t,K,C\n0.5,0.9,0.1\n0.5,1.0,0.05\n1.0,0.9,0.1\n"), ConfigError);
    EXPECT_THROW(read_call_grid_csv("/nonexistent/calls.csv"), ConfigError);
}

TEST(Dupire, JsonRoundTrip) {
    const auto s = VolSurface::tabulated({0.0, 1.0}, {-1.0, 0.0, 1.0}, {0.2, 0.25, 0.3, 0.22, 0.27, 0.33});
    const auto back = surface_from_json(surface_to_json(s));
    for (double t : {0.0, 0.4, 1.0})
        for (double x : {-0.7, 0.1, 0.9}) EXPECT_DOUBLE_EQ(back.eval(t, x), s.eval(t, x));
    EXPECT_DOUBLE_EQ(surface_from_json(surface_to_json(VolSurface::constant(0.3))).eval(0, 0), 0.3);
    EXPECT_THROW(surface_from_json(nlohmann::json{{"kind", "spline"}}), ConfigError);
}
