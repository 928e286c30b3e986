#include "rslv/errors.hpp"
#include "rslv/particles.hpp"
#include "rslv/philox.hpp"
#include "rslv/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rslv;

namespace {

Matrix two_state_q(double q12, double q21) { return (Matrix(2, 2) << 0.0, q12, q21, 0.0).finished(); }

SimPlan plan(std::size_t N, double dt, std::vector<double> checkpoints = {}) {
    SimPlan p;
    p.N = N;
    p.dt = dt;
    p.checkpoints = std::move(checkpoints);
    return p;
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
    EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}), (PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, UniformsAreInOpenUnitInterval) {
    const auto lo = ParticleRng::uniforms({0, 0, 0, 0});
    const auto hi = ParticleRng::uniforms({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff});
    EXPECT_GT(lo[0], 0.0);
    EXPECT_LT(hi[0], 1.0);
    std::vector<double> z;
    ParticleRng rng(5, 0);
    for (std::uint64_t s = 0; s < 20000; ++s) z.push_back(ParticleRng::normal(rng.block(s, 0)));
    EXPECT_LT(ks_statistic(z, [](double x) { return normal_cdf(x); }), 0.015);
}

TEST(SimMode, ParseRoundTrip) {
    for (auto m : {SimMode::fake_bm, SimMode::rslv, SimMode::jump_fbm}) EXPECT_EQ(parse_sim_mode(to_string(m)), m);
    EXPECT_THROW(parse_sim_mode("walk"), ConfigError);
}

TEST(SimPlan, Validation) {
    const RegimeModel plain({1.0, 4.0}, {0.5, 0.5});
    const RegimeModel jumpy({1.0, 4.0}, {0.5, 0.5}, IntensityTable::constant(two_state_q(600.0, 1.0)));
    EXPECT_NO_THROW(plan(1000, 1e-3).validate(plain));
    EXPECT_THROW(plan(50, 1e-3).validate(plain), DomainError);
    EXPECT_THROW(plan(1000, 0.0).validate(plain), DomainError);
    SimPlan j = plan(1000, 1e-3);
    j.mode = SimMode::jump_fbm;
    EXPECT_THROW(j.validate(plain), DomainError);
    j.dt = 2e-3;
    EXPECT_THROW(j.validate(jumpy), DomainError);
    j.dt = 1e-3;
    EXPECT_NO_THROW(j.validate(jumpy));
}

TEST(CondExpect, SingleRegimePopulationGivesItsLevel) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5});
    auto e = initial_ensemble(m, GaussianDensity{0.0, 1.0, 1.0}, 5000, 3);
    for (int& y : e.Y) y = 1;
    const auto ce = cond_expect_f2(e, plan(5000, 1e-3), m);
    for (double x : {-2.0, 0.0, 1.5}) EXPECT_NEAR(ce(x), 4.0, 1e-12);
}

TEST(CondExpect, EqualLevelsAreConstant) {
    const RegimeModel m({2.0, 2.0}, {0.5, 0.5});
    const auto e = initial_ensemble(m, GaussianDensity{0.0, 1.0, 1.0}, 5000, 3);
    const auto ce = cond_expect_f2(e, plan(5000, 1e-3), m);
    for (double x : {-3.0, 0.0, 10.0}) EXPECT_NEAR(ce(x), 2.0, 1e-12);
}

TEST(CondExpect, IndependentRegimesGiveTheMean) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5});
    const auto e = initial_ensemble(m, GaussianDensity{0.0, 1.0, 1.0}, 100000, 11);
    const auto ce = cond_expect_f2(e, plan(100000, 1e-3), m);
    EXPECT_GT(ce.bandwidth, 0.0);
    for (double x : {-1.0, 0.0, 1.0}) EXPECT_NEAR(ce(x), 2.5, 0.1);
    EXPECT_GE(ce(100.0), 1.0);
    EXPECT_LE(ce(100.0), 4.0);
}

TEST(CondExpect, DegenerateSpreadUsesGlobalMean) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5});
    const auto e = initial_ensemble(m, PointMass{0.3, 1.0}, 4000, 2);
    double mean = 0.0;
    for (int y : e.Y) mean += m.lambda()[static_cast<std::size_t>(y)];
    mean /= 4000.0;
    const auto ce = cond_expect_f2(e, plan(4000, 1e-3), m);
    EXPECT_NEAR(ce(0.3), mean, 1e-12);
}

TEST(InitialEnsemble, OccupationFollowsAlpha) {
    const RegimeModel m({1.0, 4.0, 9.0}, {0.2, 0.3, 0.5});
    const auto e = initial_ensemble(m, PointMass{}, 100000, 9);
    std::vector<double> occ(3, 0.0);
    for (int y : e.Y) occ[static_cast<std::size_t>(y)] += 1e-5;
    EXPECT_NEAR(occ[0], 0.2, 0.01);
    EXPECT_NEAR(occ[1], 0.3, 0.01);
    EXPECT_NEAR(occ[2], 0.5, 0.01);
}

TEST(Simulate, SeedDeterminism) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5}, IntensityTable::constant(two_state_q(1.0, 2.0)));
    SimPlan p = plan(2000, 0.01, {0.1});
    p.mode = SimMode::jump_fbm;
    const auto a = simulate(m, p, {0.2, 0.0}, PointMass{});
    const auto b = simulate(m, p, {0.2, 0.0}, PointMass{});
    EXPECT_EQ(a.final_state.X, b.final_state.X);
    EXPECT_EQ(a.final_state.Y, b.final_state.Y);
    ASSERT_EQ(a.checkpoints.size(), 2u);
    p.seed += 1;
    const auto c = simulate(m, p, {0.2, 0.0}, PointMass{});
    EXPECT_NE(a.final_state.X, c.final_state.X);
}

TEST(Simulate, ZeroIntensityJumpModeEqualsFakeBm) {
    const RegimeModel plain({1.0, 4.0}, {0.5, 0.5});
    const RegimeModel zero({1.0, 4.0}, {0.5, 0.5}, IntensityTable::constant(Matrix::Zero(2, 2)));
    SimPlan p = plan(2000, 0.01);
    const auto a = simulate(plain, p, {0.2, 0.0}, PointMass{});
    p.mode = SimMode::jump_fbm;
    const auto b = simulate(zero, p, {0.2, 0.0}, PointMass{});
    EXPECT_EQ(a.final_state.X, b.final_state.X);
    EXPECT_EQ(b.total_switches, 0u);
}

TEST(Simulate, QuadraticVariationSlopesAndMarginal) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5});
    const double T = 0.25;
    const auto res = simulate(m, plan(40000, 1e-3), {T, 0.0}, GaussianDensity{0.0, 1.0, 1.0});
    const auto& fs = res.final_state;
    double q[2] = {0, 0}, n[2] = {0, 0};
    for (std::size_t k = 0; k < fs.size(); ++k) {
        q[fs.Y[k]] += fs.qv[k];
        n[fs.Y[k]] += 1.0;
    }
    EXPECT_NEAR(q[0] / n[0] / T, 0.4, 0.02);
    EXPECT_NEAR(q[1] / n[1] / T, 1.6, 0.05);
    EXPECT_NEAR(moments(fs.X).variance, 1.0 + T, 0.03);
    EXPECT_LE(res.max_gyongy_deviation, 0.05);
}

TEST(Simulate, ConstantSurfaceGivesLogNormalVariance) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5}, IntensityTable::constant(two_state_q(1.0, 1.0)));
    SimPlan p = plan(40000, 0.01);
    p.mode = SimMode::rslv;
    const auto surface = VolSurface::constant(0.2);
    const auto res = simulate(m, p, {1.0, 0.0}, PointMass{}, &surface);
    const Moments mx = moments(res.final_state.X);
    EXPECT_NEAR(mx.variance, 0.04, 0.002);
    EXPECT_NEAR(mx.mean, -0.02, 0.003);
    EXPECT_THROW(simulate(m, p, {1.0, 0.0}, PointMass{}), DomainError);
}

TEST(Pricing, ZeroStrikeAndDeepOutOfTheMoney) {
    std::vector<double> X{std::log(0.9), std::log(1.0), std::log(1.2)};
    const std::vector<double> K{0.0, 50.0, 1.0};
    const auto p = price_calls(X, K, 0.05, 2.0);
    const double disc = std::exp(-0.1);
    EXPECT_NEAR(p[0].price, disc * (0.9 + 1.0 + 1.2) / 3.0, 1e-14);
    EXPECT_EQ(p[1].price, 0.0);
    EXPECT_EQ(p[1].stderr_, 0.0);
    EXPECT_NEAR(p[2].price, disc * 0.2 / 3.0, 1e-14);
    EXPECT_THROW(price_calls(X, std::vector<double>{-1.0}, 0.0, 1.0), DomainError);
    EXPECT_THROW(price_calls(std::vector<double>{}, K, 0.0, 1.0), DomainError);
}
