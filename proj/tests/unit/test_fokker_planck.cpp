#include "rslv/errors.hpp"
#include "rslv/fokker_planck.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace rslv;

namespace {

Matrix two_state_q(double q12, double q21) { return (Matrix(2, 2) << 0.0, q12, q21, 0.0).finished(); }

PDSConfig coarse(std::vector<double> times = {0.25, 0.5}) {
    PDSConfig c;
    c.dt = 1e-3;
    c.output_times = std::move(times);
    return c;
}

const SpatialGrid kGrid = SpatialGrid::with_spacing(6.0, 0.02);
const Measure kGauss = GaussianDensity{0.0, 0.1, 1.0};

std::vector<double> row(const Matrix& p, std::size_t i) {
    std::vector<double> r(static_cast<std::size_t>(p.cols()));
    for (Eigen::Index a = 0; a < p.cols(); ++a) r[static_cast<std::size_t>(a)] = p(static_cast<Eigen::Index>(i), a);
    return r;
}

}  // namespace

TEST(SpatialGrid, Construction) {
    const auto g = SpatialGrid::with_spacing(6.0, 0.01);
    EXPECT_EQ(g.m, 1201u);
    EXPECT_NEAR(g.h, 0.01, 1e-15);
    EXPECT_NEAR(g.x(0), -6.0, 1e-15);
    EXPECT_NEAR(g.x(g.m - 1), 6.0, 1e-12);
    double s = 0.0;
    for (double w : g.weights()) s += w;
    EXPECT_NEAR(s, 12.0, 1e-12);
    EXPECT_THROW(SpatialGrid::with_nodes(6.0, 2), DomainError);
    EXPECT_THROW(SpatialGrid::with_nodes(0.0, 10), DomainError);
}

TEST(Mollify, DiracGivesScaledGaussians) {
    const std::vector<double> alpha{0.25, 0.75};
    const Matrix p0 = mollify_initial(PointMass{0.0, 1.0}, 0.1, kGrid, alpha);
    for (std::size_t a = 0; a < kGrid.m; a += 37)
        for (std::size_t i = 0; i < 2; ++i)
            EXPECT_NEAR(p0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)),
                        alpha[i] * heat_kernel(0.01, kGrid.x(a)), 1e-14);
    const auto w = kGrid.weights();
    double mass = 0.0;
    for (std::size_t a = 0; a < kGrid.m; ++a) mass += w[a] * (p0(0, static_cast<Eigen::Index>(a)) + p0(1, static_cast<Eigen::Index>(a)));
    EXPECT_NEAR(mass, 1.0, 1e-6);
}

TEST(Mollify, DensityWithoutMollificationIsSampled) {
    const std::vector<double> one{1.0};
    const Matrix p0 = mollify_initial(kGauss, 0.0, kGrid, one);
    EXPECT_NEAR(p0(0, 300), heat_kernel(0.1, kGrid.x(300)), 1e-15);
    std::vector<double> x{-1.0, 0.0, 1.0}, d{0.0, 1.0, 0.0};
    const Matrix tri = mollify_initial(TabulatedDensity{x, d}, 0.0, kGrid, one);
    EXPECT_NEAR(tri(0, 300), 1.0, 1e-12);  // x = 0
    EXPECT_NEAR(tri(0, 325), 0.5, 1e-12);  // x = 0.5
    EXPECT_EQ(tri(0, 0), 0.0);
}

TEST(Mollify, AtomsNeedPositiveWidth) {
    const std::vector<double> one{1.0};
    EXPECT_THROW(mollify_initial(PointMass{}, 0.0, kGrid, one), DomainError);
}

TEST(SolveFbm, EqualLevelsGivePerStateHeatEquation) {
    const RegimeModel m({2.0, 2.0}, {0.3, 0.7});
    const auto sol = solve_fbm(m, coarse(), kGrid, {0.5, 0.0}, kGauss);
    for (std::size_t k = 1; k < sol.times.size(); ++k) {
        for (std::size_t i = 0; i < 2; ++i) {
            std::vector<double> ref = sol.reference[k];
            for (double& v : ref) v *= m.alpha()[i];
            EXPECT_LE(grid_l1(kGrid, row(sol.p[k], i), ref), 5e-3);
        }
    }
}

TEST(SolveFbm, SumMatchesHeatKernelAndConservesStateMasses) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5});
    const auto sol = solve_fbm(m, coarse(), kGrid, {0.5, 0.0}, kGauss);
    ASSERT_EQ(sol.times.size(), 3u);
    EXPECT_LE(sol.reference_l1_max(), 5e-3);
    EXPECT_GE(sol.min_value(), -1e-8);
    EXPECT_LE(sol.max_step_mass_drift, 1e-12);
    for (const auto& dg : sol.diagnostics)
        for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(dg.mass[i], sol.diagnostics[0].mass[i], 1e-8);
    EXPECT_FALSE(sol.boundary_warning);
}

TEST(SolveFbm, EnergyIsNonIncreasingWhenSymmetricPartIsPositive) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5});
    PDSConfig c;
    c.dt = 1e-3;
    for (int k = 1; k <= 50; ++k) c.output_times.push_back(1e-3 * k);
    const auto sol = solve_fbm(m, c, kGrid, {0.05, 0.0}, GaussianDensity{0.0, 0.02, 1.0});
    for (std::size_t k = 1; k < sol.times.size(); ++k) {
        const double prev = sol.diagnostics[k - 1].l2_norm[0] + sol.diagnostics[k - 1].l2_norm[1];
        const double cur = sol.diagnostics[k].l2_norm[0] + sol.diagnostics[k].l2_norm[1];
        EXPECT_LE(cur, prev + 1e-10);
    }
}

TEST(SolveFbm, ConsistentMassAlsoConserves) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5});
    PDSConfig c = coarse();
    c.lumped_mass = false;
    const auto sol = solve_fbm(m, c, kGrid, {0.5, 0.0}, kGauss);
    EXPECT_LE(sol.max_step_mass_drift, 1e-12);
    EXPECT_LE(sol.reference_l1_max(), 5e-3);
}

TEST(SolveFbm, RejectsJumpModels) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5}, IntensityTable::constant(two_state_q(1, 1)));
    EXPECT_THROW(solve_fbm(m, coarse(), kGrid, {0.5, 0.0}, kGauss), DomainError);
    EXPECT_THROW(solve_jump_fbm(RegimeModel({1.0, 4.0}, {0.5, 0.5}), coarse(), kGrid, {0.5, 0.0}, kGauss),
                 DomainError);
    PDSConfig bad = coarse({2.0});
    EXPECT_THROW(solve_fbm(RegimeModel({1.0, 4.0}, {0.5, 0.5}), bad, kGrid, {0.5, 0.0}, kGauss), DomainError);
}

TEST(SolveJump, ZeroIntensitiesReproduceFbm) {
    const RegimeModel plain({1.0, 4.0}, {0.5, 0.5});
    const RegimeModel zero({1.0, 4.0}, {0.5, 0.5}, IntensityTable::constant(Matrix::Zero(2, 2)));
    const auto a = solve_fbm(plain, coarse(), kGrid, {0.5, 0.0}, kGauss);
    const auto b = solve_jump_fbm(zero, coarse(), kGrid, {0.5, 0.0}, kGauss);
    for (std::size_t k = 0; k < a.times.size(); ++k) EXPECT_LE((a.p[k] - b.p[k]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SolveJump, SumMatchesHeatKernelWithAsymmetricRates) {
    const RegimeModel m({1.0, 4.0}, {0.2, 0.8}, IntensityTable::constant(two_state_q(2.0, 0.5)));
    const auto sol = solve_jump_fbm(m, coarse(), kGrid, {0.5, 0.0}, kGauss);
    EXPECT_LE(sol.reference_l1_max(), 5e-3);
    EXPECT_LE(sol.max_step_mass_drift, 1e-12);
    EXPECT_GE(sol.min_value(), -1e-8);
    // Regime-1 mass relaxes from 0.2 towards q21 / (q12 + q21) = 0.2: stays put.
    EXPECT_NEAR(sol.diagnostics.back().mass[0], sol.diagnostics.front().mass[0], 1e-8);
}

TEST(SolveJump, SwappingRegimesSwapsTheSolution) {
    const RegimeModel a({1.0, 4.0}, {0.3, 0.7}, IntensityTable::constant(two_state_q(1.0, 2.0)));
    const RegimeModel b({4.0, 1.0}, {0.7, 0.3}, IntensityTable::constant(two_state_q(2.0, 1.0)));
    const auto sa = solve_jump_fbm(a, coarse(), kGrid, {0.5, 0.0}, kGauss);
    const auto sb = solve_jump_fbm(b, coarse(), kGrid, {0.5, 0.0}, kGauss);
    for (std::size_t k = 0; k < sa.times.size(); ++k) {
        EXPECT_LE((sa.p[k].row(0) - sb.p[k].row(1)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((sa.p[k].row(1) - sb.p[k].row(0)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(SolveJump, ExchangeSymmetryForIdenticalRegimes) {
    const RegimeModel m({2.0, 2.0}, {0.5, 0.5}, IntensityTable::constant(two_state_q(1.5, 1.5)));
    const auto sol = solve_jump_fbm(m, coarse(), kGrid, {0.5, 0.0}, kGauss);
    for (const auto& p : sol.p) EXPECT_LE((p.row(0) - p.row(1)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SolveRslv, SumEqualsScalarLocalVolatilitySolve) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5}, IntensityTable::constant(two_state_q(1.0, 1.0)));
    const auto surface = VolSurface::parametric(0.3, -0.1, 0.5);
    const HorizonConfig hz{0.5, 0.03};
    const auto a = solve_rslv(m, coarse(), kGrid, hz, kGauss, surface);
    const auto b = solve_lv(coarse(), kGrid, hz, kGauss, surface);
    for (std::size_t k = 0; k < a.times.size(); ++k) EXPECT_LE(grid_l1(kGrid, a.sum(k), b.sum(k)), 1e-10);
    EXPECT_LE(a.max_step_mass_drift, 1e-12);
    EXPECT_GE(a.min_value(), -1e-8);
}

TEST(SolveRslv, ConstantSurfaceMatchesClosedForm) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5}, IntensityTable::constant(two_state_q(1.0, 1.0)));
    const auto sol = solve_rslv(m, coarse(), kGrid, {0.5, 0.01}, kGauss, VolSurface::constant(0.2));
    ASSERT_TRUE(sol.has_reference());
    EXPECT_LE(sol.reference_l1_max(), 5e-3);
}

TEST(SolveLv, HeatEquationWithHalfRate) {
    const auto sol = solve_lv(coarse(), kGrid, {0.5, 0.5}, kGauss, VolSurface::constant(1.0));
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5});
    const auto fbm = solve_fbm(m, coarse(), kGrid, {0.5, 0.0}, kGauss);
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
        EXPECT_LE(sol.diagnostics[k].reference_l1, 5e-3);
        EXPECT_LE(grid_l1(kGrid, sol.sum(k), fbm.reference[k]), 5e-3);
    }
}

TEST(SolveLv, PositivityAndL2Decay) {
    PDSConfig c;
    c.dt = 1e-3;
    c.sigma_mollify = 0.02;
    for (int k = 1; k <= 10; ++k) c.output_times.push_back(0.05 * k);
    const auto sol = solve_lv(c, kGrid, {0.5, 0.0}, PointMass{0.0, 1.0}, VolSurface::constant(1.0));
    for (std::size_t k = 1; k < sol.times.size(); ++k) {
        const auto u = sol.sum(k);
        for (std::size_t a = 1; a + 1 < u.size(); ++a) ASSERT_GT(u[a], 0.0);
        if (sol.times[k] >= 0.1 - 1e-12)
            EXPECT_LE(std::sqrt(sol.times[k]) * sol.diagnostics[k].l2_norm[0], 1.1 / (2.0 * std::sqrt(std::numbers::pi)));
    }
}

TEST(SolveFbm, BoundaryMassTriggersWarning) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5});
    const auto small = SpatialGrid::with_spacing(1.0, 0.02);
    const auto sol = solve_fbm(m, coarse(), small, {0.5, 0.0}, kGauss);
    EXPECT_TRUE(sol.boundary_warning);
    EXPECT_LE(sol.max_step_mass_drift, 1e-12);
}

TEST(Output, SnapshotCsvAndMetadata) {
    const RegimeModel m({1.0, 4.0}, {0.5, 0.5});
    const auto sol = solve_fbm(m, coarse({0.5}), kGrid, {0.5, 0.0}, kGauss);
    const auto path = std::filesystem::temp_directory_path() / "rslv_snapshot_test.csv";
    write_snapshot_csv(sol, 1, path.string());
    std::ifstream in(path);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "x,p_1,p_2,sum,heat_ref");
    EXPECT_EQ(std::count(first.begin(), first.end(), ','), 4);
    std::size_t lines = 2;
    for (std::string s; std::getline(in, s);) ++lines;
    EXPECT_EQ(lines, kGrid.m + 1);
    const auto meta = solution_metadata(sol, coarse({0.5}));
    EXPECT_TRUE(meta.contains("heat_l1_max"));
    EXPECT_EQ(meta["snapshots"].size(), 2u);
    std::filesystem::remove(path);
}
