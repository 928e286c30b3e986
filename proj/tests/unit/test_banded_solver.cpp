#include "rslv/banded_solver.hpp"
#include "rslv/errors.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <random>

using namespace rslv;

namespace {

void check_against_dense(std::size_t n, std::size_t kl, std::size_t ku, unsigned seed, bool weak_diagonal) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BandedMatrix band(n, kl, ku);
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!band.in_band(i, j)) continue;
            double v = u(gen);
            if (i == j && !weak_diagonal) v += 4.0;
            band.add(i, j, v);
            dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    for (auto& v : b) v = u(gen);
    std::vector<double> y(n);
    band.multiply({b.data(), n}, y);
    const Eigen::VectorXd y_ref = dense * b;
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y[i], y_ref[static_cast<Eigen::Index>(i)], 1e-13);

    std::vector<double> x(b.data(), b.data() + n);
    band.factor_and_solve(x);
    const Eigen::VectorXd x_ref = dense.partialPivLu().solve(b);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(x[i], x_ref[static_cast<Eigen::Index>(i)], 1e-9);
}

}  // namespace

TEST(BandedSolver, TridiagonalMatchesDense) { check_against_dense(50, 1, 1, 1, false); }

TEST(BandedSolver, BlockBandMatchesDense) { check_against_dense(60, 3, 3, 2, false); }

TEST(BandedSolver, PivotingWithWeakDiagonal) {
    check_against_dense(40, 3, 3, 3, true);
    check_against_dense(40, 2, 5, 4, true);
}

TEST(BandedSolver, ZeroPivotRaisesNumericalError) {
    BandedMatrix band(3, 1, 1);
    band.add(0, 0, 1.0);
    band.add(1, 1, 0.0);
    band.add(2, 2, 1.0);
    std::vector<double> b{1.0, 1.0, 1.0};
    EXPECT_THROW(band.factor_and_solve(b), NumericalError);
}

TEST(BandedSolver, OutOfBandReadsZero) {
    BandedMatrix band(5, 1, 1);
    band.add(0, 1, 2.0);
    EXPECT_DOUBLE_EQ(band.get(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(band.get(0, 3), 0.0);
    EXPECT_FALSE(band.in_band(0, 3));
}
