#include "rslv/condition_c.hpp"
#include "rslv/errors.hpp"

#include <gtest/gtest.h>

using namespace rslv;

TEST(ConditionC, D3CriterionOracleValues) {
    const auto a = criterion_d3({1.0, 100.0, 10000.0});
    EXPECT_NEAR(a.r1, 100.01, 1e-12);
    EXPECT_NEAR(a.r2, 10000.0001, 1e-9);
    EXPECT_NEAR(a.r3, 100.01, 1e-12);
    EXPECT_NEAR(a.lhs, 0.01222344456667889, 1e-14);
    EXPECT_FALSE(a.satisfied);

    const auto b = criterion_d3({1.0, 2.0, 4.0});
    EXPECT_NEAR(b.r1, 2.5, 1e-15);
    EXPECT_NEAR(b.r2, 4.25, 1e-15);
    EXPECT_NEAR(b.r3, 2.5, 1e-15);
    EXPECT_NEAR(b.lhs, 3.885618083164127, 1e-13);
    EXPECT_TRUE(b.satisfied);
}

TEST(ConditionC, D3CriterionRejectsBadInput) {
    EXPECT_THROW(criterion_d3({1.0, 2.0}), DomainError);
    EXPECT_THROW(criterion_d3({1.0, 0.0, 2.0}), DomainError);
}

TEST(ConditionC, D3EqualLevelsAreSatisfied) {
    EXPECT_TRUE(criterion_d3({2.0, 2.0, 2.0}).satisfied);
    EXPECT_TRUE(criterion_d3({1.0, 1.0, 50.0}).satisfied);
}

TEST(ConditionC, IdentityCriterion) {
    EXPECT_TRUE(criterion_identity(RegimeModel::uniform({1.0, 1.0})));
    EXPECT_TRUE(criterion_identity(RegimeModel::uniform({1.0, 2.0, 3.0})));
    // Worst k gives sqrt(102 * 2.01) = 14.3185 > 5.
    EXPECT_FALSE(criterion_identity(RegimeModel::uniform({1.0, 1.0, 1.0, 100.0})));
}

TEST(ConditionC, IdentityCriterionMatchesDirectEigenTest) {
    for (const auto& lam : std::vector<std::vector<double>>{{1, 2, 3}, {1, 1, 1, 100}, {1, 3, 9, 27}, {0.5, 1, 2}}) {
        const RegimeModel m = RegimeModel::uniform(lam);
        EXPECT_EQ(criterion_identity(m), satisfies_condition_c(GammaCandidate::identity(lam.size()), m));
    }
}

TEST(ConditionC, GammaKSubmatrixFormula) {
    const RegimeModel m = RegimeModel::uniform({1.0, 2.0, 3.0});
    Matrix g(3, 3);
    g << 2, 0.1, 0.2, 0.1, 3, 0.3, 0.2, 0.3, 4;
    const GammaCandidate gamma(g);
    const Matrix sub = gamma_k_submatrix(gamma, m, 0);
    ASSERT_EQ(sub.rows(), 2);
    // (i, j) = (1, 2) in 0-based full indexing.
    EXPECT_NEAR(sub(0, 1), 2.5 * (0.3 + 2.0 - 0.1 - 0.2), 1e-15);
    EXPECT_NEAR(sub(0, 0), 2.0 * (3.0 + 2.0 - 0.1 - 0.1), 1e-15);
}

TEST(ConditionC, GammaCandidateValidation) {
    Matrix g(2, 2);
    g << 1, 0.5, 0.4, 1;
    EXPECT_THROW(GammaCandidate{g}, DomainError);
    EXPECT_THROW(GammaCandidate::diagonal({1.0, -1.0}), DomainError);
}

TEST(ConditionC, GridSearchReproducesFiveLevelExample) {
    const auto rep = grid_search_diag(RegimeModel::uniform({1, 2, 3, 5, 10}), 200);
    EXPECT_TRUE(rep.satisfied);
    EXPECT_FALSE(rep.points.empty());
    EXPECT_EQ(rep.basis, GridSearchReport::Basis::grid);
}

TEST(ConditionC, GridSearchIsExactForThreeLevels) {
    const auto yes = grid_search_diag(RegimeModel::uniform({1, 2, 4}), 200);
    EXPECT_TRUE(yes.satisfied);
    const auto no = grid_search_diag(RegimeModel::uniform({1, 100, 10000}), 200);
    EXPECT_FALSE(no.satisfied);
    EXPECT_TRUE(no.exact);
}

TEST(ConditionC, GridSearchArguments) {
    EXPECT_THROW(grid_search_diag(RegimeModel::uniform({1, 2}), 50), DomainError);
    EXPECT_THROW(grid_search_diag(RegimeModel::uniform({1, 2, 3}), 1), DomainError);
    const auto eq = grid_search_diag(RegimeModel::uniform({2, 2, 2, 2}), 20);
    EXPECT_TRUE(eq.satisfied);
    EXPECT_EQ(eq.basis, GridSearchReport::Basis::identity_shortcut);
}

TEST(ConditionC, RecoveredDiagonalSatisfiesCondition) {
    const RegimeModel m = RegimeModel::uniform({1, 2, 3, 5, 10});
    const auto rep = grid_search_diag(m, 60);
    ASSERT_FALSE(rep.points.empty());
    for (std::size_t k = 0; k < rep.points.size(); k += std::max<std::size_t>(1, rep.points.size() / 10)) {
        const auto alpha = recover_alpha_from_point(m, rep.points[k].x, rep.points[k].y);
        EXPECT_TRUE(criterion_diag(m, alpha));
        EXPECT_TRUE(satisfies_condition_c(GammaCandidate::diagonal(alpha), m));
    }
}

TEST(ConditionC, CriterionSumsUseAllLevels) {
    const RegimeModel m = RegimeModel::uniform({1.0, 2.0, 3.0});
    const auto s = criterion_sums(m, 2.0, 1.0);
    // (xy - 1) * sum 1 / (2 + x / l + l y) with xy - 1 = 1.
    EXPECT_NEAR(s.m0, 1.0 / 5.0 + 1.0 / 5.0 + 1.0 / (2.0 + 2.0 / 3.0 + 3.0), 1e-15);
    EXPECT_TRUE(std::isfinite(s.m1));
    EXPECT_TRUE(std::isfinite(s.m_minus1));
}

TEST(ConditionC, CertificateForTwoLevels) {
    const RegimeModel m = RegimeModel::uniform({1.0, 4.0});
    const auto cert = coercivity_certificate(GammaCandidate::identity(2), m, 5000);
    EXPECT_GT(cert.kappa_hat, 0.0);
    EXPECT_GT(cert.eps, 0.0);
    EXPECT_GT(smallest_eigenvalue(cert.pi), 0.0);
    const auto check = resample_certificate(cert, m, 100000, 5);
    EXPECT_GT(check.min_ratio, 0.0);
}

TEST(ConditionC, CertificateRequiresConditionC) {
    const RegimeModel m = RegimeModel::uniform({1.0, 1.0, 1.0, 100.0});
    EXPECT_THROW(coercivity_certificate(GammaCandidate::identity(4), m, 100), CertificateError);
}

TEST(ConditionC, SmallestEigenvalue) {
    Matrix s(2, 2);
    s << 2, 1, 1, 2;
    EXPECT_NEAR(smallest_eigenvalue(s), 1.0, 1e-14);
}
