#pragma once

// Condition (C): existence of a symmetric positive definite Gamma whose
// weighted difference matrices Gamma^(k) are positive definite on e_k^perp.
//
// Provides the exact criteria (d = 2, d = 3, diagonal Gamma, Gamma = I), the
// planar grid search for a diagonal Gamma, recovery of that diagonal from a
// grid point, and construction of a coercivity certificate Pi = J + eps*Gamma.

#include "rslv/regime_model.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace rslv {

/// Symmetric candidate matrix for Condition (C).
class GammaCandidate {
public:
    /// Throws DomainError when `gamma` is not square or not symmetric to 1e-12.
    explicit GammaCandidate(Matrix gamma);

    static GammaCandidate identity(std::size_t d);
    static GammaCandidate diagonal(const std::vector<double>& diag);

    const Matrix& matrix() const { return gamma_; }
    std::size_t size() const { return static_cast<std::size_t>(gamma_.rows()); }

private:
    Matrix gamma_;
};

/// Smallest eigenvalue of a symmetric matrix (Householder tridiagonalization
/// followed by implicit QL iterations).
double smallest_eigenvalue(const Matrix& sym);

/// Max-abs entry norm ||B||_inf = max |B_ij|.
double max_abs_entry(const Matrix& m);

/// Gamma^(k) with row and column k removed; k is 0-based.
/// Gamma^(k)_ij = (lambda_i + lambda_j)/2 * (Gamma_ij + Gamma_kk - Gamma_ik - Gamma_jk).
Matrix gamma_k_submatrix(const GammaCandidate& gamma, const RegimeModel& model, std::size_t k);

/// True iff Gamma is SPD and every deleted Gamma^(k) has smallest eigenvalue
/// above rel_tol * ||Gamma^(k)||_inf.
bool satisfies_condition_c(const GammaCandidate& gamma, const RegimeModel& model, double rel_tol = 1e-10);

struct D3Report {
    double r1 = 2.0;
    double r2 = 2.0;
    double r3 = 2.0;
    /// Left-hand side of the d = 3 inequality; +inf when some r_i = 2.
    double lhs = std::numeric_limits<double>::infinity();
    bool satisfied = true;
};

/// Exact decision of Condition (C) for three regimes.
D3Report criterion_d3(const std::vector<double>& lambda);

/// max_k sqrt(sum_{i!=k} lambda_i * sum_{i!=k} 1/lambda_i) < d + 1, a
/// sufficient condition for Gamma = I.
bool criterion_identity(const RegimeModel& model);

/// Exact test of Condition (C) for Gamma = Diag(alpha_diag).
bool criterion_diag(const RegimeModel& model, const std::vector<double>& alpha_diag);

struct GridPoint {
    double x = 0.0;
    double y = 0.0;
};

struct GridSearchReport {
    /// How the answer was obtained.
    enum class Basis {
        grid,               // planar grid search over the convex hull
        identity_shortcut,  // all lambda equal, Gamma = I works
        d3_fallback,        // fewer than 3 distinct values, d = 3 closed form
        identity_fallback,  // fewer than 3 distinct values, d >= 4, identity criterion
    };

    int n = 0;
    std::vector<GridPoint> points;
    bool satisfied = false;
    Basis basis = Basis::grid;
    /// True when a negative answer is a proof (d = 3), false when it only
    /// means "not found at resolution n".
    bool exact = false;
};

/// Searches the convex hull of {(lambda_i, 1/lambda_i)} on the
/// (d'-1)(n-1)^2-point grid for points whose image (X, Y) stays inside the hull,
/// where d' is the number of distinct variance levels.
GridSearchReport grid_search_diag(const RegimeModel& model, int n);

struct CriterionSums {
    double m0 = 0.0;
    double m1 = 0.0;
    double m_minus1 = 0.0;
};

/// M_0, M_1, M_{-1} at (x, y), summed over all d variance levels.
CriterionSums criterion_sums(const RegimeModel& model, double x, double y);

/// Diagonal alpha such that Diag(alpha) satisfies Condition (C), built from a
/// point that passes the grid criterion. Throws SearchFailure when no strictly
/// positive distribution realizing (X, Y) is found within the budget.
std::vector<double> recover_alpha_from_point(const RegimeModel& model, double x, double y);

struct CoercivityCertificate {
    Matrix pi;
    double eps = 0.0;
    double z = 0.0;
    double kappa_hat = 0.0;
    std::size_t samples = 0;
};

/// Builds Pi = J_d + eps * Gamma and estimates its coercivity constant by
/// sampling rho over the simplex, its faces and vertices.
///
/// Throws CertificateError when Gamma fails Condition (C) and NumericalError
/// when a sampled quadratic form is non-positive.
CoercivityCertificate coercivity_certificate(const GammaCandidate& gamma, const RegimeModel& model,
                                             std::size_t samples, std::uint64_t seed = 20240607);

struct CertificateCheck {
    double min_ratio = std::numeric_limits<double>::infinity();
    std::size_t samples = 0;
    StateVector worst_rho;
    Vector worst_xi;
};

/// Independent re-sampling of xi^T sym(Pi A(rho)) xi / xi^T xi over random
/// (rho, xi) pairs.
CertificateCheck resample_certificate(const CoercivityCertificate& cert, const RegimeModel& model,
                                      std::size_t samples, std::uint64_t seed);

}  // namespace rslv
