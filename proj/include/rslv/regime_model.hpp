#pragma once

// Regime-switching model data and the nonlinear coefficient fields of the
// sub-density system: the matrices M, A and their epsilon-regularized
// versions, and the ratio R = sum(rho) / sum(lambda * rho).

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rslv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Sub-density values (rho_1, ..., rho_d) at one point.
using StateVector = Eigen::VectorXd;

/// Jump intensities x -> q_ij(x) between regimes.
///
/// Either constant in x, or piecewise linear on shared knots with flat
/// extrapolation. Only off-diagonal entries are stored; the diagonal of the
/// generator is q_ii = -sum_{j != i} q_ij.
class IntensityTable {
public:
    static IntensityTable constant(const Matrix& rates);
    static IntensityTable piecewise_linear(std::vector<double> knots, std::vector<Matrix> rates);

    std::size_t size() const { return d_; }
    bool is_constant() const { return knots_.empty(); }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<Matrix>& rates() const { return rates_; }

    /// q_ij(x), including the diagonal.
    double rate(std::size_t i, std::size_t j, double x) const;
    /// Full generator Q(x) (rows sum to zero).
    Matrix generator(double x) const;
    /// Writes the row-major generator into `out` (size d*d).
    void generator_into(double x, std::span<double> out) const;

    /// sup_x max_{i != j} q_ij(x). Exact for piecewise-linear tables.
    double sup_rate() const;
    /// sup_x max_i sum_{j != i} q_ij(x).
    double sup_exit_rate() const;
    bool is_zero() const { return sup_rate() == 0.0; }

private:
    IntensityTable(std::size_t d, std::vector<double> knots, std::vector<Matrix> rates);

    std::size_t d_ = 0;
    std::vector<double> knots_;
    std::vector<Matrix> rates_;
};

/// d regimes with variance levels lambda_i = f(i)^2, initial regime
/// probabilities alpha_i and optional jump intensities.
class RegimeModel {
public:
    RegimeModel(std::vector<double> lambda, std::vector<double> alpha,
                std::optional<IntensityTable> q = std::nullopt,
                std::optional<double> q_bar = std::nullopt);

    /// Equal regime weights alpha_i = 1/d, no jumps.
    static RegimeModel uniform(std::vector<double> lambda);

    std::size_t d() const { return lambda_.size(); }
    std::span<const double> lambda() const { return lambda_; }
    std::span<const double> alpha() const { return alpha_; }
    double lambda_min() const { return lambda_min_; }
    double lambda_max() const { return lambda_max_; }
    /// Weighted mean sum_i alpha_i lambda_i.
    double lambda_bar() const;

    bool has_jumps() const { return q_.has_value(); }
    const IntensityTable& intensities() const;
    /// Declared bound on |q_ij|; 0 when there are no jumps.
    double q_bar() const { return q_bar_; }

    /// Same regimes with different jump intensities.
    RegimeModel with_intensities(std::optional<IntensityTable> q) const;

private:
    std::vector<double> lambda_;
    std::vector<double> alpha_;
    std::optional<IntensityTable> q_;
    double q_bar_ = 0.0;
    double lambda_min_ = 0.0;
    double lambda_max_ = 0.0;
};

struct HorizonConfig {
    double T = 1.0;
    double r = 0.0;

    void validate() const;
};

/// M(rho) on D = (R+)^d \ {0}.
Matrix coeff_matrix_M(const StateVector& rho, const RegimeModel& model);
/// A(rho) = (I + M(rho)) / 2.
Matrix coeff_matrix_A(const StateVector& rho, const RegimeModel& model);

/// M_eps with denominator max(eps^2, (sum lambda rho)^2). Negative entries of
/// `rho_plus` are replaced by zero before evaluation.
Matrix coeff_matrix_M_eps(const StateVector& rho_plus, const RegimeModel& model, double eps);
Matrix coeff_matrix_A_eps(const StateVector& rho_plus, const RegimeModel& model, double eps);

/// R(rho) = sum rho / sum lambda rho on D.
double ratio_R(const StateVector& rho, const RegimeModel& model);
/// R_eps(rho) = sum rho / max(eps, sum lambda rho), defined on all of (R+)^d.
double ratio_R_eps(const StateVector& rho_plus, const RegimeModel& model, double eps);

/// ||A||_inf bound (1 + lambda_max / lambda_min) / 2 over the image of D.
double coeff_bound(const RegimeModel& model);

namespace kernels {

// Unchecked versions for solver inner loops. `rho` may contain negatives,
// which are treated as zero. `out` is row-major d x d.
void coeff_A_eps_into(std::span<const double> rho, std::span<const double> lambda, double eps,
                      std::span<double> out);
double ratio_R_eps(std::span<const double> rho, std::span<const double> lambda, double eps);

}  // namespace kernels

}  // namespace rslv
