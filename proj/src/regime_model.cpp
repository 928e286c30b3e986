#include "rslv/regime_model.hpp"

#include "rslv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rslv {

namespace {

constexpr double kAlphaSumTol = 1e-12;
// Entries this far below zero (relative to the largest entry) are treated as
// round-off and clamped; anything more negative is a domain error.
constexpr double kRoundoffNeg = 1e-12;

void check_off_diagonal(const Matrix& rates, std::size_t d) {
    if (static_cast<std::size_t>(rates.rows()) != d || static_cast<std::size_t>(rates.cols()) != d) {
        throw DomainError("intensity matrix must be d x d");
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (i == j) continue;
            double q = rates(i, j);
            if (!std::isfinite(q) || q < 0.0) {
                throw DomainError("off-diagonal intensities must be finite and non-negative");
            }
        }
    }
}

// Clamps round-off negatives and rejects genuinely negative or zero states.
StateVector admissible_state(const StateVector& rho, const RegimeModel& model) {
    if (static_cast<std::size_t>(rho.size()) != model.d()) {
        throw DomainError("state vector has wrong dimension");
    }
    double scale = rho.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw DomainError("state vector must be a finite non-zero vector");
    }
    StateVector out = rho;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (out[i] < 0.0) {
            if (out[i] < -kRoundoffNeg * scale) {
                throw DomainError("state vector has a negative component");
            }
            out[i] = 0.0;
        }
    }
    if (out.maxCoeff() <= 0.0) {
        throw DomainError("state vector must not vanish");
    }
    return out;
}

void fill_M(std::span<const double> rho, std::span<const double> lambda, double denom_sq,
            std::span<double> out) {
    const std::size_t d = lambda.size();
    double s = 0.0;
    double p = 0.0;
    for (std::size_t l = 0; l < d; ++l) {
        double r = std::max(rho[l], 0.0);
        s += lambda[l] * r;
        p += r;
    }
    if (denom_sq <= 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    // sum_{l != j} (lambda_l - lambda_j) rho_l = s - lambda_j p
    for (std::size_t i = 0; i < d; ++i) {
        double ri = std::max(rho[i], 0.0);
        double li_ri = lambda[i] * ri;
        for (std::size_t j = 0; j < d; ++j) {
            double v;
            if (i == j) {
                v = (s - li_ri) * (lambda[i] * p - s);
            } else {
                v = li_ri * (s - lambda[j] * p);
            }
            out[i * d + j] = v / denom_sq;
        }
    }
}

Matrix to_matrix(std::span<const double> flat, std::size_t d) {
    Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = flat[i * d + j];
    return m;
}

double weighted_sum(const StateVector& rho, std::span<const double> lambda) {
    double s = 0.0;
    for (std::size_t l = 0; l < lambda.size(); ++l) s += lambda[l] * std::max(rho[l], 0.0);
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// IntensityTable

IntensityTable::IntensityTable(std::size_t d, std::vector<double> knots, std::vector<Matrix> rates)
    : d_(d), knots_(std::move(knots)), rates_(std::move(rates)) {}

IntensityTable IntensityTable::constant(const Matrix& rates) {
    const auto d = static_cast<std::size_t>(rates.rows());
    if (d < 1) throw DomainError("empty intensity matrix");
    check_off_diagonal(rates, d);
    return IntensityTable(d, {}, {rates});
}

IntensityTable IntensityTable::piecewise_linear(std::vector<double> knots, std::vector<Matrix> rates) {
    if (knots.size() < 2 || knots.size() != rates.size()) {
        throw DomainError("piecewise-linear intensities need >= 2 knots and one matrix per knot");
    }
    for (std::size_t k = 1; k < knots.size(); ++k) {
        if (!(knots[k] > knots[k - 1])) throw DomainError("intensity knots must be strictly increasing");
    }
    const auto d = static_cast<std::size_t>(rates.front().rows());
    for (const auto& m : rates) check_off_diagonal(m, d);
    return IntensityTable(d, std::move(knots), std::move(rates));
}

double IntensityTable::rate(std::size_t i, std::size_t j, double x) const {
    if (i == j) {
        double s = 0.0;
        for (std::size_t l = 0; l < d_; ++l)
            if (l != i) s += rate(i, l, x);
        return -s;
    }
    if (knots_.empty()) return rates_.front()(i, j);
    if (x <= knots_.front()) return rates_.front()(i, j);
    if (x >= knots_.back()) return rates_.back()(i, j);
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    std::size_t k = static_cast<std::size_t>(it - knots_.begin());
    double w = (x - knots_[k - 1]) / (knots_[k] - knots_[k - 1]);
    return (1.0 - w) * rates_[k - 1](i, j) + w * rates_[k](i, j);
}

Matrix IntensityTable::generator(double x) const {
    Matrix q(d_, d_);
    std::vector<double> flat(d_ * d_);
    generator_into(x, flat);
    for (std::size_t i = 0; i < d_; ++i)
        for (std::size_t j = 0; j < d_; ++j) q(i, j) = flat[i * d_ + j];
    return q;
}

void IntensityTable::generator_into(double x, std::span<double> out) const {
    for (std::size_t i = 0; i < d_; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < d_; ++j) {
            if (i == j) continue;
            double v = rate(i, j, x);
            out[i * d_ + j] = v;
            row += v;
        }
        out[i * d_ + i] = -row;
    }
}

double IntensityTable::sup_rate() const {
    double sup = 0.0;
    for (const auto& m : rates_)
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = 0; j < d_; ++j)
                if (i != j) sup = std::max(sup, m(i, j));
    return sup;
}

double IntensityTable::sup_exit_rate() const {
    // Row sums of piecewise-linear functions are piecewise linear on the same
    // knots, so the supremum is attained at a knot.
    double sup = 0.0;
    for (const auto& m : rates_) {
        for (std::size_t i = 0; i < d_; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < d_; ++j)
                if (i != j) row += m(i, j);
            sup = std::max(sup, row);
        }
    }
    return sup;
}

// ---------------------------------------------------------------------------
// RegimeModel

RegimeModel::RegimeModel(std::vector<double> lambda, std::vector<double> alpha,
                         std::optional<IntensityTable> q, std::optional<double> q_bar)
    : lambda_(std::move(lambda)), alpha_(std::move(alpha)), q_(std::move(q)) {
    if (lambda_.size() < 2) throw DomainError("a regime model needs at least two regimes");
    if (alpha_.size() != lambda_.size()) throw DomainError("alpha and lambda must have the same length");
    for (double l : lambda_) {
        if (!std::isfinite(l) || l <= 0.0) throw DomainError("variance levels lambda_i must be positive");
    }
    double total = 0.0;
    for (double a : alpha_) {
        if (!std::isfinite(a) || a < 0.0) throw DomainError("regime weights alpha_i must be non-negative");
        total += a;
    }
    if (std::abs(total - 1.0) > kAlphaSumTol) {
        throw DomainError("regime weights must sum to 1 (got " + std::to_string(total) + ")");
    }
    auto [lo, hi] = std::minmax_element(lambda_.begin(), lambda_.end());
    lambda_min_ = *lo;
    lambda_max_ = *hi;

    if (q_) {
        if (q_->size() != lambda_.size()) throw DomainError("intensity table size does not match d");
        double sup = q_->sup_rate();
        if (q_bar) {
            if (!std::isfinite(*q_bar) || *q_bar < sup) {
                throw DomainError("declared q_bar is smaller than sup |q_ij|");
            }
            q_bar_ = *q_bar;
        } else {
            q_bar_ = sup;
        }
    } else if (q_bar) {
        q_bar_ = *q_bar;
    }
}

RegimeModel RegimeModel::uniform(std::vector<double> lambda) {
    const std::size_t d = lambda.size();
    std::vector<double> alpha(d, d ? 1.0 / static_cast<double>(d) : 0.0);
    // Absorb the rounding of 1/d into the last weight so the sum is exact.
    if (d) {
        double head = 0.0;
        for (std::size_t i = 0; i + 1 < d; ++i) head += alpha[i];
        alpha.back() = 1.0 - head;
    }
    return RegimeModel(std::move(lambda), std::move(alpha));
}

double RegimeModel::lambda_bar() const {
    double s = 0.0;
    for (std::size_t i = 0; i < d(); ++i) s += alpha_[i] * lambda_[i];
    return s;
}

const IntensityTable& RegimeModel::intensities() const {
    if (!q_) throw DomainError("regime model has no jump intensities");
    return *q_;
}

RegimeModel RegimeModel::with_intensities(std::optional<IntensityTable> q) const {
    return RegimeModel(lambda_, alpha_, std::move(q));
}

void HorizonConfig::validate() const {
    if (!std::isfinite(T) || T <= 0.0) throw DomainError("time horizon T must be positive");
    if (!std::isfinite(r)) throw DomainError("rate r must be finite");
}

// ---------------------------------------------------------------------------
// Coefficient fields

Matrix coeff_matrix_M(const StateVector& rho, const RegimeModel& model) {
    StateVector r = admissible_state(rho, model);
    const std::size_t d = model.d();
    double s = weighted_sum(r, model.lambda());
    std::vector<double> flat(d * d);
    fill_M({r.data(), d}, model.lambda(), s * s, flat);
    return to_matrix(flat, d);
}

Matrix coeff_matrix_A(const StateVector& rho, const RegimeModel& model) {
    const auto d = static_cast<Eigen::Index>(model.d());
    return 0.5 * (Matrix::Identity(d, d) + coeff_matrix_M(rho, model));
}

Matrix coeff_matrix_M_eps(const StateVector& rho_plus, const RegimeModel& model, double eps) {
    if (!(eps > 0.0)) throw DomainError("regularization eps must be positive");
    const std::size_t d = model.d();
    if (static_cast<std::size_t>(rho_plus.size()) != d) throw DomainError("state vector has wrong dimension");
    double s = weighted_sum(rho_plus, model.lambda());
    std::vector<double> flat(d * d);
    fill_M({rho_plus.data(), d}, model.lambda(), std::max(eps * eps, s * s), flat);
    return to_matrix(flat, d);
}

Matrix coeff_matrix_A_eps(const StateVector& rho_plus, const RegimeModel& model, double eps) {
    const auto d = static_cast<Eigen::Index>(model.d());
    return 0.5 * (Matrix::Identity(d, d) + coeff_matrix_M_eps(rho_plus, model, eps));
}

double ratio_R(const StateVector& rho, const RegimeModel& model) {
    StateVector r = admissible_state(rho, model);
    return r.sum() / weighted_sum(r, model.lambda());
}

double ratio_R_eps(const StateVector& rho_plus, const RegimeModel& model, double eps) {
    if (!(eps > 0.0)) throw DomainError("regularization eps must be positive");
    if (static_cast<std::size_t>(rho_plus.size()) != model.d()) {
        throw DomainError("state vector has wrong dimension");
    }
    return kernels::ratio_R_eps({rho_plus.data(), model.d()}, model.lambda(), eps);
}

double coeff_bound(const RegimeModel& model) {
    return 0.5 * (1.0 + model.lambda_max() / model.lambda_min());
}

namespace kernels {

void coeff_A_eps_into(std::span<const double> rho, std::span<const double> lambda, double eps,
                      std::span<double> out) {
    const std::size_t d = lambda.size();
    double s = 0.0;
    for (std::size_t l = 0; l < d; ++l) s += lambda[l] * std::max(rho[l], 0.0);
    fill_M(rho, lambda, std::max(eps * eps, s * s), out);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] *= 0.5;
        out[i * d + i] += 0.5;
    }
}

double ratio_R_eps(std::span<const double> rho, std::span<const double> lambda, double eps) {
    double s = 0.0;
    double p = 0.0;
    for (std::size_t l = 0; l < lambda.size(); ++l) {
        double r = std::max(rho[l], 0.0);
        s += lambda[l] * r;
        p += r;
    }
    return p / std::max(eps, s);
}

}  // namespace kernels

}  // namespace rslv
