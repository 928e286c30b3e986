#include "rslv/banded_solver.hpp"

#include "rslv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rslv {

BandedMatrix::BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku)
    : n_(n), kl_(kl), ku_(ku), kv_(kl + ku), ldab_(2 * kl + ku + 1), ab_(ldab_ * n, 0.0), pivots_(n, 0) {}

void BandedMatrix::set_zero() { std::fill(ab_.begin(), ab_.end(), 0.0); }

double BandedMatrix::get(std::size_t i, std::size_t j) const { return in_band(i, j) ? ab_[index(i, j)] : 0.0; }

void BandedMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
        std::size_t j0 = i > kl_ ? i - kl_ : 0;
        std::size_t j1 = std::min(n_ - 1, i + ku_);
        double s = 0.0;
        for (std::size_t j = j0; j <= j1; ++j) s += ab_[index(i, j)] * x[j];
        y[i] = s;
    }
}

void BandedMatrix::factor_and_solve(std::span<double> b) {
    // Factorization (unblocked dgbtf2 ordering).
    std::size_t ju = 0;
    for (std::size_t j = 0; j < n_; ++j) {
        const std::size_t km = std::min(kl_, n_ - 1 - j);
        std::size_t jp = 0;
        double best = std::abs(ab_[kv_ + j * ldab_]);
        for (std::size_t t = 1; t <= km; ++t) {
            double v = std::abs(ab_[kv_ + t + j * ldab_]);
            if (v > best) {
                best = v;
                jp = t;
            }
        }
        pivots_[j] = j + jp;
        if (best == 0.0) throw NumericalError("singular band matrix at column " + std::to_string(j));

        ju = std::max(ju, std::min(j + ku_ + jp, n_ - 1));
        if (jp != 0) {
            for (std::size_t c = j; c <= ju; ++c) std::swap(ab_[index(j, c)], ab_[index(j + jp, c)]);
        }
        if (km > 0) {
            const double inv = 1.0 / ab_[kv_ + j * ldab_];
            for (std::size_t t = 1; t <= km; ++t) ab_[kv_ + t + j * ldab_] *= inv;
            for (std::size_t c = j + 1; c <= ju; ++c) {
                const double ujc = ab_[index(j, c)];
                if (ujc == 0.0) continue;
                for (std::size_t t = 1; t <= km; ++t) ab_[index(j + t, c)] -= ab_[kv_ + t + j * ldab_] * ujc;
            }
        }
    }

    // Forward substitution with L and the row interchanges.
    for (std::size_t j = 0; j + 1 < n_; ++j) {
        const std::size_t lm = std::min(kl_, n_ - 1 - j);
        if (pivots_[j] != j) std::swap(b[j], b[pivots_[j]]);
        const double bj = b[j];
        for (std::size_t t = 1; t <= lm; ++t) b[j + t] -= ab_[kv_ + t + j * ldab_] * bj;
    }
    // Back substitution with U (kl + ku super-diagonals).
    for (std::size_t jj = n_; jj-- > 0;) {
        b[jj] /= ab_[kv_ + jj * ldab_];
        const double bj = b[jj];
        const std::size_t i0 = jj > kv_ ? jj - kv_ : 0;
        for (std::size_t i = i0; i < jj; ++i) b[i] -= ab_[index(i, jj)] * bj;
    }
}

}  // namespace rslv
