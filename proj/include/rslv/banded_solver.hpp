#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rslv {

/// General band matrix with `kl` sub- and `ku` super-diagonals, stored in the
/// LAPACK band layout with kl extra rows reserved for pivoting fill-in.
class BandedMatrix {
public:
    BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku);

    std::size_t size() const { return n_; }
    std::size_t lower() const { return kl_; }
    std::size_t upper() const { return ku_; }

    void set_zero();
    /// A(i, j) += v. (i, j) must lie inside the band.
    void add(std::size_t i, std::size_t j, double v) { ab_[index(i, j)] += v; }
    double get(std::size_t i, std::size_t j) const;
    bool in_band(std::size_t i, std::size_t j) const {
        return i <= j + kl_ && j <= i + ku_;
    }

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;

    /// In-place LU factorization with partial pivoting, then solve A x = b
    /// overwriting b. The matrix content is destroyed. Throws NumericalError
    /// on an exactly singular pivot.
    void factor_and_solve(std::span<double> b);

private:
    std::size_t index(std::size_t i, std::size_t j) const { return (kv_ + i - j) + j * ldab_; }

    std::size_t n_, kl_, ku_, kv_, ldab_;
    std::vector<double> ab_;
    std::vector<std::size_t> pivots_;
};

}  // namespace rslv
