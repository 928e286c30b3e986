#include "rslv/condition_c.hpp"

#include "rslv/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

namespace rslv {

namespace {

constexpr double kSymTol = 1e-12;
constexpr double kBoundaryMargin = 1e-12;
constexpr int kPushOutBudget = 60;

// Random point of the closed simplex: picks a face (possibly a vertex or the
// interior) uniformly by dimension, then a flat Dirichlet point on it.
StateVector random_simplex_point(std::mt19937_64& rng, std::size_t d) {
    std::uniform_int_distribution<std::size_t> support_size(1, d);
    std::exponential_distribution<double> expo(1.0);
    std::vector<std::size_t> idx(d);
    for (std::size_t i = 0; i < d; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t k = support_size(rng);
    StateVector rho = StateVector::Zero(static_cast<Eigen::Index>(d));
    double total = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
        double e = expo(rng);
        rho[static_cast<Eigen::Index>(idx[s])] = e;
        total += e;
    }
    return rho / total;
}

std::vector<double> distinct_sorted(std::span<const double> lambda) {
    std::vector<double> l(lambda.begin(), lambda.end());
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    return l;
}

// Barycentric coordinates of p in triangle (a, b, c); nullopt when outside.
std::optional<std::array<double, 3>> barycentric(const GridPoint& p, const GridPoint& a, const GridPoint& b,
                                                 const GridPoint& c) {
    double det = (b.y - c.y) * (a.x - c.x) + (c.x - b.x) * (a.y - c.y);
    if (det == 0.0) return std::nullopt;
    double w0 = ((b.y - c.y) * (p.x - c.x) + (c.x - b.x) * (p.y - c.y)) / det;
    double w1 = ((c.y - a.y) * (p.x - c.x) + (a.x - c.x) * (p.y - c.y)) / det;
    double w2 = 1.0 - w0 - w1;
    if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) return std::nullopt;
    return std::array<double, 3>{w0, w1, w2};
}

// Non-negative weights on the hull vertices (l_j, 1/l_j) reproducing p.
std::optional<std::vector<double>> hull_weights(const std::vector<double>& l, const GridPoint& p) {
    const std::size_t n = l.size();
    std::vector<double> w(n, 0.0);
    if (n == 2) {
        double t = (p.x - l[0]) / (l[1] - l[0]);
        if (t < 0.0 || t > 1.0) return std::nullopt;
        double y = (1.0 - t) / l[0] + t / l[1];
        if (std::abs(y - p.y) > 1e-12 * std::max(1.0, std::abs(y))) return std::nullopt;
        w[0] = 1.0 - t;
        w[1] = t;
        return w;
    }
    // The vertices lie on the convex curve y = 1/x, so in increasing-x order
    // they already form the hull boundary; fan-triangulate from the first.
    GridPoint z0{l[0], 1.0 / l[0]};
    for (std::size_t j = 1; j + 1 < n; ++j) {
        GridPoint z1{l[j], 1.0 / l[j]};
        GridPoint z2{l[j + 1], 1.0 / l[j + 1]};
        if (auto bc = barycentric(p, z0, z1, z2)) {
            w[0] = (*bc)[0];
            w[j] = (*bc)[1];
            w[j + 1] = (*bc)[2];
            return w;
        }
    }
    return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------

GammaCandidate::GammaCandidate(Matrix gamma) : gamma_(std::move(gamma)) {
    if (gamma_.rows() != gamma_.cols() || gamma_.rows() == 0) throw DomainError("Gamma must be a square matrix");
    double scale = std::max(1.0, max_abs_entry(gamma_));
    if ((gamma_ - gamma_.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale) {
        throw DomainError("Gamma must be symmetric");
    }
    gamma_ = 0.5 * (gamma_ + gamma_.transpose());
}

GammaCandidate GammaCandidate::identity(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    return GammaCandidate(Matrix::Identity(n, n));
}

GammaCandidate GammaCandidate::diagonal(const std::vector<double>& diag) {
    for (double a : diag)
        if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("diagonal entries must be positive");
    Vector v = Eigen::Map<const Vector>(diag.data(), static_cast<Eigen::Index>(diag.size()));
    return GammaCandidate(Matrix(v.asDiagonal()));
}

double smallest_eigenvalue(const Matrix& sym) {
    if (sym.rows() == 1) return sym(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigenvalue iteration did not converge");
    return solver.eigenvalues().minCoeff();
}

double max_abs_entry(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

Matrix gamma_k_submatrix(const GammaCandidate& gamma, const RegimeModel& model, std::size_t k) {
    const std::size_t d = model.d();
    if (gamma.size() != d) throw DomainError("Gamma size does not match the number of regimes");
    if (k >= d) throw DomainError("regime index k out of range");
    const Matrix& g = gamma.matrix();
    auto lam = model.lambda();
    Matrix sub(d - 1, d - 1);
    for (std::size_t i = 0, si = 0; i < d; ++i) {
        if (i == k) continue;
        for (std::size_t j = 0, sj = 0; j < d; ++j) {
            if (j == k) continue;
            sub(si, sj) = 0.5 * (lam[i] + lam[j]) * (g(i, j) + g(k, k) - g(i, k) - g(j, k));
            ++sj;
        }
        ++si;
    }
    return sub;
}

bool satisfies_condition_c(const GammaCandidate& gamma, const RegimeModel& model, double rel_tol) {
    if (gamma.size() != model.d()) throw DomainError("Gamma size does not match the number of regimes");
    const Matrix& g = gamma.matrix();
    double gnorm = max_abs_entry(g);
    if (gnorm == 0.0 || smallest_eigenvalue(g) <= rel_tol * gnorm) return false;
    for (std::size_t k = 0; k < model.d(); ++k) {
        Matrix sub = gamma_k_submatrix(gamma, model, k);
        double norm = max_abs_entry(sub);
        if (norm == 0.0 || smallest_eigenvalue(sub) <= rel_tol * norm) return false;
    }
    return true;
}

D3Report criterion_d3(const std::vector<double>& lambda) {
    if (lambda.size() != 3) throw DomainError("criterion_d3 needs exactly three variance levels");
    for (double l : lambda)
        if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("variance levels must be positive");
    const double l1 = lambda[0], l2 = lambda[1], l3 = lambda[2];
    // r - 2 = (a - b)^2 / (a b), evaluated without cancellation.
    auto excess = [](double a, double b) { return (a - b) * (a - b) / (a * b); };
    double e1 = excess(l3, l2);
    double e2 = excess(l3, l1);
    double e3 = excess(l1, l2);
    D3Report rep;
    rep.r1 = l3 / l2 + l2 / l3;
    rep.r2 = l3 / l1 + l1 / l3;
    rep.r3 = l1 / l2 + l2 / l1;
    auto inv_sqrt = [](double a, double b) {
        double prod = a * b;
        return prod > 0.0 ? 1.0 / std::sqrt(prod) : std::numeric_limits<double>::infinity();
    };
    rep.lhs = inv_sqrt(e1, e2) + inv_sqrt(e2, e3) + inv_sqrt(e1, e3);
    rep.satisfied = rep.lhs > 0.25;
    return rep;
}

bool criterion_identity(const RegimeModel& model) {
    const std::size_t d = model.d();
    auto lam = model.lambda();
    double worst = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0, s_inv = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            if (i == k) continue;
            s += lam[i];
            s_inv += 1.0 / lam[i];
        }
        worst = std::max(worst, std::sqrt(s * s_inv));
    }
    return worst < static_cast<double>(d) + 1.0;
}

bool criterion_diag(const RegimeModel& model, const std::vector<double>& alpha_diag) {
    const std::size_t d = model.d();
    if (alpha_diag.size() != d) throw DomainError("diagonal size does not match the number of regimes");
    for (double a : alpha_diag)
        if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("diagonal entries must be positive");
    auto lam = model.lambda();
    for (std::size_t k = 0; k < d; ++k) {
        double lhs = 2.0 / alpha_diag[k];
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            if (i == k) continue;
            lhs += 1.0 / alpha_diag[i];
            s1 += lam[i] / alpha_diag[i];
            s2 += 1.0 / (lam[i] * alpha_diag[i]);
        }
        if (!(lhs > std::sqrt(s1 * s2))) return false;
    }
    return true;
}

CriterionSums criterion_sums(const RegimeModel& model, double x, double y) {
    CriterionSums s;
    for (double l : model.lambda()) {
        double c = 1.0 / (2.0 + x / l + l * y);
        s.m0 += c;
        s.m1 += l * c;
        s.m_minus1 += c / l;
    }
    double f = x * y - 1.0;
    s.m0 *= f;
    s.m1 *= f;
    s.m_minus1 *= f;
    return s;
}

GridSearchReport grid_search_diag(const RegimeModel& model, int n) {
    const std::size_t d = model.d();
    if (d < 3) throw DomainError("grid search needs d >= 3");
    if (n < 2) throw DomainError("grid resolution n must be >= 2");

    GridSearchReport rep;
    rep.n = n;
    if (model.lambda_min() == model.lambda_max()) {
        rep.basis = GridSearchReport::Basis::identity_shortcut;
        rep.satisfied = criterion_identity(model);
        rep.exact = true;
        return rep;
    }
    const std::vector<double> l = distinct_sorted(model.lambda());
    if (l.size() < 3) {
        if (d == 3) {
            std::vector<double> lam(model.lambda().begin(), model.lambda().end());
            rep.basis = GridSearchReport::Basis::d3_fallback;
            rep.satisfied = criterion_d3(lam).satisfied;
            rep.exact = true;
        } else {
            rep.basis = GridSearchReport::Basis::identity_fallback;
            rep.satisfied = criterion_identity(model);
            rep.exact = rep.satisfied;
        }
        return rep;
    }

    const double l_first = l.front();
    const double l_last = l.back();
    const double nn = static_cast<double>(n);
    auto upper_chord = [&](double x) { return 1.0 / l_first - (x - l_first) / (l_first * l_last); };

    for (std::size_t i = 0; i + 1 < l.size(); ++i) {
        for (int k1 = 1; k1 < n; ++k1) {
            const double x = l[i] + (l[i + 1] - l[i]) * k1 / nn;
            const double y_min = (1.0 / l[i]) * (n - k1) / nn + (1.0 / l[i + 1]) * k1 / nn;
            const double y_max = upper_chord(x);
            for (int k2 = 1; k2 < n; ++k2) {
                const double y = y_min + (y_max - y_min) * k2 / nn;
                CriterionSums s = criterion_sums(model, x, y);
                if (!(s.m0 < 1.0 - kBoundaryMargin)) continue;
                const double big_x = (x - s.m1) / (1.0 - s.m0);
                if (!(big_x > l_first + kBoundaryMargin && big_x < l_last - kBoundaryMargin)) continue;
                // Segment [l_{j-1}, l_j] of the lower chain containing X.
                auto j = static_cast<std::size_t>(std::count_if(l.begin(), l.end(), [&](double v) { return big_x > v; }));
                const double lo = l[j - 1];
                const double hi = l[j];
                const double z_min = 1.0 / lo - (big_x - lo) / (lo * hi);
                const double z_max = upper_chord(big_x);
                const double big_y = (y - s.m_minus1) / (1.0 - s.m0);
                if (big_y > z_min + kBoundaryMargin && big_y < z_max - kBoundaryMargin) {
                    rep.points.push_back({x, y});
                }
            }
        }
    }
    rep.satisfied = !rep.points.empty();
    rep.exact = rep.satisfied || d == 3;
    return rep;
}

std::vector<double> recover_alpha_from_point(const RegimeModel& model, double x, double y) {
    const std::size_t d = model.d();
    if (model.lambda_min() == model.lambda_max()) return std::vector<double>(d, 1.0);

    CriterionSums s = criterion_sums(model, x, y);
    if (!(s.m0 < 1.0)) throw DomainError("point does not satisfy M_0 < 1");
    const GridPoint target{(x - s.m1) / (1.0 - s.m0), (y - s.m_minus1) / (1.0 - s.m0)};

    const std::vector<double> l = distinct_sorted(model.lambda());
    auto lam = model.lambda();
    // Uniform weights over all d regimes give an interior reference point.
    GridPoint centre{0.0, 0.0};
    for (double v : lam) {
        centre.x += v / static_cast<double>(d);
        centre.y += 1.0 / (v * static_cast<double>(d));
    }

    // Push the target away from the centre, express the pushed point with
    // non-negative hull weights, then mix the centre back in: the result is a
    // strictly positive distribution q reproducing the target.
    std::optional<std::vector<double>> q;
    double push = 1.0;
    for (int it = 0; it < kPushOutBudget && !q; ++it, push *= 0.5) {
        GridPoint pushed{target.x + push * (target.x - centre.x), target.y + push * (target.y - centre.y)};
        auto w = hull_weights(l, pushed);
        if (!w) continue;
        std::vector<double> qq(d, 0.0);
        for (std::size_t v = 0; v < l.size(); ++v) {
            std::size_t mult = static_cast<std::size_t>(std::count(lam.begin(), lam.end(), l[v]));
            for (std::size_t i = 0; i < d; ++i)
                if (lam[i] == l[v]) qq[i] += (*w)[v] / static_cast<double>(mult);
        }
        for (auto& v : qq) v = (v + push / static_cast<double>(d)) / (1.0 + push);
        q = std::move(qq);
    }
    if (!q) {
        std::ostringstream msg;
        msg << "no positive distribution realizes (X, Y) = (" << target.x << ", " << target.y
            << ") within the search budget";
        throw SearchFailure(msg.str());
    }

    std::vector<double> alpha(d);
    const double f = x * y - 1.0;
    for (std::size_t i = 0; i < d; ++i) {
        double c = 1.0 / (2.0 + x / lam[i] + lam[i] * y);
        double p = (1.0 - s.m0) * (*q)[i] + f * c;
        if (!(p > 0.0)) throw SearchFailure("recovered distribution is not strictly positive");
        alpha[i] = 1.0 / p;
    }
    if (!criterion_diag(model, alpha)) {
        throw SearchFailure("recovered diagonal fails the diagonal criterion (point too close to the boundary)");
    }
    return alpha;
}

CoercivityCertificate coercivity_certificate(const GammaCandidate& gamma, const RegimeModel& model,
                                             std::size_t samples, std::uint64_t seed) {
    if (!satisfies_condition_c(gamma, model)) {
        throw CertificateError("Gamma does not satisfy Condition (C)");
    }
    const std::size_t d = model.d();
    const auto dd = static_cast<double>(d);
    const Matrix& g = gamma.matrix();

    double z = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < d; ++k) {
        double zk = smallest_eigenvalue(gamma_k_submatrix(gamma, model, k)) / dd;
        z = std::min(z, zk / (2.0 * model.lambda_max()));
    }
    const double c = 1.0 + model.lambda_max() / model.lambda_min();
    const double gn = max_abs_entry(g);
    const double eps_bound = 1.0 / (dd * gn * c * (1.0 + dd * dd * gn * c / (2.0 * z)));

    CoercivityCertificate cert;
    cert.z = z;
    cert.eps = 0.9 * eps_bound;
    const auto n = static_cast<Eigen::Index>(d);
    cert.pi = Matrix::Ones(n, n) + cert.eps * g;

    std::mt19937_64 rng(seed);
    double worst = std::numeric_limits<double>::infinity();
    StateVector worst_rho;
    auto probe = [&](const StateVector& rho) {
        Matrix pa = cert.pi * coeff_matrix_A(rho, model);
        double v = smallest_eigenvalue(0.5 * (pa + pa.transpose()));
        if (v < worst) {
            worst = v;
            worst_rho = rho;
        }
    };
    // Vertices and edge midpoints first, then random faces and interior.
    for (Eigen::Index i = 0; i < n; ++i) {
        probe(StateVector::Unit(n, i));
        for (Eigen::Index j = i + 1; j < n; ++j) probe(0.5 * (StateVector::Unit(n, i) + StateVector::Unit(n, j)));
    }
    for (std::size_t s = 0; s < samples; ++s) probe(random_simplex_point(rng, d));
    cert.samples = samples;

    if (!(worst > 0.0)) {
        std::ostringstream msg;
        msg << "sampled coercivity constant " << worst << " <= 0 at rho = [" << worst_rho.transpose() << "]";
        throw NumericalError(msg.str());
    }
    cert.kappa_hat = std::min(worst, 0.5 * smallest_eigenvalue(cert.pi));
    return cert;
}

CertificateCheck resample_certificate(const CoercivityCertificate& cert, const RegimeModel& model,
                                      std::size_t samples, std::uint64_t seed) {
    const std::size_t d = model.d();
    const auto n = static_cast<Eigen::Index>(d);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    CertificateCheck out;
    out.samples = samples;
    Vector xi(n);
    for (std::size_t s = 0; s < samples; ++s) {
        StateVector rho = random_simplex_point(rng, d);
        for (Eigen::Index i = 0; i < n; ++i) xi[i] = normal(rng);
        double norm2 = xi.squaredNorm();
        if (norm2 == 0.0) continue;
        double q = xi.dot(cert.pi * (coeff_matrix_A(rho, model) * xi)) / norm2;
        if (q < out.min_ratio) {
            out.min_ratio = q;
            out.worst_rho = rho;
            out.worst_xi = xi / std::sqrt(norm2);
        }
    }
    return out;
}

}  // namespace rslv
