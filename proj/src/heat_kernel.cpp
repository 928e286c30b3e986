#include "rslv/heat_kernel.hpp"

#include "rslv/errors.hpp"

#include <cmath>
#include <numbers>

namespace rslv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double total_mass(const Measure& mu) {
    return std::visit(overloaded{
                          [](const PointMass& m) { return m.mass; },
                          [](const AtomMixture& m) {
                              double s = 0.0;
                              for (double w : m.weight) s += w;
                              return s;
                          },
                          [](const TabulatedDensity& m) { return trapezoid(m.x, m.density); },
                          [](const GaussianDensity& m) { return m.mass; },
                      },
                      mu);
}

bool has_atoms(const Measure& mu) {
    return std::holds_alternative<PointMass>(mu) || std::holds_alternative<AtomMixture>(mu);
}

void validate(const Measure& mu) {
    std::visit(overloaded{
                   [](const PointMass& m) {
                       if (!std::isfinite(m.x) || !(m.mass >= 0.0)) throw DomainError("invalid point mass");
                   },
                   [](const AtomMixture& m) {
                       if (m.x.empty() || m.x.size() != m.weight.size())
                           throw DomainError("atom mixture needs matching, non-empty x and weight");
                       for (double w : m.weight)
                           if (!(w >= 0.0)) throw DomainError("atom weights must be non-negative");
                   },
                   [](const TabulatedDensity& m) {
                       if (m.x.size() < 2 || m.x.size() != m.density.size())
                           throw DomainError("tabulated density needs >= 2 matching nodes");
                       for (std::size_t k = 1; k < m.x.size(); ++k)
                           if (!(m.x[k] > m.x[k - 1])) throw DomainError("density nodes must increase");
                       for (double v : m.density)
                           if (!(v >= 0.0)) throw DomainError("density values must be non-negative");
                   },
                   [](const GaussianDensity& m) {
                       if (!(m.variance > 0.0) || !(m.mass >= 0.0)) throw DomainError("invalid Gaussian density");
                   },
               },
               mu);
}

double heat_kernel(double t, double x) {
    return std::exp(-x * x / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
}

std::vector<double> heat_kernel_convolve(const Measure& mu, double t, std::span<const double> x_grid) {
    if (!(t > 0.0)) throw DomainError("heat kernel time must be positive");
    validate(mu);
    std::vector<double> out(x_grid.size(), 0.0);
    std::visit(overloaded{
                   [&](const PointMass& m) {
                       for (std::size_t a = 0; a < x_grid.size(); ++a)
                           out[a] = m.mass * heat_kernel(t, x_grid[a] - m.x);
                   },
                   [&](const AtomMixture& m) {
                       for (std::size_t a = 0; a < x_grid.size(); ++a) {
                           double s = 0.0;
                           for (std::size_t k = 0; k < m.x.size(); ++k)
                               s += m.weight[k] * heat_kernel(t, x_grid[a] - m.x[k]);
                           out[a] = s;
                       }
                   },
                   [&](const TabulatedDensity& m) {
                       // Trapezoid weights of the source nodes.
                       const std::size_t n = m.x.size();
                       std::vector<double> w(n, 0.0);
                       for (std::size_t k = 0; k + 1 < n; ++k) {
                           double h = m.x[k + 1] - m.x[k];
                           w[k] += 0.5 * h;
                           w[k + 1] += 0.5 * h;
                       }
                       for (std::size_t a = 0; a < x_grid.size(); ++a) {
                           double s = 0.0;
                           for (std::size_t k = 0; k < n; ++k)
                               s += w[k] * m.density[k] * heat_kernel(t, x_grid[a] - m.x[k]);
                           out[a] = s;
                       }
                   },
                   [&](const GaussianDensity& m) {
                       for (std::size_t a = 0; a < x_grid.size(); ++a)
                           out[a] = m.mass * heat_kernel(m.variance + t, x_grid[a] - m.mean);
                   },
               },
               mu);
    return out;
}

double trapezoid(std::span<const double> x, std::span<const double> f) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < x.size(); ++k) s += 0.5 * (x[k + 1] - x[k]) * (f[k] + f[k + 1]);
    return s;
}

}  // namespace rslv
