#pragma once

#include <span>
#include <variant>
#include <vector>

namespace rslv {

struct PointMass {
    double x = 0.0;
    double mass = 1.0;
};

/// Finite mixture sum_k w_k delta_{x_k}.
struct AtomMixture {
    std::vector<double> x;
    std::vector<double> weight;
};

/// Density tabulated on increasing nodes; integrated by the trapezoid rule and
/// taken to vanish outside the tabulated range.
struct TabulatedDensity {
    std::vector<double> x;
    std::vector<double> density;
};

/// mass * N(mean, variance) density.
struct GaussianDensity {
    double mean = 0.0;
    double variance = 1.0;
    double mass = 1.0;
};

using Measure = std::variant<PointMass, AtomMixture, TabulatedDensity, GaussianDensity>;

double total_mass(const Measure& mu);
/// True when the measure has atoms (needs mollification before a PDE solve).
bool has_atoms(const Measure& mu);
void validate(const Measure& mu);

/// h_t(x) = exp(-x^2 / 2t) / sqrt(2 pi t).
double heat_kernel(double t, double x);

/// (mu * h_t)(x) at every point of `x_grid`. Throws DomainError for t <= 0.
std::vector<double> heat_kernel_convolve(const Measure& mu, double t, std::span<const double> x_grid);

/// Trapezoid integral of samples on a (possibly non-uniform) grid.
double trapezoid(std::span<const double> x, std::span<const double> f);

}  // namespace rslv
