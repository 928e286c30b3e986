#pragma once

// P1 Galerkin solvers on [-L, L] with zero-flux boundaries for the sub-density
// systems (fake Brownian motion, regime-switching local volatility, jump fake
// Brownian motion) and for the scalar local-volatility equation.
//
// Unknowns are ordered node-major, p[a * d + i] = p_i(x_a). Each time step
// freezes the nonlinear coefficients at p^n and solves
//   (W / dt + K(p^n) - Q) p^{n+1} = (W / dt) p^n + F(p^n)
// with K the diffusion stiffness, Q the (lumped) regime exchange and F the
// explicit drift load.

#include "rslv/dupire.hpp"
#include "rslv/heat_kernel.hpp"
#include "rslv/regime_model.hpp"

#include <json.hpp>

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace rslv {

struct SpatialGrid {
    double L = 6.0;
    std::size_t m = 1201;
    double h = 0.01;

    /// m nodes on [-L, L]. Throws DomainError unless L > 0 and m >= 3.
    static SpatialGrid with_nodes(double L, std::size_t m);
    /// Spacing closest to h that divides [-L, L] evenly.
    static SpatialGrid with_spacing(double L, double h);

    double x(std::size_t a) const { return -L + h * static_cast<double>(a); }
    std::vector<double> nodes() const;
    /// Lumped (trapezoid) mass weights.
    std::vector<double> weights() const;
};

struct PDSConfig {
    /// Regularization of A_eps / R_eps; <= 0 selects 1e-10 * lambda_min / (2L).
    double eps_reg = 0.0;
    double dt = 1e-4;
    /// Width of the initial heat-kernel mollification (variance sigma^2).
    double sigma_mollify = 0.0;
    /// Snapshot times in (0, T]; empty means {T}. t = 0 is always recorded.
    std::vector<double> output_times;
    bool lumped_mass = true;

    double resolved_eps(const RegimeModel& model, const SpatialGrid& grid) const;
    void validate() const;
};

struct SnapshotDiagnostics {
    std::vector<double> mass;     // per state
    double min_value = 0.0;
    std::vector<double> l2_norm;  // per state, squared L2 norms
    double boundary_mass = 0.0;   // mass within the outer 2.5% of each end
    double reference_l1 = std::numeric_limits<double>::quiet_NaN();
};

struct GridSolution {
    SpatialGrid grid;
    std::size_t d = 0;
    std::vector<double> times;
    std::vector<Matrix> p;                       // d x m per time
    std::vector<std::vector<double>> reference;  // closed-form sum reference per time, or empty
    std::vector<SnapshotDiagnostics> diagnostics;
    bool boundary_warning = false;
    double max_step_mass_drift = 0.0;  // relative, over all steps
    std::size_t steps = 0;
    double dt = 0.0;
    double eps_reg = 0.0;

    std::vector<double> sum(std::size_t k) const;
    bool has_reference() const { return !reference.empty(); }
    double reference_l1_max() const;
    double min_value() const;
};

/// p0_i = alpha_i * (mu * h_{sigma^2}) sampled on the grid. sigma = 0 is only
/// allowed for absolutely continuous measures (sampled directly).
Matrix mollify_initial(const Measure& mu, double sigma, const SpatialGrid& grid, std::span<const double> alpha);

/// Fake Brownian motion: d_t p_i = 1/2 d_xx(lambda_i R(p) p_i). Requires a
/// model without jumps.
GridSolution solve_fbm(const RegimeModel& model, const PDSConfig& config, const SpatialGrid& grid,
                       const HorizonConfig& horizon, const Measure& mu);

/// Regime-switching local volatility with surface sigma~ and rate r.
GridSolution solve_rslv(const RegimeModel& model, const PDSConfig& config, const SpatialGrid& grid,
                        const HorizonConfig& horizon, const Measure& mu, const VolSurface& surface);

/// Scalar local volatility: d_t u = -d_x((r - sigma^2/2) u) + 1/2 d_xx(sigma^2 u).
GridSolution solve_lv(const PDSConfig& config, const SpatialGrid& grid, const HorizonConfig& horizon,
                      const Measure& mu, const VolSurface& surface);

/// Jump fake Brownian motion: the FBM system plus regime exchange Q^T p.
/// Requires a model with intensities.
GridSolution solve_jump_fbm(const RegimeModel& model, const PDSConfig& config, const SpatialGrid& grid,
                            const HorizonConfig& horizon, const Measure& mu);

/// L1 distance sum_a w_a |f_a - g_a| with lumped weights.
double grid_l1(const SpatialGrid& grid, std::span<const double> f, std::span<const double> g);

/// Snapshot k as CSV with columns x, p_1..p_d, sum, heat_ref.
void write_snapshot_csv(const GridSolution& solution, std::size_t k, const std::string& path);
nlohmann::json solution_metadata(const GridSolution& solution, const PDSConfig& config);

}  // namespace rslv
