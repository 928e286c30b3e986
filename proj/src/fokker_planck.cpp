#include "rslv/fokker_planck.hpp"

#include "rslv/banded_solver.hpp"
#include "rslv/csv.hpp"
#include "rslv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>

namespace rslv {

SpatialGrid SpatialGrid::with_nodes(double L, std::size_t m) {
    if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("grid half-width L must be positive");
    if (m < 3) throw DomainError("grid needs at least 3 nodes");
    return SpatialGrid{L, m, 2.0 * L / static_cast<double>(m - 1)};
}

SpatialGrid SpatialGrid::with_spacing(double L, double h) {
    if (!(h > 0.0)) throw DomainError("grid spacing must be positive");
    if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("grid half-width L must be positive");
    auto cells = static_cast<std::size_t>(std::llround(2.0 * L / h));
    return with_nodes(L, std::max<std::size_t>(cells, 2) + 1);
}

std::vector<double> SpatialGrid::nodes() const {
    std::vector<double> x(m);
    for (std::size_t a = 0; a < m; ++a) x[a] = this->x(a);
    return x;
}

std::vector<double> SpatialGrid::weights() const {
    std::vector<double> w(m, h);
    w.front() = w.back() = 0.5 * h;
    return w;
}

double PDSConfig::resolved_eps(const RegimeModel& model, const SpatialGrid& grid) const {
    return eps_reg > 0.0 ? eps_reg : 1e-10 * model.lambda_min() / (2.0 * grid.L);
}

void PDSConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("time step must be positive");
    if (!(sigma_mollify >= 0.0)) throw DomainError("mollification width must be non-negative");
    if (std::isnan(eps_reg)) throw DomainError("eps_reg must be a number");
}

std::vector<double> GridSolution::sum(std::size_t k) const {
    std::vector<double> u(grid.m, 0.0);
    for (std::size_t a = 0; a < grid.m; ++a)
        for (std::size_t i = 0; i < d; ++i) u[a] += p[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
    return u;
}

double GridSolution::reference_l1_max() const {
    double worst = 0.0;
    for (const auto& dg : diagnostics)
        if (!std::isnan(dg.reference_l1)) worst = std::max(worst, dg.reference_l1);
    return worst;
}

double GridSolution::min_value() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& dg : diagnostics) v = std::min(v, dg.min_value);
    return v;
}

double grid_l1(const SpatialGrid& grid, std::span<const double> f, std::span<const double> g) {
    if (f.size() != grid.m || g.size() != grid.m) throw DomainError("grid_l1: size mismatch");
    auto w = grid.weights();
    double s = 0.0;
    for (std::size_t a = 0; a < grid.m; ++a) s += w[a] * std::abs(f[a] - g[a]);
    return s;
}

Matrix mollify_initial(const Measure& mu, double sigma, const SpatialGrid& grid, std::span<const double> alpha) {
    validate(mu);
    if (!(sigma >= 0.0)) throw DomainError("mollification width must be non-negative");
    const auto x = grid.nodes();
    std::vector<double> base;
    if (sigma > 0.0) {
        base = heat_kernel_convolve(mu, sigma * sigma, x);
    } else if (has_atoms(mu)) {
        throw DomainError("initial measure has atoms; a positive mollification width is required");
    } else if (const auto* g = std::get_if<GaussianDensity>(&mu)) {
        base.resize(grid.m);
        for (std::size_t a = 0; a < grid.m; ++a) base[a] = g->mass * heat_kernel(g->variance, x[a] - g->mean);
    } else {
        const auto& tab = std::get<TabulatedDensity>(mu);
        base.assign(grid.m, 0.0);
        for (std::size_t a = 0; a < grid.m; ++a) {
            if (x[a] < tab.x.front() || x[a] > tab.x.back()) continue;
            auto it = std::upper_bound(tab.x.begin(), tab.x.end(), x[a]);
            std::size_t k = it == tab.x.end() ? tab.x.size() - 2 : static_cast<std::size_t>(it - tab.x.begin()) - 1;
            double w = (x[a] - tab.x[k]) / (tab.x[k + 1] - tab.x[k]);
            base[a] = (1.0 - w) * tab.density[k] + w * tab.density[k + 1];
        }
    }
    Matrix p0(static_cast<Eigen::Index>(alpha.size()), static_cast<Eigen::Index>(grid.m));
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (std::size_t a = 0; a < grid.m; ++a)
            p0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = alpha[i] * base[a];
    return p0;
}

namespace {

struct Physics {
    std::size_t d = 1;
    std::vector<double> lambda;  // empty: scalar equation
    double eps = 1e-12;
    const VolSurface* surface = nullptr;  // nullptr: sigma~ = 1
    bool drift = false;
    double r = 0.0;
    const IntensityTable* q = nullptr;
};

// Closed-form reference for the summed density, when one exists.
using Reference = std::function<std::vector<double>(double)>;

// mu * N(shift, sigma_m^2 + var) on the grid.
Reference gaussian_reference(const Measure& mu, double sigma_m, const SpatialGrid& grid, double shift_rate,
                             double var_rate) {
    return [&mu, sigma_m, grid, shift_rate, var_rate](double t) {
        const double var = sigma_m * sigma_m + var_rate * t;
        std::vector<double> x = grid.nodes();
        for (double& v : x) v -= shift_rate * t;
        if (var > 0.0) return heat_kernel_convolve(mu, var, x);
        SpatialGrid shifted = grid;
        Matrix p = mollify_initial(mu, 0.0, shifted, std::vector<double>{1.0});
        return std::vector<double>(p.data(), p.data() + p.size());
    };
}

SnapshotDiagnostics diagnose(const Matrix& p, const SpatialGrid& grid, const std::vector<double>& w,
                             const std::vector<double>* ref) {
    const std::size_t d = static_cast<std::size_t>(p.rows());
    SnapshotDiagnostics dg;
    dg.mass.assign(d, 0.0);
    dg.l2_norm.assign(d, 0.0);
    dg.min_value = p.minCoeff();
    const double edge = grid.L - 0.05 * grid.L;
    for (std::size_t a = 0; a < grid.m; ++a) {
        const bool outer = std::abs(grid.x(a)) >= edge;
        for (std::size_t i = 0; i < d; ++i) {
            const double v = p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
            dg.mass[i] += w[a] * v;
            dg.l2_norm[i] += w[a] * v * v;
            if (outer) dg.boundary_mass += w[a] * std::abs(v);
        }
    }
    if (ref) {
        double s = 0.0;
        for (std::size_t a = 0; a < grid.m; ++a) {
            double u = 0.0;
            for (std::size_t i = 0; i < d; ++i) u += p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
            s += w[a] * std::abs(u - (*ref)[a]);
        }
        dg.reference_l1 = s;
    }
    return dg;
}

GridSolution run(const Physics& ph, const PDSConfig& config, const SpatialGrid& grid, const HorizonConfig& horizon,
                 const Matrix& p0, const Reference& reference) {
    config.validate();
    horizon.validate();
    const std::size_t d = ph.d;
    const std::size_t m = grid.m;
    const std::size_t n = d * m;
    const double h = grid.h;

    const auto n_steps = static_cast<std::size_t>(std::max<long long>(1, std::llround(std::ceil(horizon.T / config.dt - 1e-9))));
    const double dt = horizon.T / static_cast<double>(n_steps);

    std::vector<double> out_times = config.output_times;
    if (out_times.empty()) out_times.push_back(horizon.T);
    std::vector<std::size_t> out_steps;
    for (double t : out_times) {
        if (!(t > 0.0) || t > horizon.T * (1.0 + 1e-12)) throw DomainError("output times must lie in (0, T]");
        out_steps.push_back(static_cast<std::size_t>(std::llround(t / dt)));
    }
    std::sort(out_steps.begin(), out_steps.end());
    out_steps.erase(std::unique(out_steps.begin(), out_steps.end()), out_steps.end());

    GridSolution sol;
    sol.grid = grid;
    sol.d = d;
    sol.dt = dt;
    sol.eps_reg = ph.eps;
    sol.steps = n_steps;
    const auto w = grid.weights();

    std::vector<double> p(n);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t i = 0; i < d; ++i)
            p[a * d + i] = p0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));

    auto record = [&](double t) {
        Matrix snap(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t i = 0; i < d; ++i)
                snap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = p[a * d + i];
        std::vector<double> ref;
        if (reference) {
            ref = reference(t);
            sol.reference.push_back(ref);
        }
        auto dg = diagnose(snap, grid, w, reference ? &ref : nullptr);
        if (dg.boundary_mass > 1e-4) sol.boundary_warning = true;
        sol.times.push_back(t);
        sol.p.push_back(std::move(snap));
        sol.diagnostics.push_back(std::move(dg));
    };
    record(0.0);

    const std::size_t band = 2 * d - 1;
    BandedMatrix lhs(n, band, band);
    std::vector<double> rhs(n), coeff(d * d), q(d * d), rho(d), g(d);
    auto total_mass = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t i = 0; i < d; ++i) s += w[a] * v[a * d + i];
        return s;
    };

    std::size_t next_out = 0;
    for (std::size_t step = 0; step < n_steps; ++step) {
        const double t = static_cast<double>(step) * dt;
        const double mass_before = total_mass(p);
        lhs.set_zero();

        // Mass matrix and explicit part of the right-hand side.
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t i = 0; i < d; ++i) {
                const std::size_t r = a * d + i;
                if (config.lumped_mass) {
                    lhs.add(r, r, w[a] / dt);
                    rhs[r] = w[a] / dt * p[r];
                } else {
                    const double diag = (a == 0 || a + 1 == m ? h / 3.0 : 2.0 * h / 3.0) / dt;
                    lhs.add(r, r, diag);
                    rhs[r] = diag * p[r];
                    if (a > 0) {
                        lhs.add(r, r - d, h / 6.0 / dt);
                        rhs[r] += h / 6.0 / dt * p[r - d];
                    }
                    if (a + 1 < m) {
                        lhs.add(r, r + d, h / 6.0 / dt);
                        rhs[r] += h / 6.0 / dt * p[r + d];
                    }
                }
            }
            // Regime exchange, lumped: node equation i gains sum_j q_ji p_j.
            if (ph.q) {
                ph.q->generator_into(grid.x(a), q);
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = 0; j < d; ++j) lhs.add(a * d + i, a * d + j, -w[a] * q[j * d + i]);
            }
        }

        // Element stiffness and drift load with coefficients at the midpoint.
        for (std::size_t a = 0; a + 1 < m; ++a) {
            const double xm = grid.x(a) + 0.5 * h;
            double sig = 1.0, dsig = 0.0;
            if (ph.surface) {
                sig = ph.surface->eval(t, xm);
                dsig = ph.surface->dx(t, xm);
            }
            for (std::size_t i = 0; i < d; ++i) rho[i] = 0.5 * (p[a * d + i] + p[(a + 1) * d + i]);
            if (ph.lambda.empty()) {
                coeff[0] = 0.5 * sig * sig;
                g[0] = ph.drift ? ph.r - 0.5 * sig * (sig + 2.0 * dsig) : 0.0;
            } else {
                kernels::coeff_A_eps_into(rho, ph.lambda, ph.eps, coeff);
                for (double& c : coeff) c *= sig * sig;
                if (ph.drift) {
                    const double R = kernels::ratio_R_eps(rho, ph.lambda, ph.eps);
                    for (std::size_t i = 0; i < d; ++i) g[i] = ph.r - 0.5 * R * sig * (sig + 2.0 * dsig) * ph.lambda[i];
                } else {
                    std::fill(g.begin(), g.end(), 0.0);
                }
            }
            const std::size_t l0 = a * d, l1 = (a + 1) * d;
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < d; ++j) {
                    const double k = coeff[i * d + j] / h;
                    if (k == 0.0) continue;
                    lhs.add(l0 + i, l0 + j, k);
                    lhs.add(l0 + i, l1 + j, -k);
                    lhs.add(l1 + i, l0 + j, -k);
                    lhs.add(l1 + i, l1 + j, k);
                }
                const double flux = g[i] * rho[i];
                rhs[l0 + i] -= flux;
                rhs[l1 + i] += flux;
            }
        }

        try {
            lhs.factor_and_solve(rhs);
        } catch (const NumericalError& e) {
            throw NumericalError("linear solve failed at step " + std::to_string(step + 1) + ": " + e.what());
        }
        for (double v : rhs)
            if (!std::isfinite(v)) throw NumericalError("non-finite value at step " + std::to_string(step + 1));
        p.swap(rhs);

        const double mass_after = total_mass(p);
        sol.max_step_mass_drift = std::max(sol.max_step_mass_drift,
                                           std::abs(mass_after - mass_before) / std::max(std::abs(mass_before), 1e-300));
        if (next_out < out_steps.size() && out_steps[next_out] == step + 1) {
            record(static_cast<double>(step + 1) * dt);
            ++next_out;
        }
    }
    return sol;
}

std::vector<double> lambda_vec(const RegimeModel& model) {
    return {model.lambda().begin(), model.lambda().end()};
}

}  // namespace

GridSolution solve_fbm(const RegimeModel& model, const PDSConfig& config, const SpatialGrid& grid,
                       const HorizonConfig& horizon, const Measure& mu) {
    if (model.has_jumps()) throw DomainError("solve_fbm requires a model without jump intensities");
    Physics ph;
    ph.d = model.d();
    ph.lambda = lambda_vec(model);
    ph.eps = config.resolved_eps(model, grid);
    Matrix p0 = mollify_initial(mu, config.sigma_mollify, grid, model.alpha());
    return run(ph, config, grid, horizon, p0, gaussian_reference(mu, config.sigma_mollify, grid, 0.0, 1.0));
}

GridSolution solve_jump_fbm(const RegimeModel& model, const PDSConfig& config, const SpatialGrid& grid,
                            const HorizonConfig& horizon, const Measure& mu) {
    if (!model.has_jumps()) throw DomainError("solve_jump_fbm requires jump intensities");
    Physics ph;
    ph.d = model.d();
    ph.lambda = lambda_vec(model);
    ph.eps = config.resolved_eps(model, grid);
    ph.q = &model.intensities();
    Matrix p0 = mollify_initial(mu, config.sigma_mollify, grid, model.alpha());
    return run(ph, config, grid, horizon, p0, gaussian_reference(mu, config.sigma_mollify, grid, 0.0, 1.0));
}

namespace {

// Constant surfaces admit the closed form mu * N((r - s^2/2) t, s^2 t).
Reference lv_reference(const Measure& mu, double sigma_m, const SpatialGrid& grid, const VolSurface& surface,
                       double r) {
    if (surface.kind() != VolSurface::Kind::constant) return {};
    const double s = surface.eval(0.0, 0.0);
    return gaussian_reference(mu, sigma_m, grid, r - 0.5 * s * s, s * s);
}

}  // namespace

GridSolution solve_rslv(const RegimeModel& model, const PDSConfig& config, const SpatialGrid& grid,
                        const HorizonConfig& horizon, const Measure& mu, const VolSurface& surface) {
    Physics ph;
    ph.d = model.d();
    ph.lambda = lambda_vec(model);
    ph.eps = config.resolved_eps(model, grid);
    ph.surface = &surface;
    ph.drift = true;
    ph.r = horizon.r;
    if (model.has_jumps()) ph.q = &model.intensities();
    Matrix p0 = mollify_initial(mu, config.sigma_mollify, grid, model.alpha());
    return run(ph, config, grid, horizon, p0, lv_reference(mu, config.sigma_mollify, grid, surface, horizon.r));
}

GridSolution solve_lv(const PDSConfig& config, const SpatialGrid& grid, const HorizonConfig& horizon,
                      const Measure& mu, const VolSurface& surface) {
    Physics ph;
    ph.surface = &surface;
    ph.drift = true;
    ph.r = horizon.r;
    const std::vector<double> one{1.0};
    Matrix p0 = mollify_initial(mu, config.sigma_mollify, grid, one);
    return run(ph, config, grid, horizon, p0, lv_reference(mu, config.sigma_mollify, grid, surface, horizon.r));
}

void write_snapshot_csv(const GridSolution& sol, std::size_t k, const std::string& path) {
    if (k >= sol.times.size()) throw DomainError("snapshot index out of range");
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "x";
    for (std::size_t i = 0; i < sol.d; ++i) out << ",p_" << (i + 1);
    out << ",sum,heat_ref\n";
    const auto u = sol.sum(k);
    for (std::size_t a = 0; a < sol.grid.m; ++a) {
        out << fmt17(sol.grid.x(a));
        for (std::size_t i = 0; i < sol.d; ++i)
            out << ',' << fmt17(sol.p[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)));
        out << ',' << fmt17(u[a]) << ',';
        if (sol.has_reference()) out << fmt17(sol.reference[k][a]);
        else out << "nan";
        out << '\n';
    }
}

nlohmann::json solution_metadata(const GridSolution& sol, const PDSConfig& config) {
    nlohmann::json j;
    j["grid"] = {{"L", sol.grid.L}, {"m", sol.grid.m}, {"h", sol.grid.h}};
    j["config"] = {{"dt", sol.dt},
                   {"eps_reg", sol.eps_reg},
                   {"sigma_mollify", config.sigma_mollify},
                   {"lumped_mass", config.lumped_mass},
                   {"steps", sol.steps}};
    nlohmann::json snaps = nlohmann::json::array();
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
        const auto& dg = sol.diagnostics[k];
        nlohmann::json s{{"t", sol.times[k]},
                         {"mass", dg.mass},
                         {"min_value", dg.min_value},
                         {"l2_norm_sq", dg.l2_norm},
                         {"boundary_mass", dg.boundary_mass}};
        if (!std::isnan(dg.reference_l1)) s["heat_l1"] = dg.reference_l1;
        snaps.push_back(s);
    }
    j["snapshots"] = snaps;
    j["min_value"] = sol.min_value();
    j["max_step_mass_drift"] = sol.max_step_mass_drift;
    j["boundary_warning"] = sol.boundary_warning;
    if (sol.has_reference()) j["heat_l1_max"] = sol.reference_l1_max();
    return j;
}

}  // namespace rslv
