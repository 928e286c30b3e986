#pragma once

// McKean particle simulation of the fake Brownian motion, the regime-switching
// local-volatility SDE and the jump fake Brownian motion, with a
// Nadaraya-Watson estimate of E[f^2(Y_t) | X_t].

#include "rslv/dupire.hpp"
#include "rslv/heat_kernel.hpp"
#include "rslv/regime_model.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rslv {

enum class SimMode { fake_bm, rslv, jump_fbm };

SimMode parse_sim_mode(const std::string& s);
std::string to_string(SimMode mode);

struct SimPlan {
    std::size_t N = 100000;
    double dt = 1e-3;
    /// Bandwidth c * sigma_hat(X) * N^{-1/5}.
    double bandwidth_c = 1.06;
    /// Regression grid nodes, spanning the sample range +- 4 bandwidths.
    std::size_t grid_nodes = 400;
    std::vector<double> checkpoints;
    SimMode mode = SimMode::fake_bm;
    std::uint64_t seed = 20240607;

    /// Throws DomainError on invalid values, including dt (d-1) q_bar >= 1
    /// when regime switching is active.
    void validate(const RegimeModel& model) const;
};

struct ParticleEnsemble {
    std::vector<double> X;
    std::vector<int> Y;  // 0-based regime index
    std::vector<double> qv;
    std::uint64_t seed = 0;
    double t = 0.0;
    std::uint64_t step_index = 0;

    std::size_t size() const { return X.size(); }
};

/// (X_0, Y_0) with X_0 ~ mu (exact for point masses, atoms and Gaussians,
/// inverse CDF for tabulated densities) and Y_0 ~ alpha independently.
ParticleEnsemble initial_ensemble(const RegimeModel& model, const Measure& mu, std::size_t N, std::uint64_t seed);

/// Piecewise-linear x -> E^[f^2(Y) | X = x], flat outside its nodes.
struct ConditionalExpectation {
    std::vector<double> nodes;
    std::vector<double> values;
    double bandwidth = 0.0;

    double operator()(double x) const;
};

/// Gaussian-kernel Nadaraya-Watson estimate on the regression grid, from a
/// linear binning of the particles. Clamped to [lambda_min, lambda_max].
/// Requires N >= 100.
ConditionalExpectation cond_expect_f2(const ParticleEnsemble& ensemble, const SimPlan& plan, const RegimeModel& model);

struct StepInfo {
    /// (1/N) sum_k f^2(Y_k) / E^[f^2 | X_k].
    double gyongy_mean = 1.0;
    std::size_t switches = 0;
};

/// One Euler-Maruyama step in log-price followed by regime thinning. qv
/// accumulates the predictable quadratic variation diffusion^2 * dt.
/// `surface` is required in rslv mode and ignored otherwise.
StepInfo step(ParticleEnsemble& ensemble, const SimPlan& plan, const RegimeModel& model, double r,
              const VolSurface* surface);

struct Checkpoint {
    double t = 0.0;
    std::vector<double> X;
    std::vector<int> Y;
    std::vector<double> qv;
    std::vector<double> occupation;  // fraction of particles per regime
};

struct SimulationResult {
    std::vector<Checkpoint> checkpoints;  // includes T
    ParticleEnsemble final_state;
    double max_gyongy_deviation = 0.0;    // max over steps of |gyongy_mean - 1|
    std::size_t total_switches = 0;
    std::size_t steps = 0;
};

SimulationResult simulate(const RegimeModel& model, const SimPlan& plan, const HorizonConfig& horizon,
                          const Measure& mu, const VolSurface* surface = nullptr);

struct CallPrice {
    double strike = 0.0;
    double price = 0.0;
    double stderr_ = 0.0;
};

/// e^{-rT} E[(e^X - K)^+] with Monte Carlo standard errors.
std::vector<CallPrice> price_calls(std::span<const double> X, std::span<const double> strikes, double r, double T);

/// Caps the worker count from RSLV_LAB_THREADS when set. Returns the count in use.
int configure_threads();

void write_checkpoint_csv(const Checkpoint& checkpoint, const std::string& path);
void write_prices_csv(const std::vector<CallPrice>& prices, const std::string& path);

}  // namespace rslv
