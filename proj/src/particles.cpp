#include "rslv/particles.hpp"

#include "rslv/csv.hpp"
#include "rslv/errors.hpp"
#include "rslv/philox.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rslv {

namespace {

constexpr std::uint32_t kPurposeDiffusion = 0;
constexpr std::uint32_t kPurposeSwitch = 1;
constexpr std::uint32_t kPurposeInitial = 2;

// Fixed-size chunks keep floating-point reductions independent of the thread count.
constexpr std::size_t kChunk = 8192;

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

bool switching_active(SimMode mode, const RegimeModel& model) {
    return model.has_jumps() && (mode == SimMode::jump_fbm || mode == SimMode::rslv);
}

}  // namespace

SimMode parse_sim_mode(const std::string& s) {
    if (s == "fake_bm") return SimMode::fake_bm;
    if (s == "rslv") return SimMode::rslv;
    if (s == "jump_fbm") return SimMode::jump_fbm;
    throw ConfigError("unknown simulation mode '" + s + "'");
}

std::string to_string(SimMode mode) {
    switch (mode) {
        case SimMode::fake_bm: return "fake_bm";
        case SimMode::rslv: return "rslv";
        case SimMode::jump_fbm: return "jump_fbm";
    }
    return "fake_bm";
}

void SimPlan::validate(const RegimeModel& model) const {
    if (N < 100) throw DomainError("particle count must be at least 100");
    if (N > std::numeric_limits<std::uint32_t>::max()) throw DomainError("particle count exceeds 2^32 - 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("time step must be positive");
    if (!(bandwidth_c > 0.0)) throw DomainError("bandwidth constant must be positive");
    if (grid_nodes < 2) throw DomainError("regression grid needs at least 2 nodes");
    if (mode == SimMode::jump_fbm && !model.has_jumps()) throw DomainError("jump_fbm mode requires jump intensities");
    if (switching_active(mode, model)) {
        const double load = dt * static_cast<double>(model.d() - 1) * model.q_bar();
        if (!(load < 1.0)) {
            throw DomainError("dt * (d-1) * q_bar = " + std::to_string(load) +
                              " must be < 1 for single-switch thinning");
        }
    }
}

ParticleEnsemble initial_ensemble(const RegimeModel& model, const Measure& mu, std::size_t N, std::uint64_t seed) {
    validate(mu);
    ParticleEnsemble e;
    e.X.resize(N);
    e.Y.resize(N);
    e.qv.assign(N, 0.0);
    e.seed = seed;

    // Inverse-CDF table for tabulated densities (piecewise-linear CDF).
    std::vector<double> cdf;
    const auto* tab = std::get_if<TabulatedDensity>(&mu);
    if (tab) {
        cdf.assign(tab->x.size(), 0.0);
        for (std::size_t k = 1; k < tab->x.size(); ++k)
            cdf[k] = cdf[k - 1] + 0.5 * (tab->x[k] - tab->x[k - 1]) * (tab->density[k] + tab->density[k - 1]);
        if (!(cdf.back() > 0.0)) throw DomainError("tabulated density has zero mass");
    }
    std::vector<double> atom_cdf;
    if (const auto* mix = std::get_if<AtomMixture>(&mu)) {
        atom_cdf.resize(mix->weight.size());
        std::partial_sum(mix->weight.begin(), mix->weight.end(), atom_cdf.begin());
        if (!(atom_cdf.back() > 0.0)) throw DomainError("atom mixture has zero mass");
    }
    std::vector<double> alpha_cdf(model.d());
    std::partial_sum(model.alpha().begin(), model.alpha().end(), alpha_cdf.begin());

#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < N; ++k) {
        ParticleRng rng(seed, static_cast<std::uint32_t>(k));
        const auto u = ParticleRng::uniforms(rng.block(0, kPurposeInitial));
        const auto blk = rng.block(1, kPurposeInitial);
        const double uy = u[0] * alpha_cdf.back();
        e.Y[k] = static_cast<int>(std::min<std::size_t>(
            static_cast<std::size_t>(std::upper_bound(alpha_cdf.begin(), alpha_cdf.end(), uy) - alpha_cdf.begin()),
            model.d() - 1));
        double x = 0.0;
        if (const auto* pm = std::get_if<PointMass>(&mu)) {
            x = pm->x;
        } else if (const auto* g = std::get_if<GaussianDensity>(&mu)) {
            x = g->mean + std::sqrt(g->variance) * ParticleRng::normal(blk);
        } else if (const auto* mix = std::get_if<AtomMixture>(&mu)) {
            const double v = u[1] * atom_cdf.back();
            auto idx = static_cast<std::size_t>(std::upper_bound(atom_cdf.begin(), atom_cdf.end(), v) - atom_cdf.begin());
            x = mix->x[std::min(idx, mix->x.size() - 1)];
        } else {
            const double v = u[1] * cdf.back();
            auto it = std::upper_bound(cdf.begin(), cdf.end(), v);
            std::size_t j = std::clamp<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), 1, cdf.size() - 1);
            const double c0 = cdf[j - 1], c1 = cdf[j];
            const double w = c1 > c0 ? (v - c0) / (c1 - c0) : 0.5;
            x = tab->x[j - 1] + w * (tab->x[j] - tab->x[j - 1]);
        }
        e.X[k] = x;
    }
    return e;
}

double ConditionalExpectation::operator()(double x) const {
    if (x <= nodes.front()) return values.front();
    if (x >= nodes.back()) return values.back();
    const double spacing = (nodes.back() - nodes.front()) / static_cast<double>(nodes.size() - 1);
    const double pos = (x - nodes.front()) / spacing;
    const auto b = std::min(static_cast<std::size_t>(pos), nodes.size() - 2);
    const double w = pos - static_cast<double>(b);
    return (1.0 - w) * values[b] + w * values[b + 1];
}

ConditionalExpectation cond_expect_f2(const ParticleEnsemble& e, const SimPlan& plan, const RegimeModel& model) {
    const std::size_t N = e.size();
    if (N < 100) throw DomainError("conditional expectation needs at least 100 particles");
    const auto lambda = model.lambda();
    const std::size_t nc = chunk_count(N);

    // Per-chunk sums of x, x^2, f^2 and the extrema.
    std::vector<double> cs(nc), cs2(nc), cf(nc), cmin(nc), cmax(nc);
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < nc; ++c) {
        const std::size_t k0 = c * kChunk, k1 = std::min(N, k0 + kChunk);
        double s = 0.0, s2 = 0.0, f = 0.0, lo = e.X[k0], hi = e.X[k0];
        for (std::size_t k = k0; k < k1; ++k) {
            s += e.X[k];
            f += lambda[static_cast<std::size_t>(e.Y[k])];
            lo = std::min(lo, e.X[k]);
            hi = std::max(hi, e.X[k]);
        }
        const double mean_c = s / static_cast<double>(k1 - k0);
        for (std::size_t k = k0; k < k1; ++k) s2 += (e.X[k] - mean_c) * (e.X[k] - mean_c);
        cs[c] = s;
        cs2[c] = s2;
        cf[c] = f;
        cmin[c] = lo;
        cmax[c] = hi;
    }
    double sum = 0.0, fsum = 0.0, lo = cmin[0], hi = cmax[0];
    for (std::size_t c = 0; c < nc; ++c) {
        sum += cs[c];
        fsum += cf[c];
        lo = std::min(lo, cmin[c]);
        hi = std::max(hi, cmax[c]);
    }
    const double n = static_cast<double>(N);
    const double mean = sum / n;
    // Pooled variance from chunk-centred sums.
    double ss = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        const double nk = static_cast<double>(std::min(N, (c + 1) * kChunk) - c * kChunk);
        const double mc = cs[c] / nk;
        ss += cs2[c] + nk * (mc - mean) * (mc - mean);
    }
    const double sd = std::sqrt(ss / n);
    const double global = std::clamp(fsum / n, model.lambda_min(), model.lambda_max());

    ConditionalExpectation ce;
    if (!(sd > 1e-12)) {
        ce.nodes = {mean - 1.0, mean + 1.0};
        ce.values = {global, global};
        return ce;
    }
    const double delta = plan.bandwidth_c * sd * std::pow(n, -0.2);
    const std::size_t G = plan.grid_nodes;
    const double g_lo = lo - 4.0 * delta, g_hi = hi + 4.0 * delta;
    const double spacing = (g_hi - g_lo) / static_cast<double>(G - 1);
    ce.bandwidth = delta;

    // Linear binning of numerator (f^2) and denominator (1) weights.
    std::vector<double> num(G, 0.0), den(G, 0.0);
    std::vector<double> cnum(nc * G, 0.0), cden(nc * G, 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < nc; ++c) {
        double* pn = &cnum[c * G];
        double* pd = &cden[c * G];
        const std::size_t k0 = c * kChunk, k1 = std::min(N, k0 + kChunk);
        for (std::size_t k = k0; k < k1; ++k) {
            const double pos = (e.X[k] - g_lo) / spacing;
            const auto b = std::min(static_cast<std::size_t>(pos), G - 2);
            const double w = pos - static_cast<double>(b);
            const double f = lambda[static_cast<std::size_t>(e.Y[k])];
            pn[b] += (1.0 - w) * f;
            pn[b + 1] += w * f;
            pd[b] += 1.0 - w;
            pd[b + 1] += w;
        }
    }
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t g = 0; g < G; ++g) {
            num[g] += cnum[c * G + g];
            den[g] += cden[c * G + g];
        }

    std::vector<double> kw(G);
    for (std::size_t s = 0; s < G; ++s) {
        const double z = static_cast<double>(s) * spacing / delta;
        kw[s] = std::exp(-0.5 * z * z);
    }
    ce.nodes.resize(G);
    ce.values.resize(G);
#pragma omp parallel for schedule(static)
    for (std::size_t g = 0; g < G; ++g) {
        double a = 0.0, b = 0.0;
        for (std::size_t j = 0; j < G; ++j) {
            const double k = kw[g > j ? g - j : j - g];
            a += k * num[j];
            b += k * den[j];
        }
        ce.nodes[g] = g_lo + spacing * static_cast<double>(g);
        ce.values[g] = b < 1e-300 ? global : std::clamp(a / b, model.lambda_min(), model.lambda_max());
    }
    return ce;
}

StepInfo step(ParticleEnsemble& e, const SimPlan& plan, const RegimeModel& model, double r,
              const VolSurface* surface) {
    if (plan.mode == SimMode::rslv && surface == nullptr) throw DomainError("rslv mode requires a volatility surface");
    const ConditionalExpectation ce = cond_expect_f2(e, plan, model);
    const std::size_t N = e.size();
    const std::size_t nc = chunk_count(N);
    const auto lambda = model.lambda();
    const std::size_t d = model.d();
    const bool switching = switching_active(plan.mode, model);
    const IntensityTable* q = switching ? &model.intensities() : nullptr;
    const double dt = plan.dt, sqdt = std::sqrt(dt), t = e.t;
    const std::uint64_t step_id = e.step_index;

    std::vector<double> ratio_sum(nc, 0.0);
    std::vector<std::size_t> switch_count(nc, 0);
    std::vector<char> bad(nc, 0);
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < nc; ++c) {
        const std::size_t k0 = c * kChunk, k1 = std::min(N, k0 + kChunk);
        for (std::size_t k = k0; k < k1; ++k) {
            ParticleRng rng(e.seed, static_cast<std::uint32_t>(k));
            const auto y = static_cast<std::size_t>(e.Y[k]);
            const double x_old = e.X[k];
            const double ratio = lambda[y] / ce(x_old);
            ratio_sum[c] += ratio;
            double diff = std::sqrt(ratio), drift = 0.0;
            if (plan.mode == SimMode::rslv) {
                const double sig = surface->eval(t, x_old);
                diff *= sig;
                drift = r - 0.5 * sig * sig * ratio;
            }
            const double dw = sqdt * ParticleRng::normal(rng.block(step_id, kPurposeDiffusion));
            e.X[k] = x_old + drift * dt + diff * dw;
            e.qv[k] += diff * diff * dt;
            if (!std::isfinite(e.X[k])) bad[c] = 1;
            if (q) {
                const double u = ParticleRng::uniforms(rng.block(step_id, kPurposeSwitch))[0];
                double cum = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    if (j == y) continue;
                    cum += q->rate(y, j, x_old) * dt;
                    if (u < cum) {
                        e.Y[k] = static_cast<int>(j);
                        ++switch_count[c];
                        break;
                    }
                }
            }
        }
    }
    if (std::any_of(bad.begin(), bad.end(), [](char b) { return b != 0; })) {
        throw NumericalError("non-finite particle position at step " + std::to_string(step_id + 1));
    }
    StepInfo info;
    double s = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        s += ratio_sum[c];
        info.switches += switch_count[c];
    }
    info.gyongy_mean = s / static_cast<double>(N);
    e.t += dt;
    ++e.step_index;
    return info;
}

namespace {

Checkpoint make_checkpoint(const ParticleEnsemble& e, std::size_t d) {
    Checkpoint cp;
    cp.t = e.t;
    cp.X = e.X;
    cp.Y = e.Y;
    cp.qv = e.qv;
    cp.occupation.assign(d, 0.0);
    for (int y : e.Y) cp.occupation[static_cast<std::size_t>(y)] += 1.0;
    for (double& v : cp.occupation) v /= static_cast<double>(e.size());
    return cp;
}

}  // namespace

SimulationResult simulate(const RegimeModel& model, const SimPlan& plan_in, const HorizonConfig& horizon,
                          const Measure& mu, const VolSurface* surface) {
    horizon.validate();
    SimPlan plan = plan_in;
    const auto n_steps =
        static_cast<std::size_t>(std::max<long long>(1, std::llround(std::ceil(horizon.T / plan.dt - 1e-9))));
    plan.dt = horizon.T / static_cast<double>(n_steps);
    plan.validate(model);
    if (plan.mode == SimMode::rslv && surface == nullptr) throw DomainError("rslv mode requires a volatility surface");

    std::vector<std::size_t> cps;
    for (double t : plan.checkpoints) {
        if (!(t > 0.0) || t > horizon.T * (1.0 + 1e-12)) throw DomainError("checkpoints must lie in (0, T]");
        cps.push_back(static_cast<std::size_t>(std::llround(t / plan.dt)));
    }
    cps.push_back(n_steps);
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());

    SimulationResult res;
    res.steps = n_steps;
    ParticleEnsemble e = initial_ensemble(model, mu, plan.N, plan.seed);
    std::size_t next = 0;
    for (std::size_t s = 0; s < n_steps; ++s) {
        const StepInfo info = step(e, plan, model, horizon.r, surface);
        res.max_gyongy_deviation = std::max(res.max_gyongy_deviation, std::abs(info.gyongy_mean - 1.0));
        res.total_switches += info.switches;
        if (next < cps.size() && cps[next] == s + 1) {
            res.checkpoints.push_back(make_checkpoint(e, model.d()));
            ++next;
        }
    }
    res.final_state = std::move(e);
    return res;
}

std::vector<CallPrice> price_calls(std::span<const double> X, std::span<const double> strikes, double r, double T) {
    if (X.empty()) throw DomainError("price_calls needs particles");
    const double disc = std::exp(-r * T);
    const double n = static_cast<double>(X.size());
    std::vector<CallPrice> out;
    for (double K : strikes) {
        if (!(K >= 0.0)) throw DomainError("strikes must be non-negative");
        double s = 0.0, s2 = 0.0;
        for (double x : X) {
            const double pay = disc * std::max(std::exp(x) - K, 0.0);
            s += pay;
            s2 += pay * pay;
        }
        const double mean = s / n;
        const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
        out.push_back({K, mean, X.size() > 1 ? std::sqrt(var / n) : 0.0});
    }
    return out;
}

int configure_threads() {
#ifdef _OPENMP
    if (const char* env = std::getenv("RSLV_LAB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) omp_set_num_threads(std::min<int>(static_cast<int>(v), omp_get_max_threads()));
    }
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void write_checkpoint_csv(const Checkpoint& cp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "particle_id,X,Y,qv\n";
    for (std::size_t k = 0; k < cp.X.size(); ++k)
        out << k << ',' << fmt17(cp.X[k]) << ',' << (cp.Y[k] + 1) << ',' << fmt17(cp.qv[k]) << '\n';
}

void write_prices_csv(const std::vector<CallPrice>& prices, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "K,price,stderr\n";
    for (const auto& p : prices) out << fmt17(p.strike) << ',' << fmt17(p.price) << ',' << fmt17(p.stderr_) << '\n';
}

}  // namespace rslv
