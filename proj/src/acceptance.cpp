#include "rslv/acceptance.hpp"

#include "rslv/black_scholes.hpp"
#include "rslv/condition_c.hpp"
#include "rslv/errors.hpp"
#include "rslv/fokker_planck.hpp"
#include "rslv/particles.hpp"
#include "rslv/regime_model.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <sstream>

namespace rslv {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

class Criterion {
public:
    Criterion(int id, std::string name) {
        r_.id = id;
        r_.name = std::move(name);
    }
    /// Records `value <= threshold`.
    void at_most(const std::string& what, double value, double threshold, std::size_t n = 0) {
        r_.reports.push_back({what, value, threshold, n});
    }
    /// Records `value >= threshold` as the negated report.
    void at_least(const std::string& what, double value, double threshold, std::size_t n = 0) {
        r_.reports.push_back({"-" + what, -value, -threshold, n});
    }
    void check(const std::string& what, bool ok) { r_.reports.push_back({what, ok ? 0.0 : 1.0, 0.0, 0}); }

    CriterionResult finish(double seconds) {
        r_.seconds = seconds;
        r_.passed = !r_.reports.empty();
        std::ostringstream os;
        bool first = true;
        for (const auto& rep : r_.reports) {
            r_.passed = r_.passed && rep.passed();
            if (!first) os << "; ";
            first = false;
            const bool negated = !rep.description.empty() && rep.description[0] == '-';
            if (negated) {
                os << rep.description.substr(1) << '=' << num(-rep.statistic) << " (>= " << num(-rep.threshold) << ')';
            } else if (rep.threshold == 0.0 && (rep.statistic == 0.0 || rep.statistic == 1.0)) {
                os << rep.description << '=' << (rep.statistic == 0.0 ? "ok" : "FAILED");
            } else {
                os << rep.description << '=' << num(rep.statistic) << " (<= " << num(rep.threshold) << ')';
            }
        }
        r_.detail = os.str();
        return r_;
    }

private:
    CriterionResult r_;
};

Matrix symmetric_q(double rate) { return (Matrix(2, 2) << 0.0, rate, rate, 0.0).finished(); }

// ---------------------------------------------------------------------------

CriterionResult c01_figure() {
    Criterion c(1, "Condition (C) grid search, lambda = (1,2,3,5,10), n = 200");
    const auto t0 = Clock::now();
    const auto rep = grid_search_diag(RegimeModel::uniform({1, 2, 3, 5, 10}), 200);
    const double sec = seconds_since(t0);
    c.check("satisfied", rep.satisfied);
    c.at_least("points", static_cast<double>(rep.points.size()), 1.0);
    c.at_most("runtime_s", sec, 5.0);
    return c.finish(sec);
}

CriterionResult c02_d3() {
    Criterion c(2, "d = 3 grid search agrees with the closed-form criterion");
    const auto t0 = Clock::now();
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(std::log(0.1), std::log(10.0));
    std::size_t cases = 0, agree = 0, positives = 0;
    while (cases < 120) {
        std::vector<double> lam{std::exp(u(gen)), std::exp(u(gen)), std::exp(u(gen))};
        const auto exact = criterion_d3(lam);
        if (std::abs(exact.lhs - 0.25) <= 0.01) continue;
        ++cases;
        positives += exact.satisfied ? 1 : 0;
        const auto grid = grid_search_diag(RegimeModel::uniform(lam), 400);
        agree += grid.satisfied == exact.satisfied ? 1 : 0;
    }
    const double sec = seconds_since(t0);
    c.at_least("cases", static_cast<double>(cases), 100.0);
    c.at_most("disagreements", static_cast<double>(cases - agree), 0.0, cases);
    c.check("both_outcomes_present(sat=" + std::to_string(positives) + ")", positives > 0 && positives < cases);
    c.at_most("runtime_s", sec, 60.0);
    return c.finish(sec);
}

CriterionResult c03_identities() {
    Criterion c(3, "Matrix-field identities on 1e5 random states");
    const auto t0 = Clock::now();
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<std::vector<double>> lambdas{{1, 4}, {0.25, 4}, {1, 2, 3}, {1, 100, 10000}, {1, 2, 3, 5, 10}};
    double col_m = 0.0, col_meps = 0.0, bound_excess = -1.0, zero_dev = 0.0, agree_dev = 0.0;
    const std::size_t total = 100000;
    for (std::size_t s = 0; s < total; ++s) {
        const auto& lam = lambdas[s % lambdas.size()];
        const RegimeModel model = RegimeModel::uniform(lam);
        const std::size_t d = lam.size();
        StateVector rho(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) rho[static_cast<Eigen::Index>(i)] = u(gen) < 0.15 ? 0.0 : std::exp(8.0 * (u(gen) - 0.5));
        if (rho.sum() == 0.0) rho[0] = 1.0;
        double S = 0.0;
        for (std::size_t i = 0; i < d; ++i) S += lam[i] * rho[static_cast<Eigen::Index>(i)];

        const Matrix M = coeff_matrix_M(rho, model);
        const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
        col_m = std::max(col_m, M.colwise().sum().cwiseAbs().maxCoeff() / scale);
        const double eps = S * std::exp(4.0 * (u(gen) - 0.5));
        const Matrix Me = coeff_matrix_M_eps(rho, model, eps);
        col_meps = std::max(col_meps, Me.colwise().sum().cwiseAbs().maxCoeff() / std::max(1.0, Me.cwiseAbs().maxCoeff()));
        const Matrix A = coeff_matrix_A(rho, model);
        bound_excess = std::max(bound_excess, A.cwiseAbs().maxCoeff() - coeff_bound(model));
        const Matrix A0 = coeff_matrix_A_eps(StateVector::Zero(static_cast<Eigen::Index>(d)), model, 0.5);
        zero_dev = std::max(zero_dev, (A0 - 0.5 * Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))).cwiseAbs().maxCoeff());
        const Matrix Ae = coeff_matrix_A_eps(rho, model, std::min(eps, S));
        agree_dev = std::max(agree_dev, (Ae - A).cwiseAbs().maxCoeff() / std::max(1.0, A.cwiseAbs().maxCoeff()));
    }
    const double sec = seconds_since(t0);
    c.at_most("max_colsum_M", col_m, 1e-12, total);
    c.at_most("max_colsum_M_eps", col_meps, 1e-12, total);
    c.at_most("max(|A_ij| - bound)", bound_excess, 1e-12, total);
    c.at_most("|A_eps(0) - I/2|", zero_dev, 1e-15, total);
    c.at_most("|A_eps - A| (eps <= S)", agree_dev, 1e-12, total);
    return c.finish(sec);
}

CriterionResult c04_certificate() {
    Criterion c(4, "Coercivity certificate, lambda = (1,4), Gamma = I");
    const auto t0 = Clock::now();
    const RegimeModel model = RegimeModel::uniform({1, 4});
    const auto cert = coercivity_certificate(GammaCandidate::identity(2), model, 20000);
    const auto check = resample_certificate(cert, model, 1000000, 99);
    const double sec = seconds_since(t0);
    c.at_least("kappa_hat", cert.kappa_hat, std::numeric_limits<double>::min());
    c.at_least("min_quadratic_ratio(1e6)", check.min_ratio, std::numeric_limits<double>::min(), check.samples);
    c.at_most("runtime_s", sec, 30.0);
    return c.finish(sec);
}

GridSolution fbm_run(double h, double dt) {
    const RegimeModel model({1.0, 4.0}, {0.5, 0.5});
    PDSConfig cfg;
    cfg.dt = dt;
    for (int k = 1; k <= 10; ++k) cfg.output_times.push_back(0.1 * k);
    return solve_fbm(model, cfg, SpatialGrid::with_spacing(6.0, h), {1.0, 0.0}, GaussianDensity{0.0, 0.1, 1.0});
}

double max_state_mass_drift(const GridSolution& sol) {
    double worst = 0.0;
    for (const auto& dg : sol.diagnostics)
        for (std::size_t i = 0; i < sol.d; ++i)
            worst = std::max(worst, std::abs(dg.mass[i] - sol.diagnostics.front().mass[i]));
    return worst;
}

CriterionResult c05_fbm() {
    Criterion c(5, "FBM solver vs heat kernel");
    const auto t0 = Clock::now();
    const GridSolution sol = fbm_run(0.01, 1e-4);
    const double sec = seconds_since(t0);
    const GridSolution fine = fbm_run(0.005, 5e-5);
    c.at_most("heat_l1_max", sol.reference_l1_max(), 5e-3);
    c.at_least("min_value", sol.min_value(), -1e-8);
    c.at_most("state_mass_drift", max_state_mass_drift(sol), 1e-8);
    c.at_most("runtime_s", sec, 120.0);
    c.at_least("refinement_ratio", sol.reference_l1_max() / fine.reference_l1_max(), 2.0);
    return c.finish(seconds_since(t0));
}

CriterionResult c06_rslv() {
    Criterion c(6, "RSLV solver closure against the scalar LV solve");
    const auto t0 = Clock::now();
    const RegimeModel model({1.0, 4.0}, {0.5, 0.5}, IntensityTable::constant(symmetric_q(1.0)));
    PDSConfig cfg;
    cfg.dt = 1e-4;
    for (int k = 1; k <= 10; ++k) cfg.output_times.push_back(0.1 * k);
    const auto grid = SpatialGrid::with_spacing(6.0, 0.01);
    const auto surface = VolSurface::constant(0.2);
    const HorizonConfig horizon{1.0, 0.01};
    const Measure mu = GaussianDensity{0.0, 0.1, 1.0};
    const auto sol = solve_rslv(model, cfg, grid, horizon, mu, surface);
    const auto lv = solve_lv(cfg, grid, horizon, mu, surface);
    double l1 = 0.0, drift = 0.0;
    const double m0 = sol.diagnostics.front().mass[0] + sol.diagnostics.front().mass[1];
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
        l1 = std::max(l1, grid_l1(grid, sol.sum(k), lv.sum(k)));
        drift = std::max(drift, std::abs(sol.diagnostics[k].mass[0] + sol.diagnostics[k].mass[1] - m0));
    }
    c.at_most("lv_l1_max", l1, 5e-3);
    c.at_most("total_mass_drift", drift, 1e-8);
    return c.finish(seconds_since(t0));
}

CriterionResult c07_aronson() {
    Criterion c(7, "Aronson-type L2 decay of the LV solution");
    const auto t0 = Clock::now();
    PDSConfig cfg;
    cfg.dt = 1e-4;
    cfg.sigma_mollify = 0.02;
    for (int k = 1; k <= 20; ++k) cfg.output_times.push_back(0.05 * k);
    const auto sol = solve_lv(cfg, SpatialGrid::with_spacing(6.0, 0.01), {1.0, 0.0}, PointMass{0.0, 1.0},
                              VolSurface::constant(1.0));
    double sup = 0.0;
    for (std::size_t k = 0; k < sol.times.size(); ++k)
        if (sol.times[k] >= 0.1 - 1e-12) sup = std::max(sup, std::sqrt(sol.times[k]) * sol.diagnostics[k].l2_norm[0]);
    c.at_most("sup sqrt(t)*|u|^2", sup, 1.1 / (2.0 * std::sqrt(std::acos(-1.0))));
    return c.finish(seconds_since(t0));
}

struct FbmRuns {
    SimulationResult main;
    SimulationResult control;
    double seconds = 0.0;
};

FbmRuns& fbm_particles() {
    static std::optional<FbmRuns> runs;
    if (!runs) {
        const auto t0 = Clock::now();
        SimPlan plan;
        plan.N = 200000;
        plan.dt = 1e-3;
        plan.checkpoints = {0.5, 1.0};
        plan.mode = SimMode::fake_bm;
        FbmRuns r;
        r.main = simulate(RegimeModel({1.0, 4.0}, {0.5, 0.5}), plan, {1.0, 0.0}, PointMass{0.0, 1.0});
        r.control = simulate(RegimeModel({1.0, 1.0}, {0.5, 0.5}), plan, {1.0, 0.0}, PointMass{0.0, 1.0});
        r.seconds = seconds_since(t0);
        runs = std::move(r);
    }
    return *runs;
}

CriterionResult c08_marginals() {
    Criterion c(8, "Fake-BM particle marginals at T = 1");
    const auto t0 = Clock::now();
    const auto& runs = fbm_particles();
    for (const auto* res : {&runs.main, &runs.control}) {
        const std::string tag = res == &runs.main ? "" : "control_";
        const auto& X = res->final_state.X;
        const Moments m = moments(X);
        c.at_most(tag + "KS", ks_statistic(X, normal_cdf), 0.01, X.size());
        c.at_most(tag + "|var-1|", std::abs(m.variance - 1.0), 0.02, X.size());
        c.at_most(tag + "|m4-3|", std::abs(m.m4 - 3.0), 0.15, X.size());
    }
    c.at_most("runtime_s", runs.seconds, 300.0);
    return c.finish(seconds_since(t0));
}

CriterionResult c09_qv() {
    Criterion c(9, "Fake-BM quadratic-variation signature");
    const auto t0 = Clock::now();
    const auto& runs = fbm_particles();
    c.at_least("qv_std", std::sqrt(moments(runs.main.final_state.qv).variance), 0.1);
    c.at_most("control_qv_std", std::sqrt(moments(runs.control.final_state.qv).variance), 0.01);
    return c.finish(seconds_since(t0));
}

CriterionResult c10_cross() {
    Criterion c(10, "Particle vs PDE per-regime densities");
    const auto t0 = Clock::now();
    const auto& runs = fbm_particles();
    PDSConfig cfg;
    cfg.dt = 1e-4;
    cfg.sigma_mollify = 0.02;
    cfg.output_times = {0.5, 1.0};
    const RegimeModel model({1.0, 4.0}, {0.5, 0.5});
    const auto sol = solve_fbm(model, cfg, SpatialGrid::with_spacing(6.0, 0.01), {1.0, 0.0}, PointMass{0.0, 1.0});
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& cp = runs.main.checkpoints[k];
        const std::size_t snap = k + 1;
        for (std::size_t i = 0; i < 2; ++i) {
            std::vector<double> xs;
            for (std::size_t p = 0; p < cp.X.size(); ++p)
                if (static_cast<std::size_t>(cp.Y[p]) == i) xs.push_back(cp.X[p]);
            const auto& g = sol.grid;
            auto density = [&](double x) {
                if (x <= -g.L || x >= g.L) return 0.0;
                const double pos = (x + g.L) / g.h;
                const auto a = std::min(static_cast<std::size_t>(pos), g.m - 2);
                const double w = pos - static_cast<double>(a);
                const auto& P = sol.p[snap];
                return (1.0 - w) * P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) +
                       w * P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a + 1));
            };
            const double l1 = l1_hist_distance(xs, density, default_range(xs), cp.X.size());
            c.at_most("L1(t=" + num(cp.t) + ",regime " + std::to_string(i + 1) + ")", l1, 0.05, cp.X.size());
        }
    }
    return c.finish(seconds_since(t0));
}

CriterionResult c11_calibration() {
    Criterion c(11, "RSLV calibration to Black-Scholes calls");
    const auto t0 = Clock::now();
    const RegimeModel model({0.25, 4.0}, {0.5, 0.5}, IntensityTable::constant(symmetric_q(1.0)));
    SimPlan plan;
    plan.N = 200000;
    plan.dt = 1e-3;
    plan.mode = SimMode::rslv;
    const auto surface = VolSurface::constant(0.2);
    const auto res = simulate(model, plan, {1.0, 0.0}, PointMass{0.0, 1.0}, &surface);
    const std::vector<double> strikes{0.8, 1.0, 1.2};
    for (const auto& p : price_calls(res.final_state.X, strikes, 0.0, 1.0)) {
        const double bs = bs_call(1.0, p.strike, 1.0, 0.2, 0.0);
        c.at_most("|C-BS|/SE(K=" + num(p.strike) + ")", std::abs(p.price - bs) / p.stderr_, 3.0, plan.N);
    }
    return c.finish(seconds_since(t0));
}

CriterionResult c12_jump() {
    Criterion c(12, "Jump fake BM marginals and regime occupation");
    const auto t0 = Clock::now();
    const RegimeModel model({1.0, 4.0}, {0.5, 0.5}, IntensityTable::constant(symmetric_q(1.0)));
    SimPlan plan;
    plan.N = 200000;
    plan.dt = 1e-3;
    plan.mode = SimMode::jump_fbm;
    plan.checkpoints = {0.25, 0.5, 0.75, 1.0};
    const auto res = simulate(model, plan, {1.0, 0.0}, PointMass{0.0, 1.0});
    const auto& X = res.final_state.X;
    c.at_most("KS", ks_statistic(X, normal_cdf), 0.01, X.size());
    double worst = 0.0;
    for (const auto& cp : res.checkpoints) worst = std::max(worst, std::abs(cp.occupation[0] - 0.5));
    c.at_most("max|occupation-1/2|", worst, 4.0 / std::sqrt(static_cast<double>(plan.N)), plan.N);
    c.at_least("switches", static_cast<double>(res.total_switches), 1.0);
    return c.finish(seconds_since(t0));
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
    const std::map<int, std::function<CriterionResult()>> all{
        {1, c01_figure},  {2, c02_d3},    {3, c03_identities}, {4, c04_certificate},
        {5, c05_fbm},     {6, c06_rslv},  {7, c07_aronson},    {8, c08_marginals},
        {9, c09_qv},      {10, c10_cross}, {11, c11_calibration}, {12, c12_jump},
    };
    std::vector<CriterionResult> out;
    for (const auto& [id, fn] : all) {
        if (!options.only.empty() && !options.only.count(id)) continue;
        CriterionResult r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r.id = id;
            r.name = "criterion " + std::to_string(id);
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        if (options.on_result) options.on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_result_line(const CriterionResult& r) {
    char head[32];
    std::snprintf(head, sizeof head, "[%s] C%02d ", r.passed ? "PASS" : "FAIL", r.id);
    char tail[32];
    std::snprintf(tail, sizeof tail, " (%.1f s)", r.seconds);
    return head + r.name + ": " + r.detail + tail;
}

}  // namespace rslv
