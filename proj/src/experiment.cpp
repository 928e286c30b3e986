#include "rslv/experiment.hpp"

#include "rslv/errors.hpp"
#include "rslv/model_io.hpp"
#include "rslv/stats.hpp"

#include <cmath>

namespace rslv {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

fs::path existing_file(const fs::path& base, const std::string& p) {
    fs::path path = resolve(base, p);
    if (!fs::is_regular_file(path)) throw ConfigError("referenced file '" + path.string() + "' does not exist");
    return path;
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in '" + where + "'");
    }
}

VolSurface load_surface(const nlohmann::json& j, const fs::path& base, double r) {
    if (j.contains("file")) return surface_from_json(read_json_file(existing_file(base, j.at("file")).string()));
    if (j.contains("calls_csv")) {
        DupireOptions opt;
        opt.spot = j.value("spot", 1.0);
        opt.bounds = {j.value("sigma_low", 0.01), j.value("sigma_high", 2.0)};
        const CallGrid grid = read_call_grid_csv(existing_file(base, j.at("calls_csv")).string());
        try {
            return dupire_from_calls(grid, r, opt);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("call grid: ") + e.what());
        }
    }
    return surface_from_json(j);
}

}  // namespace

ExperimentConfig parse_experiment(const nlohmann::json& j, const fs::path& base_dir) {
    ExperimentConfig c;
    try {
        check_keys(j,
                   {"model", "horizon", "initial", "grid", "pds", "sim", "surface", "strikes", "output_dir", "seed",
                    "description"},
                   "config");
        if (j.contains("model")) c.model = model_from_json(j.at("model"));
        if (j.contains("horizon")) {
            const auto& h = j.at("horizon");
            check_keys(h, {"T", "r"}, "horizon");
            c.horizon = {h.value("T", 1.0), h.value("r", 0.0)};
        }
        c.horizon.validate();
        if (j.contains("initial")) c.initial = measure_from_json(j.at("initial"));
        validate(c.initial);

        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            check_keys(g, {"L", "h", "m"}, "grid");
            const double L = g.value("L", 6.0);
            c.grid = g.contains("m") ? SpatialGrid::with_nodes(L, g.at("m").get<std::size_t>())
                                     : SpatialGrid::with_spacing(L, g.value("h", 0.01));
        } else {
            c.grid = SpatialGrid::with_spacing(6.0, 0.01);
        }
        if (j.contains("pds")) {
            const auto& p = j.at("pds");
            check_keys(p, {"dt", "sigma_mollify", "eps_reg", "output_times", "lumped_mass"}, "pds");
            c.pds.dt = p.value("dt", c.pds.dt);
            c.pds.sigma_mollify = p.value("sigma_mollify", 0.0);
            c.pds.eps_reg = p.value("eps_reg", 0.0);
            c.pds.output_times = p.value("output_times", std::vector<double>{});
            c.pds.lumped_mass = p.value("lumped_mass", true);
        }
        c.pds.validate();

        c.seed = j.value("seed", c.seed);
        c.sim.seed = c.seed;
        if (j.contains("sim")) {
            const auto& s = j.at("sim");
            check_keys(s, {"N", "dt", "bandwidth_c", "grid_nodes", "checkpoints"}, "sim");
            c.sim.N = s.value("N", c.sim.N);
            c.sim.dt = s.value("dt", c.sim.dt);
            c.sim.bandwidth_c = s.value("bandwidth_c", c.sim.bandwidth_c);
            c.sim.grid_nodes = s.value("grid_nodes", c.sim.grid_nodes);
            c.sim.checkpoints = s.value("checkpoints", std::vector<double>{});
        }
        if (j.contains("surface")) c.surface = load_surface(j.at("surface"), base_dir, c.horizon.r);
        c.strikes = j.value("strikes", std::vector<double>{});
        for (double k : c.strikes)
            if (!(k >= 0.0)) throw ConfigError("strikes must be non-negative");
        c.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    return c;
}

ExperimentConfig load_experiment(const std::string& path) {
    const fs::path p(path);
    if (!fs::is_regular_file(p)) throw ConfigError("config file '" + path + "' does not exist");
    return parse_experiment(read_json_file(path), p.parent_path().empty() ? fs::path(".") : p.parent_path());
}

namespace {

const RegimeModel& need_model(const ExperimentConfig& c) {
    if (!c.model) throw ConfigError("config needs a 'model'");
    return *c.model;
}

const VolSurface& need_surface(const ExperimentConfig& c) {
    if (!c.surface) throw ConfigError("config needs a 'surface'");
    return *c.surface;
}

void prepare_output(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::string indexed(const char* stem, std::size_t k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu.csv", stem, k);
    return buf;
}

}  // namespace

nlohmann::json run_solve(SolveKind kind, const ExperimentConfig& c) {
    GridSolution sol;
    std::optional<GridSolution> lv;
    switch (kind) {
        case SolveKind::fbm:
            sol = solve_fbm(need_model(c), c.pds, c.grid, c.horizon, c.initial);
            break;
        case SolveKind::jump:
            sol = solve_jump_fbm(need_model(c), c.pds, c.grid, c.horizon, c.initial);
            break;
        case SolveKind::rslv:
            sol = solve_rslv(need_model(c), c.pds, c.grid, c.horizon, c.initial, need_surface(c));
            lv = solve_lv(c.pds, c.grid, c.horizon, c.initial, need_surface(c));
            break;
        case SolveKind::lv:
            sol = solve_lv(c.pds, c.grid, c.horizon, c.initial, need_surface(c));
            break;
    }
    prepare_output(c.output_dir);
    nlohmann::json diag = solution_metadata(sol, c.pds);
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
        const std::string name = indexed("snapshot", k);
        write_snapshot_csv(sol, k, (c.output_dir / name).string());
        files.push_back({{"t", sol.times[k]}, {"file", name}});
    }
    diag["files"] = files;
    if (lv) {
        double worst = 0.0;
        for (std::size_t k = 0; k < sol.times.size(); ++k) {
            const double l1 = grid_l1(sol.grid, sol.sum(k), lv->sum(k));
            diag["snapshots"][k]["lv_l1"] = l1;
            worst = std::max(worst, l1);
        }
        diag["lv_l1_max"] = worst;
    }
    if (c.model) {
        diag["model"] = model_to_json(*c.model);
        diag["lambda_ratio"] = c.model->lambda_max() / c.model->lambda_min();
    }
    diag["horizon"] = {{"T", c.horizon.T}, {"r", c.horizon.r}};
    write_json_file((c.output_dir / "diagnostics.json").string(), diag);
    return diag;
}

nlohmann::json run_simulate(SimMode mode, const ExperimentConfig& c) {
    const RegimeModel& model = need_model(c);
    SimPlan plan = c.sim;
    plan.mode = mode;
    const VolSurface* surface = mode == SimMode::rslv ? &need_surface(c) : nullptr;
    const int threads = configure_threads();
    const SimulationResult res = simulate(model, plan, c.horizon, c.initial, surface);

    prepare_output(c.output_dir);
    nlohmann::json diag;
    diag["mode"] = to_string(mode);
    diag["N"] = plan.N;
    diag["dt"] = c.horizon.T / static_cast<double>(res.steps);
    diag["steps"] = res.steps;
    diag["seed"] = plan.seed;
    diag["threads"] = threads;
    diag["max_gyongy_deviation"] = res.max_gyongy_deviation;
    diag["total_switches"] = res.total_switches;
    diag["lambda_ratio"] = model.lambda_max() / model.lambda_min();
    diag["model"] = model_to_json(model);

    // Marginal reference N(m0, v0 + t) for the driftless modes with a Gaussian start.
    std::optional<std::pair<double, double>> start;
    if (const auto* pm = std::get_if<PointMass>(&c.initial)) start = {pm->x, 0.0};
    if (const auto* g = std::get_if<GaussianDensity>(&c.initial)) start = {g->mean, g->variance};

    nlohmann::json cps = nlohmann::json::array();
    for (std::size_t k = 0; k < res.checkpoints.size(); ++k) {
        const auto& cp = res.checkpoints[k];
        const std::string name = indexed("checkpoint", k);
        write_checkpoint_csv(cp, (c.output_dir / name).string());
        const Moments mx = moments(cp.X);
        const Moments mq = moments(cp.qv);
        nlohmann::json e{{"t", cp.t},
                         {"file", name},
                         {"occupation", cp.occupation},
                         {"mean_X", mx.mean},
                         {"var_X", mx.variance},
                         {"m4_X", mx.m4},
                         {"qv_mean", mq.mean},
                         {"qv_std", std::sqrt(mq.variance)}};
        if (start && mode != SimMode::rslv) {
            const double m0 = start->first, v = start->second + cp.t;
            e["ks_normal"] = ks_statistic(cp.X, [&](double x) { return normal_cdf((x - m0) / std::sqrt(v)); });
        }
        cps.push_back(e);
    }
    diag["checkpoints"] = cps;

    std::vector<double> strikes = c.strikes;
    if (strikes.empty() && mode == SimMode::rslv) strikes = {0.8, 1.0, 1.2};
    if (!strikes.empty()) {
        const auto prices = price_calls(res.final_state.X, strikes, c.horizon.r, c.horizon.T);
        write_prices_csv(prices, (c.output_dir / "prices.csv").string());
        nlohmann::json pj = nlohmann::json::array();
        for (const auto& p : prices) pj.push_back({{"K", p.strike}, {"price", p.price}, {"stderr", p.stderr_}});
        diag["prices"] = pj;
    }
    write_json_file((c.output_dir / "diagnostics.json").string(), diag);
    return diag;
}

}  // namespace rslv
