// rslv_lab: Condition (C) checks, Fokker-Planck solves, particle simulations,
// Dupire surfaces and the acceptance suite.
//
// Exit codes: 0 ok / satisfied, 1 not satisfied or verification failure,
// 2 invalid input or config, 3 numerical failure.

#include "rslv/acceptance.hpp"
#include "rslv/condition_c.hpp"
#include "rslv/csv.hpp"
#include "rslv/dupire.hpp"
#include "rslv/errors.hpp"
#include "rslv/experiment.hpp"
#include "rslv/model_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace rslv;

namespace {

constexpr int kOk = 0;
constexpr int kNotSatisfied = 1;
constexpr int kInvalid = 2;
constexpr int kNumerical = 3;

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse number '" + item + "'");
        }
        if (used != item.size()) throw ConfigError("cannot parse number '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("empty number list");
    return out;
}

struct CheckArgs {
    std::string lambda;
    std::string method = "grid";
    int n = 200;
    std::string alpha;
    std::string out = "points.csv";
};

int cmd_check_c(const CheckArgs& a) {
    const std::vector<double> lam = parse_list(a.lambda);
    RegimeModel model = RegimeModel::uniform(lam);
    const std::vector<std::string> methods =
        a.method == "all" ? std::vector<std::string>{"identity", "d3", "grid"} : std::vector<std::string>{a.method};
    bool any = false;
    for (const auto& m : methods) {
        std::string verdict;
        if (m == "identity") {
            verdict = criterion_identity(model) ? "SATISFIED" : "NOT-FOUND";
        } else if (m == "d3") {
            if (lam.size() != 3) {
                if (a.method == "all") continue;
                throw ConfigError("method d3 needs exactly three values");
            }
            const auto rep = criterion_d3(lam);
            std::cout << "d3 lhs = " << fmt17(rep.lhs) << " (threshold 0.25)\n";
            verdict = rep.satisfied ? "SATISFIED" : "NOT-SATISFIED";
        } else if (m == "diag") {
            verdict = criterion_diag(model, parse_list(a.alpha)) ? "SATISFIED" : "NOT-FOUND";
        } else if (m == "grid") {
            if (lam.size() < 3) throw ConfigError("method grid needs at least three values");
            const auto rep = grid_search_diag(model, a.n);
            std::ofstream out(a.out);
            if (!out) throw ConfigError("cannot write '" + a.out + "'");
            out << "X,Y\n";
            for (const auto& p : rep.points) out << fmt17(p.x) << ',' << fmt17(p.y) << '\n';
            std::cout << "grid points: " << rep.points.size() << " -> " << a.out << '\n';
            if (rep.satisfied) verdict = "SATISFIED";
            else verdict = rep.exact ? "NOT-SATISFIED" : "NOT-FOUND(" + std::to_string(a.n) + ")";
        } else {
            throw ConfigError("unknown method '" + m + "'");
        }
        std::cout << m << ": " << verdict << '\n';
        any = any || verdict == "SATISFIED";
    }
    return any ? kOk : kNotSatisfied;
}

int cmd_dupire(const std::string& csv, double r, double spot, double lo, double hi, const std::string& out) {
    DupireOptions opt;
    opt.spot = spot;
    opt.bounds = {lo, hi};
    DupireDiagnostics diag;
    const VolSurface s = dupire_from_calls(read_call_grid_csv(csv), r, opt, &diag);
    nlohmann::json j = surface_to_json(s);
    j["flagged_nodes"] = diag.flagged;
    j["interior_nodes"] = diag.total;
    write_json_file(out, j);
    std::cout << "surface -> " << out << " (" << diag.flagged << " of " << diag.total << " nodes repaired)\n";
    return kOk;
}

int cmd_verify(const std::string& suite, const std::string& report) {
    AcceptanceOptions opt;
    if (suite == "fast") opt.only = {1, 2, 3, 4, 5, 6, 7};
    else if (suite != "all") {
        for (double v : parse_list(suite)) opt.only.insert(static_cast<int>(v));
    }
    std::ofstream rep;
    if (!report.empty()) {
        rep.open(report);
        if (!rep) throw ConfigError("cannot write '" + report + "'");
    }
    opt.on_result = [&](const CriterionResult& r) {
        std::cout << format_result_line(r) << std::endl;
        if (rep) {
            for (const auto& t : r.reports) {
                nlohmann::json j = to_json(t);
                j["criterion"] = r.id;
                rep << j.dump() << '\n';
            }
        }
    };
    const auto results = run_acceptance(opt);
    bool ok = !results.empty();
    for (const auto& r : results) ok = ok && r.passed;
    std::cout << (ok ? "ALL PASS" : "FAILURES") << '\n';
    return ok ? kOk : kNotSatisfied;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regime-switching local volatility laboratory"};
    app.require_subcommand(1);

    CheckArgs check;
    auto* c = app.add_subcommand("check-c", "Test Condition (C) for a list of variance levels");
    c->add_option("--lambda", check.lambda, "Comma-separated variance levels")->required();
    c->add_option("--method", check.method, "identity | d3 | diag | grid | all")
        ->check(CLI::IsMember({"identity", "d3", "diag", "grid", "all"}));
    c->add_option("--n", check.n, "Grid resolution");
    c->add_option("--alpha", check.alpha, "Diagonal of Gamma for method diag");
    c->add_option("--out", check.out, "Point CSV for method grid");

    std::string config_path, out_dir;
    struct Solve {
        const char* name;
        SolveKind kind;
    };
    const Solve solves[] = {{"solve-fbm", SolveKind::fbm},
                            {"solve-rslv", SolveKind::rslv},
                            {"solve-lv", SolveKind::lv},
                            {"solve-jump", SolveKind::jump}};
    std::vector<std::pair<CLI::App*, SolveKind>> solve_cmds;
    for (const auto& s : solves) {
        auto* sub = app.add_subcommand(s.name, "Fokker-Planck solve from a JSON config");
        sub->add_option("config", config_path, "Experiment config")->required();
        sub->add_option("--out-dir", out_dir, "Overrides output_dir of the config");
        solve_cmds.emplace_back(sub, s.kind);
    }
    struct Sim {
        const char* name;
        SimMode mode;
    };
    const Sim sims[] = {{"simulate-fbm", SimMode::fake_bm},
                        {"simulate-rslv", SimMode::rslv},
                        {"simulate-jump", SimMode::jump_fbm}};
    std::vector<std::pair<CLI::App*, SimMode>> sim_cmds;
    for (const auto& s : sims) {
        auto* sub = app.add_subcommand(s.name, "Particle simulation from a JSON config");
        sub->add_option("config", config_path, "Experiment config")->required();
        sub->add_option("--out-dir", out_dir, "Overrides output_dir of the config");
        sim_cmds.emplace_back(sub, s.mode);
    }

    std::string calls, surface_out = "surface.json";
    double dup_r = 0.0, spot = 1.0, lo = 0.01, hi = 2.0;
    auto* dup = app.add_subcommand("dupire-build", "Local volatility from a t,K,C call-price CSV");
    dup->add_option("calls", calls, "Call-price CSV")->required();
    dup->add_option("--r", dup_r, "Interest rate");
    dup->add_option("--spot", spot, "Spot price S0");
    dup->add_option("--sigma-low", lo, "Lower volatility bound");
    dup->add_option("--sigma-high", hi, "Upper volatility bound");
    dup->add_option("--out", surface_out, "Surface JSON");

    std::string suite = "all", report;
    auto* ver = app.add_subcommand("verify", "Run the acceptance suite");
    ver->add_option("--suite", suite, "all | fast | comma-separated criterion ids");
    ver->add_option("--report", report, "JSON-lines report file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        configure_threads();
        if (c->parsed()) return cmd_check_c(check);
        auto load = [&] {
            ExperimentConfig cfg = load_experiment(config_path);
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            return cfg;
        };
        for (const auto& [sub, kind] : solve_cmds) {
            if (!sub->parsed()) continue;
            const auto diag = run_solve(kind, load());
            std::cout << diag.dump(2) << '\n';
            return kOk;
        }
        for (const auto& [sub, mode] : sim_cmds) {
            if (!sub->parsed()) continue;
            const auto diag = run_simulate(mode, load());
            nlohmann::json brief = diag;
            brief.erase("checkpoints");
            std::cout << brief.dump(2) << '\n';
            return kOk;
        }
        if (dup->parsed()) return cmd_dupire(calls, dup_r, spot, lo, hi, surface_out);
        if (ver->parsed()) return cmd_verify(suite, report);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const ArbitrageError& e) {
        std::cerr << "arbitrage: " << e.what() << '\n';
        return kInvalid;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const CertificateError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNotSatisfied;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    }
    return kInvalid;
}
