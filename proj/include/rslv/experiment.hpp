#pragma once

// Experiment configuration and the runners behind the command-line tool.
//
// {
//   "model":   {"lambda": [1, 4], "alpha": [0.5, 0.5], "q": [[0, 1], [1, 0]]},
//   "horizon": {"T": 1.0, "r": 0.0},
//   "initial": {"type": "gaussian", "mean": 0, "variance": 0.1},
//   "grid":    {"L": 6.0, "h": 0.01},                  // or {"L": 6, "m": 1201}
//   "pds":     {"dt": 1e-4, "sigma_mollify": 0.0, "eps_reg": 0, "output_times": [0.5, 1.0],
//               "lumped_mass": true},
//   "sim":     {"N": 200000, "dt": 1e-3, "bandwidth_c": 1.06, "grid_nodes": 400,
//               "checkpoints": [0.5, 1.0]},
//   "surface": {"kind": "constant", "value": 0.2}      // or {"file": "surface.json"}
//                                                      // or {"calls_csv": "calls.csv", "spot": 1}
//   "strikes": [0.8, 1.0, 1.2],
//   "output_dir": "out",
//   "seed": 20240607
// }
//
// Relative paths are resolved against the directory of the config file.

#include "rslv/dupire.hpp"
#include "rslv/fokker_planck.hpp"
#include "rslv/heat_kernel.hpp"
#include "rslv/particles.hpp"
#include "rslv/regime_model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rslv {

struct ExperimentConfig {
    std::optional<RegimeModel> model;
    HorizonConfig horizon;
    Measure initial = PointMass{};
    SpatialGrid grid;
    PDSConfig pds;
    SimPlan sim;
    std::optional<VolSurface> surface;
    std::vector<double> strikes;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 20240607;
};

/// Validates the whole document (schema, referenced files, value ranges)
/// before any computation. Throws ConfigError.
ExperimentConfig parse_experiment(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment(const std::string& path);

enum class SolveKind { fbm, rslv, lv, jump };

/// Runs a PDE solve, writes snapshot CSVs and diagnostics.json into the output
/// directory, and returns the diagnostics.
nlohmann::json run_solve(SolveKind kind, const ExperimentConfig& config);

/// Runs a particle simulation, writes checkpoint CSVs, prices.csv (when
/// strikes are configured or in rslv mode) and diagnostics.json.
nlohmann::json run_simulate(SimMode mode, const ExperimentConfig& config);

}  // namespace rslv
