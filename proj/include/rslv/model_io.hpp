#pragma once

// JSON (de)serialization of regime models and initial measures.
//
// RegimeModel:
//   {"lambda": [..], "alpha": [..],
//    "q": [[..], ..]                                   // constant rates, or
//    "q": {"knots": [..], "rates": [[[..]], ..]},      // piecewise linear
//    "q_bar": 2.0}                                     // optional declared bound
//
// Measure:
//   {"type": "dirac", "x": 0}
//   {"type": "mixture", "x": [..], "weight": [..]}
//   {"type": "gaussian", "mean": 0, "variance": 0.1}
//   {"type": "tabulated", "x": [..], "density": [..]}

#include "rslv/heat_kernel.hpp"
#include "rslv/regime_model.hpp"

#include <json.hpp>

#include <string>

namespace rslv {

RegimeModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const RegimeModel& model);

Measure measure_from_json(const nlohmann::json& j);
nlohmann::json measure_to_json(const Measure& mu);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace rslv
