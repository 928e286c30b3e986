#include "rslv/model_io.hpp"

#include "rslv/errors.hpp"

#include <fstream>

namespace rslv {

namespace {

Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("expected a non-empty matrix");
    const std::size_t rows = j.size();
    Matrix m(rows, rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || row.size() != rows) throw ConfigError("intensity matrix must be square");
        for (std::size_t c = 0; c < rows; ++c) m(i, c) = row[c].get<double>();
    }
    return m;
}

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        out.push_back(row);
    }
    return out;
}

template <class T>
T required(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

RegimeModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("regime model must be a JSON object");
    auto lambda = required<std::vector<double>>(j, "lambda");
    std::vector<double> alpha;
    if (j.contains("alpha")) {
        alpha = required<std::vector<double>>(j, "alpha");
    } else {
        alpha.assign(lambda.size(), lambda.empty() ? 0.0 : 1.0 / static_cast<double>(lambda.size()));
        if (!alpha.empty()) {
            double head = 0.0;
            for (std::size_t i = 0; i + 1 < alpha.size(); ++i) head += alpha[i];
            alpha.back() = 1.0 - head;
        }
    }
    std::optional<IntensityTable> q;
    if (j.contains("q") && !j.at("q").is_null()) {
        const auto& jq = j.at("q");
        try {
            if (jq.is_array()) {
                q = IntensityTable::constant(matrix_from_json(jq));
            } else {
                auto knots = required<std::vector<double>>(jq, "knots");
                std::vector<Matrix> rates;
                for (const auto& m : jq.at("rates")) rates.push_back(matrix_from_json(m));
                q = IntensityTable::piecewise_linear(std::move(knots), std::move(rates));
            }
        } catch (const DomainError& e) {
            throw ConfigError(std::string("invalid intensities: ") + e.what());
        }
    }
    std::optional<double> q_bar;
    if (j.contains("q_bar")) q_bar = required<double>(j, "q_bar");
    try {
        return RegimeModel(std::move(lambda), std::move(alpha), std::move(q), q_bar);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid regime model: ") + e.what());
    }
}

nlohmann::json model_to_json(const RegimeModel& model) {
    nlohmann::json j;
    j["lambda"] = std::vector<double>(model.lambda().begin(), model.lambda().end());
    j["alpha"] = std::vector<double>(model.alpha().begin(), model.alpha().end());
    if (model.has_jumps()) {
        const auto& q = model.intensities();
        if (q.is_constant()) {
            j["q"] = matrix_to_json(q.rates().front());
        } else {
            nlohmann::json rates = nlohmann::json::array();
            for (const auto& m : q.rates()) rates.push_back(matrix_to_json(m));
            j["q"] = {{"knots", q.knots()}, {"rates", rates}};
        }
        j["q_bar"] = model.q_bar();
    }
    return j;
}

Measure measure_from_json(const nlohmann::json& j) {
    auto type = required<std::string>(j, "type");
    Measure mu;
    if (type == "dirac") {
        mu = PointMass{j.value("x", 0.0), j.value("mass", 1.0)};
    } else if (type == "mixture") {
        mu = AtomMixture{required<std::vector<double>>(j, "x"), required<std::vector<double>>(j, "weight")};
    } else if (type == "gaussian") {
        mu = GaussianDensity{j.value("mean", 0.0), required<double>(j, "variance"), j.value("mass", 1.0)};
    } else if (type == "tabulated") {
        mu = TabulatedDensity{required<std::vector<double>>(j, "x"), required<std::vector<double>>(j, "density")};
    } else {
        throw ConfigError("unknown measure type '" + type + "'");
    }
    try {
        validate(mu);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid measure: ") + e.what());
    }
    return mu;
}

nlohmann::json measure_to_json(const Measure& mu) {
    if (auto* m = std::get_if<PointMass>(&mu)) return {{"type", "dirac"}, {"x", m->x}, {"mass", m->mass}};
    if (auto* m = std::get_if<AtomMixture>(&mu)) return {{"type", "mixture"}, {"x", m->x}, {"weight", m->weight}};
    if (auto* m = std::get_if<GaussianDensity>(&mu))
        return {{"type", "gaussian"}, {"mean", m->mean}, {"variance", m->variance}, {"mass", m->mass}};
    const auto& t = std::get<TabulatedDensity>(mu);
    return {{"type", "tabulated"}, {"x", t.x}, {"density", t.density}};
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

}  // namespace rslv
