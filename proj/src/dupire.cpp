#include "rslv/dupire.hpp"

#include "rslv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace rslv {

namespace {

void check_bounds(const VolBounds& b) {
    if (!(b.low > 0.0) || !(b.high >= b.low) || !std::isfinite(b.high)) {
        throw DomainError("volatility bounds must satisfy 0 < low <= high");
    }
}

// Index k with nodes[k] <= v < nodes[k+1] and the weight of nodes[k+1].
std::pair<std::size_t, double> locate(const std::vector<double>& nodes, double v) {
    if (nodes.size() == 1 || v <= nodes.front()) return {0, 0.0};
    if (v >= nodes.back()) return {nodes.size() - 2, 1.0};
    auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
    std::size_t k = static_cast<std::size_t>(it - nodes.begin()) - 1;
    return {k, (v - nodes[k]) / (nodes[k + 1] - nodes[k])};
}

void check_increasing(const std::vector<double>& v, const char* what) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] > v[k - 1])) throw DomainError(std::string(what) + " must be strictly increasing");
}

}  // namespace

VolSurface VolSurface::constant(double sigma, VolBounds bounds) {
    check_bounds(bounds);
    if (!std::isfinite(sigma)) throw DomainError("volatility must be finite");
    VolSurface s;
    s.kind_ = Kind::constant;
    s.bounds_ = bounds;
    s.base_ = sigma;
    return s;
}

VolSurface VolSurface::parametric(double base, double skew, double width, VolBounds bounds) {
    check_bounds(bounds);
    if (!(width > 0.0)) throw DomainError("parametric width must be positive");
    VolSurface s;
    s.kind_ = Kind::parametric;
    s.bounds_ = bounds;
    s.base_ = base;
    s.skew_ = skew;
    s.width_ = width;
    return s;
}

VolSurface VolSurface::tabulated(std::vector<double> t_nodes, std::vector<double> x_nodes, std::vector<double> sigma,
                                 VolBounds bounds) {
    check_bounds(bounds);
    if (t_nodes.empty() || x_nodes.size() < 2 || sigma.size() != t_nodes.size() * x_nodes.size()) {
        throw DomainError("tabulated surface needs >= 1 time node, >= 2 space nodes and matching values");
    }
    check_increasing(t_nodes, "surface time nodes");
    check_increasing(x_nodes, "surface space nodes");
    for (double v : sigma)
        if (!std::isfinite(v)) throw DomainError("surface values must be finite");
    VolSurface s;
    s.kind_ = Kind::tabulated;
    s.bounds_ = bounds;
    s.t_ = std::move(t_nodes);
    s.x_ = std::move(x_nodes);
    s.values_ = std::move(sigma);
    // Piecewise linear in t: Lipschitz, so chi = 1 with H0 the steepest slope.
    const std::size_t nx = s.x_.size();
    for (std::size_t it = 0; it + 1 < s.t_.size(); ++it) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            double a = std::clamp(s.values_[it * nx + ix], bounds.low, bounds.high);
            double b = std::clamp(s.values_[(it + 1) * nx + ix], bounds.low, bounds.high);
            s.holder_h0_ = std::max(s.holder_h0_, std::abs(b - a) / (s.t_[it + 1] - s.t_[it]));
        }
    }
    return s;
}

double VolSurface::raw(double t, double x) const {
    switch (kind_) {
        case Kind::constant:
            return base_;
        case Kind::parametric:
            return base_ + skew_ * std::tanh(x / width_);
        case Kind::tabulated: {
            const std::size_t nx = x_.size();
            auto [kx, wx] = locate(x_, x);
            auto row = [&](std::size_t it) {
                return (1.0 - wx) * values_[it * nx + kx] + wx * values_[it * nx + kx + 1];
            };
            if (t_.size() == 1) return row(0);
            auto [kt, wt] = locate(t_, t);
            return (1.0 - wt) * row(kt) + wt * row(kt + 1);
        }
    }
    return base_;
}

double VolSurface::raw_dx(double t, double x) const {
    switch (kind_) {
        case Kind::constant:
            return 0.0;
        case Kind::parametric: {
            double c = std::cosh(x / width_);
            return skew_ / (width_ * c * c);
        }
        case Kind::tabulated: {
            if (x < x_.front() || x > x_.back()) return 0.0;
            const std::size_t nx = x_.size();
            auto [kx, wx] = locate(x_, x);
            (void)wx;
            const double h = x_[kx + 1] - x_[kx];
            auto slope = [&](std::size_t it) { return (values_[it * nx + kx + 1] - values_[it * nx + kx]) / h; };
            if (t_.size() == 1) return slope(0);
            auto [kt, wt] = locate(t_, t);
            return (1.0 - wt) * slope(kt) + wt * slope(kt + 1);
        }
    }
    return 0.0;
}

double VolSurface::eval(double t, double x) const { return std::clamp(raw(t, x), bounds_.low, bounds_.high); }

double VolSurface::dx(double t, double x) const {
    double v = raw(t, x);
    if (v <= bounds_.low || v >= bounds_.high) return 0.0;
    return raw_dx(t, x);
}

// ---------------------------------------------------------------------------
// Dupire

VolSurface dupire_from_calls(const CallGrid& grid, double r, const DupireOptions& options,
                             DupireDiagnostics* diagnostics) {
    const std::size_t nt = grid.t.size();
    const std::size_t nk = grid.strikes.size();
    if (nt < 2 || nk < 3) throw DomainError("Dupire construction needs >= 2 maturities and >= 3 strikes");
    if (grid.prices.size() != nt * nk) throw DomainError("call grid is not rectangular");
    check_increasing(grid.t, "maturities");
    check_increasing(grid.strikes, "strikes");
    if (!(grid.strikes.front() > 0.0)) throw DomainError("strikes must be positive");
    check_bounds(options.bounds);

    const double floor = options.denom_floor_rel * options.spot * options.spot;
    const auto& K = grid.strikes;
    const auto& T = grid.t;

    std::vector<double> sigma(nt * nk, 0.0);
    std::vector<char> valid(nt * nk, 0);
    std::vector<std::pair<std::size_t, std::size_t>> flagged;
    std::vector<std::pair<std::size_t, std::size_t>> butterfly;

    for (std::size_t it = 0; it < nt; ++it) {
        const std::size_t ta = it == 0 ? 0 : it - 1;
        const std::size_t tb = it + 1 == nt ? it : it + 1;
        for (std::size_t ik = 1; ik + 1 < nk; ++ik) {
            const double km = K[ik - 1], k0 = K[ik], kp = K[ik + 1];
            const double cm = grid.at(it, ik - 1), c0 = grid.at(it, ik), cp = grid.at(it, ik + 1);
            const double c_k = (cp - cm) / (kp - km);
            const double c_kk = 2.0 * ((cp - c0) / (kp - k0) - (c0 - cm) / (k0 - km)) / (kp - km);
            const double c_t = (grid.at(tb, ik) - grid.at(ta, ik)) / (T[tb] - T[ta]);
            const double num = c_t + r * k0 * c_k;
            const double denom = k0 * k0 * c_kk;
            if (denom < -floor) butterfly.emplace_back(it, ik);
            if (denom <= floor || num <= 0.0) {
                flagged.emplace_back(it, ik);
                continue;
            }
            sigma[it * nk + ik] = std::sqrt(2.0 * num / denom);
            valid[it * nk + ik] = 1;
        }
    }
    const std::size_t interior = nt * (nk - 2);

    auto describe = [&](const std::vector<std::pair<std::size_t, std::size_t>>& nodes) {
        std::ostringstream os;
        std::size_t shown = 0;
        for (auto [it, ik] : nodes) {
            if (shown++ == 20) {
                os << " ...";
                break;
            }
            os << " (t=" << T[it] << ", K=" << K[ik] << ")";
        }
        return os.str();
    };
    if (!butterfly.empty()) {
        throw ArbitrageError("call prices are concave in strike (butterfly arbitrage) at" + describe(butterfly));
    }
    if (static_cast<double>(flagged.size()) > options.max_flagged_fraction * static_cast<double>(interior)) {
        throw ArbitrageError(std::to_string(flagged.size()) + " of " + std::to_string(interior) +
                             " nodes have no usable local variance:" + describe(flagged));
    }
    if (flagged.size() == interior) throw ArbitrageError("no usable local-variance node");

    // Nearest valid neighbour, searching in K first and then in t.
    auto nearest_in_row = [&](std::size_t it, std::size_t ik) -> std::ptrdiff_t {
        for (std::size_t off = 1; off < nk; ++off) {
            if (ik >= off && valid[it * nk + ik - off]) return static_cast<std::ptrdiff_t>(ik - off);
            if (ik + off < nk && valid[it * nk + ik + off]) return static_cast<std::ptrdiff_t>(ik + off);
        }
        return -1;
    };
    std::vector<double> repaired = sigma;
    for (auto [it, ik] : flagged) {
        bool done = false;
        for (std::size_t off = 0; off < nt && !done; ++off) {
            for (std::size_t cand : {it - std::min(it, off), it + off}) {
                if (cand >= nt || (off > 0 && cand == it)) continue;
                if (valid[cand * nk + ik]) {
                    repaired[it * nk + ik] = sigma[cand * nk + ik];
                    done = true;
                    break;
                }
                std::ptrdiff_t j = nearest_in_row(cand, ik);
                if (j >= 0) {
                    repaired[it * nk + ik] = sigma[cand * nk + static_cast<std::size_t>(j)];
                    done = true;
                    break;
                }
            }
        }
    }
    // Edge strikes take the adjacent interior value.
    for (std::size_t it = 0; it < nt; ++it) {
        repaired[it * nk] = repaired[it * nk + 1];
        repaired[it * nk + nk - 1] = repaired[it * nk + nk - 2];
    }
    for (auto& v : repaired) v = std::clamp(v, options.bounds.low, options.bounds.high);

    if (diagnostics) {
        diagnostics->flagged = flagged.size();
        diagnostics->total = interior;
        diagnostics->flagged_nodes = flagged;
    }
    std::vector<double> x(nk);
    for (std::size_t ik = 0; ik < nk; ++ik) x[ik] = std::log(K[ik]);
    return VolSurface::tabulated(T, std::move(x), std::move(repaired), options.bounds);
}

CallGrid parse_call_grid_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty call-price file");
    line.erase(std::remove_if(line.begin(), line.end(), ::isspace), line.end());
    if (line != "t,K,C") throw ConfigError("call-price CSV header must be 't,K,C'");
    std::map<double, std::map<double, double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        double t, k, c;
        char sep1, sep2;
        if (!(ls >> t >> sep1 >> k >> sep2 >> c) || sep1 != ',' || sep2 != ',') {
            throw ConfigError("malformed call-price row at line " + std::to_string(lineno));
        }
        rows[t][k] = c;
    }
    CallGrid grid;
    for (const auto& [t, byk] : rows) {
        if (grid.t.empty()) {
            for (const auto& [k, c] : byk) grid.strikes.push_back(k);
        } else if (byk.size() != grid.strikes.size()) {
            throw ConfigError("call-price grid is not rectangular");
        }
        grid.t.push_back(t);
        std::size_t ik = 0;
        for (const auto& [k, c] : byk) {
            if (k != grid.strikes[ik++]) throw ConfigError("call-price grid is not rectangular");
            grid.prices.push_back(c);
        }
    }
    return grid;
}

CallGrid read_call_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_call_grid_csv(ss.str());
}

nlohmann::json surface_to_json(const VolSurface& s) {
    nlohmann::json j;
    j["sigma_low"] = s.bounds().low;
    j["sigma_high"] = s.bounds().high;
    switch (s.kind()) {
        case VolSurface::Kind::constant:
            j["kind"] = "constant";
            j["value"] = s.eval(0.0, 0.0);
            break;
        case VolSurface::Kind::parametric:
            throw ConfigError("parametric surfaces are configured directly, not exported");
        case VolSurface::Kind::tabulated: {
            j["kind"] = "tabulated";
            j["t"] = s.t_nodes();
            j["x"] = s.x_nodes();
            const std::size_t nx = s.x_nodes().size();
            nlohmann::json rows = nlohmann::json::array();
            for (std::size_t it = 0; it < s.t_nodes().size(); ++it) {
                std::vector<double> row(s.values().begin() + static_cast<std::ptrdiff_t>(it * nx),
                                        s.values().begin() + static_cast<std::ptrdiff_t>((it + 1) * nx));
                rows.push_back(row);
            }
            j["sigma"] = rows;
            j["holder_h0"] = s.holder_constant();
            j["holder_chi"] = s.holder_exponent();
            break;
        }
    }
    return j;
}

VolSurface surface_from_json(const nlohmann::json& j) {
    try {
        VolBounds b{j.value("sigma_low", 0.01), j.value("sigma_high", 2.0)};
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "constant") return VolSurface::constant(j.at("value").get<double>(), b);
        if (kind == "parametric") {
            return VolSurface::parametric(j.at("base").get<double>(), j.value("skew", 0.0), j.value("width", 1.0), b);
        }
        if (kind == "tabulated") {
            std::vector<double> values;
            for (const auto& row : j.at("sigma"))
                for (double v : row) values.push_back(v);
            return VolSurface::tabulated(j.at("t").get<std::vector<double>>(), j.at("x").get<std::vector<double>>(),
                                         std::move(values), b);
        }
        throw ConfigError("unknown surface kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid surface JSON: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid surface: ") + e.what());
    }
}

}  // namespace rslv
