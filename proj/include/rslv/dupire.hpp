#pragma once

// Local-volatility surfaces sigma~(t, x) in log-price x, with enforced bounds
// [sigma_low, sigma_high], and their construction from call prices by
// Dupire's formula.

#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace rslv {

struct VolBounds {
    double low = 0.01;
    double high = 2.0;
};

class VolSurface {
public:
    enum class Kind { constant, parametric, tabulated };

    static VolSurface constant(double sigma, VolBounds bounds = {});
    /// sigma(t, x) = base + skew * tanh(x / width), time-homogeneous.
    static VolSurface parametric(double base, double skew, double width, VolBounds bounds = {});
    /// Bilinear interpolation of `sigma` (row-major, one row per time node)
    /// on (t_nodes x x_nodes), flat outside the node range.
    static VolSurface tabulated(std::vector<double> t_nodes, std::vector<double> x_nodes, std::vector<double> sigma,
                                VolBounds bounds = {});

    Kind kind() const { return kind_; }
    VolBounds bounds() const { return bounds_; }
    /// Hoelder constant H0 and exponent chi of t -> sigma(t, x).
    double holder_constant() const { return holder_h0_; }
    double holder_exponent() const { return holder_chi_; }

    /// Clamped value in [low, high].
    double eval(double t, double x) const;
    /// Derivative in x of the clamped value (zero where the clamp is active).
    double dx(double t, double x) const;

    const std::vector<double>& t_nodes() const { return t_; }
    const std::vector<double>& x_nodes() const { return x_; }
    const std::vector<double>& values() const { return values_; }

private:
    VolSurface() = default;
    double raw(double t, double x) const;
    double raw_dx(double t, double x) const;

    Kind kind_ = Kind::constant;
    VolBounds bounds_;
    double base_ = 0.2, skew_ = 0.0, width_ = 1.0;
    std::vector<double> t_, x_, values_;
    double holder_h0_ = 0.0;
    double holder_chi_ = 1.0;
};

inline double eval_sigma_tilde(const VolSurface& surface, double t, double x) { return surface.eval(t, x); }

/// Call prices C(t, K) on a rectangular grid, row-major with one row per
/// maturity.
struct CallGrid {
    std::vector<double> t;
    std::vector<double> strikes;
    std::vector<double> prices;

    double at(std::size_t it, std::size_t ik) const { return prices[it * strikes.size() + ik]; }
};

struct DupireOptions {
    double spot = 1.0;
    VolBounds bounds;
    /// Denominators K^2 C_KK at or below denom_floor_rel * spot^2 are flagged.
    double denom_floor_rel = 1e-10;
    /// Fraction of flagged nodes above which the grid is rejected.
    double max_flagged_fraction = 0.2;
};

struct DupireDiagnostics {
    std::size_t flagged = 0;
    std::size_t total = 0;
    std::vector<std::pair<std::size_t, std::size_t>> flagged_nodes;
};

/// sigma_Dup(t, K) = sqrt(2 (C_t + r K C_K) / (K^2 C_KK)) by central
/// differences, tabulated on (t, log K). Throws DomainError for grids smaller
/// than 2 maturities x 3 strikes and ArbitrageError for butterfly violations
/// or too many unusable nodes.
VolSurface dupire_from_calls(const CallGrid& grid, double r, const DupireOptions& options = {},
                             DupireDiagnostics* diagnostics = nullptr);

CallGrid read_call_grid_csv(const std::string& path);
CallGrid parse_call_grid_csv(const std::string& text);

nlohmann::json surface_to_json(const VolSurface& surface);
VolSurface surface_from_json(const nlohmann::json& j);

}  // namespace rslv
