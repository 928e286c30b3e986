#pragma once

// Verification statistics: normal CDF, Kolmogorov-Smirnov distance, moments,
// histogram L1 distance and Monte Carlo standard errors.

#include <json.hpp>

#include <cstddef>
#include <functional>
#include <span>
#include <string>

namespace rslv {

/// Phi(x) via the complementary error function.
double normal_cdf(double x);

/// sup_x |F_n(x) - F(x)| over the sorted samples. Throws DomainError when empty.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

struct Moments {
    double mean = 0.0;
    double variance = 0.0;  // central, 1/n normalization
    double m4 = 0.0;        // central fourth moment
    double kurtosis = 0.0;  // m4 / variance^2
    std::size_t n = 0;
};
Moments moments(std::span<const double> samples);

/// Standard error of the mean, sqrt(s^2 / n) with the unbiased variance.
double mc_stderr(std::span<const double> payoffs);

struct HistogramRange {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t bins = 100;
};
/// Default range: mean +- 5 standard deviations, 100 bins.
HistogramRange default_range(std::span<const double> samples, std::size_t bins = 100);

/// sum_b |hist_b - integral_b density| over the bins of `range`, where hist_b
/// is the count in bin b divided by `normalizer` (0 means samples.size(), so
/// sub-probability densities can be compared against a subset of a sample).
/// Bin integrals use the midpoint rule with 8 sub-intervals per bin.
double l1_hist_distance(std::span<const double> samples, const std::function<double(double)>& density,
                        const HistogramRange& range, std::size_t normalizer = 0);
/// Histogram-to-histogram variant; both normalized to probability mass.
double l1_hist_distance(std::span<const double> a, std::span<const double> b, const HistogramRange& range);

struct TestReport {
    std::string description;
    double statistic = 0.0;
    double threshold = 0.0;
    std::size_t sample_size = 0;
    bool passed() const { return statistic <= threshold; }
};
nlohmann::json to_json(const TestReport& report);
/// One JSON object per line.
std::string to_json_line(const TestReport& report);

}  // namespace rslv
