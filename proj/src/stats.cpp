#include "rslv/stats.hpp"

#include "rslv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace rslv {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw DomainError("ks_statistic needs at least one sample");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = cdf(s[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

Moments moments(std::span<const double> samples) {
    if (samples.empty()) throw DomainError("moments need at least one sample");
    Moments m;
    m.n = samples.size();
    const double n = static_cast<double>(m.n);
    for (double v : samples) m.mean += v;
    m.mean /= n;
    for (double v : samples) {
        const double c = (v - m.mean) * (v - m.mean);
        m.variance += c;
        m.m4 += c * c;
    }
    m.variance /= n;
    m.m4 /= n;
    m.kurtosis = m.variance > 0.0 ? m.m4 / (m.variance * m.variance) : 0.0;
    return m;
}

double mc_stderr(std::span<const double> payoffs) {
    if (payoffs.size() < 2) return 0.0;
    const double n = static_cast<double>(payoffs.size());
    double mean = 0.0;
    for (double v : payoffs) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : payoffs) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1.0) / n);
}

HistogramRange default_range(std::span<const double> samples, std::size_t bins) {
    const Moments m = moments(samples);
    const double sd = std::sqrt(m.variance);
    const double half = sd > 0.0 ? 5.0 * sd : 1.0;
    return {m.mean - half, m.mean + half, bins};
}

namespace {

void check_range(const HistogramRange& r) {
    if (!(r.hi > r.lo) || r.bins == 0) throw DomainError("histogram range must be non-empty");
}

std::vector<double> histogram(std::span<const double> samples, const HistogramRange& r, double n) {
    std::vector<double> h(r.bins, 0.0);
    const double width = (r.hi - r.lo) / static_cast<double>(r.bins);
    for (double v : samples) {
        if (v < r.lo || v >= r.hi) continue;
        auto b = static_cast<std::size_t>((v - r.lo) / width);
        h[std::min(b, r.bins - 1)] += 1.0;
    }
    for (double& v : h) v /= n;
    return h;
}

}  // namespace

double l1_hist_distance(std::span<const double> samples, const std::function<double(double)>& density,
                        const HistogramRange& range, std::size_t normalizer) {
    check_range(range);
    if (samples.empty() && normalizer == 0) throw DomainError("l1_hist_distance needs samples");
    const double n = static_cast<double>(normalizer == 0 ? samples.size() : normalizer);
    const auto h = histogram(samples, range, n);
    const double width = (range.hi - range.lo) / static_cast<double>(range.bins);
    double dist = 0.0;
    for (std::size_t b = 0; b < range.bins; ++b) {
        double mass = 0.0;
        for (int k = 0; k < 8; ++k) mass += density(range.lo + width * (static_cast<double>(b) + (k + 0.5) / 8.0));
        mass *= width / 8.0;
        dist += std::abs(h[b] - mass);
    }
    return dist;
}

double l1_hist_distance(std::span<const double> a, std::span<const double> b, const HistogramRange& range) {
    check_range(range);
    if (a.empty() || b.empty()) throw DomainError("l1_hist_distance needs samples");
    const auto ha = histogram(a, range, static_cast<double>(a.size()));
    const auto hb = histogram(b, range, static_cast<double>(b.size()));
    double dist = 0.0;
    for (std::size_t k = 0; k < range.bins; ++k) dist += std::abs(ha[k] - hb[k]);
    return dist;
}

nlohmann::json to_json(const TestReport& r) {
    return {{"description", r.description},
            {"statistic", r.statistic},
            {"threshold", r.threshold},
            {"sample_size", r.sample_size},
            {"pass", r.passed()}};
}

std::string to_json_line(const TestReport& r) { return to_json(r).dump(); }

}  // namespace rslv
