#pragma once

// Order-statistics machinery and classical estimators: empirical cdf and
// quantiles, the Hill tail-index estimator with its asymptotic confidence
// interval, descriptive moments, and the frequency-series transforms used in
// reporting.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "heavytail/numerics.hpp"

namespace heavytail {

struct EmpiricalDist {
    std::vector<double> sorted;  ///< nondecreasing

    static EmpiricalDist from_data(std::vector<double> data) {
        if (data.empty()) throw std::invalid_argument("EmpiricalDist: empty data");
        std::sort(data.begin(), data.end());
        return EmpiricalDist{std::move(data)};
    }

    std::size_t n() const { return sorted.size(); }
};

/// Right-continuous empirical cdf: #{x_j <= x} / n.
inline double ecdf(const EmpiricalDist& d, double x) {
    const auto it = std::upper_bound(d.sorted.begin(), d.sorted.end(), x);
    return static_cast<double>(it - d.sorted.begin()) / static_cast<double>(d.n());
}

/// Type-1 (ceiling order statistic) quantile: x_(ceil(q*n)).
inline double empirical_quantile(const EmpiricalDist& d, double q) {
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("empirical_quantile: q in (0,1)");
    const double qn = q * static_cast<double>(d.n());
    auto idx = static_cast<std::size_t>(std::ceil(qn - 1e-9));
    if (idx < 1) idx = 1;
    if (idx > d.n()) idx = d.n();
    return d.sorted[idx - 1];
}

struct HillResult {
    double xi_hat = 0.0;
    std::size_t k = 0;     ///< number of upper order statistics used
    double u2 = 0.0;       ///< threshold actually used (snapped to data)
    double ci_lo = 0.0;    ///< 95% asymptotic CI, xi_hat * (1 -+ 1.96/sqrt(k))
    double ci_hi = 0.0;
    bool degenerate = false;  ///< no observation strictly above the threshold
};

/// Hill estimator at threshold u2. A u2 between order statistics snaps down
/// to the largest data value <= u2 so that k is well defined; k counts the
/// observations strictly above the snapped threshold.
inline HillResult hill_estimate(const EmpiricalDist& d, double u2) {
    const auto& x = d.sorted;
    if (u2 < x.front())
        throw std::domain_error("hill_estimate: threshold below the smallest observation");
    const auto it = std::upper_bound(x.begin(), x.end(), u2);
    const std::size_t j = static_cast<std::size_t>(it - x.begin()) - 1;  // last index <= u2
    HillResult r;
    r.u2 = x[j];
    if (!(r.u2 > 0.0))
        throw std::domain_error("hill_estimate: threshold must be positive (log ratios)");
    // strictly above the snapped value
    const auto first_above = std::upper_bound(x.begin(), x.end(), r.u2);
    r.k = static_cast<std::size_t>(x.end() - first_above);
    if (r.k == 0) {
        r.degenerate = true;
        return r;
    }
    const double log_t = std::log(r.u2);
    double s = 0.0;
    for (auto p = first_above; p != x.end(); ++p) s += std::log(*p) - log_t;
    r.xi_hat = s / static_cast<double>(r.k);
    const double half = 1.959963984540054 / std::sqrt(static_cast<double>(r.k));
    r.ci_lo = r.xi_hat * (1.0 - half);
    r.ci_hi = r.xi_hat * (1.0 + half);
    return r;
}

struct DescStats {
    double max = 0.0;
    double mean = 0.0;
    double median = 0.0;
    double std_dev = 0.0;                 ///< sample (n-1) convention
    std::optional<double> di;             ///< dispersion index std/mean; absent if mean == 0
    std::optional<double> skewness;       ///< standardized 3rd sample moment; absent if std == 0
    std::optional<double> kurtosis;       ///< non-excess (normal -> 3); absent if std == 0
};

inline DescStats descriptive_stats(const std::vector<double>& data) {
    const std::size_t n = data.size();
    if (n < 2) throw std::invalid_argument("descriptive_stats: need at least 2 observations");
    DescStats s;
    std::vector<double> sorted(data);
    std::sort(sorted.begin(), sorted.end());
    s.max = sorted.back();
    s.median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    double sum = 0.0;
    for (double v : data) sum += v;
    s.mean = sum / static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : data) {
        const double d = v - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    s.std_dev = std::sqrt(m2 / static_cast<double>(n - 1));
    if (s.mean != 0.0) s.di = s.std_dev / s.mean;
    const double m2n = m2 / static_cast<double>(n);
    if (m2n > 0.0) {
        s.skewness = (m3 / static_cast<double>(n)) / std::pow(m2n, 1.5);
        s.kurtosis = (m4 / static_cast<double>(n)) / (m2n * m2n);
    }
    return s;
}

struct FrequencySeries {
    std::vector<double> counts;  ///< m_1..m_K per period, >= 0
    int period_months = 1;

    std::size_t n_periods() const { return counts.size(); }
};

/// Relative deviation from the series mean, (m_i - mean) / mean.
inline std::vector<double> normalized_monthly_deviation(const FrequencySeries& s) {
    if (s.counts.empty()) throw std::invalid_argument("normalized_monthly_deviation: empty series");
    double mean = 0.0;
    for (double c : s.counts) mean += c;
    mean /= static_cast<double>(s.counts.size());
    if (!(mean > 0.0))
        throw input_error("normalized_monthly_deviation: series mean must be positive");
    std::vector<double> out(s.counts.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (s.counts[i] - mean) / mean;
    return out;
}

/// Rolling mean over windows of length k; returns K - k + 1 values.
inline std::vector<double> moving_average(const FrequencySeries& s, std::size_t window) {
    if (window < 1 || window > s.counts.size())
        throw input_error("moving_average: window must lie in [1, series length]");
    std::vector<double> out;
    out.reserve(s.counts.size() - window + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < window; ++i) acc += s.counts[i];
    out.push_back(acc / static_cast<double>(window));
    for (std::size_t i = window; i < s.counts.size(); ++i) {
        acc += s.counts[i] - s.counts[i - window];
        out.push_back(acc / static_cast<double>(window));
    }
    return out;
}

}  // namespace heavytail
