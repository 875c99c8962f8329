#pragma once

// VaR and expected shortfall from a calibrated GPD tail.
//
//   VaR(p) = u2 + (beta/xi) [ ((1-p)/tail_prob)^{-xi} - 1 ]      (exact form)
//   ES(p)  = VaR(p)/(1-xi) + (beta - xi u2)/(1-xi)               (xi < 1)
//
// with tail_prob the probability mass above u2. The quantile-averaged
// estimator mirrors the empirical practice:
//
//   ES_k(p) = (1/k) sum_j VaR(p_j),  p_j = p + (j-1)(1-p)/k.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "heavytail/empirical.hpp"

namespace heavytail {

struct TailModel {
    GpdParams gpd;           ///< xi, beta, u (tail threshold u2)
    double tail_prob = 0.1;  ///< P(X > u2); empirical N_{u2}/n or model mass
    double sample_mean = 1.0;  ///< for mean-multiplier reporting
};

/// Raised for ES with xi >= 1 (the tail has no finite mean).
struct infinite_mean_error : std::domain_error {
    using std::domain_error::domain_error;
};

/// Exact GPD quantile of the full loss law at level p >= 1 - tail_prob.
inline double var_gpd(double p, const TailModel& tm) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("var_gpd: p in (0,1)");
    if (p < 1.0 - tm.tail_prob)
        throw std::domain_error(
            "var_gpd: level below the modelled tail region; use empirical quantiles");
    const double xi = tm.gpd.xi;
    if (std::abs(xi) < kGpdXiZero)
        throw std::domain_error("var_gpd: xi must be nonzero");
    const double ratio = (1.0 - p) / tm.tail_prob;
    return tm.gpd.u + tm.gpd.beta / xi * std::expm1(-xi * std::log(ratio));
}

/// Closed-form expected shortfall; requires xi < 1.
inline double es_analytic(double p, const TailModel& tm) {
    const double xi = tm.gpd.xi;
    if (xi >= 1.0)
        throw infinite_mean_error("es_analytic: xi >= 1 means an infinite-mean tail");
    return var_gpd(p, tm) / (1.0 - xi) + (tm.gpd.beta - xi * tm.gpd.u) / (1.0 - xi);
}

/// Quantile-averaged ES over the uniform grid on [p, 1).
inline double es_numeric(double p, const TailModel& tm, std::size_t k = 20000) {
    if (k < 1) throw std::invalid_argument("es_numeric: k must be at least 1");
    double acc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
        const double pj =
            p + (static_cast<double>(j) - 1.0) * (1.0 - p) / static_cast<double>(k);
        acc += var_gpd(pj, tm);
    }
    return acc / static_cast<double>(k);
}

/// Same grid applied to empirical quantiles of the data.
inline double es_empirical(const std::vector<double>& data, double p, std::size_t k) {
    if (data.empty()) throw std::invalid_argument("es_empirical: empty data");
    if (k < 1) throw std::invalid_argument("es_empirical: k must be at least 1");
    const auto d = EmpiricalDist::from_data(data);
    double acc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
        const double pj =
            p + (static_cast<double>(j) - 1.0) * (1.0 - p) / static_cast<double>(k);
        acc += empirical_quantile(d, pj);
    }
    return acc / static_cast<double>(k);
}

}  // namespace heavytail
