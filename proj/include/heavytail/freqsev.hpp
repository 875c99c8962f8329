#pragma once

// Poisson-GPD model for the frequency and magnitude of exceedances over a
// high threshold u:
//
//   H_u(x) = exp{ -lambda (1 + xi (x-u)/beta)^{-1/xi} },  x > u
//
// with lambda the exceedance rate per time unit. The likelihood factorizes
// into a Poisson count term and a GPD magnitude term, so the MLE does too:
// lambda_hat is the mean period count and (xi, beta) maximize the GPD
// log-likelihood of the excesses, found through the one-dimensional profile
// in theta = xi/beta. Confidence intervals use the observed-information
// normal approximation.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "heavytail/distributions.hpp"
#include "heavytail/numerics.hpp"

namespace heavytail {

struct PoissonGpdParams {
    double lambda = 1.0;  ///< exceedances per time unit, > 0
    double xi = 0.1;
    double beta = 1.0;
    double u = 0.0;  ///< threshold
    std::string time_unit = "quarter";
};

struct ExceedanceSeries {
    std::vector<double> magnitudes;      ///< observations > u
    std::vector<std::size_t> period_counts;  ///< exceedance counts per period
    std::string time_unit = "quarter";
};

struct PoissonGpdFit {
    PoissonGpdParams params;
    std::pair<double, double> lambda_ci95 = {0.0, 0.0};
    std::pair<double, double> xi_ci95 = {0.0, 0.0};
    std::pair<double, double> beta_ci95 = {0.0, 0.0};
    double log_likelihood = 0.0;  ///< joint Poisson + GPD log-likelihood
    bool xi_boundary = false;     ///< profile optimum pinned at xi -> 0
};

inline double poisson_gpd_cdf(double x, const PoissonGpdParams& p) {
    // boundary included: H_u(u) = exp(-lambda), the unit-base value
    if (!(x >= p.u)) throw std::domain_error("poisson_gpd_cdf: x must not lie below the threshold");
    const double base = 1.0 + p.xi * (x - p.u) / p.beta;
    if (base <= 0.0) return 1.0;  // (.)_+ hit zero: past the upper endpoint (xi<0)
    return std::exp(-p.lambda * std::exp(-std::log(base) / p.xi));
}

/// GPD log-likelihood of excesses y (all >= 0) at (xi, beta).
inline double gpd_loglik(const std::vector<double>& y, double xi, double beta) {
    double ll = 0.0;
    const GpdParams g{xi, beta, 0.0};
    for (double v : y) ll += gpd_log_pdf(v, g);
    return ll;
}

/// Poisson log-likelihood of counts at rate lambda (base measure dropped).
inline double poisson_loglik(const std::vector<std::size_t>& counts, double lambda) {
    double ll = 0.0;
    for (std::size_t c : counts)
        ll += static_cast<double>(c) * std::log(lambda) - lambda;
    return ll;
}

/// Factorized maximum likelihood for the Poisson-GPD model above threshold u.
inline PoissonGpdFit fit_poisson_gpd(const ExceedanceSeries& series, double u) {
    const auto& mags = series.magnitudes;
    if (mags.size() < 30) throw input_error("fit_poisson_gpd: need at least 30 exceedances");
    if (series.period_counts.size() < 3)
        throw input_error("fit_poisson_gpd: need at least 3 periods");
    std::size_t total = 0;
    for (std::size_t c : series.period_counts) total += c;
    if (total != mags.size())
        throw input_error("fit_poisson_gpd: period counts do not sum to the magnitude count");

    std::vector<double> y;
    y.reserve(mags.size());
    double mean_y = 0.0;
    for (double m : mags) {
        if (!(m > u)) throw input_error("fit_poisson_gpd: magnitudes must exceed u");
        y.push_back(m - u);
        mean_y += m - u;
    }
    mean_y /= static_cast<double>(y.size());
    if (!(mean_y > 0.0)) throw input_error("fit_poisson_gpd: degenerate magnitudes");

    PoissonGpdFit fit;
    fit.params.u = u;
    fit.params.time_unit = series.time_unit;

    // Poisson part
    const double n_periods = static_cast<double>(series.period_counts.size());
    fit.params.lambda = static_cast<double>(total) / n_periods;
    const double se_l = std::sqrt(fit.params.lambda / n_periods);
    fit.lambda_ci95 = {fit.params.lambda - 1.959963984540054 * se_l,
                       fit.params.lambda + 1.959963984540054 * se_l};

    // GPD part via the profile in theta = xi/beta:
    //   xi(theta) = mean log1p(theta y),  l(theta) = -N [log(xi/theta) + xi + 1]
    const double N = static_cast<double>(y.size());
    const auto xi_of = [&](double log_theta) {
        const double theta = std::exp(log_theta);
        double s = 0.0;
        for (double v : y) s += std::log1p(theta * v);
        return s / N;
    };
    const auto profile = [&](double log_theta) {
        const double xi = xi_of(log_theta);
        if (!(xi > 0.0)) return -1e300;
        return -N * (std::log(xi) - log_theta + xi + 1.0);
    };
    const double lt_lo = std::log(1e-8 / mean_y);
    const double lt_hi = std::log(1e6 / mean_y);
    const double lt_star = maximize_golden(profile, lt_lo, lt_hi, 1e-13, 400);
    const double theta = std::exp(lt_star);
    fit.params.xi = xi_of(lt_star);
    fit.params.beta = fit.params.xi / theta;
    fit.xi_boundary = lt_star < lt_lo + 1e-6 * (std::abs(lt_lo) + 1.0);
    if (fit.xi_boundary) {
        // degenerate severity; report the exponential limit
        fit.params.xi = 0.0;
        fit.params.beta = mean_y;
    }
    if (!std::isfinite(fit.params.beta) || !(fit.params.beta > 0.0))
        throw std::runtime_error("fit_poisson_gpd: optimizer failed to produce a valid scale");

    fit.log_likelihood = poisson_loglik(series.period_counts, fit.params.lambda);
    if (!fit.xi_boundary) {
        fit.log_likelihood += gpd_loglik(y, fit.params.xi, fit.params.beta);

        // observed information at the MLE (central differences on the 2x2 Hessian)
        const double hx = 1e-5 * (std::abs(fit.params.xi) + 1e-3);
        const double hb = 1e-5 * fit.params.beta;
        const auto ll = [&](double xi, double beta) { return gpd_loglik(y, xi, beta); };
        const double l0 = ll(fit.params.xi, fit.params.beta);
        const double dxx =
            (ll(fit.params.xi + hx, fit.params.beta) - 2 * l0 + ll(fit.params.xi - hx, fit.params.beta)) /
            (hx * hx);
        const double dbb =
            (ll(fit.params.xi, fit.params.beta + hb) - 2 * l0 + ll(fit.params.xi, fit.params.beta - hb)) /
            (hb * hb);
        const double dxb = (ll(fit.params.xi + hx, fit.params.beta + hb) -
                            ll(fit.params.xi + hx, fit.params.beta - hb) -
                            ll(fit.params.xi - hx, fit.params.beta + hb) +
                            ll(fit.params.xi - hx, fit.params.beta - hb)) /
                           (4 * hx * hb);
        const double det = dxx * dbb - dxb * dxb;
        if (det > 0.0 && dxx < 0.0) {
            const double var_xi = -dbb / det;
            const double var_beta = -dxx / det;
            const double z = 1.959963984540054;
            fit.xi_ci95 = {fit.params.xi - z * std::sqrt(var_xi),
                           fit.params.xi + z * std::sqrt(var_xi)};
            fit.beta_ci95 = {fit.params.beta - z * std::sqrt(var_beta),
                             fit.params.beta + z * std::sqrt(var_beta)};
        }
    } else {
        fit.log_likelihood += gpd_loglik(y, 1e-12, fit.params.beta);
    }
    return fit;
}

}  // namespace heavytail
