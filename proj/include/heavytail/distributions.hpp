#pragma once

// Closed-form densities, distribution functions and quantiles for the three
// component laws: lognormal body, exponential bridge, generalized Pareto tail.

#include <cmath>
#include <stdexcept>

#include "heavytail/numerics.hpp"

namespace heavytail {

// Shape values below this magnitude are evaluated with the exponential
// (Gumbel-boundary) form of the GPD to avoid catastrophic cancellation.
inline constexpr double kGpdXiZero = 1e-10;

struct LognormalParams {
    double mu = 0.0;     ///< log-scale location
    double sigma = 1.0;  ///< log-scale standard deviation, > 0
};

struct ExpParams {
    double lambda = 1.0;  ///< intensity, > 0
};

struct GpdParams {
    double xi = 0.1;    ///< tail index; > 0 in heavy-tail use
    double beta = 1.0;  ///< scale, > 0
    double u = 0.0;     ///< threshold / left endpoint
};

/// Power-law exponent alpha = 1/xi; the k-th moment exists iff alpha > k.
inline double shape_parameter(const GpdParams& p) { return 1.0 / p.xi; }

// ---------------------------------------------------------------------------
// lognormal

inline double pdf(double x, const LognormalParams& p) {
    if (x <= 0.0) throw std::domain_error("lognormal pdf: x must be positive");
    const double z = (std::log(x) - p.mu) / p.sigma;
    return norm_pdf(z) / (p.sigma * x);
}

inline double log_pdf(double x, const LognormalParams& p) {
    if (x <= 0.0) throw std::domain_error("lognormal log_pdf: x must be positive");
    const double lx = std::log(x);
    const double z = (lx - p.mu) / p.sigma;
    return -0.5 * z * z - lx - std::log(p.sigma) + std::log(kInvSqrt2Pi);
}

inline double cdf(double x, const LognormalParams& p) {
    if (x <= 0.0) return 0.0;
    return norm_cdf((std::log(x) - p.mu) / p.sigma);
}

inline double quantile(double q, const LognormalParams& p) {
    return std::exp(p.mu + p.sigma * norm_quantile(q));
}

// ---------------------------------------------------------------------------
// exponential

inline double pdf(double x, const ExpParams& p) {
    if (x < 0.0) throw std::domain_error("exponential pdf: x must be non-negative");
    return p.lambda * std::exp(-p.lambda * x);
}

inline double cdf(double x, const ExpParams& p) {
    if (x < 0.0) return 0.0;
    return -std::expm1(-p.lambda * x);
}

inline double quantile(double q, const ExpParams& p) {
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("exponential quantile: q in (0,1)");
    return -std::log1p(-q) / p.lambda;
}

// ---------------------------------------------------------------------------
// generalized Pareto, in terms of the excess y = x - u

/// G_{xi,beta}(y) per the Pickands-Balkema-de Haan excess law.
inline double gpd_cdf(double y, const GpdParams& p) {
    if (p.beta <= 0.0) throw std::domain_error("gpd_cdf: beta must be positive");
    if (y < 0.0) throw std::domain_error("gpd_cdf: y must be non-negative");
    if (std::abs(p.xi) < kGpdXiZero) return -std::expm1(-y / p.beta);
    if (p.xi < 0.0 && y > -p.beta / p.xi)
        throw std::domain_error("gpd_cdf: y beyond the upper endpoint");
    return -std::expm1(-std::log1p(p.xi * y / p.beta) / p.xi);
}

inline double gpd_pdf(double y, const GpdParams& p) {
    if (p.beta <= 0.0) throw std::domain_error("gpd_pdf: beta must be positive");
    if (y < 0.0) throw std::domain_error("gpd_pdf: y must be non-negative");
    if (std::abs(p.xi) < kGpdXiZero) return std::exp(-y / p.beta) / p.beta;
    return std::exp(-(1.0 / p.xi + 1.0) * std::log1p(p.xi * y / p.beta)) / p.beta;
}

inline double gpd_log_pdf(double y, const GpdParams& p) {
    if (y < 0.0) throw std::domain_error("gpd_log_pdf: y must be non-negative");
    if (std::abs(p.xi) < kGpdXiZero) return -y / p.beta - std::log(p.beta);
    return -(1.0 / p.xi + 1.0) * std::log1p(p.xi * y / p.beta) - std::log(p.beta);
}

/// Inverse of gpd_cdf.
inline double gpd_quantile(double q, const GpdParams& p) {
    if (!(q >= 0.0 && q < 1.0)) throw std::domain_error("gpd_quantile: q in [0,1)");
    if (std::abs(p.xi) < kGpdXiZero) return -p.beta * std::log1p(-q);
    return p.beta / p.xi * std::expm1(-p.xi * std::log1p(-q));
}

inline double cdf(double y, const GpdParams& p) { return gpd_cdf(y, p); }
inline double pdf(double y, const GpdParams& p) { return gpd_pdf(y, p); }
inline double quantile(double q, const GpdParams& p) { return gpd_quantile(q, p); }

}  // namespace heavytail
