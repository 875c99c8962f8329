#pragma once

// Hybrid splicing models for non-negative heavy-tailed data:
//
//   LN-E-GPD   lognormal body, exponential bridge, GPD tail
//   LN-GPD     lognormal body joined directly to a GPD tail
//   G-E-GPD    Gaussian-body variant of the first (comparison / diagnostics)
//
// Each family is C1 at its junctions by construction: the weights and the
// lower junction are solved from the smooth-pasting conditions so only a
// small free vector remains (4 coordinates for the bridged models, 3 for
// LN-GPD). The solved relations for LN-E-GPD are
//
//   beta = xi * u2,  lambda = (1 + xi) / beta,
//   lambda * sigma^2 * u1 - log u1 = sigma^2 - mu          (junction u1)
//   w_bridge = 1 / [ xi e^{-lambda u2} + (1 + lambda F(u1)/f(u1)) e^{-lambda u1} ]
//   w_body   = w_bridge * e(u1; lambda) / f(u1; mu, sigma)
//   w_tail   = beta * w_bridge * e(u2; lambda)
//
// and for LN-GPD
//
//   xi = sigma^2 / (log u - mu),  beta = xi * u,
//   w_body = 1 / (beta f(u) + F(u)),  w_tail = 1 - w_body F(u).
//
// The u1 equation is convex with at most two roots; the junction is the root
// on the upper branch (where the lognormal log-density steepens through
// -lambda). When that root does not exist below u2 the bridge collapses to
// zero width (u1 = u2), which reduces the model to LN-GPD with the same
// weight relations -- the collapse the calibration loop uses to detect
// two-component data.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "heavytail/distributions.hpp"
#include "heavytail/numerics.hpp"

namespace heavytail {

struct HybridParams {
    double mu = 0.0;        ///< lognormal body, log-scale location
    double sigma = 1.0;     ///< lognormal body, log-scale std, > 0
    double u1 = 1.0;        ///< body/bridge junction, 0 < u1 <= u2
    double u2 = 1.0;        ///< bridge/tail junction (tail threshold)
    double lambda = 1.0;    ///< bridge intensity, = (1+xi)/beta
    double xi = 0.1;        ///< tail index, > 0
    double beta = 1.0;      ///< tail scale, = xi*u2
    double w_body = 1.0;    ///< component weights (gamma_1..3 of the pdf)
    double w_bridge = 0.0;
    double w_tail = 0.0;
    double cdf_u1 = 0.0;    ///< H(u1), cached branch boundary
    double cdf_u2 = 0.0;    ///< H(u2) = 1 - w_tail

    bool collapsed() const { return u1 == u2; }
};

struct LnGpdParams {
    double mu = 0.0;
    double sigma = 1.0;
    double u = 1.0;        ///< single junction / tail threshold
    double xi = 0.1;       ///< = sigma^2 / (log u - mu)
    double beta = 1.0;     ///< = xi * u
    double w_body = 1.0;   ///< gamma~_1
    double w_tail = 0.0;   ///< gamma~_2
    double cdf_u = 0.0;    ///< H(u) = w_body * F(u)
};

/// Gaussian-body variant. Same junction structure as HybridParams with the
/// lognormal replaced by N(mean, sd); support extends over the whole line.
struct GaussHybridParams {
    double mean = 0.0;
    double sd = 1.0;
    double u1 = 0.0;
    double u2 = 1.0;
    double lambda = 1.0;
    double xi = 0.1;
    double beta = 1.0;
    double w_body = 1.0;
    double w_bridge = 0.0;
    double w_tail = 0.0;
    double cdf_u1 = 0.0;
    double cdf_u2 = 0.0;

    bool collapsed() const { return u1 == u2; }
};

namespace detail {

inline void require_finite_weights(double w1, double w2, double w3) {
    if (!(std::isfinite(w1) && std::isfinite(w2) && std::isfinite(w3)) || w1 < 0.0 ||
        w2 < 0.0 || w3 < 0.0)
        throw constraint_error("hybrid weights are not finite non-negative");
}

}  // namespace detail

/// Solve the six dependent parameters of the LN-E-GPD model from the free
/// vector [mu, sigma, u2, xi]. Throws constraint_error on an infeasible
/// vector (the calibration loop treats that as a rejected step).
inline HybridParams derive_dependent_params(double mu, double sigma, double u2, double xi) {
    if (!(sigma > 0.0) || !(u2 > 0.0) || !(xi > 0.0))
        throw constraint_error("derive_dependent_params: need sigma>0, u2>0, xi>0");
    HybridParams p;
    p.mu = mu;
    p.sigma = sigma;
    p.u2 = u2;
    p.xi = xi;
    p.beta = xi * u2;
    p.lambda = (1.0 + xi) / p.beta;

    const double s2 = sigma * sigma;
    const double rate = p.lambda * s2;
    const auto psi = [&](double t) { return rate * t - std::log(t) - (s2 - mu); };
    // psi is convex with minimum at 1/rate; the junction is the root on the
    // increasing branch. If it lies beyond u2 (or there is no real root) the
    // bridge collapses; continuity still holds exactly by the weight
    // construction, so the collapsed vector stays admissible.
    double u1 = u2;
    const double tmin = 1.0 / rate;
    if (tmin < u2 && psi(tmin) <= 0.0 && psi(u2) >= 0.0) {
        u1 = solve_bracketed(psi, tmin, u2, 1e-10 * u2,
                             [&](double t) { return rate - 1.0 / t; });
    }
    p.u1 = u1;

    const LognormalParams body{mu, sigma};
    const double f1 = pdf(u1, body);
    const double F1 = cdf(u1, body);
    if (!(f1 > 0.0) || !std::isfinite(f1))
        throw constraint_error("derive_dependent_params: body density vanishes at u1");
    const double e_u1 = std::exp(-p.lambda * u1);
    const double e_u2 = std::exp(-p.lambda * u2);
    p.w_bridge = 1.0 / (xi * e_u2 + (1.0 + p.lambda * F1 / f1) * e_u1);
    p.w_body = p.w_bridge * p.lambda * e_u1 / f1;
    p.w_tail = p.beta * p.w_bridge * p.lambda * e_u2;
    detail::require_finite_weights(p.w_body, p.w_bridge, p.w_tail);

    p.cdf_u1 = p.w_body * F1;
    p.cdf_u2 = 1.0 - p.w_tail;
    return p;
}

/// Solve the LN-GPD dependent parameters from [mu, sigma, u].
inline LnGpdParams derive_lngpd_params(double mu, double sigma, double u) {
    if (!(sigma > 0.0) || !(u > 0.0))
        throw constraint_error("derive_lngpd_params: need sigma>0, u>0");
    const double lu = std::log(u);
    if (!(lu > mu))
        throw constraint_error("derive_lngpd_params: log(u) <= mu gives a non-positive tail index");
    LnGpdParams p;
    p.mu = mu;
    p.sigma = sigma;
    p.u = u;
    p.xi = sigma * sigma / (lu - mu);
    p.beta = p.xi * u;
    const LognormalParams body{mu, sigma};
    const double f = pdf(u, body);
    const double F = cdf(u, body);
    if (!(f > 0.0) || !std::isfinite(f))
        throw constraint_error("derive_lngpd_params: body density vanishes at u");
    p.w_body = 1.0 / (p.beta * f + F);
    // algebraically 1 - w_body*F, written cancellation-free for deep thresholds
    p.w_tail = p.beta * f * p.w_body;
    if (!(std::isfinite(p.w_body) && p.w_body > 0.0 && p.w_tail > 0.0))
        throw constraint_error("derive_lngpd_params: degenerate weights");
    p.cdf_u = p.w_body * F;
    return p;
}

/// Solve the G-E-GPD dependent parameters from [mean, sd, u2, xi]. The lower
/// junction follows from the Gaussian smooth-pasting condition
/// (u1 - mean)/sd^2 = lambda, collapsing to u2 when that lands beyond it.
inline GaussHybridParams derive_gauss_params(double mean, double sd, double u2, double xi) {
    if (!(sd > 0.0) || !(xi > 0.0))
        throw constraint_error("derive_gauss_params: need sd>0, xi>0");
    GaussHybridParams p;
    p.mean = mean;
    p.sd = sd;
    p.u2 = u2;
    p.xi = xi;
    p.beta = xi * u2;
    if (!(p.beta > 0.0)) throw constraint_error("derive_gauss_params: u2 must be positive");
    p.lambda = (1.0 + xi) / p.beta;
    const double u1 = mean + p.lambda * sd * sd;
    p.u1 = (u1 < u2) ? u1 : u2;

    const double z1 = (p.u1 - mean) / sd;
    const double f1 = norm_pdf(z1) / sd;
    const double F1 = norm_cdf(z1);
    if (!(f1 > 0.0) || !std::isfinite(f1))
        throw constraint_error("derive_gauss_params: body density vanishes at u1");
    const double e_u1 = std::exp(-p.lambda * p.u1);
    const double e_u2 = std::exp(-p.lambda * u2);
    p.w_bridge = 1.0 / (xi * e_u2 + (1.0 + p.lambda * F1 / f1) * e_u1);
    p.w_body = p.w_bridge * p.lambda * e_u1 / f1;
    p.w_tail = p.beta * p.w_bridge * p.lambda * e_u2;
    detail::require_finite_weights(p.w_body, p.w_bridge, p.w_tail);
    p.cdf_u1 = p.w_body * F1;
    p.cdf_u2 = 1.0 - p.w_tail;
    return p;
}

// ---------------------------------------------------------------------------
// LN-E-GPD pdf / cdf / quantile / sampling

inline double pdf(double x, const HybridParams& p) {
    if (x <= 0.0) throw std::domain_error("hybrid pdf: x must be positive");
    if (x <= p.u1) return p.w_body * pdf(x, LognormalParams{p.mu, p.sigma});
    if (x < p.u2) return p.w_bridge * p.lambda * std::exp(-p.lambda * x);
    return p.w_tail * gpd_pdf(x - p.u2, GpdParams{p.xi, p.beta, p.u2});
}

inline double log_pdf(double x, const HybridParams& p) {
    if (x <= 0.0) throw std::domain_error("hybrid log_pdf: x must be positive");
    if (x <= p.u1) return std::log(p.w_body) + log_pdf(x, LognormalParams{p.mu, p.sigma});
    if (x < p.u2) return std::log(p.w_bridge * p.lambda) - p.lambda * x;
    return std::log(p.w_tail) + gpd_log_pdf(x - p.u2, GpdParams{p.xi, p.beta, p.u2});
}

inline double cdf(double x, const HybridParams& p) {
    if (x <= 0.0) throw std::domain_error("hybrid cdf: x must be positive");
    if (x <= p.u1) return p.w_body * cdf(x, LognormalParams{p.mu, p.sigma});
    if (x < p.u2)
        return p.cdf_u1 +
               p.w_bridge * (std::exp(-p.lambda * p.u1) - std::exp(-p.lambda * x));
    return 1.0 - p.w_tail * std::exp(-std::log1p(p.xi * (x - p.u2) / p.beta) / p.xi);
}

/// log(1 - cdf); evaluated directly in the tail branch where 1 - H underflows.
inline double log_survival(double x, const HybridParams& p) {
    if (x >= p.u2)
        return std::log(p.w_tail) - std::log1p(p.xi * (x - p.u2) / p.beta) / p.xi;
    return std::log1p(-cdf(x, p));
}

inline double quantile(double q, const HybridParams& p) {
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("hybrid quantile: q in (0,1)");
    if (q <= p.cdf_u1) return quantile(q / p.w_body, LognormalParams{p.mu, p.sigma});
    if (q < p.cdf_u2) {
        const double t = (p.cdf_u1 + p.w_bridge * std::exp(-p.lambda * p.u1) - q) / p.w_bridge;
        return -std::log(t) / p.lambda;
    }
    return p.u2 + gpd_quantile(1.0 - (1.0 - q) / p.w_tail, GpdParams{p.xi, p.beta, p.u2});
}

// ---------------------------------------------------------------------------
// LN-GPD pdf / cdf / quantile

inline double pdf(double x, const LnGpdParams& p) {
    if (x <= 0.0) throw std::domain_error("lngpd pdf: x must be positive");
    if (x <= p.u) return p.w_body * pdf(x, LognormalParams{p.mu, p.sigma});
    return p.w_tail * gpd_pdf(x - p.u, GpdParams{p.xi, p.beta, p.u});
}

inline double log_pdf(double x, const LnGpdParams& p) {
    if (x <= 0.0) throw std::domain_error("lngpd log_pdf: x must be positive");
    if (x <= p.u) return std::log(p.w_body) + log_pdf(x, LognormalParams{p.mu, p.sigma});
    return std::log(p.w_tail) + gpd_log_pdf(x - p.u, GpdParams{p.xi, p.beta, p.u});
}

inline double cdf(double x, const LnGpdParams& p) {
    if (x <= 0.0) throw std::domain_error("lngpd cdf: x must be positive");
    if (x <= p.u) return p.w_body * cdf(x, LognormalParams{p.mu, p.sigma});
    return p.cdf_u + p.w_tail * gpd_cdf(x - p.u, GpdParams{p.xi, p.beta, p.u});
}

inline double log_survival(double x, const LnGpdParams& p) {
    if (x >= p.u)
        return std::log(p.w_tail) - std::log1p(p.xi * (x - p.u) / p.beta) / p.xi;
    return std::log1p(-cdf(x, p));
}

inline double quantile(double q, const LnGpdParams& p) {
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("lngpd quantile: q in (0,1)");
    if (q <= p.cdf_u) return quantile(q / p.w_body, LognormalParams{p.mu, p.sigma});
    return p.u + gpd_quantile(1.0 - (1.0 - q) / p.w_tail, GpdParams{p.xi, p.beta, p.u});
}

// ---------------------------------------------------------------------------
// G-E-GPD pdf / cdf / quantile (support is the whole line)

inline double pdf(double x, const GaussHybridParams& p) {
    if (x <= p.u1) return p.w_body * norm_pdf((x - p.mean) / p.sd) / p.sd;
    if (x < p.u2) return p.w_bridge * p.lambda * std::exp(-p.lambda * x);
    return p.w_tail * gpd_pdf(x - p.u2, GpdParams{p.xi, p.beta, p.u2});
}

inline double log_pdf(double x, const GaussHybridParams& p) {
    if (x <= p.u1) {
        const double z = (x - p.mean) / p.sd;
        return std::log(p.w_body) - 0.5 * z * z - std::log(p.sd) + std::log(kInvSqrt2Pi);
    }
    if (x < p.u2) return std::log(p.w_bridge * p.lambda) - p.lambda * x;
    return std::log(p.w_tail) + gpd_log_pdf(x - p.u2, GpdParams{p.xi, p.beta, p.u2});
}

inline double cdf(double x, const GaussHybridParams& p) {
    if (x <= p.u1) return p.w_body * norm_cdf((x - p.mean) / p.sd);
    if (x < p.u2)
        return p.cdf_u1 +
               p.w_bridge * (std::exp(-p.lambda * p.u1) - std::exp(-p.lambda * x));
    return 1.0 - p.w_tail * std::exp(-std::log1p(p.xi * (x - p.u2) / p.beta) / p.xi);
}

inline double quantile(double q, const GaussHybridParams& p) {
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("gauss hybrid quantile: q in (0,1)");
    if (q <= p.cdf_u1) return p.mean + p.sd * norm_quantile(q / p.w_body);
    if (q < p.cdf_u2) {
        const double t = (p.cdf_u1 + p.w_bridge * std::exp(-p.lambda * p.u1) - q) / p.w_bridge;
        return -std::log(t) / p.lambda;
    }
    return p.u2 + gpd_quantile(1.0 - (1.0 - q) / p.w_tail, GpdParams{p.xi, p.beta, p.u2});
}

// ---------------------------------------------------------------------------
// sampling: one uniform per draw through the exact quantile function, so a
// stream is reproducible from its seed alone

template <class Params>
std::vector<double> sample(const Params& p, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("sample: n must be at least 1");
    UniformRng rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = quantile(rng.next(), p);
    return out;
}

// ---------------------------------------------------------------------------
// invariant checks (mass, continuity, junction smoothness); used by tests and
// callers constructing params by hand

inline double total_mass(const HybridParams& p) {
    const double F1 = cdf(p.u1, LognormalParams{p.mu, p.sigma});
    return p.w_body * F1 +
           p.w_bridge * (std::exp(-p.lambda * p.u1) - std::exp(-p.lambda * p.u2)) + p.w_tail;
}

inline double total_mass(const LnGpdParams& p) {
    return p.w_body * cdf(p.u, LognormalParams{p.mu, p.sigma}) + p.w_tail;
}

inline double total_mass(const GaussHybridParams& p) {
    return p.w_body * norm_cdf((p.u1 - p.mean) / p.sd) +
           p.w_bridge * (std::exp(-p.lambda * p.u1) - std::exp(-p.lambda * p.u2)) + p.w_tail;
}

/// Left/right pdf values at a junction, as the two branch formulas.
struct JunctionValues {
    double left = 0.0;
    double right = 0.0;
    double dlog_left = 0.0;   ///< d(log pdf)/dx from the left
    double dlog_right = 0.0;  ///< d(log pdf)/dx from the right
};

inline JunctionValues junction_lower(const HybridParams& p) {
    JunctionValues j;
    const LognormalParams body{p.mu, p.sigma};
    j.left = p.w_body * pdf(p.u1, body);
    j.right = p.w_bridge * p.lambda * std::exp(-p.lambda * p.u1);
    j.dlog_left = -(1.0 + (std::log(p.u1) - p.mu) / (p.sigma * p.sigma)) / p.u1;
    j.dlog_right = -p.lambda;
    return j;
}

inline JunctionValues junction_upper(const HybridParams& p) {
    JunctionValues j;
    j.left = p.w_bridge * p.lambda * std::exp(-p.lambda * p.u2);
    j.right = p.w_tail / p.beta;
    j.dlog_left = -p.lambda;
    j.dlog_right = -(1.0 + p.xi) / p.beta;
    return j;
}

inline JunctionValues junction(const LnGpdParams& p) {
    JunctionValues j;
    const LognormalParams body{p.mu, p.sigma};
    j.left = p.w_body * pdf(p.u, body);
    j.right = p.w_tail / p.beta;
    j.dlog_left = -(1.0 + (std::log(p.u) - p.mu) / (p.sigma * p.sigma)) / p.u;
    j.dlog_right = -(1.0 + p.xi) / p.beta;
    return j;
}

/// Throws constraint_error if mass or junction continuity are violated.
inline void validate(const HybridParams& p, double mass_tol = 1e-9, double cont_tol = 1e-9) {
    if (!(p.u1 > 0.0 && p.u1 <= p.u2 && p.xi > 0.0 && p.sigma > 0.0 && p.beta > 0.0))
        throw constraint_error("HybridParams: ordering/positivity violated");
    if (std::abs(p.beta - p.xi * p.u2) > 1e-12 * p.beta ||
        std::abs(p.lambda * p.beta - (1.0 + p.xi)) > 1e-12 * (1.0 + p.xi))
        throw constraint_error("HybridParams: beta = xi*u2 / lambda = (1+xi)/beta violated");
    if (std::abs(total_mass(p) - 1.0) > mass_tol)
        throw constraint_error("HybridParams: total mass differs from 1");
    const auto jl = junction_lower(p);
    const auto ju = junction_upper(p);
    if (std::abs(jl.left - jl.right) > cont_tol * std::abs(jl.left) ||
        std::abs(ju.left - ju.right) > cont_tol * std::abs(ju.left))
        throw constraint_error("HybridParams: pdf discontinuous at a junction");
}

inline void validate(const LnGpdParams& p, double mass_tol = 1e-12) {
    if (!(p.u > 0.0 && p.xi > 0.0 && p.sigma > 0.0 && p.beta > 0.0))
        throw constraint_error("LnGpdParams: positivity violated");
    if (!(std::log(p.u) > p.mu)) throw constraint_error("LnGpdParams: log(u) <= mu");
    if (std::abs(total_mass(p) - 1.0) > mass_tol)
        throw constraint_error("LnGpdParams: total mass differs from 1");
}

}  // namespace heavytail
