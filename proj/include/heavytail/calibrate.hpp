#pragma once

// The self-calibrating fit: alternating Levenberg-Marquardt passes between
// the tail index and the body/threshold parameters until the free vector
// settles.
//
// Two residual sets drive the fit, following the two distances the method
// minimizes:
//   whole  H(x_(i)) - F_n(x_(i))                 at every sorted data point
//   tail   log(1-H(x_(i))) - log(1-F*_n(x_(i)))  for x_(i) above the current
//          threshold, with F*_n the plotting-position cdf (i-1/2)/n so the
//          logs stay finite
//
// Stage A fixes the body and threshold and moves only the tail index on the
// tail residuals; stage B fixes the tail index and moves [mu, sigma, u2] (or
// [mu, sigma, u] for the two-component model) on the whole residuals. Every
// accepted step must also not increase the concatenated sum of squares, so
// the combined objective is non-increasing along the whole trace.
//
// Free coordinates are optimized in transformed space (log sigma, log u2,
// logit xi) so steps cannot leave the feasible region; steps whose threshold
// escapes the data range or whose derived parameters are infeasible are
// rejected and damping increased.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "heavytail/empirical.hpp"
#include "heavytail/hybrid.hpp"
#include "heavytail/levmar.hpp"
#include "heavytail/numerics.hpp"

namespace heavytail {

enum class TailResidualScale { kLogSurvival, kCdf };

struct FitConfig {
    int max_outer_iters = 100;
    double param_rel_tol = 1e-4;
    int lm_max_iters = 200;
    double lm_damping_init = 1e-3;
    double lm_damping_factor = 10.0;
    TailResidualScale tail_residual_scale = TailResidualScale::kLogSurvival;
    double init_body_quantile = 0.95;
    /// Relative weight of the tail residual block. 1 = plain concatenation.
    double tail_weight = 1.0;
    /// Hard bounds keeping the tail index away from the logit asymptotes,
    /// where its gradient vanishes and the solver could no longer move it.
    double xi_min = 0.02;
    double xi_max = 0.98;
};

struct GoodnessOfFit {
    double rmse_total = 0.0;  ///< percent of probability scale
    double mae_total = 0.0;
    std::optional<double> rmse_tail;  ///< absent when no data lies above u2
    std::optional<double> mae_tail;
    double bic = 0.0;
};

template <class Params>
struct FitReport {
    Params params;
    GoodnessOfFit gof;
    int n_free_params = 0;
    int outer_iters = 0;
    bool converged = false;
    /// Free-vector snapshots in natural coordinates, one per outer iteration
    /// (initialization first).
    std::vector<std::vector<double>> trace;
    /// Concatenated objective after every accepted L-M step; non-increasing.
    std::vector<double> objective_trace;
};

inline double tail_threshold(const HybridParams& p) { return p.u2; }
inline double tail_threshold(const LnGpdParams& p) { return p.u; }
inline double tail_threshold(const GaussHybridParams& p) { return p.u2; }

inline constexpr int n_free_params(const HybridParams&) { return 4; }
inline constexpr int n_free_params(const LnGpdParams&) { return 3; }
inline constexpr int n_free_params(const GaussHybridParams&) { return 4; }

// ---------------------------------------------------------------------------
// goodness of fit

/// RMSE/MAE of cdf residuals at the sorted data points (percent), the tail
/// restriction of both, and BIC = k ln n - 2 ln L.
template <class Params>
GoodnessOfFit goodness_of_fit(const std::vector<double>& data, const Params& params) {
    if (data.empty()) throw std::invalid_argument("goodness_of_fit: empty data");
    std::vector<double> x(data);
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    const double u2 = tail_threshold(params);

    GoodnessOfFit g;
    double se = 0.0, ae = 0.0, se_tail = 0.0, ae_tail = 0.0, loglik = 0.0;
    std::size_t n_tail = 0;
    std::size_t i = 0;
    while (i < n) {
        // right-continuous step height shared by tied values
        std::size_t j = i;
        while (j + 1 < n && x[j + 1] == x[i]) ++j;
        const double fn = static_cast<double>(j + 1) / static_cast<double>(n);
        for (std::size_t k = i; k <= j; ++k) {
            const double r = cdf(x[k], params) - fn;
            se += r * r;
            ae += std::abs(r);
            if (x[k] >= u2) {
                se_tail += r * r;
                ae_tail += std::abs(r);
                ++n_tail;
            }
            loglik += log_pdf(x[k], params);
        }
        i = j + 1;
    }
    g.rmse_total = 100.0 * std::sqrt(se / static_cast<double>(n));
    g.mae_total = 100.0 * ae / static_cast<double>(n);
    if (n_tail > 0) {
        g.rmse_tail = 100.0 * std::sqrt(se_tail / static_cast<double>(n_tail));
        g.mae_tail = 100.0 * ae_tail / static_cast<double>(n_tail);
    }
    g.bic = n_free_params(params) * std::log(static_cast<double>(n)) - 2.0 * loglik;
    return g;
}

// ---------------------------------------------------------------------------
// generic L-M front-end matching the spec's solver contract

/// Minimize ||residual_fn(x)||^2 from x0 with Levenberg-Marquardt.
inline LmResult lm_minimize_config(const LmResiduals& residual_fn,
                                   const std::vector<double>& x0, const FitConfig& cfg = {}) {
    LmOptions opt;
    opt.max_iters = cfg.lm_max_iters;
    opt.damping_init = cfg.lm_damping_init;
    opt.damping_factor = cfg.lm_damping_factor;
    return lm_minimize(residual_fn, x0, opt);
}

// ---------------------------------------------------------------------------
// fit engine internals

namespace detail {

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

/// Invert the moment equations of a normal law right-truncated at c from the
/// mean/std of the truncated sample. Used to seed the body parameters: the
/// plain sample moments of the sub-threshold data are badly biased once the
/// cutoff sits deep inside the body (wide sigma), and a fit started there can
/// pin the tail index at its bound before the body recovers.
inline std::pair<double, double> truncated_normal_init(const std::vector<double>& sample,
                                                       double cutoff) {
    const std::size_t n = sample.size();
    double m = 0.0;
    for (double v : sample) m += v;
    m /= static_cast<double>(n);
    double s2 = 0.0;
    for (double v : sample) s2 += (v - m) * (v - m);
    double s = std::sqrt(s2 / static_cast<double>(n > 1 ? n - 1 : 1));
    if (!(s > 0.0)) return {m, 1e-3};
    const double d = cutoff - m;
    if (!(d > 0.0)) return {m, s};
    const auto ratio = [](double a) {
        const double delta = norm_pdf(a) / std::max(norm_cdf(a), 1e-300);
        const double var_factor = 1.0 - a * delta - delta * delta;
        if (!(var_factor > 0.0)) return 1e9;  // treated as "ratio too large"
        return std::sqrt(var_factor) / (a + delta);
    };
    const double target = s / d;
    double lo = -8.0, hi = 8.0;
    if (ratio(hi) > target) return {m, s};  // cutoff is effectively beyond the body
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (ratio(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    const double a = 0.5 * (lo + hi);
    const double delta = norm_pdf(a) / std::max(norm_cdf(a), 1e-300);
    const double sigma = d / (a + delta);
    if (!(sigma > 0.0) || !std::isfinite(sigma)) return {m, s};
    return {cutoff - a * sigma, sigma};
}

/// Shared residual/objective state for one fit.
template <class Traits>
struct FitWorkspace {
    using Params = typename Traits::Params;

    std::vector<double> x;            // sorted data
    std::vector<double> fn;           // right-continuous ecdf heights
    std::vector<double> fstar;        // plotting positions (i-1/2)/n
    std::vector<double> log_sv_star;  // log(1 - (i-1/2)/n)
    const FitConfig& cfg;

    FitWorkspace(std::vector<double> sorted, const FitConfig& c)
        : x(std::move(sorted)), cfg(c) {
        const std::size_t n = x.size();
        fn.resize(n);
        log_sv_star.resize(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && x[j + 1] == x[i]) ++j;
            const double h = static_cast<double>(j + 1) / static_cast<double>(n);
            for (std::size_t k = i; k <= j; ++k) fn[k] = h;
            i = j + 1;
        }
        fstar.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            // E[U_(i:n)] = i/(n+1): the rank-unbiased position for cdf-space
            // residuals; the log block keeps the midpoint convention, which
            // is the closer match to E[log(1-U_(i:n))]
            fstar[k] = (static_cast<double>(k) + 1.0) / static_cast<double>(n + 1);
            log_sv_star[k] =
                std::log1p(-(static_cast<double>(k) + 0.5) / static_cast<double>(n));
        }
    }

    std::optional<Params> make(const std::vector<double>& t) const {
        try {
            Params p = Traits::from_transformed(t);
            if (!(tail_threshold(p) < x.back())) return std::nullopt;
            return p;
        } catch (const constraint_error&) {
            return std::nullopt;
        }
    }

    std::optional<std::vector<double>> whole_residuals(const std::vector<double>& t) const {
        auto p = make(t);
        if (!p) return std::nullopt;
        std::vector<double> r(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) r[i] = cdf(x[i], *p) - fstar[i];
        return r;
    }

    std::optional<std::vector<double>> tail_residuals(const std::vector<double>& t,
                                                      double threshold) const {
        auto p = make(t);
        if (!p) return std::nullopt;
        const auto first =
            std::upper_bound(x.begin(), x.end(), threshold) - x.begin();
        if (static_cast<std::size_t>(first) >= x.size()) return std::nullopt;
        std::vector<double> r;
        r.reserve(x.size() - first);
        append_tail(r, *p, static_cast<std::size_t>(first));
        return r;
    }


    void append_tail(std::vector<double>& r, const typename Traits::Params& p,
                     std::size_t first) const {
        if (cfg.tail_residual_scale == TailResidualScale::kLogSurvival) {
            for (std::size_t i = first; i < x.size(); ++i)
                r.push_back(cfg.tail_weight *
                            (Traits::log_survival_at(x[i], p) - log_sv_star[i]));
        } else {
            for (std::size_t i = first; i < x.size(); ++i)
                r.push_back(cfg.tail_weight *
                            (cdf(x[i], p) - (-std::expm1(log_sv_star[i]))));
        }
    }

    /// Whole residuals concatenated with the tail block on the exceedance
    /// set of `threshold` (frozen for the duration of one stage; the model
    /// side follows the candidate parameters). Both stages block-coordinate
    /// descend on this one composition.
    std::optional<std::vector<double>> combined_residuals(const std::vector<double>& t,
                                                          double threshold) const {
        auto p = make(t);
        if (!p) return std::nullopt;
        const auto first = static_cast<std::size_t>(
            std::upper_bound(x.begin(), x.end(), threshold) - x.begin());
        if (first >= x.size()) return std::nullopt;
        std::vector<double> r;
        r.reserve(2 * x.size() - first);
        for (std::size_t i = 0; i < x.size(); ++i) r.push_back(cdf(x[i], *p) - fstar[i]);
        append_tail(r, *p, first);
        return r;
    }

    /// Concatenated objective: whole SSQ plus tail SSQ at the candidate's own
    /// threshold. Infinity marks an infeasible point.
    double objective(const std::vector<double>& t) const {
        auto p = make(t);
        if (!p) return std::numeric_limits<double>::infinity();
        const double u2 = tail_threshold(*p);
        const auto first = static_cast<std::size_t>(
            std::upper_bound(x.begin(), x.end(), u2) - x.begin());
        if (first >= x.size()) return std::numeric_limits<double>::infinity();
        double ssq = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = cdf(x[i], *p) - fstar[i];
            ssq += r * r;
            if (i >= first) {
                double rt;
                if (cfg.tail_residual_scale == TailResidualScale::kLogSurvival)
                    rt = cfg.tail_weight * (Traits::log_survival_at(x[i], *p) - log_sv_star[i]);
                else
                    rt = cfg.tail_weight * (cdf(x[i], *p) - (-std::expm1(log_sv_star[i])));
                ssq += rt * rt;
            }
        }
        return ssq;
    }
};

template <class Traits>
FitReport<typename Traits::Params> fit_model(const std::vector<double>& data,
                                             const FitConfig& cfg) {
    using Params = typename Traits::Params;
    if (data.size() < 100)
        throw input_error("fit: need at least 100 observations");
    for (double v : data)
        if (!std::isfinite(v) || v <= 0.0)
            throw input_error("fit: data must be finite and positive");

    std::vector<double> sorted(data);
    std::sort(sorted.begin(), sorted.end());
    FitWorkspace<Traits> ws(std::move(sorted), cfg);

    std::vector<double> t = Traits::initial_transformed(ws.x, cfg);
    if (!ws.make(t)) throw constraint_error("fit: infeasible initialization");

    FitReport<Params> report;
    report.n_free_params = static_cast<int>(t.size());

    double phi = ws.objective(t);
    report.objective_trace.push_back(phi);
    report.trace.push_back(Traits::natural(*ws.make(t)));

    LmOptions lm_opt;
    lm_opt.max_iters = cfg.lm_max_iters;
    lm_opt.damping_init = cfg.lm_damping_init;
    lm_opt.damping_factor = cfg.lm_damping_factor;

    // monotone acceptance shared by both stages: candidate must keep the
    // concatenated objective from increasing
    const auto make_accept = [&](auto&& embed) {
        return [&, embed](const std::vector<double>& sub) {
            const std::vector<double> full = embed(sub);
            if (!Traits::in_bounds(full, cfg)) return false;
            const double cand = ws.objective(full);
            if (!(cand <= phi * (1.0 + 1e-12))) return false;
            phi = cand;
            report.objective_trace.push_back(cand);
            return true;
        };
    };

    std::vector<double> prev_natural = report.trace.front();
    int outer = 0;
    bool converged = false;
    for (; outer < cfg.max_outer_iters; ++outer) {
        // Both stages are block-coordinate passes over the same concatenated
        // residual vector (whole + tail, the tail block frozen on the
        // stage-entry exceedance set). Two different stage objectives would
        // fight each other and leave the alternation crawling around a biased
        // fixed point.
        // stage A: the tail index alone
        {
            const std::size_t c = Traits::kTailCoord;
            const double threshold = tail_threshold(*ws.make(t));
            auto embed = [&](const std::vector<double>& sub) {
                std::vector<double> full = t;
                full[c] = sub[0];
                return full;
            };
            const auto resid = [&](const std::vector<double>& sub) {
                return ws.combined_residuals(embed(sub), threshold);
            };
            auto lr = lm_minimize(resid, {t[c]}, lm_opt, make_accept(embed));
            t[c] = lr.x[0];
        }
        // stage B: the body and threshold coordinates with the tail index fixed
        {
            const std::size_t c = Traits::kTailCoord;
            const double threshold = tail_threshold(*ws.make(t));
            auto embed = [&](const std::vector<double>& sub) {
                std::vector<double> full(t.size());
                std::size_t k = 0;
                for (std::size_t j = 0; j < t.size(); ++j)
                    full[j] = (j == c) ? t[c] : sub[k++];
                return full;
            };
            const auto resid = [&](const std::vector<double>& sub) {
                return ws.combined_residuals(embed(sub), threshold);
            };
            std::vector<double> sub;
            for (std::size_t j = 0; j < t.size(); ++j)
                if (j != c) sub.push_back(t[j]);
            auto lr = lm_minimize(resid, sub, lm_opt, make_accept(embed));
            t = embed(lr.x);
        }

        const std::vector<double> natural = Traits::natural(*ws.make(t));
        report.trace.push_back(natural);
        double rel = 0.0;
        for (std::size_t j = 0; j < natural.size(); ++j)
            rel = std::max(rel, std::abs(natural[j] - prev_natural[j]) /
                                    (std::abs(prev_natural[j]) + 1e-8));
        prev_natural = natural;
        if (rel < cfg.param_rel_tol) {
            converged = true;
            ++outer;
            break;
        }
    }

    report.params = *ws.make(t);
    report.outer_iters = outer;
    report.converged = converged;
    report.gof = goodness_of_fit(data, report.params);
    return report;
}

struct HybridTraits {
    using Params = HybridParams;
    static constexpr std::size_t kTailCoord = 3;  // logit xi

    static Params from_transformed(const std::vector<double>& t) {
        return derive_dependent_params(t[0], std::exp(t[1]), std::exp(t[2]), expit(t[3]));
    }

    static std::vector<double> natural(const Params& p) {
        return {p.mu, p.sigma, p.u2, p.xi};
    }

    static double log_survival_at(double x, const Params& p) { return log_survival(x, p); }

    static bool in_bounds(const std::vector<double>& t, const FitConfig& cfg) {
        return t[3] >= logit(cfg.xi_min) && t[3] <= logit(cfg.xi_max);
    }

    static std::vector<double> initial_transformed(const std::vector<double>& sorted,
                                                   const FitConfig& cfg) {
        const EmpiricalDist d{sorted};
        const double u2_0 = empirical_quantile(d, cfg.init_body_quantile);
        std::vector<double> logs;
        logs.reserve(sorted.size());
        for (double v : sorted) {
            if (v >= u2_0) break;
            logs.push_back(std::log(v));
        }
        if (logs.size() < 2) throw constraint_error("fit: too few body observations");
        auto [mu0, sigma0] = truncated_normal_init(logs, std::log(u2_0));
        double xi0 = hill_estimate(d, u2_0).xi_hat;
        xi0 = std::clamp(xi0, 0.05, 0.95);
        return {mu0, std::log(sigma0), std::log(u2_0), logit(xi0)};
    }
};

struct LnGpdTraits {
    using Params = LnGpdParams;
    static constexpr std::size_t kTailCoord = 2;  // log u

    static Params from_transformed(const std::vector<double>& t) {
        return derive_lngpd_params(t[0], std::exp(t[1]), std::exp(t[2]));
    }

    static std::vector<double> natural(const Params& p) { return {p.mu, p.sigma, p.u}; }

    static double log_survival_at(double x, const Params& p) { return log_survival(x, p); }

    static bool in_bounds(const std::vector<double>&, const FitConfig&) { return true; }

    static std::vector<double> initial_transformed(const std::vector<double>& sorted,
                                                   const FitConfig& cfg) {
        const EmpiricalDist d{sorted};
        double u0 = empirical_quantile(d, cfg.init_body_quantile);
        std::vector<double> logs;
        logs.reserve(sorted.size());
        for (double v : sorted) {
            if (v >= u0) break;
            logs.push_back(std::log(v));
        }
        if (logs.size() < 2) throw constraint_error("fit: too few body observations");
        auto [mu0, sigma0] = truncated_normal_init(logs, std::log(u0));
        // feasibility needs log u > mu; nudge up when the body quantile sits
        // below that, capped so a few tail observations remain
        const double min_log_u = mu0 + sigma0 * sigma0 / 20.0;
        if (std::log(u0) < min_log_u) {
            const double cap = sorted[sorted.size() - 5];
            u0 = std::exp(min_log_u);
            if (u0 > cap) u0 = cap;
            if (!(std::log(u0) > mu0))
                throw constraint_error("fit: cannot place an admissible threshold");
        }
        return {mu0, std::log(sigma0), std::log(u0)};
    }
};

struct GaussHybridTraits {
    using Params = GaussHybridParams;
    static constexpr std::size_t kTailCoord = 3;  // logit xi

    static Params from_transformed(const std::vector<double>& t) {
        return derive_gauss_params(t[0], std::exp(t[1]), std::exp(t[2]), expit(t[3]));
    }

    static std::vector<double> natural(const Params& p) {
        return {p.mean, p.sd, p.u2, p.xi};
    }

    static double log_survival_at(double x, const Params& p) {
        if (x >= p.u2)
            return std::log(p.w_tail) - std::log1p(p.xi * (x - p.u2) / p.beta) / p.xi;
        return std::log1p(-cdf(x, p));
    }

    static bool in_bounds(const std::vector<double>& t, const FitConfig& cfg) {
        return t[3] >= logit(cfg.xi_min) && t[3] <= logit(cfg.xi_max);
    }

    static std::vector<double> initial_transformed(const std::vector<double>& sorted,
                                                   const FitConfig& cfg) {
        const EmpiricalDist d{sorted};
        const double u2_0 = empirical_quantile(d, cfg.init_body_quantile);
        std::vector<double> body;
        body.reserve(sorted.size());
        for (double v : sorted) {
            if (v >= u2_0) break;
            body.push_back(v);
        }
        if (body.size() < 2) throw constraint_error("fit: too few body observations");
        auto [m0, s0] = truncated_normal_init(body, u2_0);
        double xi0 = hill_estimate(d, u2_0).xi_hat;
        xi0 = std::clamp(xi0, 0.05, 0.95);
        return {m0, std::log(s0), std::log(u2_0), logit(xi0)};
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// public fit entry points

/// Calibrate the three-component LN-E-GPD model.
inline FitReport<HybridParams> fit_hybrid(const std::vector<double>& data,
                                          const FitConfig& cfg = {}) {
    return detail::fit_model<detail::HybridTraits>(data, cfg);
}

/// Calibrate the two-component LN-GPD model.
inline FitReport<LnGpdParams> fit_lngpd(const std::vector<double>& data,
                                        const FitConfig& cfg = {}) {
    return detail::fit_model<detail::LnGpdTraits>(data, cfg);
}

/// Calibrate the Gaussian-body G-E-GPD variant (diagnostics / comparison).
inline FitReport<GaussHybridParams> fit_gauss_hybrid(const std::vector<double>& data,
                                                     const FitConfig& cfg = {}) {
    return detail::fit_model<detail::GaussHybridTraits>(data, cfg);
}

}  // namespace heavytail
