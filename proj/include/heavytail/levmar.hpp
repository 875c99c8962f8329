#pragma once

// Dense Levenberg-Marquardt for small parameter vectors (the calibration
// loop never exceeds 4 coordinates). Jacobians come from forward differences;
// the normal equations use Marquardt diagonal scaling and a plain Cholesky.
//
// The residual callback may return std::nullopt to mark a candidate point as
// infeasible; such trial steps are rejected and damping increased, which is
// how parameter constraints (positivity, thresholds inside the data range)
// are enforced by the callers. An optional acceptance predicate can veto
// steps on external criteria the residuals themselves do not see.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace heavytail {

struct LmOptions {
    int max_iters = 200;
    double damping_init = 1e-3;
    double damping_factor = 10.0;
    double grad_tol = 1e-8;
    double step_tol = 1e-10;
    double damping_max = 1e12;
};

struct LmResult {
    std::vector<double> x;
    double rss = 0.0;
    int iters = 0;
    bool converged = false;  ///< hit a gradient/step tolerance
    bool degraded = false;   ///< singular normal equations at maximal damping
};

namespace detail {

/// Cholesky solve of A x = b for small symmetric A; false if not SPD.
inline bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                           std::vector<double>& out) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    out.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * out[k];
        out[ii] = s / a[ii * n + ii];
    }
    return true;
}

inline double sum_sq(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
}

}  // namespace detail

using LmResiduals =
    std::function<std::optional<std::vector<double>>(const std::vector<double>&)>;
using LmAccept = std::function<bool(const std::vector<double>&)>;

inline LmResult lm_minimize(const LmResiduals& residuals, std::vector<double> x0,
                            const LmOptions& opt = {}, const LmAccept& accept = nullptr) {
    const std::size_t n = x0.size();
    LmResult res;
    res.x = std::move(x0);

    auto r_opt = residuals(res.x);
    if (!r_opt) {
        res.degraded = true;
        return res;
    }
    std::vector<double> r = std::move(*r_opt);
    const std::size_t m = r.size();
    res.rss = detail::sum_sq(r);

    double damping = opt.damping_init;
    std::vector<double> jac(m * n);  // column-major: jac[col*m + row]
    std::vector<double> g(n), a(n * n), step;

    for (res.iters = 0; res.iters < opt.max_iters; ++res.iters) {
        // forward-difference Jacobian, falling back to a backward probe when
        // the forward point is infeasible
        bool have_jac = true;
        for (std::size_t j = 0; j < n && have_jac; ++j) {
            const double h = 1.4901161193847656e-8 * (std::abs(res.x[j]) + 1e-4);
            std::vector<double> xp = res.x;
            xp[j] += h;
            auto rp = residuals(xp);
            double scale = 1.0 / h;
            if (!rp) {
                xp[j] = res.x[j] - h;
                rp = residuals(xp);
                scale = -1.0 / h;
            }
            if (!rp || rp->size() != m) {
                have_jac = false;
                break;
            }
            for (std::size_t i = 0; i < m; ++i) jac[j * m + i] = ((*rp)[i] - r[i]) * scale;
        }
        if (!have_jac) {
            res.degraded = true;
            break;
        }

        double gmax = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += jac[j * m + i] * r[i];
            g[j] = s;
            gmax = std::max(gmax, std::abs(s));
        }
        if (gmax < opt.grad_tol) {
            res.converged = true;
            break;
        }
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = j; k < n; ++k) {
                double s = 0.0;
                for (std::size_t i = 0; i < m; ++i) s += jac[j * m + i] * jac[k * m + i];
                a[j * n + k] = s;
                a[k * n + j] = s;
            }

        bool stepped = false;
        while (damping <= opt.damping_max) {
            std::vector<double> ad = a;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = a[j * n + j];
                ad[j * n + j] = d + damping * (d > 0.0 ? d : 1.0);
            }
            std::vector<double> rhs(n);
            for (std::size_t j = 0; j < n; ++j) rhs[j] = -g[j];
            if (!detail::cholesky_solve(ad, rhs, n, step)) {
                damping *= opt.damping_factor;
                continue;
            }
            double step_norm = 0.0, x_norm = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                step_norm += step[j] * step[j];
                x_norm += res.x[j] * res.x[j];
            }
            step_norm = std::sqrt(step_norm);
            x_norm = std::sqrt(x_norm);
            if (step_norm < opt.step_tol * (x_norm + opt.step_tol)) {
                res.converged = true;
                stepped = false;
                break;
            }
            std::vector<double> xn = res.x;
            for (std::size_t j = 0; j < n; ++j) xn[j] += step[j];
            auto rn = residuals(xn);
            if (rn && rn->size() == m) {
                const double rss_n = detail::sum_sq(*rn);
                if (rss_n < res.rss && (!accept || accept(xn))) {
                    res.x = std::move(xn);
                    r = std::move(*rn);
                    res.rss = rss_n;
                    damping = std::max(damping / opt.damping_factor, 1e-12);
                    stepped = true;
                    break;
                }
            }
            damping *= opt.damping_factor;
        }
        if (res.converged) break;
        if (!stepped) {
            res.degraded = damping > opt.damping_max;
            break;
        }
    }
    return res;
}

}  // namespace heavytail
