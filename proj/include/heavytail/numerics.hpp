#pragma once

// Small numeric toolbox shared by the distribution and calibration headers:
// standard normal pdf/cdf/quantile, a stable Mills ratio, bracketed root
// finding and a deterministic uniform generator for inverse-CDF sampling.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

namespace heavytail {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kInvSqrt2Pi = 0.3989422804014327;

/// Raised when a derived parameter vector violates a model constraint.
struct constraint_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised on malformed user input (files, CLI arguments, option values).
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double norm_pdf(double z) {
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double norm_cdf(double z) {
    return 0.5 * std::erfc(-z / kSqrt2);
}

/// Phi(z)/phi(z); switches to the asymptotic series deep in the left tail
/// where both terms underflow.
inline double mills_ratio(double z) {
    if (z < -30.0) {
        const double zi = 1.0 / z;
        return -zi * (1.0 + zi * zi * (-1.0 + zi * zi * 3.0));
    }
    return norm_cdf(z) / norm_pdf(z);
}

/// Inverse standard normal cdf. Rational approximation (Acklam) polished by
/// two Halley steps against erfc, giving near machine precision on (0,1).
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("norm_quantile: p must lie in (0,1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int i = 0; i < 2; ++i) {
        const double e = norm_cdf(x) - p;
        const double u = e / norm_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

/// Bisection on [lo, hi] (f(lo) and f(hi) of opposite sign) polished by a few
/// Newton steps when a derivative is supplied. abs_tol is on the argument.
template <class F>
double solve_bracketed(F&& f, double lo, double hi, double abs_tol,
                       const std::function<double(double)>& dfdx = nullptr) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw std::invalid_argument("solve_bracketed: endpoints do not bracket a root");
    for (int it = 0; it < 200 && hi - lo > abs_tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double x = 0.5 * (lo + hi);
    if (dfdx) {
        for (int it = 0; it < 3; ++it) {
            const double der = dfdx(x);
            if (der == 0.0) break;
            const double step = f(x) / der;
            const double xn = x - step;
            if (xn <= lo || xn >= hi) break;
            x = xn;
        }
    }
    return x;
}

/// Golden-section maximizer on [lo, hi] for a unimodal objective.
template <class F>
double maximize_golden(F&& f, double lo, double hi, double rel_tol = 1e-12,
                       int max_iters = 300) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < max_iters && (b - a) > rel_tol * (std::abs(a) + std::abs(b)); ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

/// Deterministic uniform stream on (0,1). The mt19937_64 output sequence is
/// pinned by the standard; only the distribution adaptors are not, so the
/// 53-bit double conversion is done here explicitly.
class UniformRng {
  public:
    explicit UniformRng(std::uint64_t seed) : engine_(seed) {}

    double next() {
        // 53 random bits, offset by half a ulp to stay inside the open interval
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform index in [0, n). Modulo bias is irrelevant for the shuffling
    /// and partitioning uses here; determinism is what matters.
    std::size_t next_index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace heavytail
