#pragma once

// Monte Carlo study harness: generate-fit-score loops across generating
// models, tail indices, sample sizes and seeds. Reproduces the simulation
// protocol used to validate the calibration (relative-error tables and the
// convergence-in-sample-size curves).
//
// Runs are deterministic given the base seed: run r (ordered by size, then
// seed index) draws its sample with seed base_seed + r. Seeds fan out across
// a small worker pool; aggregation is in run order regardless of completion
// order, so reports are bit-identical whatever the thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "heavytail/calibrate.hpp"
#include "heavytail/hybrid.hpp"

namespace heavytail {

enum class McGenerator { kLnEGpd, kLnGpd };
enum class McFitter { kThreeComponent, kTwoComponent };

struct McScenario {
    McGenerator generator = McGenerator::kLnEGpd;
    /// Generating parameters. For LN-GPD, threshold is the single junction u
    /// and xi is implied by (mu, sigma, u); the stored xi is ignored.
    double mu = 1.0;
    double sigma = 2.0;
    double threshold = 14.59;
    double xi = 1.0 / 3.0;
    McFitter fitter = McFitter::kThreeComponent;
    std::vector<std::size_t> sizes = {10000};
    int n_seeds = 20;  ///< desk scale; the full-scale study uses 100
    std::uint64_t base_seed = 1;
    FitConfig fit;
};

struct McRunRecord {
    std::size_t size = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    bool converged = false;
    std::string error;
    double mu = 0, sigma = 0, u1 = 0, u2 = 0, xi = 0;
    double level_u1 = 0, level_u2 = 0;  ///< fitted model cdf at its thresholds
    double rmse_total = 0, bic = 0;
    int outer_iters = 0;
    /// Free-vector snapshots of the underlying fit, for audit.
    std::vector<std::vector<double>> trace;
};

/// Mean/std across seeds and the error against the generating value.
/// When the generating value is 0 the relative error is undefined ("ND");
/// the absolute error is reported instead.
struct McStat {
    double truth = 0;
    double mean = 0;
    double std_dev = 0;
    double err = 0;  ///< relative, or absolute when nd
    bool nd = false;
};

struct McSizeSummary {
    std::size_t size = 0;
    int n_ok = 0;
    int n_failed = 0;
    McStat mu, sigma, u1, u2, xi, level_u1, level_u2;
    double median_abs_rel_err_xi = 0.0;
};

struct McTruth {
    double mu = 0, sigma = 0, u1 = 0, u2 = 0, xi = 0;
    double level_u1 = 0, level_u2 = 0;
};

struct McReport {
    McScenario scenario;
    McTruth truth;
    std::vector<McRunRecord> runs;  ///< run order: by size, then seed index
    std::vector<McSizeSummary> sizes;
};

namespace detail {

inline McTruth mc_truth(const McScenario& sc) {
    McTruth t;
    t.mu = sc.mu;
    t.sigma = sc.sigma;
    if (sc.generator == McGenerator::kLnEGpd) {
        const auto p = derive_dependent_params(sc.mu, sc.sigma, sc.threshold, sc.xi);
        t.u1 = p.u1;
        t.u2 = p.u2;
        t.xi = p.xi;
        t.level_u1 = p.cdf_u1;
        t.level_u2 = p.cdf_u2;
    } else {
        const auto p = derive_lngpd_params(sc.mu, sc.sigma, sc.threshold);
        t.u1 = p.u;
        t.u2 = p.u;
        t.xi = p.xi;
        t.level_u1 = p.cdf_u;
        t.level_u2 = p.cdf_u;
    }
    return t;
}

inline std::vector<double> mc_sample(const McScenario& sc, std::size_t n,
                                     std::uint64_t seed) {
    if (sc.generator == McGenerator::kLnEGpd)
        return sample(derive_dependent_params(sc.mu, sc.sigma, sc.threshold, sc.xi), n, seed);
    return sample(derive_lngpd_params(sc.mu, sc.sigma, sc.threshold), n, seed);
}

inline void mc_fit_into(const McScenario& sc, const std::vector<double>& data,
                        McRunRecord& rec) {
    if (sc.fitter == McFitter::kThreeComponent) {
        const auto r = fit_hybrid(data, sc.fit);
        rec.converged = r.converged;
        rec.mu = r.params.mu;
        rec.sigma = r.params.sigma;
        rec.u1 = r.params.u1;
        rec.u2 = r.params.u2;
        rec.xi = r.params.xi;
        rec.level_u1 = r.params.cdf_u1;
        rec.level_u2 = r.params.cdf_u2;
        rec.rmse_total = r.gof.rmse_total;
        rec.bic = r.gof.bic;
        rec.outer_iters = r.outer_iters;
        rec.trace = r.trace;
    } else {
        const auto r = fit_lngpd(data, sc.fit);
        rec.converged = r.converged;
        rec.mu = r.params.mu;
        rec.sigma = r.params.sigma;
        rec.u1 = r.params.u;
        rec.u2 = r.params.u;
        rec.xi = r.params.xi;
        rec.level_u1 = r.params.cdf_u;
        rec.level_u2 = r.params.cdf_u;
        rec.rmse_total = r.gof.rmse_total;
        rec.bic = r.gof.bic;
        rec.outer_iters = r.outer_iters;
        rec.trace = r.trace;
    }
}

inline McStat mc_stat(double truth, const std::vector<double>& values) {
    McStat s;
    s.truth = truth;
    if (values.empty()) return s;
    double sum = 0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_dev = values.size() > 1
                    ? std::sqrt(ss / static_cast<double>(values.size() - 1))
                    : 0.0;
    s.nd = truth == 0.0;
    s.err = s.nd ? (s.mean - truth) : (s.mean - truth) / truth;
    return s;
}

}  // namespace detail

inline McReport run_mc_study(const McScenario& sc, unsigned n_threads = 0) {
    if (sc.sizes.empty()) throw std::invalid_argument("run_mc_study: sizes must be nonempty");
    if (sc.n_seeds < 1) throw std::invalid_argument("run_mc_study: n_seeds must be >= 1");

    McReport report;
    report.scenario = sc;
    report.truth = detail::mc_truth(sc);

    const std::size_t n_runs = sc.sizes.size() * static_cast<std::size_t>(sc.n_seeds);
    report.runs.resize(n_runs);
    for (std::size_t r = 0; r < n_runs; ++r) {
        auto& rec = report.runs[r];
        rec.size = sc.sizes[r / sc.n_seeds];
        rec.seed = sc.base_seed + r;
    }

    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t r = next.fetch_add(1);
            if (r >= n_runs) return;
            auto& rec = report.runs[r];
            try {
                const auto data = detail::mc_sample(sc, rec.size, rec.seed);
                detail::mc_fit_into(sc, data, rec);
                rec.ok = true;
            } catch (const std::exception& e) {
                rec.ok = false;
                rec.error = e.what();
            }
        }
    };
    unsigned hw = n_threads ? n_threads : std::thread::hardware_concurrency();
    if (hw < 1) hw = 1;
    if (hw > n_runs) hw = static_cast<unsigned>(n_runs);
    if (hw <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(hw);
        for (unsigned i = 0; i < hw; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t si = 0; si < sc.sizes.size(); ++si) {
        McSizeSummary s;
        s.size = sc.sizes[si];
        std::vector<double> mu, sigma, u1, u2, xi, l1, l2, abs_err;
        for (int k = 0; k < sc.n_seeds; ++k) {
            const auto& rec = report.runs[si * sc.n_seeds + k];
            if (!rec.ok) {
                ++s.n_failed;
                continue;
            }
            ++s.n_ok;
            mu.push_back(rec.mu);
            sigma.push_back(rec.sigma);
            u1.push_back(rec.u1);
            u2.push_back(rec.u2);
            xi.push_back(rec.xi);
            l1.push_back(rec.level_u1);
            l2.push_back(rec.level_u2);
            abs_err.push_back(std::abs(rec.xi - report.truth.xi) / report.truth.xi);
        }
        s.mu = detail::mc_stat(report.truth.mu, mu);
        s.sigma = detail::mc_stat(report.truth.sigma, sigma);
        s.u1 = detail::mc_stat(report.truth.u1, u1);
        s.u2 = detail::mc_stat(report.truth.u2, u2);
        s.xi = detail::mc_stat(report.truth.xi, xi);
        s.level_u1 = detail::mc_stat(report.truth.level_u1, l1);
        s.level_u2 = detail::mc_stat(report.truth.level_u2, l2);
        if (!abs_err.empty()) {
            std::sort(abs_err.begin(), abs_err.end());
            const std::size_t n = abs_err.size();
            s.median_abs_rel_err_xi =
                (n % 2 == 1) ? abs_err[n / 2] : 0.5 * (abs_err[n / 2 - 1] + abs_err[n / 2]);
        }
        report.sizes.push_back(s);
    }
    return report;
}

/// The convergence-in-sample-size experiment: three-component fitter over a
/// ladder of sizes, summaries ordered by size.
inline McReport convergence_curve(McScenario sc, unsigned n_threads = 0) {
    sc.fitter = McFitter::kThreeComponent;
    std::sort(sc.sizes.begin(), sc.sizes.end());
    return run_mc_study(sc, n_threads);
}

/// Plain-text CSV of the per-size summary grid.
inline void write_mc_csv(const McReport& report, std::ostream& os) {
    os << "size,n_ok,n_failed,param,truth,mean,std,err,nd\n";
    const auto row = [&](const McSizeSummary& s, const char* name, const McStat& st) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%s,%.17g,%.17g,%.17g,%.17g,%d\n",
                      s.size, s.n_ok, s.n_failed, name, st.truth, st.mean, st.std_dev,
                      st.err, st.nd ? 1 : 0);
        os << buf;
    };
    for (const auto& s : report.sizes) {
        row(s, "mu", s.mu);
        row(s, "sigma", s.sigma);
        row(s, "u1", s.u1);
        row(s, "u2", s.u2);
        row(s, "xi", s.xi);
        row(s, "level_u1", s.level_u1);
        row(s, "level_u2", s.level_u2);
    }
}

}  // namespace heavytail
