#pragma once

// Delete-block Jackknife confidence ranges. The sample is randomly (seeded)
// partitioned into m disjoint blocks; subsample i omits block i, so every
// observation is left out exactly once. For each estimated coordinate,
//
//   sigma_hat = sqrt( (1 - 1/m) * sum_i (est_i - mean)^2 )
//   a95       = Phi^{-1}(0.975) * sigma_hat
//
// and the 95% confidence range is centered on the full-sample estimate.

#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "heavytail/numerics.hpp"

namespace heavytail {

struct JackknifeResult {
    std::vector<double> estimates;  ///< per-subsample values, block order
    double pooled_mean = 0.0;
    double sigma_hat = 0.0;
    double a95 = 0.0;
    double full_estimate = 0.0;
    std::pair<double, double> cr95 = {0.0, 0.0};  ///< full_estimate -+ a95
};

struct JackknifeSummary {
    std::vector<JackknifeResult> coords;  ///< one per estimator coordinate
    int m_requested = 0;
    int m_effective = 0;              ///< blocks whose subsample fit succeeded
    std::vector<int> failed_blocks;   ///< indices of excluded subsamples
    bool warning = false;             ///< set when any subsample was excluded
};

using JackknifeEstimator = std::function<std::vector<double>(const std::vector<double>&)>;

/// Seeded partition of {0..n-1} into m blocks with sizes differing by at most
/// one (Fisher-Yates shuffle, contiguous slices).
inline std::vector<std::vector<std::size_t>> jackknife_partition(std::size_t n, int m,
                                                                 std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    UniformRng rng(seed);
    for (std::size_t i = n; i-- > 1;) std::swap(idx[i], idx[rng.next_index(i + 1)]);
    std::vector<std::vector<std::size_t>> blocks(m);
    const std::size_t base = n / static_cast<std::size_t>(m);
    const std::size_t extra = n % static_cast<std::size_t>(m);
    std::size_t pos = 0;
    for (int b = 0; b < m; ++b) {
        const std::size_t len = base + (static_cast<std::size_t>(b) < extra ? 1 : 0);
        blocks[b].assign(idx.begin() + pos, idx.begin() + pos + len);
        pos += len;
    }
    return blocks;
}

inline JackknifeSummary jackknife(const std::vector<double>& data, int m,
                                  const JackknifeEstimator& estimator, std::uint64_t seed,
                                  bool parallel = true) {
    if (m < 2) throw std::invalid_argument("jackknife: m must be at least 2");
    if (data.size() < static_cast<std::size_t>(10 * m))
        throw std::invalid_argument("jackknife: need at least 10*m observations");

    const auto blocks = jackknife_partition(data.size(), m, seed);
    const std::vector<double> full = estimator(data);
    const std::size_t dim = full.size();

    const auto run_block = [&](int b) -> std::optional<std::vector<double>> {
        std::vector<char> omit(data.size(), 0);
        for (std::size_t i : blocks[b]) omit[i] = 1;
        std::vector<double> sub;
        sub.reserve(data.size() - blocks[b].size());
        for (std::size_t i = 0; i < data.size(); ++i)
            if (!omit[i]) sub.push_back(data[i]);
        try {
            auto est = estimator(sub);
            if (est.size() != dim) return std::nullopt;
            return est;
        } catch (...) {
            return std::nullopt;
        }
    };

    // fan out, reduce in block order
    std::vector<std::optional<std::vector<double>>> per_block(m);
    if (parallel) {
        std::vector<std::future<std::optional<std::vector<double>>>> futures;
        futures.reserve(m);
        for (int b = 0; b < m; ++b)
            futures.push_back(std::async(std::launch::async, run_block, b));
        for (int b = 0; b < m; ++b) per_block[b] = futures[b].get();
    } else {
        for (int b = 0; b < m; ++b) per_block[b] = run_block(b);
    }

    JackknifeSummary out;
    out.m_requested = m;
    for (int b = 0; b < m; ++b)
        if (!per_block[b]) out.failed_blocks.push_back(b);
    out.m_effective = m - static_cast<int>(out.failed_blocks.size());
    out.warning = !out.failed_blocks.empty();
    if (out.m_effective < 2)
        throw std::runtime_error("jackknife: fewer than 2 subsample estimates succeeded");

    const double meff = out.m_effective;
    const double z975 = 1.959963984540054;
    out.coords.resize(dim);
    for (std::size_t c = 0; c < dim; ++c) {
        auto& jr = out.coords[c];
        jr.full_estimate = full[c];
        for (int b = 0; b < m; ++b)
            if (per_block[b]) jr.estimates.push_back((*per_block[b])[c]);
        double mean = 0.0;
        for (double e : jr.estimates) mean += e;
        mean /= meff;
        jr.pooled_mean = mean;
        double ss = 0.0;
        for (double e : jr.estimates) ss += (e - mean) * (e - mean);
        jr.sigma_hat = std::sqrt((1.0 - 1.0 / meff) * ss);
        jr.a95 = z975 * jr.sigma_hat;
        jr.cr95 = {jr.full_estimate - jr.a95, jr.full_estimate + jr.a95};
    }
    return out;
}

}  // namespace heavytail
