#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "heavytail/distributions.hpp"
#include "heavytail/empirical.hpp"
#include "test_util.hpp"

using namespace heavytail;
using Catch::Approx;

TEST_CASE("hill estimator hand example") {
    const auto d = EmpiricalDist::from_data({1.0, 2.0, 4.0, 8.0});
    const auto r = hill_estimate(d, 1.0);
    CHECK(r.k == 3);
    CHECK(r.xi_hat == Approx(2.0 * std::log(2.0)).margin(1e-15));
    CHECK(r.ci_lo == Approx(r.xi_hat * (1.0 - 1.959963984540054 / std::sqrt(3.0))).epsilon(1e-12));
    CHECK_FALSE(r.degenerate);
}

TEST_CASE("hill threshold snapping and degenerate cases") {
    const auto d = EmpiricalDist::from_data({1.0, 2.0, 4.0, 8.0});
    // snaps down to 4; one exceedance
    const auto r = hill_estimate(d, 5.0);
    CHECK(r.u2 == 4.0);
    CHECK(r.k == 1);
    CHECK(r.xi_hat == Approx(std::log(2.0)));

    // all exceedances equal to the threshold: zero with degenerate flag
    const auto dd = EmpiricalDist::from_data({1.0, 2.0, 2.0, 2.0});
    const auto rd = hill_estimate(dd, 2.0);
    CHECK(rd.degenerate);
    CHECK(rd.xi_hat == 0.0);

    CHECK_THROWS_AS(hill_estimate(d, 0.5), std::domain_error);
}

TEST_CASE("hill is scale invariant") {
    UniformRng rng(3);
    std::vector<double> data;
    for (int i = 0; i < 500; ++i) data.push_back(gpd_quantile(rng.next(), {0.5, 1.0}) + 1.0);
    const auto d1 = EmpiricalDist::from_data(data);
    std::vector<double> scaled;
    for (double v : data) scaled.push_back(17.0 * v);
    const auto d2 = EmpiricalDist::from_data(scaled);
    const auto r1 = hill_estimate(d1, empirical_quantile(d1, 0.9));
    const auto r2 = hill_estimate(d2, 17.0 * empirical_quantile(d1, 0.9));
    CHECK(r1.k == r2.k);
    CHECK(r1.xi_hat == Approx(r2.xi_hat).epsilon(1e-12));
}

TEST_CASE("hill is consistent on exact Pareto quantile grids") {
    // Pareto(alpha): quantile (1-q)^(-1/alpha); noise-free plotting grid
    const double alpha = 2.0;
    const std::size_t n = 20000;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        grid[i] = std::pow(1.0 - q, -1.0 / alpha);
    }
    const auto d = EmpiricalDist::from_data(grid);
    const auto r = hill_estimate(d, d.sorted[n - 10001]);  // k = 10000
    CHECK(r.k == 10000);
    CHECK(std::abs(r.xi_hat - 1.0 / alpha) < 0.01);
}

TEST_CASE("hill CI covers the truth at roughly nominal rate") {
    // Pareto(alpha=2) draws, threshold at the 95% empirical quantile
    const double xi_true = 0.5;
    const std::size_t n = 50000;
    int covered = 0;
    const int n_seeds = 200;
    for (int s = 0; s < n_seeds; ++s) {
        UniformRng rng(1000 + s);
        std::vector<double> data(n);
        for (auto& v : data) v = std::pow(1.0 - rng.next(), -xi_true);
        const auto d = EmpiricalDist::from_data(data);
        const auto r = hill_estimate(d, empirical_quantile(d, 0.95));
        if (r.ci_lo <= xi_true && xi_true <= r.ci_hi) ++covered;
    }
    CHECK(covered >= static_cast<int>(0.93 * n_seeds));
}

TEST_CASE("empirical quantile conventions") {
    const auto d = EmpiricalDist::from_data({3.0, 1.0, 2.0});
    CHECK(empirical_quantile(d, 0.5) == 2.0);
    CHECK(empirical_quantile(d, 0.9999) == 3.0);
    CHECK_THROWS_AS(empirical_quantile(d, 0.0), std::domain_error);

    // brute-force oracle on a stored stream of known draws
    UniformRng rng(42);
    std::vector<double> data(1000);
    for (auto& v : data) v = rng.next() * 100.0;
    const auto dd = EmpiricalDist::from_data(data);
    std::vector<double> sorted(data);
    std::sort(sorted.begin(), sorted.end());
    const double q = 0.966;
    const std::size_t idx = static_cast<std::size_t>(std::ceil(q * 1000.0)) - 1;
    CHECK(empirical_quantile(dd, q) == sorted[idx]);
}

TEST_CASE("ecdf and quantile round trip") {
    UniformRng rng(5);
    std::vector<double> data(337);
    for (auto& v : data) v = rng.next() * 10.0;
    const auto d = EmpiricalDist::from_data(data);
    for (double q = 0.01; q < 1.0; q += 0.037) {
        CHECK(ecdf(d, empirical_quantile(d, q)) >= q - 1e-12);
    }
}

TEST_CASE("descriptive statistics hand cases") {
    const auto s = descriptive_stats({0.0, 2.0});
    CHECK(s.mean == 1.0);
    CHECK(s.std_dev == Approx(std::sqrt(2.0)));
    REQUIRE(s.di.has_value());
    CHECK(*s.di == Approx(std::sqrt(2.0)));
    CHECK(s.median == 1.0);

    const auto c = descriptive_stats({5.0, 5.0, 5.0});
    CHECK(c.std_dev == 0.0);
    REQUIRE(c.di.has_value());
    CHECK(*c.di == 0.0);
    CHECK_FALSE(c.skewness.has_value());
    CHECK_FALSE(c.kurtosis.has_value());

    const auto z = descriptive_stats({-1.0, 1.0});
    CHECK_FALSE(z.di.has_value());  // mean is zero

    CHECK_THROWS_AS(descriptive_stats({1.0}), std::invalid_argument);
}

TEST_CASE("descriptive statistics against a brute-force oracle") {
    UniformRng rng(77);
    std::vector<double> data(10000);
    for (auto& v : data) v = std::exp(1.0 + 0.8 * norm_quantile(rng.next()));
    const auto s = descriptive_stats(data);

    // independent long-double recomputation
    long double mean = 0.0L;
    for (double v : data) mean += v;
    mean /= data.size();
    long double m2 = 0.0L, m3 = 0.0L, m4 = 0.0L;
    for (double v : data) {
        const long double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    const long double n = data.size();
    const double std_ref = std::sqrt(static_cast<double>(m2 / (n - 1)));
    const double skew_ref =
        static_cast<double>((m3 / n) / std::pow(static_cast<double>(m2 / n), 1.5));
    const double kurt_ref = static_cast<double>((m4 / n) / ((m2 / n) * (m2 / n)));
    CHECK(s.mean == Approx(static_cast<double>(mean)).epsilon(1e-10));
    CHECK(s.std_dev == Approx(std_ref).epsilon(1e-10));
    CHECK(*s.skewness == Approx(skew_ref).epsilon(1e-8));
    CHECK(*s.kurtosis == Approx(kurt_ref).epsilon(1e-8));
    // non-excess convention: a normal sample sits near 3, not 0
    std::vector<double> normal(20000);
    for (auto& v : normal) v = norm_quantile(rng.next());
    CHECK(*descriptive_stats(normal).kurtosis == Approx(3.0).margin(0.15));
}

TEST_CASE("normalized deviation from the period mean") {
    CHECK_THROWS_AS(normalized_monthly_deviation({{0.0, 0.0}, 1}),
                    heavytail::input_error);
    const auto flat = normalized_monthly_deviation({{4.0, 4.0, 4.0}, 1});
    for (double v : flat) CHECK(v == 0.0);
    const auto ab = normalized_monthly_deviation({{3.0, 5.0}, 1});
    CHECK(ab[0] == Approx(-0.25));
    CHECK(ab[1] == Approx(0.25));

    // 46-month synthetic series: zero mean and brute-force extrema
    FrequencySeries s;
    s.period_months = 1;
    UniformRng rng(9);
    for (int i = 0; i < 46; ++i) s.counts.push_back(3500.0 + 1500.0 * rng.next());
    const auto dev = normalized_monthly_deviation(s);
    double mean = 0.0, lo = 1e9, hi = -1e9;
    double m = 0.0;
    for (double c : s.counts) m += c;
    m /= 46.0;
    for (std::size_t i = 0; i < dev.size(); ++i) {
        mean += dev[i];
        lo = std::min(lo, dev[i]);
        hi = std::max(hi, dev[i]);
        CHECK(dev[i] == Approx((s.counts[i] - m) / m).epsilon(1e-12));
    }
    CHECK(std::abs(mean / 46.0) < 1e-12);
    CHECK(lo < 0.0);
    CHECK(hi > 0.0);
}

TEST_CASE("moving average") {
    const FrequencySeries s{{1.0, 2.0, 3.0, 4.0}, 1};
    const auto id = moving_average(s, 1);
    CHECK(id == s.counts);
    const auto two = moving_average(s, 2);
    REQUIRE(two.size() == 3);
    CHECK(two[0] == Approx(1.5));
    CHECK(two[1] == Approx(2.5));
    CHECK(two[2] == Approx(3.5));
    CHECK_THROWS_AS(moving_average(s, 5), heavytail::input_error);

    FrequencySeries year;
    year.period_months = 1;
    UniformRng rng(13);
    for (int i = 0; i < 46; ++i) year.counts.push_back(4000.0 + 1000.0 * rng.next());
    const auto ma = moving_average(year, 12);
    REQUIRE(ma.size() == 35);
    for (std::size_t i = 0; i < ma.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = i; j < i + 12; ++j) acc += year.counts[j];
        CHECK(ma[i] == Approx(acc / 12.0).epsilon(1e-12));
    }
}
