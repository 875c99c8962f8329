// Convergence of the tail-index estimate in sample size, across the
// generating rows of the simulation study. Slow: ~2 minutes on two cores.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "heavytail/simlab.hpp"

using namespace heavytail;

namespace {

McReport ladder(double mu, double sigma, double u2, double xi, std::uint64_t base) {
    McScenario sc;
    sc.generator = McGenerator::kLnEGpd;
    sc.mu = mu;
    sc.sigma = sigma;
    sc.threshold = u2;
    sc.xi = xi;
    sc.sizes = {1000, 5000, 10000, 50000};
    sc.n_seeds = 12;
    sc.base_seed = base;
    return convergence_curve(sc);
}

}  // namespace

TEST_CASE("tail-index error shrinks with sample size") {
    const auto third = ladder(1.0, 2.0, 14.59, 1.0 / 3.0, 10000);
    const auto heavy = ladder(0.0, 5.0, 4.38, 0.8, 20000);

    for (const auto* r : {&third, &heavy}) {
        REQUIRE(r->sizes.size() == 4);
        // the mean estimate stays within 5% of the truth at every size
        for (const auto& s : r->sizes) {
            INFO("xi=" << r->truth.xi << " n=" << s.size);
            CHECK(s.n_failed == 0);
            CHECK(std::abs(s.xi.err) < 0.05);
        }
        // the smallest sample is the worst by median |error|
        double worst = 0.0;
        for (const auto& s : r->sizes) worst = std::max(worst, s.median_abs_rel_err_xi);
        CHECK(r->sizes.front().median_abs_rel_err_xi == worst);
        // and the largest beats it
        CHECK(r->sizes.back().median_abs_rel_err_xi <
              r->sizes.front().median_abs_rel_err_xi);
    }

    // non-strict decrease of the median chain for the moderate tail
    for (std::size_t i = 1; i < third.sizes.size(); ++i)
        CHECK(third.sizes[i].median_abs_rel_err_xi <=
              third.sizes[i - 1].median_abs_rel_err_xi + 1e-12);
}
