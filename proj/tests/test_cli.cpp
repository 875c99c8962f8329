// End-to-end checks of the command-line tool: artifact schema, byte-identical
// reruns, the survival-plot CSV re-integrating to the reported RMSE, exit
// codes, and input immutability.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "heavytail/heavytail.hpp"

#ifndef HEAVYTAIL_CLI_PATH
#error "HEAVYTAIL_CLI_PATH must point at the built binary"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace heavytail;

namespace {

struct Sandbox {
    fs::path dir;
    Sandbox() {
        dir = fs::temp_directory_path() /
              ("heavytail_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Sandbox() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
    const std::string cmd = std::string(HEAVYTAIL_CLI_PATH) + " " + args + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_ledger(const std::string& path, std::size_t n, std::uint64_t seed) {
    const auto p = derive_dependent_params(1.0, 2.0, 14.59, 1.0 / 3.0);
    const auto x = sample(p, n, seed);
    UniformRng rng(seed + 1);
    std::ofstream out(path);
    out << "report_date,damages\n";
    for (std::size_t i = 0; i < n; ++i) {
        const int m = static_cast<int>(rng.next_index(45));
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d,%.4f\n", 2015 + (m + 6) / 12,
                      (m + 6) % 12 + 1, 1 + static_cast<int>(rng.next_index(28)), x[i]);
        out << buf;
    }
}

}  // namespace

TEST_CASE("fit artifact schema, determinism, and survival-plot oracle") {
    Sandbox sb;
    write_ledger(sb.path("ledger.csv"), 3000, 7);
    const std::string digest_before = file_digest(sb.path("ledger.csv"));

    const std::string common =
        "fit --input " + sb.path("ledger.csv") + " --out-dir " + sb.path("out1");
    REQUIRE(run(common) == 0);

    const auto doc = json::parse(slurp(sb.path("out1/fit.json")));
    CHECK(doc["tool"]["name"] == "heavytail");
    CHECK(doc["command"] == "fit");
    CHECK(doc["input"]["rows_kept"] == 3000);
    CHECK(doc["input"]["digest"] == digest_before);
    const auto& res = doc["result"];
    CHECK(res["model"] == "ln-e-gpd");
    // the ten parameters, four of them flagged free, and the GoF block
    for (const char* k : {"mu", "sigma", "u1", "u2", "lambda", "xi", "beta", "w_body",
                          "w_bridge", "w_tail"})
        CHECK(res["params"].contains(k));
    CHECK(res["free_params"].size() == 4);
    CHECK(res["gof"].contains("rmse_total_pct"));
    CHECK(res["gof"].contains("bic"));

    // rerun: identical artifact bytes (timestamps live in the .meta sidecar)
    REQUIRE(run("fit --input " + sb.path("ledger.csv") + " --out-dir " + sb.path("out2")) == 0);
    CHECK(slurp(sb.path("out1/fit.json")) == slurp(sb.path("out2/fit.json")));
    CHECK(slurp(sb.path("out1/survival.csv")) == slurp(sb.path("out2/survival.csv")));

    // input untouched
    CHECK(file_digest(sb.path("ledger.csv")) == digest_before);

    // survival.csv re-integrates to the reported total RMSE
    std::ifstream surv(sb.path("out1/survival.csv"));
    std::string line;
    std::getline(surv, line);
    CHECK(line == "x,surv_empirical,surv_model");
    double se = 0.0;
    std::size_t n = 0;
    while (std::getline(surv, line)) {
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        const double emp = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        const double mod = std::stod(line.substr(c2 + 1));
        se += (mod - emp) * (mod - emp);
        ++n;
    }
    REQUIRE(n == 3000);
    const double rmse = 100.0 * std::sqrt(se / static_cast<double>(n));
    CHECK(rmse == Catch::Approx(res["gof"]["rmse_total_pct"].get<double>()).epsilon(1e-9));
}

TEST_CASE("risk command emits the regulatory default levels") {
    Sandbox sb;
    write_ledger(sb.path("ledger.csv"), 3000, 23);
    REQUIRE(run("fit --input " + sb.path("ledger.csv") + " --out-dir " + sb.path("out")) == 0);
    REQUIRE(run("risk --input " + sb.path("ledger.csv") + " --fit " + sb.path("out/fit.json") +
                " --k-quantiles 500 --out-dir " + sb.path("out")) == 0);
    const auto doc = json::parse(slurp(sb.path("out/risk.json")));
    const auto& rows = doc["result"]["rows"];
    REQUIRE(rows.size() == 3);
    CHECK(rows[0]["measure"] == "var");
    CHECK(rows[0]["level"] == Catch::Approx(0.995));
    CHECK(rows[1]["measure"] == "es");
    CHECK(rows[1]["level"] == Catch::Approx(0.975));
    CHECK(rows[2]["level"] == Catch::Approx(0.9977));
    // delta sign convention: (model - empirical)/empirical
    for (const auto& row : rows) {
        if (!row.contains("delta_pct") && !row.contains("delta_analytic_pct")) continue;
        const double emp = row["empirical"].get<double>();
        if (row["measure"] == "var" && row.contains("model") && row["model"].is_number()) {
            const double model = row["model"].get<double>();
            const double delta = row["delta_pct"].get<double>();
            CHECK(delta == Catch::Approx((model - emp) / emp * 100.0).margin(1e-9));
        }
    }
}

TEST_CASE("hill and describe commands round-trip through the library") {
    Sandbox sb;
    write_ledger(sb.path("ledger.csv"), 2000, 23);
    REQUIRE(run("hill --input " + sb.path("ledger.csv") + " --u2-quantile 0.95 --out-dir " +
                sb.path("out")) == 0);
    const auto hill = json::parse(slurp(sb.path("out/hill.json")));

    // recompute with the library on the same data
    const auto table = ingest(sb.path("ledger.csv"));
    const auto dist = EmpiricalDist::from_data(table.amounts);
    const auto ref = hill_estimate(dist, empirical_quantile(dist, 0.95));
    CHECK(hill["result"]["xi_hat"].get<double>() == Catch::Approx(ref.xi_hat).epsilon(1e-12));
    CHECK(hill["result"]["k"].get<std::size_t>() == ref.k);

    REQUIRE(run("describe --input " + sb.path("ledger.csv") + " --period month --out-dir " +
                sb.path("out")) == 0);
    const auto desc = json::parse(slurp(sb.path("out/describe.json")));
    for (const char* k : {"max", "mean", "median", "std", "di", "skewness", "kurtosis"})
        CHECK(desc["result"].contains(k));
    CHECK(fs::exists(sb.path("out/frequency.csv")));
}

TEST_CASE("poisson-gpd command bins exceedances by calendar quarter") {
    Sandbox sb;
    write_ledger(sb.path("ledger.csv"), 5000, 31);
    REQUIRE(run("poisson-gpd --input " + sb.path("ledger.csv") +
                " --u2 10 --period quarter --assume-stationary --out-dir " + sb.path("out")) ==
            0);
    const auto doc = json::parse(slurp(sb.path("out/poisson_gpd.json")));
    const auto& res = doc["result"];
    CHECK(res["time_unit"] == "quarter");
    CHECK(res["n_periods"].get<std::size_t>() == 15);  // 45 months of dates
    std::size_t total = 0;
    for (const auto& c : res["period_counts"]) total += c.get<std::size_t>();
    CHECK(total == res["n_exceedances"].get<std::size_t>());
    CHECK(res["lambda"].get<double>() ==
          Catch::Approx(static_cast<double>(total) / 15.0).epsilon(1e-12));
}

TEST_CASE("mc command writes report, csv, and per-run traces") {
    Sandbox sb;
    {
        std::ofstream sc(sb.path("scenario.conf"));
        sc << "generator = ln-e-gpd\nfitter = three-component\nmu = 1.0\nsigma = 2.0\n"
              "u2 = 14.59\nxi = 0.333333\nsizes = 400\nn_seeds = 2\nbase_seed = 5\n";
    }
    REQUIRE(run("mc --scenario " + sb.path("scenario.conf") + " --out-dir " + sb.path("out")) ==
            0);
    const auto doc = json::parse(slurp(sb.path("out/mc_report.json")));
    CHECK(doc["config"]["n_seeds"] == 2);
    CHECK(doc["truth"]["u1"].get<double>() == Catch::Approx(3.99968).margin(5e-4));
    REQUIRE(doc["result"]["sizes"].size() == 1);
    CHECK(fs::exists(sb.path("out/mc_report.csv")));
    CHECK(fs::exists(sb.path("out/mc_runs/run_00000.json")));
    CHECK(fs::exists(sb.path("out/mc_runs/run_00001.json")));
    const auto run0 = json::parse(slurp(sb.path("out/mc_runs/run_00000.json")));
    CHECK(run0["seed"] == 5);
    CHECK(run0["trace"].is_array());
}

TEST_CASE("exit codes distinguish input errors") {
    Sandbox sb;
    CHECK(run("fit --input " + sb.path("missing.csv") + " --out-dir " + sb.path("out")) == 2);
    write_ledger(sb.path("ledger.csv"), 500, 3);
    CHECK(run("fit --input " + sb.path("ledger.csv") + " --model bogus --out-dir " +
              sb.path("out")) == 2);
    // a 50-row table is below the fitting minimum: input error
    write_ledger(sb.path("tiny.csv"), 50, 3);
    CHECK(run("fit --input " + sb.path("tiny.csv") + " --out-dir " + sb.path("out")) == 2);
}
