// heavytail -- batch analysis of heavy-tailed loss ledgers.
//
// Subcommands: fit, risk, jackknife, hill, poisson-gpd, describe, mc.
// CSV in, JSON + CSV artifacts out. Every command is a pure function of the
// input file content and the configuration; timestamps live in a sidecar so
// reruns are byte-identical.
//
// Exit codes: 0 success, 2 input error, 3 non-convergence, 4 infeasible model.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "heavytail/heavytail.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace heavytail;

namespace {

constexpr const char* kToolName = "heavytail";
constexpr const char* kToolVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitInfeasible = 4;

struct CommonOpts {
    std::string input;
    std::string amount_column = "damages";
    std::string date_column = "report_date";
    std::optional<double> min_amount;
    bool drop_nonpositive = false;
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_input = true) {
    auto* in = cmd->add_option("--input", o.input, "input CSV file");
    if (needs_input) in->required();
    cmd->add_option("--column", o.amount_column, "amount column name")->capture_default_str();
    cmd->add_option("--date-column", o.date_column, "report date column name")
        ->capture_default_str();
    cmd->add_option("--min-amount", o.min_amount, "drop rows with amount below this");
    cmd->add_flag("--drop-nonpositive", o.drop_nonpositive, "drop rows with amount <= 0");
    cmd->add_option("--config", o.config_path, "key=value config file");
    cmd->add_option("--out-dir", o.out_dir, "artifact directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
}

std::map<std::string, std::string> load_config(const CommonOpts& o) {
    if (o.config_path.empty()) return {};
    return read_kv_config(o.config_path);
}

double to_double(const std::string& key, const std::string& val) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (...) {
        throw input_error("config: bad numeric value for " + key + ": " + val);
    }
}

/// FitConfig from config-file keys; CLI flags are applied on top by callers.
FitConfig fit_config_from(const std::map<std::string, std::string>& kv) {
    FitConfig cfg;
    for (const auto& [k, v] : kv) {
        if (k == "max_outer_iters") cfg.max_outer_iters = static_cast<int>(to_double(k, v));
        else if (k == "param_rel_tol") cfg.param_rel_tol = to_double(k, v);
        else if (k == "lm_max_iters") cfg.lm_max_iters = static_cast<int>(to_double(k, v));
        else if (k == "lm_damping_init") cfg.lm_damping_init = to_double(k, v);
        else if (k == "lm_damping_factor") cfg.lm_damping_factor = to_double(k, v);
        else if (k == "init_body_quantile") cfg.init_body_quantile = to_double(k, v);
        else if (k == "tail_weight") cfg.tail_weight = to_double(k, v);
        else if (k == "tail_residual_scale") {
            if (v == "log-survival") cfg.tail_residual_scale = TailResidualScale::kLogSurvival;
            else if (v == "cdf") cfg.tail_residual_scale = TailResidualScale::kCdf;
            else throw input_error("config: tail_residual_scale must be log-survival or cdf");
        }
        // scenario keys are handled by the mc command; ignore here
    }
    return cfg;
}

json fit_config_json(const FitConfig& c) {
    return json{{"max_outer_iters", c.max_outer_iters},
                {"param_rel_tol", c.param_rel_tol},
                {"lm_max_iters", c.lm_max_iters},
                {"lm_damping_init", c.lm_damping_init},
                {"lm_damping_factor", c.lm_damping_factor},
                {"tail_residual_scale",
                 c.tail_residual_scale == TailResidualScale::kLogSurvival ? "log-survival"
                                                                          : "cdf"},
                {"init_body_quantile", c.init_body_quantile},
                {"tail_weight", c.tail_weight}};
}

LossTable run_ingest(const CommonOpts& o) {
    IngestOptions opt;
    opt.amount_column = o.amount_column;
    opt.date_column = o.date_column;
    opt.min_amount = o.min_amount;
    opt.drop_nonpositive = o.drop_nonpositive;
    return ingest(o.input, opt);
}

json ingest_json(const CommonOpts& o, const LossTable& t) {
    json dropped = json::object();
    for (const auto& [reason, count] : t.dropped) dropped[reason] = count;
    return json{{"path", t.source},
                {"digest", file_digest(t.source)},
                {"amount_column", o.amount_column},
                {"min_amount", o.min_amount ? json(*o.min_amount) : json(nullptr)},
                {"drop_nonpositive", o.drop_nonpositive},
                {"rows_input", t.rows_input},
                {"rows_kept", t.rows_kept},
                {"dropped", dropped},
                {"error_rows", t.error_rows.size()}};
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path.string());
    out << text;
}

/// Artifact body goes to <out_dir>/<name>; the timestamp sidecar keeps reruns
/// byte-identical.
void write_artifact(const CommonOpts& o, const std::string& name, const json& doc) {
    fs::create_directories(o.out_dir);
    write_text(fs::path(o.out_dir) / name, doc.dump(2) + "\n");
    json meta{{"artifact", name}, {"written_at_unix", static_cast<long long>(::time(nullptr))}};
    write_text(fs::path(o.out_dir) / (name + ".meta"), meta.dump(2) + "\n");
}

void write_error_sidecar(const CommonOpts& o, const LossTable& t) {
    if (t.error_rows.empty()) return;
    fs::create_directories(o.out_dir);
    std::string body;
    for (const auto& r : t.error_rows) body += r + "\n";
    write_text(fs::path(o.out_dir) / "ingest_errors.csv", body);
}

json artifact_head(const std::string& command) {
    return json{{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
                {"command", command}};
}

// --------------------------------------------------------------------------
// fit

template <class Params>
json params_json(const Params&);

template <>
json params_json(const HybridParams& p) {
    return json{{"mu", p.mu},       {"sigma", p.sigma},   {"u1", p.u1},
                {"u2", p.u2},       {"lambda", p.lambda}, {"xi", p.xi},
                {"beta", p.beta},   {"w_body", p.w_body}, {"w_bridge", p.w_bridge},
                {"w_tail", p.w_tail}, {"collapsed", p.collapsed()}};
}

template <>
json params_json(const LnGpdParams& p) {
    return json{{"mu", p.mu},     {"sigma", p.sigma},   {"u", p.u},
                {"xi", p.xi},     {"beta", p.beta},     {"w_body", p.w_body},
                {"w_tail", p.w_tail}};
}

template <>
json params_json(const GaussHybridParams& p) {
    return json{{"mean", p.mean},  {"sd", p.sd},         {"u1", p.u1},
                {"u2", p.u2},      {"lambda", p.lambda}, {"xi", p.xi},
                {"beta", p.beta},  {"w_body", p.w_body}, {"w_bridge", p.w_bridge},
                {"w_tail", p.w_tail}, {"collapsed", p.collapsed()}};
}

json gof_json(const GoodnessOfFit& g) {
    return json{{"rmse_total_pct", g.rmse_total},
                {"mae_total_pct", g.mae_total},
                {"rmse_tail_pct", g.rmse_tail ? json(*g.rmse_tail) : json(nullptr)},
                {"mae_tail_pct", g.mae_tail ? json(*g.mae_tail) : json(nullptr)},
                {"bic", g.bic}};
}

template <class Params>
json report_json(const FitReport<Params>& r, const std::vector<std::string>& free_names) {
    json trace = json::array();
    for (const auto& row : r.trace) trace.push_back(row);
    return json{{"params", params_json(r.params)},
                {"free_params", free_names},
                {"n_free_params", r.n_free_params},
                {"gof", gof_json(r.gof)},
                {"converged", r.converged},
                {"outer_iters", r.outer_iters},
                {"trace", trace}};
}

/// Survival plot data at the sorted sample: raw x, empirical survival
/// 1 - F_n(x), model survival 1 - H(x). Double-log ready.
template <class Params>
std::string survival_csv(const std::vector<double>& data, const Params& p) {
    std::vector<double> x(data);
    std::sort(x.begin(), x.end());
    std::string out = "x,surv_empirical,surv_model\n";
    char buf[128];
    const std::size_t n = x.size();
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[j + 1] == x[i]) ++j;
        const double fn = static_cast<double>(j + 1) / static_cast<double>(n);
        for (std::size_t k = i; k <= j; ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", x[k], 1.0 - fn,
                          1.0 - cdf(x[k], p));
            out += buf;
        }
        i = j + 1;
    }
    return out;
}

int cmd_fit(const CommonOpts& o, const std::string& model, FitConfig cfg) {
    const LossTable table = run_ingest(o);
    write_error_sidecar(o, table);

    json doc = artifact_head("fit");
    doc["config"] = {{"model", model}, {"fit", fit_config_json(cfg)}};
    doc["input"] = ingest_json(o, table);

    bool converged = true;
    if (model == "ln-e-gpd") {
        const auto r = fit_hybrid(table.amounts, cfg);
        doc["result"] = report_json(r, {"mu", "sigma", "u2", "xi"});
        write_text(fs::path(o.out_dir) / "survival.csv", survival_csv(table.amounts, r.params));
        converged = r.converged;
    } else if (model == "ln-gpd") {
        const auto r = fit_lngpd(table.amounts, cfg);
        doc["result"] = report_json(r, {"mu", "sigma", "u"});
        write_text(fs::path(o.out_dir) / "survival.csv", survival_csv(table.amounts, r.params));
        converged = r.converged;
    } else if (model == "g-e-gpd") {
        const auto r = fit_gauss_hybrid(table.amounts, cfg);
        doc["result"] = report_json(r, {"mean", "sd", "u2", "xi"});
        write_text(fs::path(o.out_dir) / "survival.csv", survival_csv(table.amounts, r.params));
        converged = r.converged;
    } else {
        throw input_error("fit: unknown model " + model);
    }
    doc["result"]["model"] = model;
    write_artifact(o, "fit.json", doc);
    return converged ? kExitOk : kExitNonConvergence;
}

// --------------------------------------------------------------------------
// risk

struct FitArtifactTail {
    double xi = 0, beta = 0, u2 = 0;
    std::string model;
};

FitArtifactTail load_fit_tail(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("risk: cannot open fit artifact " + path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.contains("result"))
        throw input_error("risk: not a fit artifact: " + path);
    const auto& res = doc["result"];
    FitArtifactTail t;
    t.model = res.value("model", "ln-e-gpd");
    const auto& p = res["params"];
    t.xi = p["xi"].get<double>();
    t.beta = p["beta"].get<double>();
    t.u2 = p.contains("u2") ? p["u2"].get<double>() : p["u"].get<double>();
    return t;
}

int cmd_risk(const CommonOpts& o, const std::string& fit_path,
             std::vector<double> var_levels, std::vector<double> es_levels,
             std::size_t k_quantiles) {
    const LossTable table = run_ingest(o);
    const auto tail = load_fit_tail(fit_path);

    const auto dist = EmpiricalDist::from_data(table.amounts);
    const double n = static_cast<double>(dist.n());
    double above = 0;
    for (double v : dist.sorted)
        if (v > tail.u2) ++above;
    double mean = 0;
    for (double v : dist.sorted) mean += v;
    mean /= n;

    TailModel tm;
    tm.gpd = GpdParams{tail.xi, tail.beta, tail.u2};
    tm.tail_prob = above / n;
    tm.sample_mean = mean;

    json doc = artifact_head("risk");
    doc["config"] = {{"fit_artifact", fit_path},
                     {"var_levels", var_levels},
                     {"es_levels", es_levels},
                     {"k_quantiles", k_quantiles}};
    doc["input"] = ingest_json(o, table);
    doc["tail_model"] = {{"xi", tail.xi},
                         {"beta", tail.beta},
                         {"u2", tail.u2},
                         {"tail_prob", tm.tail_prob},
                         {"sample_mean", mean},
                         {"model", tail.model}};

    json rows = json::array();
    std::string csv =
        "measure,level,model,model_mean_multiple,empirical,empirical_mean_multiple,"
        "delta_pct\n";
    char buf[256];
    for (double p : var_levels) {
        const double emp = empirical_quantile(dist, p);
        json row{{"measure", "var"}, {"level", p}, {"empirical", emp},
                 {"empirical_mean_multiple", emp / mean}};
        try {
            const double v = var_gpd(p, tm);
            const double delta = (v - emp) / emp * 100.0;
            row["model"] = v;
            row["model_mean_multiple"] = v / mean;
            row["delta_pct"] = delta;
            std::snprintf(buf, sizeof(buf), "var,%.6g,%.10g,%.10g,%.10g,%.10g,%.6g\n", p, v,
                          v / mean, emp, emp / mean, delta);
        } catch (const std::domain_error& e) {
            row["model"] = nullptr;
            row["note"] = e.what();
            std::snprintf(buf, sizeof(buf), "var,%.6g,,,%.10g,%.10g,\n", p, emp, emp / mean);
        }
        rows.push_back(row);
        csv += buf;
    }
    csv +=
        "measure,level,analytic,analytic_mean_multiple,numeric,numeric_mean_multiple,"
        "empirical,empirical_mean_multiple,delta_analytic_pct,delta_numeric_pct\n";
    for (double p : es_levels) {
        const double emp = es_empirical(table.amounts, p, k_quantiles);
        json row{{"measure", "es"}, {"level", p}, {"empirical", emp},
                 {"empirical_mean_multiple", emp / mean}};
        if (tail.xi >= 1.0) {
            row["analytic"] = "infinite-mean";
            row["numeric"] = "infinite-mean";
            std::snprintf(buf, sizeof(buf), "es,%.6g,infinite-mean,,infinite-mean,,%.10g,%.10g,,\n",
                          p, emp, emp / mean);
        } else {
            try {
                const double ea = es_analytic(p, tm);
                const double en = es_numeric(p, tm, k_quantiles);
                row["analytic"] = ea;
                row["analytic_mean_multiple"] = ea / mean;
                row["numeric"] = en;
                row["numeric_mean_multiple"] = en / mean;
                row["delta_analytic_pct"] = (ea - emp) / emp * 100.0;
                row["delta_numeric_pct"] = (en - emp) / emp * 100.0;
                std::snprintf(buf, sizeof(buf),
                              "es,%.6g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.6g,%.6g\n", p, ea,
                              ea / mean, en, en / mean, emp, emp / mean,
                              (ea - emp) / emp * 100.0, (en - emp) / emp * 100.0);
            } catch (const std::domain_error& e) {
                row["analytic"] = nullptr;
                row["numeric"] = nullptr;
                row["note"] = e.what();
                std::snprintf(buf, sizeof(buf), "es,%.6g,,,,,%.10g,%.10g,,\n", p, emp,
                              emp / mean);
            }
        }
        rows.push_back(row);
        csv += buf;
    }
    doc["result"] = {{"rows", rows}};
    write_artifact(o, "risk.json", doc);
    write_text(fs::path(o.out_dir) / "risk.csv", csv);
    return kExitOk;
}

// --------------------------------------------------------------------------
// jackknife

int cmd_jackknife(const CommonOpts& o, int m, FitConfig cfg) {
    const LossTable table = run_ingest(o);
    const auto estimator = [&cfg](const std::vector<double>& data) {
        const auto r = fit_hybrid(data, cfg);
        return std::vector<double>{1.0 / r.params.xi, r.params.beta, r.params.u2};
    };
    const auto jk = jackknife(table.amounts, m, estimator, o.seed);

    json doc = artifact_head("jackknife");
    doc["config"] = {{"m", m}, {"seed", o.seed}, {"fit", fit_config_json(cfg)}};
    doc["input"] = ingest_json(o, table);
    const char* names[] = {"alpha", "beta", "u2"};
    json coords = json::object();
    for (std::size_t c = 0; c < jk.coords.size(); ++c) {
        const auto& jr = jk.coords[c];
        coords[names[c]] = {{"full_estimate", jr.full_estimate},
                            {"pooled_mean", jr.pooled_mean},
                            {"sigma_hat", jr.sigma_hat},
                            {"a95", jr.a95},
                            {"cr95", {jr.cr95.first, jr.cr95.second}},
                            {"estimates", jr.estimates}};
    }
    doc["result"] = {{"coords", coords},
                     {"m_requested", jk.m_requested},
                     {"m_effective", jk.m_effective},
                     {"failed_blocks", jk.failed_blocks},
                     {"warning", jk.warning}};
    write_artifact(o, "jackknife.json", doc);
    return kExitOk;
}

// --------------------------------------------------------------------------
// hill

int cmd_hill(const CommonOpts& o, std::optional<double> u2, std::optional<double> u2_quantile) {
    const LossTable table = run_ingest(o);
    const auto dist = EmpiricalDist::from_data(table.amounts);
    double threshold;
    if (u2)
        threshold = *u2;
    else if (u2_quantile)
        threshold = empirical_quantile(dist, *u2_quantile);
    else
        throw input_error("hill: give --u2 or --u2-quantile");
    const auto r = hill_estimate(dist, threshold);

    json doc = artifact_head("hill");
    doc["config"] = {{"u2", u2 ? json(*u2) : json(nullptr)},
                     {"u2_quantile", u2_quantile ? json(*u2_quantile) : json(nullptr)}};
    doc["input"] = ingest_json(o, table);
    doc["result"] = {{"xi_hat", r.xi_hat},
                     {"alpha_hat", r.degenerate ? json(nullptr) : json(1.0 / r.xi_hat)},
                     {"k", r.k},
                     {"u2_snapped", r.u2},
                     {"ci95", {r.ci_lo, r.ci_hi}},
                     {"degenerate", r.degenerate}};
    write_artifact(o, "hill.json", doc);
    return kExitOk;
}

// --------------------------------------------------------------------------
// poisson-gpd

int cmd_poisson_gpd(const CommonOpts& o, double u2, const std::string& period,
                    bool assume_stationary) {
    const LossTable table = run_ingest(o);
    if (!table.has_dates)
        throw input_error("poisson-gpd: input has no '" + o.date_column + "' column");

    const bool quarterly = period == "quarter";
    if (!quarterly && period != "month")
        throw input_error("poisson-gpd: period must be quarter or month");

    // bin exceedances over the calendar span of the whole table
    int lo = 0, hi = 0;
    bool any = false;
    for (const auto& d : table.dates) {
        if (!d) continue;
        const int idx = quarterly ? quarter_index(*d) : month_index(*d);
        if (!any) {
            lo = hi = idx;
            any = true;
        } else {
            lo = std::min(lo, idx);
            hi = std::max(hi, idx);
        }
    }
    if (!any) throw input_error("poisson-gpd: no parseable dates");

    ExceedanceSeries series;
    series.time_unit = period;
    series.period_counts.assign(static_cast<std::size_t>(hi - lo + 1), 0);
    for (std::size_t i = 0; i < table.amounts.size(); ++i) {
        if (table.amounts[i] <= u2) continue;
        if (!table.dates[i])
            throw input_error("poisson-gpd: exceedance row without a date");
        const int idx = quarterly ? quarter_index(*table.dates[i]) : month_index(*table.dates[i]);
        series.magnitudes.push_back(table.amounts[i]);
        ++series.period_counts[static_cast<std::size_t>(idx - lo)];
    }
    const auto fit = fit_poisson_gpd(series, u2);

    json doc = artifact_head("poisson-gpd");
    doc["config"] = {{"u2", u2}, {"period", period}, {"assume_stationary", assume_stationary}};
    doc["input"] = ingest_json(o, table);
    doc["result"] = {{"lambda", fit.params.lambda},
                     {"lambda_ci95", {fit.lambda_ci95.first, fit.lambda_ci95.second}},
                     {"xi", fit.params.xi},
                     {"xi_ci95", {fit.xi_ci95.first, fit.xi_ci95.second}},
                     {"beta", fit.params.beta},
                     {"beta_ci95", {fit.beta_ci95.first, fit.beta_ci95.second}},
                     {"u", fit.params.u},
                     {"time_unit", fit.params.time_unit},
                     {"n_exceedances", series.magnitudes.size()},
                     {"n_periods", series.period_counts.size()},
                     {"period_counts", series.period_counts},
                     {"log_likelihood", fit.log_likelihood},
                     {"xi_boundary", fit.xi_boundary},
                     {"stationarity", assume_stationary
                                          ? "asserted by caller"
                                          : "not asserted; model assumes it regardless"}};
    if (!assume_stationary)
        std::cerr << "note: stationarity of exceedances is assumed, not tested; "
                     "pass --assume-stationary to acknowledge\n";
    write_artifact(o, "poisson_gpd.json", doc);
    return kExitOk;
}

// --------------------------------------------------------------------------
// describe

int cmd_describe(const CommonOpts& o, const std::string& period) {
    const LossTable table = run_ingest(o);
    const auto stats = descriptive_stats(table.amounts);

    json doc = artifact_head("describe");
    doc["config"] = {{"period", period}};
    doc["input"] = ingest_json(o, table);
    doc["result"] = {{"n", table.amounts.size()},
                     {"max", stats.max},
                     {"mean", stats.mean},
                     {"median", stats.median},
                     {"std", stats.std_dev},
                     {"di", stats.di ? json(*stats.di) : json(nullptr)},
                     {"skewness", stats.skewness ? json(*stats.skewness) : json(nullptr)},
                     {"kurtosis", stats.kurtosis ? json(*stats.kurtosis) : json(nullptr)}};

    if (table.has_dates) {
        const bool quarterly = period == "quarter";
        int lo = 0, hi = 0;
        bool any = false;
        for (const auto& d : table.dates) {
            if (!d) continue;
            const int idx = quarterly ? quarter_index(*d) : month_index(*d);
            if (!any) {
                lo = hi = idx;
                any = true;
            } else {
                lo = std::min(lo, idx);
                hi = std::max(hi, idx);
            }
        }
        if (any) {
            FrequencySeries freq;
            freq.period_months = quarterly ? 3 : 1;
            freq.counts.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
            for (const auto& d : table.dates) {
                if (!d) continue;
                const int idx = quarterly ? quarter_index(*d) : month_index(*d);
                freq.counts[static_cast<std::size_t>(idx - lo)] += 1.0;
            }
            const auto dev = normalized_monthly_deviation(freq);
            std::string csv = "period_index,count,normalized_deviation\n";
            char buf[128];
            for (std::size_t i = 0; i < freq.counts.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i, freq.counts[i], dev[i]);
                csv += buf;
            }
            const std::size_t window = quarterly ? 4 : 12;  // one year
            if (freq.counts.size() >= window) {
                const auto ma = moving_average(freq, window);
                csv += "period_index,moving_average\n";
                for (std::size_t i = 0; i < ma.size(); ++i) {
                    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + window - 1, ma[i]);
                    csv += buf;
                }
            }
            write_text(fs::path(o.out_dir) / "frequency.csv", csv);
            doc["result"]["n_periods"] = freq.counts.size();
        }
    }
    write_artifact(o, "describe.json", doc);
    return kExitOk;
}

// --------------------------------------------------------------------------
// mc

McScenario scenario_from(const std::map<std::string, std::string>& kv, bool paper_scale) {
    McScenario sc;
    const auto get = [&](const char* key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    if (const auto g = get("generator")) {
        if (*g == "ln-e-gpd") sc.generator = McGenerator::kLnEGpd;
        else if (*g == "ln-gpd") sc.generator = McGenerator::kLnGpd;
        else throw input_error("scenario: generator must be ln-e-gpd or ln-gpd");
    }
    if (const auto f = get("fitter")) {
        if (*f == "three-component") sc.fitter = McFitter::kThreeComponent;
        else if (*f == "two-component") sc.fitter = McFitter::kTwoComponent;
        else throw input_error("scenario: fitter must be three-component or two-component");
    }
    if (const auto v = get("mu")) sc.mu = to_double("mu", *v);
    if (const auto v = get("sigma")) sc.sigma = to_double("sigma", *v);
    if (const auto v = get("threshold")) sc.threshold = to_double("threshold", *v);
    if (const auto v = get("u2")) sc.threshold = to_double("u2", *v);
    if (const auto v = get("xi")) sc.xi = to_double("xi", *v);
    if (const auto v = get("n_seeds")) sc.n_seeds = static_cast<int>(to_double("n_seeds", *v));
    if (const auto v = get("base_seed"))
        sc.base_seed = static_cast<std::uint64_t>(to_double("base_seed", *v));
    if (const auto v = get("sizes")) {
        sc.sizes.clear();
        std::stringstream ss(*v);
        std::string tok;
        while (std::getline(ss, tok, ','))
            sc.sizes.push_back(static_cast<std::size_t>(to_double("sizes", tok)));
    }
    sc.fit = fit_config_from(kv);
    if (paper_scale) sc.n_seeds = 100;
    return sc;
}

json mc_stat_json(const McStat& s) {
    return json{{"truth", s.truth}, {"mean", s.mean},        {"std", s.std_dev},
                {"err", s.err},     {"err_is_absolute", s.nd}};
}

int cmd_mc(const CommonOpts& o, const std::string& scenario_path, bool paper_scale) {
    const auto kv = read_kv_config(scenario_path);
    const auto sc = scenario_from(kv, paper_scale);
    const auto report = run_mc_study(sc);

    json doc = artifact_head("mc");
    doc["config"] = {{"scenario_file", scenario_path},
                     {"scenario_digest", file_digest(scenario_path)},
                     {"generator", sc.generator == McGenerator::kLnEGpd ? "ln-e-gpd" : "ln-gpd"},
                     {"fitter", sc.fitter == McFitter::kThreeComponent ? "three-component"
                                                                       : "two-component"},
                     {"mu", sc.mu},
                     {"sigma", sc.sigma},
                     {"threshold", sc.threshold},
                     {"xi", sc.xi},
                     {"sizes", sc.sizes},
                     {"n_seeds", sc.n_seeds},
                     {"base_seed", sc.base_seed},
                     {"fit", fit_config_json(sc.fit)}};
    doc["truth"] = {{"mu", report.truth.mu},   {"sigma", report.truth.sigma},
                    {"u1", report.truth.u1},   {"u2", report.truth.u2},
                    {"xi", report.truth.xi},   {"level_u1", report.truth.level_u1},
                    {"level_u2", report.truth.level_u2}};
    json sizes = json::array();
    for (const auto& s : report.sizes) {
        sizes.push_back({{"size", s.size},
                         {"n_ok", s.n_ok},
                         {"n_failed", s.n_failed},
                         {"mu", mc_stat_json(s.mu)},
                         {"sigma", mc_stat_json(s.sigma)},
                         {"u1", mc_stat_json(s.u1)},
                         {"u2", mc_stat_json(s.u2)},
                         {"xi", mc_stat_json(s.xi)},
                         {"level_u1", mc_stat_json(s.level_u1)},
                         {"level_u2", mc_stat_json(s.level_u2)},
                         {"median_abs_rel_err_xi", s.median_abs_rel_err_xi}});
    }
    doc["result"] = {{"sizes", sizes}};
    write_artifact(o, "mc_report.json", doc);

    std::ostringstream csv;
    write_mc_csv(report, csv);
    write_text(fs::path(o.out_dir) / "mc_report.csv", csv.str());

    // per-fit traces for audit
    const fs::path run_dir = fs::path(o.out_dir) / "mc_runs";
    fs::create_directories(run_dir);
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
        const auto& rec = report.runs[r];
        json rj{{"run", r},
                {"size", rec.size},
                {"seed", rec.seed},
                {"ok", rec.ok},
                {"converged", rec.converged},
                {"outer_iters", rec.outer_iters},
                {"params",
                 {{"mu", rec.mu}, {"sigma", rec.sigma}, {"u1", rec.u1}, {"u2", rec.u2},
                  {"xi", rec.xi}}},
                {"rmse_total_pct", rec.rmse_total},
                {"bic", rec.bic},
                {"trace", rec.trace}};
        if (!rec.ok) rj["error"] = rec.error;
        char name[64];
        std::snprintf(name, sizeof(name), "run_%05zu.json", r);
        write_text(run_dir / name, rj.dump(2) + "\n");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid heavy-tail calibration and risk reporting"};
    app.require_subcommand(1);

    CommonOpts o_fit, o_risk, o_jack, o_hill, o_pg, o_desc, o_mc;

    auto* fit = app.add_subcommand("fit", "calibrate a hybrid model on a loss ledger");
    add_common(fit, o_fit);
    std::string model = "ln-e-gpd";
    fit->add_option("--model", model, "ln-e-gpd | ln-gpd | g-e-gpd")->capture_default_str();

    auto* risk = app.add_subcommand("risk", "VaR/ES report from a fit artifact");
    add_common(risk, o_risk);
    std::string fit_path;
    risk->add_option("--fit", fit_path, "fit.json artifact")->required();
    std::vector<double> var_levels{0.995};
    std::vector<double> es_levels{0.975, 0.9977};
    std::size_t k_quantiles = 20000;
    risk->add_option("--var-levels", var_levels, "VaR levels")->capture_default_str();
    risk->add_option("--levels", es_levels, "ES levels")->capture_default_str();
    risk->add_option("--k-quantiles", k_quantiles, "quantile-grid size for numeric ES")
        ->capture_default_str();

    auto* jack = app.add_subcommand("jackknife", "delete-block jackknife of the hybrid fit");
    add_common(jack, o_jack);
    int m_blocks = 10;
    jack->add_option("--m", m_blocks, "number of blocks")->capture_default_str();

    auto* hill = app.add_subcommand("hill", "Hill tail-index estimate at a threshold");
    add_common(hill, o_hill);
    std::optional<double> hill_u2;
    std::optional<double> hill_q;
    hill->add_option("--u2", hill_u2, "threshold value");
    hill->add_option("--u2-quantile", hill_q, "threshold as an empirical quantile");

    auto* pg = app.add_subcommand("poisson-gpd", "Poisson-GPD frequency/severity model");
    add_common(pg, o_pg);
    double pg_u2 = 0.0;
    std::string pg_period = "quarter";
    bool pg_stationary = false;
    pg->add_option("--u2", pg_u2, "exceedance threshold")->required();
    pg->add_option("--period", pg_period, "quarter | month")->capture_default_str();
    pg->add_flag("--assume-stationary", pg_stationary,
                 "acknowledge the stationarity assumption");

    auto* desc = app.add_subcommand("describe", "descriptive statistics and frequency series");
    add_common(desc, o_desc);
    std::string desc_period = "month";
    desc->add_option("--period", desc_period, "month | quarter")->capture_default_str();

    auto* mc = app.add_subcommand("mc", "Monte Carlo generate-fit-score study");
    add_common(mc, o_mc, /*needs_input=*/false);
    std::string scenario_path;
    bool paper_scale = false;
    mc->add_option("--scenario", scenario_path, "scenario key=value file")->required();
    mc->add_flag("--paper-scale", paper_scale, "run 100 seeds instead of the scenario value");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit) {
            FitConfig cfg = fit_config_from(load_config(o_fit));
            return cmd_fit(o_fit, model, cfg);
        }
        if (*risk) return cmd_risk(o_risk, fit_path, var_levels, es_levels, k_quantiles);
        if (*jack) {
            FitConfig cfg = fit_config_from(load_config(o_jack));
            return cmd_jackknife(o_jack, m_blocks, cfg);
        }
        if (*hill) return cmd_hill(o_hill, hill_u2, hill_q);
        if (*pg) return cmd_poisson_gpd(o_pg, pg_u2, pg_period, pg_stationary);
        if (*desc) return cmd_describe(o_desc, desc_period);
        if (*mc) return cmd_mc(o_mc, scenario_path, paper_scale);
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const constraint_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const infinite_mean_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
