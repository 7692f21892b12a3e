#include "snap/commands.hpp"

#include "snap/benchmarks.hpp"
#include "snap/clustering.hpp"
#include "snap/csv.hpp"
#include "snap/error.hpp"
#include "snap/importance.hpp"
#include "snap/portfolio.hpp"
#include "snap/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

namespace snap::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

data::PanelDataset load_dataset(const RunConfig& cfg, data::QualityReport* report = nullptr) {
    if (cfg.panel.empty() || cfg.macro.empty())
        throw ConfigError("config: panel and macro paths are required");
    data::LoadConfig lc;
    lc.validate_begin = cfg.validate_begin;
    lc.test_begin = cfg.test_begin;
    lc.rank_normalize = cfg.rank_normalize;
    lc.standardize_macro = cfg.standardize_macro;
    lc.max_missing_frac = cfg.max_missing_frac;
    lc.allow_high_missing = cfg.allow_high_missing;
    return data::load_panel(cfg.panel, cfg.macro, cfg.transforms, lc, report);
}

} // namespace

std::string manifest_hash(const RunConfig& cfg) { return hex64(config_hash(cfg)); }

void write_manifest(const RunConfig& cfg, const std::string& command) {
    fs::create_directories(cfg.out);
    nlohmann::json j;
    j["command"] = command;
    j["config_hash"] = manifest_hash(cfg);
    j["seed"] = cfg.hyper.seed;
    j["version"] = kVersion;
    j["config"] = cfg.effective;
    write_text(out_path(cfg, "manifest.json"), j.dump(2));
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

void cmd_simulate(const RunConfig& cfg) {
    write_manifest(cfg, "simulate");
    data::PanelDataset ds = data::synthesize(cfg.sim);
    data::save_panel(ds, out_path(cfg, "panel.csv"), out_path(cfg, "macro.csv"));
    data::save_truth(ds, out_path(cfg, "truth_panel.csv"), out_path(cfg, "truth_months.csv"));

    std::vector<std::vector<std::string>> trows;
    for (const auto& name : ds.macro_names) trows.push_back({name, "level"});
    csv::write_file(out_path(cfg, "transforms.csv"), {"series", "transform_code"}, trows);

    nlohmann::json meta;
    meta["manifest_hash"] = manifest_hash(cfg);
    meta["noise_sd"] = ds.noise_sd;
    meta["validate_begin"] = data::format_month(ds.validate_begin);
    meta["test_begin"] = data::format_month(ds.test_begin);
    meta["n_stocks"] = cfg.sim.n_stocks;
    meta["n_months"] = cfg.sim.n_months;
    meta["seed"] = cfg.sim.seed;
    for (auto split : {data::Split::train, data::Split::validate, data::Split::test})
        meta["oracle_r2"][data::split_name(split)] = data::oracle_r2(ds, split);
    write_text(out_path(cfg, "truth_meta.json"), meta.dump(2));
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

void cmd_train(const RunConfig& cfg, bool masked) {
    write_manifest(cfg, masked ? "train --masked" : "train");
    data::QualityReport report;
    data::PanelDataset ds = load_dataset(cfg, &report);
    write_text(out_path(cfg, "data_quality.json"), report.to_json());

    TrainResult result = train_snap(ds, cfg.hyper, masked);
    const std::string ckpt = masked ? "masked_checkpoint.json" : "checkpoint.json";
    const std::string log = masked ? "train_log_masked.csv" : "train_log.csv";
    save_checkpoint(result.model, out_path(cfg, ckpt));
    save_train_log(result, cfg.hyper.seed, out_path(cfg, log));
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

namespace {

// Drops stocks below the month's cap quantile q (lagged caps).
PredictionPanel filter_microcap(const PredictionPanel& panel, const data::PanelDataset& ds,
                                double q) {
    if (q <= 0.0) return panel;
    if (q >= 1.0) throw ParamError("exclude-microcap: quantile must be in [0,1)");
    std::map<data::MonthId, std::vector<double>> caps_by_month;
    for (const auto& r : panel.rows) {
        const auto row = ds.find_row(r.stock_id, r.month);
        if (row && std::isfinite(ds.rows[*row].mktcap))
            caps_by_month[r.month].push_back(ds.rows[*row].mktcap);
    }
    std::map<data::MonthId, double> cutoff;
    for (auto& [m, caps] : caps_by_month) {
        std::sort(caps.begin(), caps.end());
        const double pos = q * static_cast<double>(caps.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, caps.size() - 1);
        cutoff[m] = caps[lo] + (pos - static_cast<double>(lo)) * (caps[hi] - caps[lo]);
    }
    PredictionPanel out;
    for (const auto& r : panel.rows) {
        const auto row = ds.find_row(r.stock_id, r.month);
        if (!row || !std::isfinite(ds.rows[*row].mktcap)) continue;
        if (ds.rows[*row].mktcap >= cutoff[r.month]) out.rows.push_back(r);
    }
    if (out.rows.empty()) throw InputError("exclude-microcap: filter removed every row");
    return out;
}

portfolio::SplitMetrics metrics_of(const PredictionPanel& panel,
                                   const data::PanelDataset& ds, bool has_caps) {
    portfolio::SplitMetrics m;
    m.r2 = portfolio::r2_predictive(panel);
    try {
        m.sharpe_eq =
            portfolio::sharpe(portfolio::decile_series(panel, ds, portfolio::Weighting::equal));
    } catch (const Error&) {
        m.sharpe_eq = kNaN;
    }
    if (has_caps) {
        try {
            m.sharpe_vw = portfolio::sharpe(
                portfolio::decile_series(panel, ds, portfolio::Weighting::value));
        } catch (const Error&) {
            m.sharpe_vw = kNaN;
        }
    } else {
        m.sharpe_vw = kNaN;
    }
    return m;
}

} // namespace

void cmd_evaluate(const RunConfig& cfg, double exclude_microcap_q) {
    write_manifest(cfg, "evaluate");
    data::PanelDataset ds = load_dataset(cfg);
    if (cfg.checkpoint.empty())
        throw ConfigError("evaluate: checkpoint path required (config key 'checkpoint')");

    bool has_caps = false;
    for (const auto& r : ds.rows)
        if (std::isfinite(r.mktcap)) has_caps = true;

    const std::vector<data::Split> splits = {data::Split::train, data::Split::validate,
                                             data::Split::test};

    std::map<std::string, std::map<std::string, PredictionPanel>> panels;

    SnapModel model = load_checkpoint(cfg.checkpoint);
    for (auto s : splits)
        panels["snap"][data::split_name(s)] =
            evaluate_panel(model, ds, s, cfg.hyper.threads);
    if (!cfg.masked_checkpoint.empty()) {
        SnapModel masked = load_checkpoint(cfg.masked_checkpoint);
        for (auto s : splits)
            panels["snap_masked"][data::split_name(s)] =
                evaluate_panel(masked, ds, s, cfg.hyper.threads);
    }

    const auto train_rows = ds.split_rows(data::Split::train);
    const auto val_rows = ds.split_rows(data::Split::validate);
    const Matrix X_train = benchmarks::design_matrix(ds, train_rows);
    const Matrix X_val = benchmarks::design_matrix(ds, val_rows);
    const auto y_train = benchmarks::target_vector(ds, train_rows);
    const auto y_val = benchmarks::target_vector(ds, val_rows);

    auto add_linear = [&](const std::string& name, benchmarks::Penalty penalty,
                          double alpha) {
        auto path = benchmarks::fit_lambda_path(X_train, y_train, X_val, y_val, penalty,
                                                alpha);
        for (auto s : splits)
            panels[name][data::split_name(s)] =
                benchmarks::linear_prediction_panel(path.best, ds, s);
    };
    if (cfg.bench_lasso) add_linear("lasso", benchmarks::Penalty::l1, 1.0);
    if (cfg.bench_ridge) add_linear("ridge", benchmarks::Penalty::l2, 0.0);
    if (cfg.bench_elastic)
        add_linear("elastic_net", benchmarks::Penalty::elastic, cfg.elastic_alpha);
    if (cfg.bench_ffn) {
        benchmarks::FfnHyper fh;
        fh.hidden = cfg.ffn_hidden;
        fh.max_epochs = cfg.ffn_max_epochs;
        fh.seed = cfg.hyper.seed;
        auto ffn = benchmarks::fit_ffn(X_train, y_train, X_val, y_val, fh);
        for (auto s : splits)
            panels["ffn"][data::split_name(s)] =
                benchmarks::ffn_prediction_panel(ffn, ds, s);
    }
    if (cfg.bench_factors) {
        if (cfg.factors.empty())
            throw ConfigError("evaluate: bench_factors needs a factors CSV path");
        auto factors = benchmarks::load_factor_csv(cfg.factors);
        for (auto s : splits)
            panels["factors"][data::split_name(s)] =
                benchmarks::factor_prediction_panel(ds, factors, s);
    }

    portfolio::EvalReport report;
    std::vector<std::vector<std::string>> series_rows;
    for (auto& [name, per_split] : panels) {
        for (auto& [split, panel] : per_split) {
            PredictionPanel effective = filter_microcap(panel, ds, exclude_microcap_q);
            report.metrics[name][split] = metrics_of(effective, ds, has_caps);
            save_prediction_panel(
                effective, out_path(cfg, "predictions_" + name + "_" + split + ".csv"));
            try {
                auto series = portfolio::decile_series(effective, ds,
                                                       portfolio::Weighting::equal);
                for (std::size_t i = 0; i < series.months.size(); ++i)
                    series_rows.push_back({data::format_month(series.months[i]),
                                           name + "_" + split + "_longshort",
                                           csv::fmt(series.returns[i])});
            } catch (const Error&) {
                // months too thin for deciles; metrics already carry NaN
            }
        }
    }
    csv::write_file(out_path(cfg, "portfolio_series.csv"), {"month", "series_name", "value"},
                    series_rows);
    nlohmann::json jrep = nlohmann::json::parse(report.to_json());
    jrep["manifest_hash"] = manifest_hash(cfg);
    write_text(out_path(cfg, "eval_report.json"), jrep.dump(2));
}

// ---------------------------------------------------------------------------
// test-alpha
// ---------------------------------------------------------------------------

void cmd_test_alpha(const RunConfig& cfg, const std::string& unmasked_panel,
                    const std::string& masked_panel) {
    write_manifest(cfg, "test-alpha");
    PredictionPanel unmasked = load_prediction_panel(unmasked_panel);
    PredictionPanel masked = load_prediction_panel(masked_panel);
    PredictionPanel with_alpha = estimate_alpha(unmasked, masked);

    auto result = stats::mispricing_test(unmasked.residuals(), masked.residuals());
    nlohmann::json j = nlohmann::json::parse(result.to_json());
    j["manifest_hash"] = manifest_hash(cfg);
    j["n_unmasked"] = unmasked.rows.size();
    j["n_masked"] = masked.rows.size();
    write_text(out_path(cfg, "test_alpha.json"), j.dump(2));

    save_prediction_panel(with_alpha, out_path(cfg, "alpha_panel.csv"));
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

void cmd_cluster(const RunConfig& cfg, const std::string& alpha_panel) {
    write_manifest(cfg, "cluster");
    PredictionPanel panel = load_prediction_panel(alpha_panel);

    std::map<data::MonthId, clustering::MonthPoints> by_month;
    for (const auto& r : panel.rows) {
        if (!std::isfinite(r.alpha_hat))
            throw InputError("cluster: alpha_hat missing in panel (run test-alpha first)");
        auto& mp = by_month[r.month];
        mp.month = r.month;
        mp.points.push_back({r.stock_id, r.alpha_hat, r.realized});
    }
    std::vector<clustering::MonthPoints> months;
    months.reserve(by_month.size());
    for (auto& [m, mp] : by_month) months.push_back(std::move(mp));

    clustering::ClusterConfig cc;
    cc.k = cfg.cluster_k;
    cc.standardize = cfg.cluster_standardize;
    cc.outlier_filter = cfg.cluster_outlier_filter;
    cc.outlier_iqr = cfg.cluster_outlier_iqr;
    cc.n_init = cfg.cluster_n_init;
    cc.seed = cfg.hyper.seed;

    nlohmann::json jreport;
    jreport["manifest_hash"] = manifest_hash(cfg);
    if (cfg.cluster_elbow) {
        std::vector<clustering::Point2> pooled;
        for (const auto& mp : months)
            for (const auto& p : mp.points) pooled.push_back({p.alpha_hat, p.excess_return});
        Rng elbow_rng = Rng(cfg.hyper.seed).child(77);
        auto elbow = clustering::elbow_detect(pooled, elbow_rng);
        cc.k = elbow.chosen_k;
        jreport["elbow"] = {{"chosen_k", elbow.chosen_k},
                            {"k_min", elbow.k_min},
                            {"inertia", elbow.inertia}};
    }
    jreport["k"] = cc.k;

    auto result = clustering::monthly_cluster_sharpes(months, cc);

    std::vector<std::vector<std::string>> arow;
    std::vector<std::vector<std::string>> crow;
    for (const auto& mc : result.months) {
        for (std::size_t i = 0; i < mc.used_points.size(); ++i)
            arow.push_back({data::format_month(mc.month),
                            csv::fmt(static_cast<long long>(mc.used_points[i].stock_id)),
                            csv::fmt(static_cast<long long>(mc.km.assignments[i])),
                            csv::fmt(mc.used_points[i].alpha_hat),
                            csv::fmt(mc.used_points[i].excess_return)});
        for (std::size_t c = 0; c < mc.km.k; ++c)
            crow.push_back({data::format_month(mc.month),
                            csv::fmt(static_cast<long long>(c)),
                            csv::fmt(mc.km.centroids[c].x), csv::fmt(mc.km.centroids[c].y),
                            csv::fmt(static_cast<long long>(mc.cluster_size[c])),
                            csv::fmt(mc.cluster_sharpe[c])});
    }
    csv::write_file(out_path(cfg, "cluster_assignments.csv"),
                    {"month", "stock_id", "cluster", "alpha_hat", "excess_return"}, arow);
    csv::write_file(out_path(cfg, "cluster_centroids.csv"),
                    {"month", "cluster", "centroid_alpha", "centroid_return", "size",
                     "sharpe"},
                    crow);

    std::vector<std::vector<std::string>> srow;
    for (std::size_t i = 0; i < result.series.months.size(); ++i) {
        const std::string m = data::format_month(result.series.months[i]);
        srow.push_back({m, "highest", csv::fmt(result.series.highest[i])});
        srow.push_back({m, "median", csv::fmt(result.series.median[i])});
        srow.push_back({m, "lowest", csv::fmt(result.series.lowest[i])});
    }
    csv::write_file(out_path(cfg, "cluster_sharpe_series.csv"),
                    {"month", "series_name", "value"}, srow);

    auto trend = clustering::sharpe_trend(result.series);
    jreport["trend"] = nlohmann::json::parse(trend.to_json());
    jreport["warnings"] = result.warnings;
    jreport["months_used"] = result.series.months.size();
    write_text(out_path(cfg, "cluster_report.json"), jreport.dump(2));
}

// ---------------------------------------------------------------------------
// importance
// ---------------------------------------------------------------------------

void cmd_importance(const RunConfig& cfg, const std::string& checkpoint_path) {
    write_manifest(cfg, "importance");
    const std::string path = checkpoint_path.empty() ? cfg.checkpoint : checkpoint_path;
    if (path.empty()) throw ConfigError("importance: checkpoint path required");
    data::PanelDataset ds = load_dataset(cfg);
    SnapModel model = load_checkpoint(path);
    const std::string name = model.masked ? "snap_masked" : "snap";

    std::vector<importance::ImportanceReport> reports;
    reports.push_back(importance::importance_report(
        model, ds, data::Split::test, importance::Scope::characteristic, cfg.hyper.seed,
        cfg.importance_scale, cfg.importance_reps, cfg.hyper.threads, name));
    reports.push_back(importance::importance_report(
        model, ds, data::Split::test, importance::Scope::lambda_input, cfg.hyper.seed,
        cfg.importance_scale, cfg.importance_reps, cfg.hyper.threads, name));
    importance::save_importance_csv(reports, out_path(cfg, "importance.csv"));
}

// ---------------------------------------------------------------------------
// argv dispatch
// ---------------------------------------------------------------------------

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"pseudo-Siamese asset pricing toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_override;
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    int threads_override = -1;
    app.add_option("--config", config_path, "key=value run configuration");
    app.add_option("--out", out_override, "output directory override");
    auto* seed_opt = app.add_option("--seed", seed_override, "seed override");
    app.add_option("--threads", threads_override, "worker thread override (0 = all cores)");

    auto* sim = app.add_subcommand("simulate", "generate a synthetic panel with truth");
    auto* train = app.add_subcommand("train", "train the model");
    bool masked = false;
    train->add_flag("--masked", masked, "train the alpha-masked variant");
    auto* evaluate = app.add_subcommand("evaluate", "evaluate checkpoints and benchmarks");
    double exclude_microcap = 0.0;
    evaluate->add_option("--exclude-microcap", exclude_microcap,
                         "drop stocks below this market-cap quantile");
    auto* talpha = app.add_subcommand("test-alpha", "mispricing test on two panels");
    std::string unmasked_panel, masked_panel;
    talpha->add_option("--unmasked-panel", unmasked_panel)->required();
    talpha->add_option("--masked-panel", masked_panel)->required();
    auto* cluster = app.add_subcommand("cluster", "k-means over (alpha, return) pairs");
    std::string alpha_panel;
    cluster->add_option("--alpha-panel", alpha_panel)->required();
    auto* imp = app.add_subcommand("importance", "perturbation feature importance");
    std::string ckpt_path;
    imp->add_option("--checkpoint", ckpt_path);

    std::vector<std::string> argv_strings;
    argv_strings.push_back("snap");
    argv_strings.insert(argv_strings.end(), args.begin(), args.end());
    std::vector<char*> argv;
    argv.reserve(argv_strings.size());
    for (auto& s : argv_strings) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    seed_set = seed_opt->count() > 0;

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{}
                                            : RunConfig::from_file(config_path);
        if (!out_override.empty()) cfg.set("out", out_override);
        if (seed_set) {
            cfg.set("seed", std::to_string(seed_override));
            cfg.set("sim_seed", std::to_string(seed_override));
        }
        if (threads_override >= 0) cfg.set("threads", std::to_string(threads_override));

        if (sim->parsed()) cmd_simulate(cfg);
        else if (train->parsed()) cmd_train(cfg, masked);
        else if (evaluate->parsed()) cmd_evaluate(cfg, exclude_microcap);
        else if (talpha->parsed()) cmd_test_alpha(cfg, unmasked_panel, masked_panel);
        else if (cluster->parsed()) cmd_cluster(cfg, alpha_panel);
        else if (imp->parsed()) cmd_importance(cfg, ckpt_path);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const AlignmentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace snap::cli
