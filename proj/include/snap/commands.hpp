#pragma once

#include "snap/data.hpp"
#include "snap/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace snap::cli {

// Run configuration, read from a key=value file ('#' comments). Every key
// can be overridden by an environment variable SNAP_<KEY> (uppercased), and
// seed/threads/out additionally by command-line flags. config_keys() lists
// the accepted keys.
struct RunConfig {
    // paths
    std::string panel;
    std::string macro;
    std::string transforms;
    std::string factors;
    std::string out = "out";
    std::string checkpoint;
    std::string masked_checkpoint;

    // data handling
    data::MonthId validate_begin = 0;
    data::MonthId test_begin = 0;
    bool rank_normalize = true;
    bool standardize_macro = true;
    double max_missing_frac = 0.5;
    bool allow_high_missing = false;

    SnapHyper hyper;

    // benchmark toggles
    bool bench_lasso = false;
    bool bench_ridge = false;
    bool bench_elastic = false;
    bool bench_ffn = false;
    bool bench_factors = false;
    std::size_t ffn_hidden = 16;
    std::size_t ffn_max_epochs = 200;
    double elastic_alpha = 0.5;

    // clustering
    std::size_t cluster_k = 5;
    bool cluster_elbow = false;
    bool cluster_standardize = true;
    bool cluster_outlier_filter = true;
    double cluster_outlier_iqr = 8.0;
    std::size_t cluster_n_init = 10;

    // importance
    double importance_scale = 0.2;
    std::size_t importance_reps = 1;

    // synthetic generator
    data::SyntheticSpec sim;

    // effective key=value view (post overrides); hashed into the manifest
    std::map<std::string, std::string> effective;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_pairs(const std::map<std::string, std::string>& pairs);
    void set(const std::string& key, const std::string& value);
};

std::uint64_t config_hash(const RunConfig& cfg);

/// Writes <out>/manifest.json (command, config hash, seed, version) before
/// any results; creates the output directory.
void write_manifest(const RunConfig& cfg, const std::string& command);

// Commands. All throw on failure; dispatch() maps exceptions to exit codes
// (0 success, 1 computational failure, 2 configuration/IO error).
void cmd_simulate(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg, bool masked);
void cmd_evaluate(const RunConfig& cfg, double exclude_microcap_q = 0.0);
void cmd_test_alpha(const RunConfig& cfg, const std::string& unmasked_panel,
                    const std::string& masked_panel);
void cmd_cluster(const RunConfig& cfg, const std::string& alpha_panel);
void cmd_importance(const RunConfig& cfg, const std::string& checkpoint_path);

/// Full argv-style entry point used by both the binary and the tests.
int dispatch(const std::vector<std::string>& args);

} // namespace snap::cli
