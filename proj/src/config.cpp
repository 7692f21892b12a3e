#include "snap/commands.hpp"

#include "snap/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

namespace snap::cli {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

double parse_num(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "panel", "macro", "transforms", "factors", "out", "checkpoint",
        "masked_checkpoint", "validate_begin", "test_begin", "rank_normalize",
        "standardize_macro", "max_missing_frac", "allow_high_missing",
        // hyper
        "hidden_dim", "lambda_hidden_dim", "layers", "window", "dropout_keep",
        "learning_rate", "adam_beta1", "adam_beta2", "adam_eps", "batch_months",
        "max_epochs", "patience", "grad_clip", "seed", "gate_act", "gate_cap",
        "forget_bias", "threads",
        // benchmarks
        "bench_lasso", "bench_ridge", "bench_elastic", "bench_ffn", "bench_factors",
        "ffn_hidden", "ffn_max_epochs", "elastic_alpha",
        // clustering
        "cluster_k", "cluster_elbow", "cluster_standardize", "cluster_outlier_filter",
        "cluster_outlier_iqr", "cluster_n_init",
        // importance
        "importance_scale", "importance_reps",
        // simulate
        "sim_n_stocks", "sim_n_months", "sim_n_chars", "sim_n_macro", "sim_form",
        "sim_zero_alpha", "sim_noise_sd", "sim_ar1", "sim_missing_frac", "sim_drop_frac",
        "sim_seed", "sim_start_month", "sim_train_frac", "sim_validate_frac",
    };
    return keys;
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    effective[key] = value;
    if (key == "panel") panel = value;
    else if (key == "macro") macro = value;
    else if (key == "transforms") transforms = value;
    else if (key == "factors") factors = value;
    else if (key == "out") out = value;
    else if (key == "checkpoint") checkpoint = value;
    else if (key == "masked_checkpoint") masked_checkpoint = value;
    else if (key == "validate_begin") validate_begin = data::parse_month(value);
    else if (key == "test_begin") test_begin = data::parse_month(value);
    else if (key == "rank_normalize") rank_normalize = parse_bool(value, key);
    else if (key == "standardize_macro") standardize_macro = parse_bool(value, key);
    else if (key == "max_missing_frac") max_missing_frac = parse_num(value, key);
    else if (key == "allow_high_missing") allow_high_missing = parse_bool(value, key);
    else if (key == "hidden_dim") hyper.hidden_dim = parse_u64(value, key);
    else if (key == "lambda_hidden_dim") hyper.lambda_hidden_dim = parse_u64(value, key);
    else if (key == "layers") hyper.layers = parse_u64(value, key);
    else if (key == "window") hyper.window = parse_u64(value, key);
    else if (key == "dropout_keep") hyper.dropout_keep = parse_num(value, key);
    else if (key == "learning_rate") hyper.learning_rate = parse_num(value, key);
    else if (key == "adam_beta1") hyper.adam_beta1 = parse_num(value, key);
    else if (key == "adam_beta2") hyper.adam_beta2 = parse_num(value, key);
    else if (key == "adam_eps") hyper.adam_eps = parse_num(value, key);
    else if (key == "batch_months") hyper.batch_months = parse_u64(value, key);
    else if (key == "max_epochs") hyper.max_epochs = parse_u64(value, key);
    else if (key == "patience") hyper.patience = parse_u64(value, key);
    else if (key == "grad_clip") hyper.grad_clip = parse_num(value, key);
    else if (key == "seed") hyper.seed = parse_u64(value, key);
    else if (key == "gate_act") {
        if (value == "relu") hyper.gate_act = GateActivation::relu;
        else if (value == "sigmoid") hyper.gate_act = GateActivation::sigmoid;
        else throw ConfigError("config: gate_act must be relu or sigmoid");
    }
    else if (key == "gate_cap") hyper.gate_cap = parse_num(value, key);
    else if (key == "forget_bias") hyper.forget_bias = parse_num(value, key);
    else if (key == "threads") hyper.threads = static_cast<int>(parse_num(value, key));
    else if (key == "bench_lasso") bench_lasso = parse_bool(value, key);
    else if (key == "bench_ridge") bench_ridge = parse_bool(value, key);
    else if (key == "bench_elastic") bench_elastic = parse_bool(value, key);
    else if (key == "bench_ffn") bench_ffn = parse_bool(value, key);
    else if (key == "bench_factors") bench_factors = parse_bool(value, key);
    else if (key == "ffn_hidden") ffn_hidden = parse_u64(value, key);
    else if (key == "ffn_max_epochs") ffn_max_epochs = parse_u64(value, key);
    else if (key == "elastic_alpha") elastic_alpha = parse_num(value, key);
    else if (key == "cluster_k") cluster_k = parse_u64(value, key);
    else if (key == "cluster_elbow") cluster_elbow = parse_bool(value, key);
    else if (key == "cluster_standardize") cluster_standardize = parse_bool(value, key);
    else if (key == "cluster_outlier_filter") cluster_outlier_filter = parse_bool(value, key);
    else if (key == "cluster_outlier_iqr") cluster_outlier_iqr = parse_num(value, key);
    else if (key == "cluster_n_init") cluster_n_init = parse_u64(value, key);
    else if (key == "importance_scale") importance_scale = parse_num(value, key);
    else if (key == "importance_reps") importance_reps = parse_u64(value, key);
    else if (key == "sim_n_stocks") sim.n_stocks = static_cast<int>(parse_u64(value, key));
    else if (key == "sim_n_months") sim.n_months = static_cast<int>(parse_u64(value, key));
    else if (key == "sim_n_chars") sim.n_chars = static_cast<int>(parse_u64(value, key));
    else if (key == "sim_n_macro") sim.n_macro = static_cast<int>(parse_u64(value, key));
    else if (key == "sim_form") {
        if (value == "linear") sim.form = data::SyntheticSpec::Form::linear;
        else if (value == "additive_nonlinear")
            sim.form = data::SyntheticSpec::Form::additive_nonlinear;
        else throw ConfigError("config: sim_form must be linear or additive_nonlinear");
    }
    else if (key == "sim_zero_alpha") sim.zero_alpha = parse_bool(value, key);
    else if (key == "sim_noise_sd") sim.noise_sd = parse_num(value, key);
    else if (key == "sim_ar1") sim.ar1 = parse_num(value, key);
    else if (key == "sim_missing_frac") sim.missing_frac = parse_num(value, key);
    else if (key == "sim_drop_frac") sim.drop_frac = parse_num(value, key);
    else if (key == "sim_seed") sim.seed = parse_u64(value, key);
    else if (key == "sim_start_month") sim.start_month = data::parse_month(value);
    else if (key == "sim_train_frac") sim.train_frac = parse_num(value, key);
    else if (key == "sim_validate_frac") sim.validate_frac = parse_num(value, key);
    else throw ConfigError("config: unknown key '" + key + "'");
}

RunConfig RunConfig::from_pairs(const std::map<std::string, std::string>& pairs) {
    RunConfig cfg;
    for (const auto& [k, v] : pairs) cfg.set(k, v);
    // Environment overrides: SNAP_<KEY>.
    for (const auto& key : known_keys()) {
        std::string env_name = "SNAP_";
        for (char c : key) env_name += static_cast<char>(std::toupper(c));
        if (const char* v = std::getenv(env_name.c_str())) cfg.set(key, v);
    }
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::map<std::string, std::string> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected key = value");
        pairs[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return from_pairs(pairs);
}

std::uint64_t config_hash(const RunConfig& cfg) {
    // FNV-1a over the sorted effective key=value pairs.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [k, v] : cfg.effective) {
        mix(k);
        mix("=");
        mix(v);
        mix("\n");
    }
    return h;
}

} // namespace snap::cli
