#pragma once

#include "snap/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace snap::data {

// Months are year*12 + (month-1); CSVs carry ISO "YYYY-MM".
using MonthId = int;

MonthId parse_month(const std::string& s);
std::string format_month(MonthId m);

enum class Split { train, validate, test };
const char* split_name(Split s);

// Per-series stationarity transform applied once to a macro series before
// any split statistics are computed.
enum class TransformCode {
    level,
    diff,
    second_diff,
    log,
    log_diff,
    log_second_diff,
    pct_change,
};
TransformCode parse_transform(const std::string& s);
const char* transform_name(TransformCode c);

struct PanelRow {
    int stock_id = 0;
    MonthId month = 0;
    // Target: next month's excess return. Features dated t predict this.
    double excess_return = 0.0;
    double mktcap = 0.0; // NaN when absent
};

struct TruthRow {
    double alpha = 0.0;
    double beta = 0.0;
};

// Unbalanced stock-month panel plus a monthly common-information table.
// After preprocess() the characteristic block is imputed and normalized, the
// macro block is transformed and standardized on training months only, and
// common_inputs holds [cross-sectional mean characteristics | macro] per
// month, which is the lambda-branch input.
struct PanelDataset {
    std::size_t n_chars = 0;
    std::size_t n_macro = 0;
    std::vector<std::string> char_names;
    std::vector<std::string> macro_names;

    std::vector<PanelRow> rows;   // sorted by (stock_id, month)
    std::vector<double> features; // rows.size() x n_chars

    std::vector<MonthId> months;  // sorted unique months with panel rows
    std::vector<std::vector<double>> macro;         // per month index
    std::vector<std::vector<double>> common_inputs; // per month index, n_chars+n_macro

    // Split boundaries; a month on a boundary belongs to the later split.
    MonthId validate_begin = 0;
    MonthId test_begin = 0;

    struct StockIndex {
        int stock_id;
        std::size_t first_row;
        std::size_t n_rows;
    };
    std::vector<StockIndex> stocks; // sorted by stock_id

    std::vector<std::vector<std::size_t>> month_rows; // per month index

    bool preprocessed = false;

    // Ground truth, present for synthetic panels.
    bool has_truth = false;
    std::vector<TruthRow> truth;     // parallel to rows
    std::vector<double> true_lambda; // per month index
    double noise_sd = 0.0;

    std::span<const double> feat(std::size_t row) const {
        return {features.data() + row * n_chars, n_chars};
    }
    std::span<double> feat_mut(std::size_t row) {
        return {features.data() + row * n_chars, n_chars};
    }
    std::span<const double> common(std::size_t month_idx) const {
        return common_inputs[month_idx];
    }

    int month_index(MonthId m) const; // -1 if absent
    Split split_of(MonthId m) const;
    std::vector<std::size_t> split_rows(Split s) const;
    std::optional<std::size_t> find_row(int stock_id, MonthId month) const;

    // Rebuilds stocks/months/month_rows after rows change.
    void reindex();
};

struct LoadConfig {
    MonthId validate_begin = 0;
    MonthId test_begin = 0;
    bool rank_normalize = true;
    bool standardize_macro = true;
    double max_missing_frac = 0.5;
    bool allow_high_missing = false;
};

// Data-quality summary produced by load_panel/preprocess.
struct QualityReport {
    std::size_t n_rows = 0;
    std::size_t n_stocks = 0;
    std::size_t n_months = 0;
    std::vector<double> missing_rate; // per characteristic, before imputation
    std::size_t imputed_cells = 0;
    std::size_t rows_dropped_no_macro = 0;
    std::vector<std::string> warnings;

    std::string to_json() const;
};

PanelDataset load_panel(const std::string& chars_csv, const std::string& macro_csv,
                        const std::string& transforms_csv, const LoadConfig& cfg,
                        QualityReport* report = nullptr);

// Writes the dataset's current values (raw or preprocessed) in the same
// schemas load_panel reads.
void save_panel(const PanelDataset& ds, const std::string& chars_csv,
                const std::string& macro_csv);
void save_truth(const PanelDataset& ds, const std::string& truth_panel_csv,
                const std::string& truth_months_csv);

// Imputation -> rank normalization -> macro transform/standardization ->
// cross-sectional means -> split assignment, in that order.
void preprocess(PanelDataset& ds,
                const std::vector<TransformCode>& macro_transforms,
                const LoadConfig& cfg, QualityReport* report = nullptr);

// Maps each characteristic's within-month ranks to [-1, 1] via
// (rank/(n+1))*2 - 1 with midranks for ties. Exposed for tests; preprocess
// calls it.
void rank_normalize(PanelDataset& ds);

// Mean characteristic vector over stocks present in the month
// (post-normalization values). Throws InputError for an absent month.
std::vector<double> cross_sectional_means(const PanelDataset& ds, MonthId m);

// ---------------------------------------------------------------------------
// Synthetic panels with known ground truth
// ---------------------------------------------------------------------------

struct SyntheticSpec {
    int n_stocks = 200;
    int n_months = 240;
    int n_chars = 10;
    int n_macro = 5;

    enum class Form { linear, additive_nonlinear };
    Form form = Form::linear;
    bool zero_alpha = false;

    // Characteristic indices driving alpha/beta and macro indices driving
    // lambda (two of each are used by the functional forms); -1 picks a
    // default within range.
    int alpha_char_a = -1, alpha_char_b = -1;
    int beta_char_a = -1, beta_char_b = -1;
    int macro_a = -1, macro_b = -1;

    double noise_sd = 0.02;
    double ar1 = 0.9;       // persistence of characteristics
    double macro_ar1 = 0.7; // macro states mean-revert faster

    double missing_frac = 0.0; // blank this fraction of characteristic cells
    double drop_frac = 0.0;    // drop this fraction of stock-month rows

    std::uint64_t seed = 1;
    MonthId start_month = 2280; // 1990-01

    double train_frac = 0.6;
    double validate_frac = 0.2;

    void validate() const;
};

// Generates a raw (unnormalized) panel with stored true alpha/beta/lambda.
// Split boundaries are derived from the month fractions. Run preprocess()
// (or save + load_panel) before training on it.
PanelDataset synthesize(const SyntheticSpec& spec);

// R^2-style share of squared returns explained by the true conditional mean;
// the ceiling any fitted model can approach on this panel.
double oracle_r2(const PanelDataset& ds, Split split);

} // namespace snap::data
