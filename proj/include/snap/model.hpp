#pragma once

#include "snap/data.hpp"
#include "snap/lstm.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace snap {

// Three-branch conditional pricing model: prediction for stock i at month t is
//
//   R_hat = alpha(z_it) + beta(z_it) * lambda(zbar_t, m_t)
//
// where each branch is an LSTM stack over a rolling window of months plus an
// affine scalar head. The masked variant drops the alpha term and is used as
// the null model in the mispricing test. Alpha and beta branches share one
// hyperparameter tuple but own distinct weights.

struct SnapHyper {
    std::size_t hidden_dim = 0;        // 0: max(4, 2/3 of branch input dim)
    std::size_t lambda_hidden_dim = 0; // 0: same rule on the lambda input dim
    std::size_t layers = 1;
    std::size_t window = 12;           // months of history per prediction
    double dropout_keep = 1.0;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch_months = 12;
    std::size_t max_epochs = 100;
    std::size_t patience = 5;
    double grad_clip = 5.0;
    std::uint64_t seed = 1;
    GateActivation gate_act = GateActivation::relu;
    double gate_cap = 0.0;
    double forget_bias = 1.0;
    int threads = 1; // 0 = hardware concurrency

    void validate() const;
};

struct BranchParams {
    LstmStack stack;
    std::vector<double> head_w;
    double head_b = 0.0;
};

struct SnapModel {
    BranchParams alpha;
    BranchParams beta;
    BranchParams lambda;
    SnapHyper hyper;
    bool masked = false;
    std::size_t n_chars = 0;  // alpha/beta input dim
    std::size_t n_common = 0; // lambda input dim (chars + macro)
};

/// Fresh model with seeded Glorot initialization; dims resolved from the
/// hyperparameters and input sizes.
SnapModel init_model(const SnapHyper& hyper, std::size_t n_chars, std::size_t n_common,
                     bool masked);

using Seq = std::vector<std::span<const double>>;

struct BranchOutputs {
    double alpha = 0.0;
    double beta = 0.0;
    double lambda = 0.0;
    double prediction = 0.0;
};

/// Evaluation-mode prediction from explicit windows (dropout off). The two
/// windows must end at the same month. For a masked model the prediction is
/// beta*lambda and the alpha output stays 0.
BranchOutputs predict(const SnapModel& model, const Seq& stock_window,
                      const Seq& common_window);

/// Branch forward on its own (eval mode): LSTM stack + affine head.
double branch_forward(const BranchParams& branch, const Seq& window);

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

struct LabeledPrediction {
    int stock_id = 0;
    double target = 0.0;
    double predicted = 0.0;
};

/// Average-of-averages squared error: stocks weighted equally, months within
/// a stock weighted equally. Throws InputError on an empty batch.
double snap_loss(std::span<const LabeledPrediction> batch);

/// Eq-weighted loss of the model over the given panel rows (eval mode).
double snap_loss(const SnapModel& model, const data::PanelDataset& ds,
                 std::span<const std::size_t> row_ids);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Scales g in place so its global L2 norm is at most max_norm (no-op when
/// max_norm <= 0). Returns the pre-clip norm.
double clip_global_norm(std::span<double> g, double max_norm);

/// Standard bias-corrected Adam update. `grads` must already be clipped;
/// non-finite gradients abort with NumericError.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, double beta1, double beta2, double eps);

// ---------------------------------------------------------------------------
// Flat parameter access (optimizer order: per branch, layer W then b, then
// head_w, head_b; branches alpha, beta, lambda; alpha omitted when masked)
// ---------------------------------------------------------------------------

class ParamRefs {
public:
    static ParamRefs trainable(SnapModel& model);
    static ParamRefs of_branch(BranchParams& branch);

    std::size_t total() const { return total_; }
    std::vector<double> gather() const;
    void scatter(std::span<const double> flat);

private:
    std::vector<std::span<double>> blocks_;
    std::size_t total_ = 0;
    void add(double* p, std::size_t n);
    void add_branch(BranchParams& b);
};

// ---------------------------------------------------------------------------
// Prediction panels and alpha estimation
// ---------------------------------------------------------------------------

struct PredictionRow {
    int stock_id = 0;
    data::MonthId month = 0;
    double realized = 0.0;
    double predicted = 0.0;
    double residual = 0.0;  // realized - predicted
    double alpha_hat = 0.0; // NaN until estimate_alpha fills it
};

struct PredictionPanel {
    std::vector<PredictionRow> rows; // sorted by (stock_id, month)

    std::vector<double> residuals() const;
    std::vector<double> alphas() const;
};

/// Eval-mode predictions for every row of the split.
PredictionPanel evaluate_panel(const SnapModel& model, const data::PanelDataset& ds,
                               data::Split split, int threads = 1);

/// alpha_hat = masked residual - unmasked residual per (stock, month).
/// Panels must cover identical keys.
PredictionPanel estimate_alpha(const PredictionPanel& unmasked,
                               const PredictionPanel& masked);

/// CSV: stock_id,month,realized,predicted,residual,alpha_hat
void save_prediction_panel(const PredictionPanel& panel, const std::string& path);
PredictionPanel load_prediction_panel(const std::string& path);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainLogEntry {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    SnapModel model;
    std::vector<TrainLogEntry> log;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
};

/// Full loop: month-sampled mini-batches, Adam with global-norm clipping,
/// early stopping on validation loss, model returned at the best-validation
/// epoch. Deterministic in (seed, data, hyper) for any thread count.
TrainResult train_snap(const data::PanelDataset& ds, const SnapHyper& hyper, bool masked);

/// Eq-weighted loss over the given rows plus its gradient w.r.t. the
/// trainable parameters (eval mode, deterministic). Used by the gradient
/// oracle suites; training uses the same path internally.
double loss_and_gradient(SnapModel& model, const data::PanelDataset& ds,
                         std::span<const std::size_t> row_ids, std::vector<double>& grad);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const SnapModel& model, const std::string& path);
SnapModel load_checkpoint(const std::string& path);

/// Training log CSV: epoch,train_loss,val_loss,lr,seed
void save_train_log(const TrainResult& result, std::uint64_t seed, const std::string& path);

} // namespace snap
