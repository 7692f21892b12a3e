#pragma once

#include "snap/data.hpp"
#include "snap/matrix.hpp"
#include "snap/model.hpp"
#include "snap/stats.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace snap::benchmarks {

// ---------------------------------------------------------------------------
// Regularized linear models
// ---------------------------------------------------------------------------

enum class Penalty { none, l1, l2, elastic };

// Objective on internally standardized features:
//   (1/2n) sum (y - b0 - x'w)^2 + lambda * (alpha*|w|_1 + (1-alpha)/2*|w|_2^2)
// alpha = 1 is the lasso, alpha = 0 is ridge. Pure-quadratic cases (ridge,
// unpenalized) solve in closed form; anything with an l1 term runs cyclic
// coordinate descent with soft-thresholding.
struct LinearModel {
    std::vector<double> weights; // raw feature scale
    double intercept = 0.0;
    Penalty penalty = Penalty::none;
    double lambda = 0.0;
    double alpha = 1.0; // elastic mixing
    std::size_t sweeps = 0;
    bool converged = true;

    double predict(std::span<const double> x) const;
};

LinearModel fit_regularized(const Matrix& X, std::span<const double> y, Penalty penalty,
                            double lambda, double alpha = 1.0, double tol = 1e-8,
                            std::size_t max_sweeps = 10000);

/// Smallest lambda that zeroes every lasso coefficient:
/// max_j |x_j'(y - ybar)| / n on standardized columns.
double lasso_lambda_max(const Matrix& X, std::span<const double> y);

struct PathResult {
    LinearModel best;
    double best_lambda = 0.0;
    std::vector<double> lambdas;
    std::vector<double> validation_mse;
};

/// Log-spaced grid from lambda_max down (100 steps); the model with the
/// lowest validation MSE wins.
PathResult fit_lambda_path(const Matrix& X_train, std::span<const double> y_train,
                           const Matrix& X_val, std::span<const double> y_val,
                           Penalty penalty, double alpha = 1.0, std::size_t steps = 100);

// ---------------------------------------------------------------------------
// Feedforward network (one ReLU hidden layer, scalar head)
// ---------------------------------------------------------------------------

struct FfnHyper {
    std::size_t hidden = 16;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch_size = 1024;
    std::size_t max_epochs = 200;
    std::size_t patience = 5;
    double grad_clip = 5.0;
    std::uint64_t seed = 1;
    bool linear_activation = false; // identity hidden layer (for tests)

    void validate() const;
};

struct FfnModel {
    Matrix W1; // n_features x hidden
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;
    bool linear_activation = false;

    double predict(std::span<const double> x) const;
};

FfnModel init_ffn(const FfnHyper& hyper, std::size_t n_features);

/// Plain-MSE loss over (X, y) plus gradient in flat order [W1, b1, w2, b2].
double ffn_loss_and_grad(const FfnModel& model, const Matrix& X,
                         std::span<const double> y, std::vector<double>& grad);

/// Adam + early stopping on validation MSE, mirroring the main model's
/// training discipline; returns the best-validation-epoch weights.
FfnModel fit_ffn(const Matrix& X_train, std::span<const double> y_train,
                 const Matrix& X_val, std::span<const double> y_val,
                 const FfnHyper& hyper);

// flat parameter view for gradient checks
std::vector<double> ffn_gather(const FfnModel& m);
void ffn_scatter(FfnModel& m, std::span<const double> flat);

// ---------------------------------------------------------------------------
// Factor regressions (factor series supplied by the user, never built here)
// ---------------------------------------------------------------------------

struct FactorTable {
    std::vector<data::MonthId> months; // ascending
    std::vector<std::string> names;
    Matrix values; // months x factors

    int month_index(data::MonthId m) const;
};

/// CSV schema: month,<factor_1..factor_F>
FactorTable load_factor_csv(const std::string& path);

/// Time-series OLS of the return series on [1 | factors], aligned by month;
/// HC1 errors. The intercept estimate is the asset's alpha. Missing factor
/// months raise AlignmentError.
stats::OlsFit factor_regression(std::span<const data::MonthId> months,
                                std::span<const double> returns,
                                const FactorTable& factors);

/// Stock-level factor-model predictions for the split: betas re-estimated
/// monthly on an expanding window of the stock's own history; the month-t
/// prediction applies them to realized factors at t+1 (in-sample benchmark
/// convention). Stocks with under min_history prior observations predict 0.
PredictionPanel factor_prediction_panel(const data::PanelDataset& ds,
                                        const FactorTable& factors, data::Split split,
                                        std::size_t min_history = 24);

// ---------------------------------------------------------------------------
// Panel plumbing shared by the linear/FFN baselines
// ---------------------------------------------------------------------------

/// Design matrix of characteristics for the given rows (one row per panel
/// row) plus the target vector.
Matrix design_matrix(const data::PanelDataset& ds, std::span<const std::size_t> rows);
std::vector<double> target_vector(const data::PanelDataset& ds,
                                  std::span<const std::size_t> rows);

PredictionPanel linear_prediction_panel(const LinearModel& model,
                                        const data::PanelDataset& ds, data::Split split);
PredictionPanel ffn_prediction_panel(const FfnModel& model, const data::PanelDataset& ds,
                                     data::Split split);

} // namespace snap::benchmarks
