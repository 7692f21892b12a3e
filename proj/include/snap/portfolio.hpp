#pragma once

#include "snap/data.hpp"
#include "snap/model.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace snap::portfolio {

enum class Weighting { equal, value };
enum class Construction { decile_long_short, arbitrage };

struct PortfolioSeries {
    std::vector<data::MonthId> months; // strictly increasing
    std::vector<double> returns;       // one per month
    Weighting weighting = Weighting::equal;
    Construction construction = Construction::decile_long_short;
};

/// 1 - sum(residual^2) / sum(realized^2); uncentered denominator.
double r2_predictive(const PredictionPanel& panel);

struct StockMonthEntry {
    int stock_id = 0;
    double prediction = 0.0;
    double realized = 0.0; // next month's excess return
    double mktcap = 0.0;   // month-t cap, NaN when absent
};

/// Sorts the month's cross-section by prediction (ties by stock id), longs
/// the top decile against the bottom decile, and returns the long-short
/// return. Value weighting uses the lagged caps within each leg. Needs at
/// least 10 stocks.
double decile_long_short(std::span<const StockMonthEntry> month, Weighting weighting);

/// Annualized Sharpe ratio of a monthly series: mean / sample SD * sqrt(12).
double sharpe(std::span<const double> monthly_returns);
double sharpe(const PortfolioSeries& series);

struct AlphaEntry {
    int stock_id = 0;
    double alpha_hat = 0.0;
    double realized = 0.0;
};

/// Alpha-weighted portfolio return: w_i = alpha_hat_i / N, R = sum w_i R_i.
/// Weights follow the formula literally; net investment is not forced to
/// zero.
double arbitrage_portfolio(std::span<const AlphaEntry> month);

/// Monthly long-short series over the panel (months with >= 10 stocks).
/// Series months are labeled with the realization month t+1. Value
/// weighting pulls month-t caps from the dataset.
PortfolioSeries decile_series(const PredictionPanel& panel, const data::PanelDataset& ds,
                              Weighting weighting);

/// Monthly alpha-weighted series from a panel whose alpha_hat is filled.
PortfolioSeries arbitrage_series(const PredictionPanel& panel);

// ---------------------------------------------------------------------------
// Evaluation report
// ---------------------------------------------------------------------------

struct SplitMetrics {
    double r2 = 0.0;
    double sharpe_eq = 0.0;
    double sharpe_vw = 0.0; // NaN when caps are unavailable
};

struct EvalReport {
    // model name -> split name -> metrics
    std::map<std::string, std::map<std::string, SplitMetrics>> metrics;

    // decay = (train - split) / train * 100%
    double decay(const std::string& model, const std::string& split,
                 double SplitMetrics::* metric) const;

    std::string to_json() const;
};

} // namespace snap::portfolio
