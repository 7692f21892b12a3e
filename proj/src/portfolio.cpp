#include "snap/portfolio.hpp"

#include "snap/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace snap::portfolio {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double r2_predictive(const PredictionPanel& panel) {
    if (panel.rows.empty()) throw InputError("r2_predictive: empty panel");
    double sse = 0.0, sst = 0.0;
    for (const auto& r : panel.rows) {
        sse += r.residual * r.residual;
        sst += r.realized * r.realized;
    }
    if (sst == 0.0) throw NumericError("r2_predictive: all realized returns zero");
    return 1.0 - sse / sst;
}

namespace {

double leg_return(std::span<const StockMonthEntry* const> leg, Weighting weighting) {
    if (weighting == Weighting::equal) {
        double s = 0.0;
        for (auto* e : leg) s += e->realized;
        return s / static_cast<double>(leg.size());
    }
    double wsum = 0.0, rsum = 0.0;
    for (auto* e : leg) {
        if (!std::isfinite(e->mktcap) || e->mktcap < 0.0)
            throw InputError("decile_long_short: market cap required for value weighting");
        wsum += e->mktcap;
        rsum += e->mktcap * e->realized;
    }
    if (wsum <= 0.0) throw InputError("decile_long_short: zero total cap in leg");
    return rsum / wsum;
}

} // namespace

double decile_long_short(std::span<const StockMonthEntry> month, Weighting weighting) {
    const std::size_t n = month.size();
    if (n < 10) throw InputError("decile_long_short: need at least 10 stocks, got " +
                                 std::to_string(n));
    std::vector<const StockMonthEntry*> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = &month[i];
    std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        if (a->prediction != b->prediction) return a->prediction < b->prediction;
        return a->stock_id < b->stock_id; // stable tie-break
    });
    std::vector<const StockMonthEntry*> low, high;
    for (std::size_t p = 0; p < n; ++p) {
        const std::size_t decile = p * 10 / n;
        if (decile == 0) low.push_back(order[p]);
        if (decile == 9) high.push_back(order[p]);
    }
    return leg_return(high, weighting) - leg_return(low, weighting);
}

double sharpe(std::span<const double> monthly_returns) {
    const std::size_t n = monthly_returns.size();
    if (n < 2) throw InputError("sharpe: need at least 2 months");
    double mean = 0.0;
    for (double r : monthly_returns) mean += r;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double r : monthly_returns) ss += (r - mean) * (r - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) throw NumericError("sharpe: zero return variance");
    return mean / sd * std::sqrt(12.0);
}

double sharpe(const PortfolioSeries& series) { return sharpe(series.returns); }

double arbitrage_portfolio(std::span<const AlphaEntry> month) {
    if (month.empty()) throw InputError("arbitrage_portfolio: empty month");
    const double n = static_cast<double>(month.size());
    double ret = 0.0;
    for (const auto& e : month) ret += e.alpha_hat / n * e.realized;
    return ret;
}

namespace {

// Panel rows regrouped by month, in month order.
std::map<data::MonthId, std::vector<const PredictionRow*>> by_month(
    const PredictionPanel& panel) {
    std::map<data::MonthId, std::vector<const PredictionRow*>> groups;
    for (const auto& r : panel.rows) groups[r.month].push_back(&r);
    return groups;
}

} // namespace

PortfolioSeries decile_series(const PredictionPanel& panel, const data::PanelDataset& ds,
                              Weighting weighting) {
    PortfolioSeries out;
    out.weighting = weighting;
    out.construction = Construction::decile_long_short;
    for (const auto& [month, rows] : by_month(panel)) {
        if (rows.size() < 10) continue;
        std::vector<StockMonthEntry> entries;
        entries.reserve(rows.size());
        for (const auto* r : rows) {
            StockMonthEntry e;
            e.stock_id = r->stock_id;
            e.prediction = r->predicted;
            e.realized = r->realized;
            e.mktcap = kNaN;
            if (weighting == Weighting::value) {
                const auto row = ds.find_row(r->stock_id, r->month);
                if (row) e.mktcap = ds.rows[*row].mktcap;
            }
            entries.push_back(e);
        }
        out.months.push_back(month + 1); // return accrues the following month
        out.returns.push_back(decile_long_short(entries, weighting));
    }
    if (out.returns.empty()) throw InputError("decile_series: no month with >= 10 stocks");
    return out;
}

PortfolioSeries arbitrage_series(const PredictionPanel& panel) {
    PortfolioSeries out;
    out.construction = Construction::arbitrage;
    for (const auto& [month, rows] : by_month(panel)) {
        std::vector<AlphaEntry> entries;
        entries.reserve(rows.size());
        for (const auto* r : rows) {
            if (!std::isfinite(r->alpha_hat))
                throw InputError("arbitrage_series: alpha_hat missing at stock " +
                                 std::to_string(r->stock_id) + " month " +
                                 data::format_month(month));
            entries.push_back({r->stock_id, r->alpha_hat, r->realized});
        }
        out.months.push_back(month + 1);
        out.returns.push_back(arbitrage_portfolio(entries));
    }
    if (out.returns.empty()) throw InputError("arbitrage_series: empty panel");
    return out;
}

double EvalReport::decay(const std::string& model, const std::string& split,
                         double SplitMetrics::* metric) const {
    const auto& per_split = metrics.at(model);
    const double train = per_split.at("train").*metric;
    const double value = per_split.at(split).*metric;
    if (train == 0.0) return kNaN;
    return (train - value) / train * 100.0;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["decay_definition"] = "(train - split) / train * 100%";
    for (const auto& [model, per_split] : metrics) {
        for (const auto& [split, m] : per_split) {
            nlohmann::json e;
            e["r2_predictive"] = m.r2;
            e["sharpe"] = m.sharpe_eq;
            e["sharpe_vw"] = m.sharpe_vw;
            if (split != "train" && per_split.count("train")) {
                e["sharpe_decay_pct"] = decay(model, split, &SplitMetrics::sharpe_eq);
                e["sharpe_vw_decay_pct"] = decay(model, split, &SplitMetrics::sharpe_vw);
                e["r2_decay_pct"] = decay(model, split, &SplitMetrics::r2);
            }
            j["models"][model][split] = e;
        }
    }
    return j.dump(2);
}

} // namespace snap::portfolio
