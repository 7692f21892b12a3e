#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "snap/error.hpp"
#include "snap/portfolio.hpp"
#include "snap/rng.hpp"

#include <cmath>

using namespace snap;
using namespace snap::portfolio;

namespace {

PredictionPanel panel_of(const std::vector<std::array<double, 2>>& realized_predicted) {
    PredictionPanel p;
    int id = 1;
    for (const auto& [realized, predicted] : realized_predicted) {
        PredictionRow r;
        r.stock_id = id++;
        r.month = 600;
        r.realized = realized;
        r.predicted = predicted;
        r.residual = realized - predicted;
        p.rows.push_back(r);
    }
    return p;
}

} // namespace

TEST_CASE("r2_predictive examples") {
    auto perfect = panel_of({{0.1, 0.1}, {-0.2, -0.2}});
    CHECK(r2_predictive(perfect) == doctest::Approx(1.0));

    auto zeros = panel_of({{0.1, 0.0}, {-0.2, 0.0}});
    CHECK(r2_predictive(zeros) == doctest::Approx(0.0));

    auto mixed = panel_of({{0.1, 0.05}, {-0.1, 0.0}});
    CHECK(mixed.rows[0].residual == doctest::Approx(0.05));
    CHECK(r2_predictive(mixed) == doctest::Approx(0.375).epsilon(1e-12));

    auto degenerate = panel_of({{0.0, 0.1}});
    CHECK_THROWS_AS(r2_predictive(degenerate), NumericError);
    CHECK_THROWS_AS(r2_predictive(PredictionPanel{}), InputError);
}

TEST_CASE("r2_predictive never exceeds 1 and hits 1 only at zero residuals") {
    Rng rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        PredictionPanel p;
        bool all_zero = true;
        for (int i = 0; i < 20; ++i) {
            PredictionRow r;
            r.stock_id = i;
            r.month = 100;
            r.realized = rng.uniform(-1, 1);
            r.predicted = rep % 3 == 0 ? r.realized : rng.uniform(-1, 1);
            r.residual = r.realized - r.predicted;
            if (r.residual != 0.0) all_zero = false;
            p.rows.push_back(r);
        }
        const double r2 = r2_predictive(p);
        CHECK(r2 <= 1.0);
        CHECK((r2 == 1.0) == all_zero);
    }
}

TEST_CASE("decile long-short: perfectly ranked 20 stocks give 18") {
    std::vector<StockMonthEntry> month;
    for (int i = 1; i <= 20; ++i)
        month.push_back({i, static_cast<double>(i), static_cast<double>(i), 1.0});
    CHECK(decile_long_short(month, Weighting::equal) ==
          doctest::Approx(18.0).epsilon(1e-12));
}

TEST_CASE("decile long-short: rank-only dependence") {
    Rng rng(7);
    std::vector<StockMonthEntry> month;
    for (int i = 1; i <= 37; ++i)
        month.push_back({i, rng.uniform(-1, 1), rng.normal(0, 0.05), 1.0});
    const double base = decile_long_short(month, Weighting::equal);

    auto warped = month;
    for (auto& e : warped) e.prediction = std::exp(3.0 * e.prediction) - 2.0;
    CHECK(decile_long_short(warped, Weighting::equal) == base);
}

TEST_CASE("decile long-short: equal predictions fall back to stock-id order") {
    std::vector<StockMonthEntry> month;
    for (int i = 1; i <= 20; ++i)
        month.push_back({21 - i, 0.5, static_cast<double>(21 - i), 1.0});
    // sorted by id: ids 1..20, low leg = ids {1,2} (returns 1,2), high = {19,20}
    CHECK(decile_long_short(month, Weighting::equal) == doctest::Approx(18.0));
}

TEST_CASE("decile long-short: value weights follow the dominant cap") {
    std::vector<StockMonthEntry> month;
    for (int i = 1; i <= 20; ++i) {
        StockMonthEntry e{i, static_cast<double>(i), static_cast<double>(i), 1e-9};
        month.push_back(e);
    }
    month[0].mktcap = 1e9;  // decile 1 dominated by stock 1 (return 1)
    month[19].mktcap = 1e9; // decile 10 dominated by stock 20 (return 20)
    CHECK(decile_long_short(month, Weighting::value) == doctest::Approx(19.0));

    month[3].mktcap = std::numeric_limits<double>::quiet_NaN();
    CHECK_NOTHROW(decile_long_short(month, Weighting::equal));
    month[0].mktcap = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(decile_long_short(month, Weighting::value), InputError);

    month.resize(9);
    CHECK_THROWS_AS(decile_long_short(month, Weighting::equal), InputError);
}

TEST_CASE("sharpe hand example and properties") {
    std::vector<double> rets = {0.01, 0.03};
    const double sr = sharpe(rets);
    CHECK(sr == doctest::Approx(std::sqrt(24.0)).epsilon(1e-10));
    CHECK(sr == doctest::Approx(4.898979485566356).epsilon(1e-10));

    std::vector<double> constant = {0.02, 0.02, 0.02};
    CHECK_THROWS_AS(sharpe(constant), NumericError);
    std::vector<double> single = {0.02};
    CHECK_THROWS_AS(sharpe(single), InputError);

    Rng rng(9);
    std::vector<double> series(48);
    for (auto& v : series) v = rng.normal(0.01, 0.04);
    const double base = sharpe(series);

    auto negated = series;
    for (auto& v : negated) v = -v;
    CHECK(sharpe(negated) == doctest::Approx(-base).epsilon(1e-12));

    for (double c : {0.5, 2.0, 117.0}) {
        auto scaled = series;
        for (auto& v : scaled) v *= c;
        CHECK(sharpe(scaled) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("arbitrage portfolio examples and linearity") {
    std::vector<AlphaEntry> zeros = {{1, 0.0, 0.1}, {2, 0.0, -0.2}};
    CHECK(arbitrage_portfolio(zeros) == 0.0);

    std::vector<AlphaEntry> two = {{1, 0.02, 0.10}, {2, -0.02, -0.10}};
    CHECK(arbitrage_portfolio(two) == doctest::Approx(0.002).epsilon(1e-12));

    CHECK_THROWS_AS(arbitrage_portfolio({}), InputError);

    Rng rng(11);
    std::vector<AlphaEntry> base;
    for (int i = 0; i < 15; ++i)
        base.push_back({i, rng.normal(0, 0.01), rng.normal(0, 0.05)});
    const double r0 = arbitrage_portfolio(base);

    auto scaled_alpha = base;
    for (auto& e : scaled_alpha) e.alpha_hat *= 3.0;
    CHECK(arbitrage_portfolio(scaled_alpha) == doctest::Approx(3.0 * r0).epsilon(1e-12));

    auto scaled_ret = base;
    for (auto& e : scaled_ret) e.realized *= -2.0;
    CHECK(arbitrage_portfolio(scaled_ret) == doctest::Approx(-2.0 * r0).epsilon(1e-12));

    // additivity in alpha
    auto a = base, b = base;
    Rng rng2(12);
    for (auto& e : b) e.alpha_hat = rng2.normal(0, 0.01);
    auto sum = base;
    for (std::size_t i = 0; i < sum.size(); ++i)
        sum[i].alpha_hat = a[i].alpha_hat + b[i].alpha_hat;
    CHECK(arbitrage_portfolio(sum) ==
          doctest::Approx(arbitrage_portfolio(a) + arbitrage_portfolio(b)).epsilon(1e-12));
}

TEST_CASE("eval report decay arithmetic") {
    EvalReport rep;
    rep.metrics["snap"]["train"] = {0.10, 2.0, 1.9};
    rep.metrics["snap"]["test"] = {0.05, 1.5, 1.9};
    CHECK(rep.decay("snap", "test", &SplitMetrics::sharpe_eq) == doctest::Approx(25.0));
    CHECK(rep.decay("snap", "test", &SplitMetrics::sharpe_vw) == doctest::Approx(0.0));
    CHECK(rep.decay("snap", "test", &SplitMetrics::r2) == doctest::Approx(50.0));

    const std::string json = rep.to_json();
    CHECK(json.find("snap") != std::string::npos);
    CHECK(json.find("sharpe_decay_pct") != std::string::npos);
}

TEST_CASE("decile and arbitrage series from panels") {
    // two months, 12 stocks each, predictions equal realized
    data::SyntheticSpec spec;
    spec.n_stocks = 12;
    spec.n_months = 4;
    spec.n_chars = 2;
    spec.n_macro = 1;
    spec.seed = 3;
    auto ds = data::synthesize(spec);

    PredictionPanel p;
    for (std::size_t r = 0; r < ds.rows.size(); ++r) {
        PredictionRow row;
        row.stock_id = ds.rows[r].stock_id;
        row.month = ds.rows[r].month;
        row.realized = ds.rows[r].excess_return;
        row.predicted = row.realized;
        row.residual = 0.0;
        row.alpha_hat = 0.001 * row.stock_id;
        p.rows.push_back(row);
    }
    auto series = decile_series(p, ds, Weighting::equal);
    CHECK(series.months.size() == ds.months.size());
    // perfect foresight long-short is positive every month
    for (double v : series.returns) CHECK(v > 0.0);
    // labeled by realization month t+1
    CHECK(series.months[0] == ds.months[0] + 1);

    auto vw = decile_series(p, ds, Weighting::value);
    CHECK(vw.returns.size() == series.returns.size());

    auto arb = arbitrage_series(p);
    CHECK(arb.returns.size() == ds.months.size());

    PredictionPanel no_alpha = p;
    for (auto& row : no_alpha.rows)
        row.alpha_hat = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(arbitrage_series(no_alpha), InputError);
}
