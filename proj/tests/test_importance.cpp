#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "snap/error.hpp"
#include "snap/importance.hpp"

#include <cmath>

using namespace snap;
using namespace snap::importance;

namespace {

data::PanelDataset small_panel(std::uint64_t seed, int n = 30, int t = 30, int k = 4,
                               int j = 2) {
    data::SyntheticSpec spec;
    spec.n_stocks = n;
    spec.n_months = t;
    spec.n_chars = k;
    spec.n_macro = j;
    spec.seed = seed;
    auto ds = data::synthesize(spec);
    data::preprocess(ds, {}, {});
    return ds;
}

SnapModel zeroed_model(const data::PanelDataset& ds, std::size_t window = 3) {
    SnapHyper h;
    h.hidden_dim = 2;
    h.lambda_hidden_dim = 2;
    h.window = window;
    h.seed = 5;
    SnapModel m = init_model(h, ds.n_chars, ds.n_chars + ds.n_macro, false);
    ParamRefs refs = ParamRefs::trainable(m);
    std::vector<double> zeros(refs.total(), 0.0);
    refs.scatter(zeros);
    return m;
}

// passthrough model: prediction ~= c * z[feature] via a near-linear alpha
// branch (tiny g-gate coefficient keeps the tanh in its linear range)
SnapModel linear_in_feature(const data::PanelDataset& ds, std::size_t feature, double c) {
    SnapHyper h;
    h.hidden_dim = 1;
    h.lambda_hidden_dim = 2;
    h.window = 1;
    h.seed = 6;
    SnapModel m = init_model(h, ds.n_chars, ds.n_chars + ds.n_macro, false);
    ParamRefs refs = ParamRefs::trainable(m);
    std::vector<double> zeros(refs.total(), 0.0);
    refs.scatter(zeros);

    const double s = 1e-3;
    auto& layer = m.alpha.stack.layers[0];
    // gates: input = 1, forget = 0, output = 1 via bias; g = s * z[feature]
    layer.b = {1.0, 0.0, 1.0, 0.0};
    layer.W(feature, 3) = s;
    m.alpha.head_w = {c / s};
    m.beta.head_b = 0.0; // beta*lambda contributes nothing
    return m;
}

} // namespace

TEST_CASE("dead feature has zero importance") {
    auto ds = small_panel(1);
    auto m = zeroed_model(ds);
    Rng rng(7);
    for (std::size_t f = 0; f < ds.n_chars; ++f)
        CHECK(perturb_importance(m, ds, data::Split::test, Scope::characteristic, f, rng) ==
              0.0);
}

TEST_CASE("zero noise scale means zero RMS") {
    auto ds = small_panel(2);
    auto m = linear_in_feature(ds, 1, 0.5);
    Rng rng(8);
    CHECK(perturb_importance(m, ds, data::Split::test, Scope::characteristic, 1, rng,
                             0.0) == 0.0);
}

TEST_CASE("linear model: RMS approximates |c| * scale") {
    data::PanelDataset ds = small_panel(3, 100, 120, 3, 2); // ~ 2400 test cells
    const double c = 0.5;
    auto m = linear_in_feature(ds, 0, c);
    Rng rng(9);
    const double rms =
        perturb_importance(m, ds, data::Split::test, Scope::characteristic, 0, rng, 0.2);
    CHECK(rms == doctest::Approx(c * 0.2).epsilon(0.05));
}

TEST_CASE("doubling the noise scale doubles the RMS for a linear model") {
    auto ds = small_panel(4, 60, 60, 3, 2);
    const double c = 0.4;
    auto m = linear_in_feature(ds, 2, c);
    Rng r1(10), r2(10); // identical child streams -> identical underlying draws
    const double rms1 =
        perturb_importance(m, ds, data::Split::test, Scope::characteristic, 2, r1, 0.2);
    const double rms2 =
        perturb_importance(m, ds, data::Split::test, Scope::characteristic, 2, r2, 0.4);
    CHECK(rms2 / rms1 == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("invalid feature index") {
    auto ds = small_panel(5);
    auto m = zeroed_model(ds);
    Rng rng(11);
    CHECK_THROWS_AS(perturb_importance(m, ds, data::Split::test, Scope::characteristic,
                                       ds.n_chars, rng),
                    InputError);
    CHECK_THROWS_AS(perturb_importance(m, ds, data::Split::test, Scope::lambda_input,
                                       ds.n_chars + ds.n_macro, rng),
                    InputError);
}

TEST_CASE("report: completeness, ordering, determinism, dead-model tie-break") {
    auto ds = small_panel(6);
    auto dead = zeroed_model(ds);
    auto rep = importance_report(dead, ds, data::Split::test, Scope::characteristic, 13);
    CHECK(rep.rows.size() == ds.n_chars);
    // all-zero RMS: ranks are a permutation ordered by feature id
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        CHECK(rep.rows[i].rms == 0.0);
        CHECK(rep.rows[i].feature_index == i);
        CHECK(rep.rows[i].rank == i + 1);
    }

    auto live = linear_in_feature(ds, 1, 0.3);
    auto r1 = importance_report(live, ds, data::Split::test, Scope::characteristic, 13);
    auto r2 = importance_report(live, ds, data::Split::test, Scope::characteristic, 13);
    REQUIRE(r1.rows.size() == r2.rows.size());
    for (std::size_t i = 0; i < r1.rows.size(); ++i) {
        CHECK(r1.rows[i].rms == r2.rows[i].rms);
        CHECK(r1.rows[i].feature_index == r2.rows[i].feature_index);
    }
    CHECK(r1.rows[0].feature_index == 1); // the only live feature ranks first
    CHECK(r1.rows[0].rank == 1);

    auto lam = importance_report(live, ds, data::Split::test, Scope::lambda_input, 13);
    CHECK(lam.rows.size() == ds.n_chars + ds.n_macro);
    for (const auto& row : lam.rows) CHECK(row.rms == 0.0); // lambda head is dead here
}

TEST_CASE("lambda-scope perturbation moves lambda-driven predictions") {
    auto ds = small_panel(7);
    SnapHyper h;
    h.hidden_dim = 2;
    h.lambda_hidden_dim = 2;
    h.window = 2;
    h.seed = 21;
    SnapModel m = init_model(h, ds.n_chars, ds.n_chars + ds.n_macro, false);
    Rng rng(14);
    const double rms = perturb_importance(m, ds, data::Split::test, Scope::lambda_input,
                                          ds.n_chars, rng, 0.2);
    CHECK(rms > 0.0);
}

TEST_CASE("oracle passthrough model ranks the single lambda driver first") {
    // lambda driven by one macro series; a handcrafted model whose premium
    // branch passes that series through must rank it first in lambda scope
    auto ds = small_panel(8, 40, 40, 3, 3);
    SnapHyper h;
    h.hidden_dim = 1;
    h.lambda_hidden_dim = 1;
    h.window = 1;
    h.seed = 9;
    SnapModel m = init_model(h, ds.n_chars, ds.n_chars + ds.n_macro, false);
    ParamRefs refs = ParamRefs::trainable(m);
    std::vector<double> zeros(refs.total(), 0.0);
    refs.scatter(zeros);

    const std::size_t driver = ds.n_chars + 1; // macro_2 within the lambda inputs
    const double s = 1e-3;
    auto& layer = m.lambda.stack.layers[0];
    layer.b = {1.0, 0.0, 1.0, 0.0};
    layer.W(driver, 3) = s;
    m.lambda.head_w = {0.01 / s}; // lambda ~= 0.01 * macro_2
    m.beta.head_b = 1.0;          // prediction = lambda

    auto rep = importance_report(m, ds, data::Split::test, Scope::lambda_input, 31);
    CHECK(rep.rows.size() == ds.n_chars + ds.n_macro);
    CHECK(rep.rows[0].feature_index == driver);
    CHECK(rep.rows[0].rank == 1);
    CHECK(rep.rows[0].feature_name == "macro_2");
    CHECK(rep.rows[0].rms > 0.0);
    for (std::size_t i = 1; i < rep.rows.size(); ++i) CHECK(rep.rows[i].rms == 0.0);
}

TEST_CASE("trained model ranks the planted drivers in the top 20%") {
    data::SyntheticSpec spec;
    spec.n_stocks = 60;
    spec.n_months = 100;
    spec.n_chars = 10;
    spec.n_macro = 2;
    spec.noise_sd = 0.01;
    spec.seed = 31;
    spec.alpha_char_a = 1;
    spec.alpha_char_b = 3;
    spec.beta_char_a = 1;
    spec.beta_char_b = 3;
    auto ds = data::synthesize(spec);
    data::preprocess(ds, {}, {});

    SnapHyper h;
    h.window = 4;
    h.max_epochs = 40;
    h.patience = 10;
    h.batch_months = 6;
    h.learning_rate = 0.003;
    h.dropout_keep = 0.9;
    h.seed = 19;
    h.threads = 2;
    auto r = train_snap(ds, h, false);

    auto rep = importance_report(r.model, ds, data::Split::test, Scope::characteristic,
                                 77, 0.2, 1, 2);
    std::size_t rank1 = 0, rank3 = 0;
    for (const auto& row : rep.rows) {
        if (row.feature_index == 1) rank1 = row.rank;
        if (row.feature_index == 3) rank3 = row.rank;
    }
    MESSAGE("driver ranks: ", rank1, " and ", rank3);
    CHECK(rank1 <= 2);
    CHECK(rank3 <= 2);
}
