#include "snap/importance.hpp"

#include "snap/csv.hpp"
#include "snap/error.hpp"

#include <algorithm>
#include <cmath>

namespace snap::importance {

const char* scope_name(Scope s) {
    return s == Scope::characteristic ? "characteristic" : "lambda_input";
}

namespace {

// Mean squared prediction difference for one fresh noise draw.
double mean_sq_diff(const SnapModel& model, const data::PanelDataset& ds,
                    data::Split split, Scope scope, std::size_t feature_index, Rng& rng,
                    double scale, int threads, const PredictionPanel& base) {
    data::PanelDataset perturbed = ds;
    if (scope == Scope::characteristic) {
        if (feature_index >= ds.n_chars)
            throw InputError("perturb_importance: characteristic index out of range");
        // One draw per (stock, month) observation in the split, in row order.
        for (std::size_t r = 0; r < perturbed.rows.size(); ++r)
            if (perturbed.split_of(perturbed.rows[r].month) == split)
                perturbed.feat_mut(r)[feature_index] += rng.normal(0.0, scale);
    } else {
        if (feature_index >= ds.n_chars + ds.n_macro)
            throw InputError("perturb_importance: lambda input index out of range");
        // One draw per month in the split.
        for (std::size_t t = 0; t < perturbed.months.size(); ++t)
            if (perturbed.split_of(perturbed.months[t]) == split)
                perturbed.common_inputs[t][feature_index] += rng.normal(0.0, scale);
    }

    PredictionPanel shifted = evaluate_panel(model, perturbed, split, threads);
    if (shifted.rows.size() != base.rows.size())
        throw Error("perturb_importance: panel size changed");
    double acc = 0.0;
    for (std::size_t i = 0; i < base.rows.size(); ++i) {
        const double d = shifted.rows[i].predicted - base.rows[i].predicted;
        acc += d * d;
    }
    return acc / static_cast<double>(base.rows.size());
}

} // namespace

double perturb_importance(const SnapModel& model, const data::PanelDataset& ds,
                          data::Split split, Scope scope, std::size_t feature_index,
                          Rng& rng, double scale, int threads) {
    if (scale < 0.0) throw ParamError("perturb_importance: negative scale");
    const PredictionPanel base = evaluate_panel(model, ds, split, threads);
    return std::sqrt(
        mean_sq_diff(model, ds, split, scope, feature_index, rng, scale, threads, base));
}

ImportanceReport importance_report(const SnapModel& model, const data::PanelDataset& ds,
                                   data::Split split, Scope scope, std::uint64_t seed,
                                   double scale, std::size_t repetitions, int threads,
                                   const std::string& model_name) {
    if (repetitions < 1) throw ParamError("importance_report: repetitions must be >= 1");
    const std::size_t n_features =
        scope == Scope::characteristic ? ds.n_chars : ds.n_chars + ds.n_macro;
    const PredictionPanel base = evaluate_panel(model, ds, split, threads);
    Rng master = Rng(seed).child(scope == Scope::characteristic ? 1 : 2);

    ImportanceReport report;
    report.model_name = model_name;
    report.rows.reserve(n_features);
    for (std::size_t f = 0; f < n_features; ++f) {
        double msd = 0.0;
        for (std::size_t rep = 0; rep < repetitions; ++rep) {
            Rng child = master.child(f * 1000003ULL + rep);
            msd += mean_sq_diff(model, ds, split, scope, f, child, scale, threads, base);
        }
        ImportanceRow row;
        row.feature_index = f;
        row.scope = scope;
        row.rms = std::sqrt(msd / static_cast<double>(repetitions));
        if (scope == Scope::characteristic) {
            row.feature_name = ds.char_names[f];
        } else {
            row.feature_name = f < ds.n_chars ? "avg_" + ds.char_names[f]
                                              : ds.macro_names[f - ds.n_chars];
        }
        report.rows.push_back(std::move(row));
    }

    std::sort(report.rows.begin(), report.rows.end(), [](const auto& a, const auto& b) {
        if (a.rms != b.rms) return a.rms > b.rms;
        return a.feature_index < b.feature_index;
    });
    for (std::size_t i = 0; i < report.rows.size(); ++i) report.rows[i].rank = i + 1;
    return report;
}

void save_importance_csv(const std::vector<ImportanceReport>& reports,
                         const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& rep : reports)
        for (const auto& r : rep.rows)
            rows.push_back({r.feature_name, scope_name(r.scope), csv::fmt(r.rms),
                            csv::fmt(static_cast<long long>(r.rank)), rep.model_name});
    csv::write_file(path, {"feature", "scope", "rms", "rank", "model_name"}, rows);
}

} // namespace snap::importance
