#include "snap/data.hpp"

#include "snap/csv.hpp"
#include "snap/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace snap::data {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Months and enums
// ---------------------------------------------------------------------------

MonthId parse_month(const std::string& s) {
    if (s.size() != 7 || s[4] != '-')
        throw ParseError("bad month '" + s + "' (want YYYY-MM)");
    int year = 0, mon = 0;
    auto r1 = std::from_chars(s.data(), s.data() + 4, year);
    auto r2 = std::from_chars(s.data() + 5, s.data() + 7, mon);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || mon < 1 || mon > 12)
        throw ParseError("bad month '" + s + "' (want YYYY-MM)");
    return year * 12 + (mon - 1);
}

std::string format_month(MonthId m) {
    const int year = m / 12;
    const int mon = m % 12 + 1;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", year, mon);
    return buf;
}

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validate: return "validate";
        default: return "test";
    }
}

TransformCode parse_transform(const std::string& s) {
    if (s == "level") return TransformCode::level;
    if (s == "diff") return TransformCode::diff;
    if (s == "second_diff") return TransformCode::second_diff;
    if (s == "log") return TransformCode::log;
    if (s == "log_diff") return TransformCode::log_diff;
    if (s == "log_second_diff") return TransformCode::log_second_diff;
    if (s == "pct_change") return TransformCode::pct_change;
    throw ParseError("unknown transform code '" + s + "'");
}

const char* transform_name(TransformCode c) {
    switch (c) {
        case TransformCode::level: return "level";
        case TransformCode::diff: return "diff";
        case TransformCode::second_diff: return "second_diff";
        case TransformCode::log: return "log";
        case TransformCode::log_diff: return "log_diff";
        case TransformCode::log_second_diff: return "log_second_diff";
        default: return "pct_change";
    }
}

// ---------------------------------------------------------------------------
// PanelDataset basics
// ---------------------------------------------------------------------------

int PanelDataset::month_index(MonthId m) const {
    auto it = std::lower_bound(months.begin(), months.end(), m);
    if (it == months.end() || *it != m) return -1;
    return static_cast<int>(it - months.begin());
}

Split PanelDataset::split_of(MonthId m) const {
    if (m < validate_begin) return Split::train;
    if (m < test_begin) return Split::validate;
    return Split::test;
}

std::vector<std::size_t> PanelDataset::split_rows(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (split_of(rows[r].month) == s) out.push_back(r);
    return out;
}

std::optional<std::size_t> PanelDataset::find_row(int stock_id, MonthId month) const {
    auto it = std::lower_bound(stocks.begin(), stocks.end(), stock_id,
                               [](const StockIndex& s, int id) { return s.stock_id < id; });
    if (it == stocks.end() || it->stock_id != stock_id) return std::nullopt;
    const auto begin = rows.begin() + it->first_row;
    const auto end = begin + it->n_rows;
    auto rit = std::lower_bound(begin, end, month,
                                [](const PanelRow& r, MonthId m) { return r.month < m; });
    if (rit == end || rit->month != month) return std::nullopt;
    return static_cast<std::size_t>(rit - rows.begin());
}

void PanelDataset::reindex() {
    // Snapshot month-aligned tables so they can be remapped.
    const std::vector<MonthId> old_months = months;
    const auto old_macro = macro;
    const auto old_common = common_inputs;
    const auto old_lambda = true_lambda;

    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (rows[a].stock_id != rows[b].stock_id) return rows[a].stock_id < rows[b].stock_id;
        return rows[a].month < rows[b].month;
    });

    std::vector<PanelRow> new_rows(rows.size());
    std::vector<double> new_feat(rows.size() * n_chars);
    std::vector<TruthRow> new_truth(has_truth ? rows.size() : 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        new_rows[i] = rows[order[i]];
        std::copy_n(features.begin() + order[i] * n_chars, n_chars,
                    new_feat.begin() + i * n_chars);
        if (has_truth) new_truth[i] = truth[order[i]];
    }
    rows = std::move(new_rows);
    features = std::move(new_feat);
    if (has_truth) truth = std::move(new_truth);

    stocks.clear();
    months.clear();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (r > 0 && rows[r].stock_id == rows[r - 1].stock_id &&
            rows[r].month == rows[r - 1].month)
            throw InputError("panel: duplicate (stock, month) " +
                             std::to_string(rows[r].stock_id) + " " +
                             format_month(rows[r].month));
        if (stocks.empty() || stocks.back().stock_id != rows[r].stock_id)
            stocks.push_back({rows[r].stock_id, r, 0});
        ++stocks.back().n_rows;
        months.push_back(rows[r].month);
    }
    std::sort(months.begin(), months.end());
    months.erase(std::unique(months.begin(), months.end()), months.end());

    month_rows.assign(months.size(), {});
    for (std::size_t r = 0; r < rows.size(); ++r)
        month_rows[month_index(rows[r].month)].push_back(r);

    auto remap = [&](const auto& old_tab, auto& new_tab) {
        if (old_tab.empty() || old_months.empty()) return;
        new_tab.clear();
        new_tab.resize(months.size());
        for (std::size_t i = 0; i < months.size(); ++i) {
            auto it = std::lower_bound(old_months.begin(), old_months.end(), months[i]);
            if (it != old_months.end() && *it == months[i])
                new_tab[i] = old_tab[it - old_months.begin()];
        }
    };
    remap(old_macro, macro);
    remap(old_common, common_inputs);
    remap(old_lambda, true_lambda);
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

namespace {

double median_of(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void impute_monthly_median(PanelDataset& ds, QualityReport* report) {
    std::vector<double> last_median(ds.n_chars, kNaN);
    std::size_t imputed = 0;
    for (std::size_t mi = 0; mi < ds.months.size(); ++mi) {
        const auto& rws = ds.month_rows[mi];
        for (std::size_t k = 0; k < ds.n_chars; ++k) {
            std::vector<double> present;
            present.reserve(rws.size());
            for (auto r : rws) {
                const double v = ds.feat(r)[k];
                if (std::isfinite(v)) present.push_back(v);
            }
            double med;
            if (!present.empty()) {
                med = median_of(present);
                last_median[k] = med;
            } else if (std::isfinite(last_median[k])) {
                // Feature entirely missing this month: fall back to the most
                // recent prior month's median.
                med = last_median[k];
            } else {
                med = 0.0;
            }
            for (auto r : rws) {
                double& v = ds.feat_mut(r)[k];
                if (!std::isfinite(v)) {
                    v = med;
                    ++imputed;
                }
            }
        }
    }
    if (report) report->imputed_cells = imputed;
}

std::vector<double> transform_series(std::span<const double> x, TransformCode code,
                                     const std::string& name) {
    const std::size_t n = x.size();
    auto safe_log = [&](double v) {
        if (!(v > 0.0))
            throw NumericError("macro series '" + name + "': log of non-positive value");
        return std::log(v);
    };
    std::vector<double> out(n, kNaN);
    switch (code) {
        case TransformCode::level:
            out.assign(x.begin(), x.end());
            break;
        case TransformCode::diff:
            for (std::size_t t = 1; t < n; ++t) out[t] = x[t] - x[t - 1];
            break;
        case TransformCode::second_diff:
            for (std::size_t t = 2; t < n; ++t) out[t] = x[t] - 2 * x[t - 1] + x[t - 2];
            break;
        case TransformCode::log:
            for (std::size_t t = 0; t < n; ++t) out[t] = safe_log(x[t]);
            break;
        case TransformCode::log_diff:
            for (std::size_t t = 1; t < n; ++t) out[t] = safe_log(x[t]) - safe_log(x[t - 1]);
            break;
        case TransformCode::log_second_diff:
            for (std::size_t t = 2; t < n; ++t)
                out[t] = safe_log(x[t]) - 2 * safe_log(x[t - 1]) + safe_log(x[t - 2]);
            break;
        case TransformCode::pct_change:
            for (std::size_t t = 1; t < n; ++t) {
                if (x[t - 1] == 0.0)
                    throw NumericError("macro series '" + name + "': pct_change over zero");
                out[t] = x[t] / x[t - 1] - 1.0;
            }
            break;
    }
    return out;
}

} // namespace

void rank_normalize(PanelDataset& ds) {
    for (std::size_t mi = 0; mi < ds.months.size(); ++mi) {
        const auto& rws = ds.month_rows[mi];
        const std::size_t n = rws.size();
        std::vector<std::size_t> idx(n);
        for (std::size_t k = 0; k < ds.n_chars; ++k) {
            std::iota(idx.begin(), idx.end(), 0);
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return ds.feat(rws[a])[k] < ds.feat(rws[b])[k];
            });
            std::size_t i = 0;
            while (i < n) {
                std::size_t j = i;
                const double v = ds.feat(rws[idx[i]])[k];
                while (j + 1 < n && ds.feat(rws[idx[j + 1]])[k] == v) ++j;
                // midrank of the tie group, 1-based
                const double rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
                const double normed = rank / static_cast<double>(n + 1) * 2.0 - 1.0;
                for (std::size_t q = i; q <= j; ++q)
                    ds.feat_mut(rws[idx[q]])[k] = normed;
                i = j + 1;
            }
        }
    }
}

std::vector<double> cross_sectional_means(const PanelDataset& ds, MonthId m) {
    const int mi = ds.month_index(m);
    if (mi < 0) throw InputError("cross_sectional_means: month " + format_month(m) +
                                 " not in panel");
    const auto& rws = ds.month_rows[mi];
    if (rws.empty()) throw InputError("cross_sectional_means: empty month");
    std::vector<double> mean(ds.n_chars, 0.0);
    for (auto r : rws)
        for (std::size_t k = 0; k < ds.n_chars; ++k) mean[k] += ds.feat(r)[k];
    for (auto& v : mean) v /= static_cast<double>(rws.size());
    return mean;
}

void preprocess(PanelDataset& ds, const std::vector<TransformCode>& macro_transforms,
                const LoadConfig& cfg, QualityReport* report) {
    if (ds.rows.empty()) throw InputError("preprocess: empty panel");
    if (cfg.validate_begin != 0) ds.validate_begin = cfg.validate_begin;
    if (cfg.test_begin != 0) ds.test_begin = cfg.test_begin;
    if (ds.validate_begin == 0 || ds.test_begin == 0 ||
        ds.validate_begin > ds.test_begin)
        throw ConfigError("preprocess: split boundaries unset or out of order");

    if (report) {
        report->n_rows = ds.rows.size();
        report->n_stocks = ds.stocks.size();
        report->n_months = ds.months.size();
        report->missing_rate.assign(ds.n_chars, 0.0);
        for (std::size_t r = 0; r < ds.rows.size(); ++r)
            for (std::size_t k = 0; k < ds.n_chars; ++k)
                if (!std::isfinite(ds.feat(r)[k])) report->missing_rate[k] += 1.0;
        for (auto& v : report->missing_rate) v /= static_cast<double>(ds.rows.size());
        for (std::size_t k = 0; k < ds.n_chars; ++k)
            if (report->missing_rate[k] > cfg.max_missing_frac && !cfg.allow_high_missing)
                throw InputError("feature '" + ds.char_names[k] + "' missing rate " +
                                 std::to_string(report->missing_rate[k]) + " exceeds " +
                                 std::to_string(cfg.max_missing_frac));
    } else if (!cfg.allow_high_missing) {
        for (std::size_t k = 0; k < ds.n_chars; ++k) {
            std::size_t miss = 0;
            for (std::size_t r = 0; r < ds.rows.size(); ++r)
                if (!std::isfinite(ds.feat(r)[k])) ++miss;
            if (static_cast<double>(miss) > cfg.max_missing_frac * ds.rows.size())
                throw InputError("feature '" + ds.char_names[k] + "' missing rate exceeds " +
                                 std::to_string(cfg.max_missing_frac));
        }
    }

    impute_monthly_median(ds, report);
    if (cfg.rank_normalize) rank_normalize(ds);

    // Macro: per-series stationarity transform, then standardization with
    // training-split statistics only.
    if (ds.n_macro > 0) {
        if (ds.macro.size() != ds.months.size())
            throw Error("preprocess: macro table not aligned to panel months");
        if (!macro_transforms.empty()) {
            if (macro_transforms.size() != ds.n_macro)
                throw ConfigError("preprocess: one transform per macro series expected");
            bool contiguous = true;
            for (std::size_t i = 1; i < ds.months.size(); ++i)
                if (ds.months[i] != ds.months[i - 1] + 1) contiguous = false;
            for (std::size_t j = 0; j < ds.n_macro; ++j) {
                if (macro_transforms[j] == TransformCode::level) continue;
                if (!contiguous)
                    throw InputError("macro transform '" +
                                     std::string(transform_name(macro_transforms[j])) +
                                     "' needs a month-contiguous panel");
                std::vector<double> series(ds.months.size());
                for (std::size_t t = 0; t < ds.months.size(); ++t) series[t] = ds.macro[t][j];
                auto out = transform_series(series, macro_transforms[j], ds.macro_names[j]);
                for (std::size_t t = 0; t < ds.months.size(); ++t) ds.macro[t][j] = out[t];
            }
            // Drop leading months whose transforms are undefined.
            std::size_t lead = 0;
            while (lead < ds.months.size()) {
                bool ok = true;
                for (double v : ds.macro[lead])
                    if (!std::isfinite(v)) ok = false;
                if (ok) break;
                ++lead;
            }
            if (lead > 0) {
                const MonthId cut = ds.months[lead];
                std::size_t dropped = 0;
                std::vector<PanelRow> keep_rows;
                std::vector<double> keep_feat;
                std::vector<TruthRow> keep_truth;
                for (std::size_t r = 0; r < ds.rows.size(); ++r) {
                    if (ds.rows[r].month < cut) {
                        ++dropped;
                        continue;
                    }
                    keep_rows.push_back(ds.rows[r]);
                    keep_feat.insert(keep_feat.end(), ds.feat(r).begin(), ds.feat(r).end());
                    if (ds.has_truth) keep_truth.push_back(ds.truth[r]);
                }
                ds.rows = std::move(keep_rows);
                ds.features = std::move(keep_feat);
                if (ds.has_truth) ds.truth = std::move(keep_truth);
                ds.reindex();
                if (report) report->rows_dropped_no_macro += dropped;
            }
        }
        if (cfg.standardize_macro) {
            for (std::size_t j = 0; j < ds.n_macro; ++j) {
                double sum = 0.0, sumsq = 0.0;
                std::size_t n = 0;
                for (std::size_t t = 0; t < ds.months.size(); ++t) {
                    if (ds.months[t] >= ds.validate_begin) continue; // training months only
                    sum += ds.macro[t][j];
                    sumsq += ds.macro[t][j] * ds.macro[t][j];
                    ++n;
                }
                if (n == 0) throw InputError("preprocess: no training months for macro stats");
                const double mean = sum / static_cast<double>(n);
                double var = sumsq / static_cast<double>(n) - mean * mean;
                if (var < 0) var = 0;
                const double sd = std::sqrt(var);
                if (sd == 0.0 && report)
                    report->warnings.push_back("macro series '" + ds.macro_names[j] +
                                               "' constant on training split");
                for (std::size_t t = 0; t < ds.months.size(); ++t)
                    ds.macro[t][j] = sd > 0 ? (ds.macro[t][j] - mean) / sd
                                            : ds.macro[t][j] - mean;
            }
        }
    }

    // Lambda-branch input per month: [mean characteristics | macro].
    ds.common_inputs.assign(ds.months.size(), {});
    for (std::size_t t = 0; t < ds.months.size(); ++t) {
        auto zbar = cross_sectional_means(ds, ds.months[t]);
        auto& ci = ds.common_inputs[t];
        ci.reserve(ds.n_chars + ds.n_macro);
        ci.insert(ci.end(), zbar.begin(), zbar.end());
        if (ds.n_macro > 0)
            ci.insert(ci.end(), ds.macro[t].begin(), ds.macro[t].end());
    }

    ds.preprocessed = true;
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

PanelDataset load_panel(const std::string& chars_csv, const std::string& macro_csv,
                        const std::string& transforms_csv, const LoadConfig& cfg,
                        QualityReport* report) {
    auto chars = csv::read_file(chars_csv);
    if (chars.header.size() < 5 || chars.header[0] != "stock_id" ||
        chars.header[1] != "month" || chars.header[2] != "excess_return" ||
        chars.header[3] != "mktcap")
        throw ParseError(chars_csv +
                         ": header must start stock_id,month,excess_return,mktcap");

    PanelDataset ds;
    ds.n_chars = chars.header.size() - 4;
    ds.char_names.assign(chars.header.begin() + 4, chars.header.end());
    ds.rows.reserve(chars.rows.size());
    ds.features.reserve(chars.rows.size() * ds.n_chars);
    for (std::size_t i = 0; i < chars.rows.size(); ++i) {
        const auto& f = chars.rows[i];
        const std::string ctx = chars_csv + ":" + std::to_string(i + 2);
        PanelRow row;
        row.stock_id = static_cast<int>(csv::parse_int(f[0], ctx));
        row.month = parse_month(f[1]);
        row.excess_return = csv::parse_double(f[2], ctx);
        if (!std::isfinite(row.excess_return))
            throw ParseError(ctx + ": missing excess_return");
        row.mktcap = csv::parse_double(f[3], ctx);
        ds.rows.push_back(row);
        for (std::size_t k = 0; k < ds.n_chars; ++k)
            ds.features.push_back(csv::parse_double(f[4 + k], ctx));
    }
    if (ds.rows.empty()) throw InputError(chars_csv + ": no data rows");
    ds.reindex();

    // Macro table on its own timeline; transform, then align to panel months.
    auto macro = csv::read_file(macro_csv);
    if (macro.header.empty() || macro.header[0] != "month")
        throw ParseError(macro_csv + ": header must start with month");
    ds.n_macro = macro.header.size() - 1;
    ds.macro_names.assign(macro.header.begin() + 1, macro.header.end());

    std::vector<TransformCode> codes(ds.n_macro, TransformCode::level);
    if (!transforms_csv.empty()) {
        auto tf = csv::read_file(transforms_csv);
        if (tf.header.size() != 2 || tf.header[0] != "series" ||
            tf.header[1] != "transform_code")
            throw ParseError(transforms_csv + ": header must be series,transform_code");
        std::map<std::string, TransformCode> by_name;
        for (const auto& r : tf.rows) by_name[r[0]] = parse_transform(r[1]);
        for (std::size_t j = 0; j < ds.n_macro; ++j) {
            auto it = by_name.find(ds.macro_names[j]);
            if (it != by_name.end()) codes[j] = it->second;
        }
    }

    std::vector<MonthId> macro_months;
    std::vector<std::vector<double>> macro_vals;
    for (std::size_t i = 0; i < macro.rows.size(); ++i) {
        const std::string ctx = macro_csv + ":" + std::to_string(i + 2);
        macro_months.push_back(parse_month(macro.rows[i][0]));
        std::vector<double> v(ds.n_macro);
        for (std::size_t j = 0; j < ds.n_macro; ++j) {
            v[j] = csv::parse_double(macro.rows[i][j + 1], ctx);
            if (!std::isfinite(v[j])) throw ParseError(ctx + ": missing macro value");
        }
        macro_vals.push_back(std::move(v));
    }
    if (!std::is_sorted(macro_months.begin(), macro_months.end()))
        throw ParseError(macro_csv + ": months must be ascending");

    bool macro_contiguous = true;
    for (std::size_t i = 1; i < macro_months.size(); ++i)
        if (macro_months[i] != macro_months[i - 1] + 1) macro_contiguous = false;
    for (std::size_t j = 0; j < ds.n_macro; ++j) {
        if (codes[j] == TransformCode::level) continue;
        if (!macro_contiguous)
            throw InputError(macro_csv + ": non-level transforms need contiguous months");
        std::vector<double> series(macro_months.size());
        for (std::size_t t = 0; t < series.size(); ++t) series[t] = macro_vals[t][j];
        auto out = transform_series(series, codes[j], ds.macro_names[j]);
        for (std::size_t t = 0; t < series.size(); ++t) macro_vals[t][j] = out[t];
    }

    // Align: keep only panel months with fully-defined macro data.
    std::set<MonthId> good_months;
    for (std::size_t t = 0; t < macro_months.size(); ++t) {
        bool ok = true;
        for (double v : macro_vals[t])
            if (!std::isfinite(v)) ok = false;
        if (ok) good_months.insert(macro_months[t]);
    }
    {
        std::vector<PanelRow> keep_rows;
        std::vector<double> keep_feat;
        std::size_t dropped = 0;
        for (std::size_t r = 0; r < ds.rows.size(); ++r) {
            if (ds.n_macro > 0 && !good_months.count(ds.rows[r].month)) {
                ++dropped;
                continue;
            }
            keep_rows.push_back(ds.rows[r]);
            keep_feat.insert(keep_feat.end(), ds.feat(r).begin(), ds.feat(r).end());
        }
        if (dropped) {
            ds.rows = std::move(keep_rows);
            ds.features = std::move(keep_feat);
            if (ds.rows.empty()) throw InputError("load_panel: no months with macro coverage");
            ds.reindex();
        }
        if (report) report->rows_dropped_no_macro = dropped;
    }
    ds.macro.assign(ds.months.size(), {});
    for (std::size_t t = 0; t < ds.months.size(); ++t) {
        auto it = std::lower_bound(macro_months.begin(), macro_months.end(), ds.months[t]);
        ds.macro[t] = macro_vals[it - macro_months.begin()];
    }

    // Transforms already applied above; preprocess sees level series.
    preprocess(ds, std::vector<TransformCode>(ds.n_macro, TransformCode::level), cfg,
               report);
    return ds;
}

void save_panel(const PanelDataset& ds, const std::string& chars_csv,
                const std::string& macro_csv) {
    std::vector<std::string> header = {"stock_id", "month", "excess_return", "mktcap"};
    header.insert(header.end(), ds.char_names.begin(), ds.char_names.end());
    std::vector<std::vector<std::string>> out;
    out.reserve(ds.rows.size());
    for (std::size_t r = 0; r < ds.rows.size(); ++r) {
        std::vector<std::string> f;
        f.reserve(4 + ds.n_chars);
        f.push_back(csv::fmt(static_cast<long long>(ds.rows[r].stock_id)));
        f.push_back(format_month(ds.rows[r].month));
        f.push_back(csv::fmt(ds.rows[r].excess_return));
        f.push_back(csv::fmt(ds.rows[r].mktcap));
        for (double v : ds.feat(r)) f.push_back(csv::fmt(v));
        out.push_back(std::move(f));
    }
    csv::write_file(chars_csv, header, out);

    std::vector<std::string> mh = {"month"};
    mh.insert(mh.end(), ds.macro_names.begin(), ds.macro_names.end());
    std::vector<std::vector<std::string>> mrows;
    for (std::size_t t = 0; t < ds.months.size(); ++t) {
        std::vector<std::string> f = {format_month(ds.months[t])};
        for (double v : ds.macro[t]) f.push_back(csv::fmt(v));
        mrows.push_back(std::move(f));
    }
    csv::write_file(macro_csv, mh, mrows);
}

void save_truth(const PanelDataset& ds, const std::string& truth_panel_csv,
                const std::string& truth_months_csv) {
    if (!ds.has_truth) throw InputError("save_truth: dataset has no ground truth");
    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = 0; r < ds.rows.size(); ++r)
        rows.push_back({csv::fmt(static_cast<long long>(ds.rows[r].stock_id)),
                        format_month(ds.rows[r].month), csv::fmt(ds.truth[r].alpha),
                        csv::fmt(ds.truth[r].beta)});
    csv::write_file(truth_panel_csv, {"stock_id", "month", "alpha", "beta"}, rows);

    std::vector<std::vector<std::string>> mrows;
    for (std::size_t t = 0; t < ds.months.size(); ++t)
        mrows.push_back({format_month(ds.months[t]), csv::fmt(ds.true_lambda[t])});
    csv::write_file(truth_months_csv, {"month", "lambda"}, mrows);
}

std::string QualityReport::to_json() const {
    nlohmann::json j;
    j["n_rows"] = n_rows;
    j["n_stocks"] = n_stocks;
    j["n_months"] = n_months;
    j["imputed_cells"] = imputed_cells;
    j["rows_dropped_no_macro"] = rows_dropped_no_macro;
    j["missing_rate"] = missing_rate;
    j["warnings"] = warnings;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

namespace {

// -1 drivers resolve to defaults clamped into range.
int resolve_driver(int requested, int fallback, int limit) {
    const int v = requested >= 0 ? requested : std::min(fallback, limit - 1);
    return v;
}

} // namespace

void SyntheticSpec::validate() const {
    if (n_stocks < 2 || n_months < 3 || n_chars < 1 || n_macro < 1)
        throw ParamError("SyntheticSpec: dimensions too small");
    auto in_chars = [&](int i) { return i < n_chars; };
    if (!in_chars(alpha_char_a) || !in_chars(alpha_char_b) || !in_chars(beta_char_a) ||
        !in_chars(beta_char_b))
        throw ParamError("SyntheticSpec: driver characteristic index out of range");
    if (macro_a >= n_macro || macro_b >= n_macro)
        throw ParamError("SyntheticSpec: driver macro index out of range");
    if (noise_sd < 0 || ar1 < 0 || ar1 >= 1 || macro_ar1 < 0 || macro_ar1 >= 1)
        throw ParamError("SyntheticSpec: bad noise/persistence");
    if (missing_frac < 0 || missing_frac >= 1 || drop_frac < 0 || drop_frac >= 1)
        throw ParamError("SyntheticSpec: bad missing/drop fraction");
    if (train_frac <= 0 || validate_frac < 0 || train_frac + validate_frac >= 1)
        throw ParamError("SyntheticSpec: bad split fractions");
}

PanelDataset synthesize(const SyntheticSpec& spec) {
    spec.validate();
    const int N = spec.n_stocks, T = spec.n_months, K = spec.n_chars, J = spec.n_macro;
    const int a0 = resolve_driver(spec.alpha_char_a, 0, K);
    const int a1 = resolve_driver(spec.alpha_char_b, 1, K);
    const int b0 = resolve_driver(spec.beta_char_a, 2, K);
    const int b1 = resolve_driver(spec.beta_char_b, 1, K);
    const int m0 = resolve_driver(spec.macro_a, 0, J);
    const int m1 = resolve_driver(spec.macro_b, 1, J);

    Rng root(spec.seed);
    Rng char_rng = root.child(1);
    Rng macro_rng = root.child(2);
    Rng noise_rng = root.child(3);
    Rng cap_rng = root.child(4);
    Rng drop_rng = root.child(5);
    Rng miss_rng = root.child(6);

    const double innov = std::sqrt(1.0 - spec.ar1 * spec.ar1);

    // chars[i][t][k], AR(1) with unit marginal variance
    std::vector<double> z(static_cast<std::size_t>(N) * T * K);
    auto zat = [&](int i, int t, int k) -> double& {
        return z[(static_cast<std::size_t>(i) * T + t) * K + k];
    };
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < K; ++k)
            for (int t = 0; t < T; ++t)
                zat(i, t, k) = t == 0 ? char_rng.normal()
                                      : spec.ar1 * zat(i, t - 1, k) + innov * char_rng.normal();

    const double minnov = std::sqrt(1.0 - spec.macro_ar1 * spec.macro_ar1);
    std::vector<std::vector<double>> m(T, std::vector<double>(J));
    for (int j = 0; j < J; ++j)
        for (int t = 0; t < T; ++t)
            m[t][j] = t == 0 ? macro_rng.normal()
                             : spec.macro_ar1 * m[t - 1][j] + minnov * macro_rng.normal();

    std::vector<std::vector<double>> cap(N, std::vector<double>(T));
    for (int i = 0; i < N; ++i) {
        double logcap = cap_rng.normal(std::log(1000.0), 1.0);
        for (int t = 0; t < T; ++t) {
            logcap += 0.05 * cap_rng.normal();
            cap[i][t] = std::exp(logcap);
        }
    }

    const bool lin = spec.form == SyntheticSpec::Form::linear;
    // Mispricing has a nonzero average: a purely centered alpha would leave
    // the masked and unmasked residual pools with identical locations, and
    // the group-difference test would have nothing to detect.
    auto alpha_fn = [&](int i, int t) {
        if (spec.zero_alpha) return 0.0;
        const double za = zat(i, t, a0);
        const double zb = zat(i, t, a1);
        return lin ? 0.004 + 0.004 * za - 0.003 * zb
                   : 0.012 - 0.004 * std::tanh(1.5 * za) + 0.002 * (zb * zb - 1.0);
    };
    auto beta_fn = [&](int i, int t) {
        const double za = zat(i, t, b0);
        const double zb = zat(i, t, b1);
        return lin ? 1.0 + 0.4 * za + 0.2 * zb
                   : 1.0 + 0.8 * std::tanh(za) + 0.3 * std::sin(1.5 * zb);
    };

    PanelDataset ds;
    ds.n_chars = K;
    ds.n_macro = J;
    for (int k = 0; k < K; ++k) ds.char_names.push_back("char_" + std::to_string(k + 1));
    for (int j = 0; j < J; ++j) ds.macro_names.push_back("macro_" + std::to_string(j + 1));
    ds.has_truth = true;
    ds.noise_sd = spec.noise_sd;

    // The factor premium is driven by macro states only: per-month rank
    // normalization pins the mean characteristics near zero, so planting
    // signal there would make the truth unrecoverable by construction.
    std::vector<double> lambda(T);
    for (int t = 0; t < T; ++t) {
        const double ma = m[t][m0], mb = m[t][m1];
        lambda[t] = lin ? 0.008 + 0.006 * ma + 0.003 * mb
                        : 0.004 + 0.020 * std::tanh(1.2 * ma) + 0.006 * std::sin(mb);
    }

    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) {
            if (spec.drop_frac > 0 && drop_rng.uniform() < spec.drop_frac) continue;
            PanelRow row;
            row.stock_id = i + 1;
            row.month = spec.start_month + t;
            const double a = alpha_fn(i, t), b = beta_fn(i, t);
            row.excess_return = a + b * lambda[t] + noise_rng.normal(0.0, spec.noise_sd);
            row.mktcap = cap[i][t];
            ds.rows.push_back(row);
            ds.truth.push_back({a, b});
            for (int k = 0; k < K; ++k) {
                double v = zat(i, t, k);
                if (spec.missing_frac > 0 && miss_rng.uniform() < spec.missing_frac)
                    v = kNaN;
                ds.features.push_back(v);
            }
        }

    ds.reindex();
    ds.macro.assign(ds.months.size(), {});
    ds.true_lambda.assign(ds.months.size(), 0.0);
    for (std::size_t mi = 0; mi < ds.months.size(); ++mi) {
        const int t = ds.months[mi] - spec.start_month;
        ds.macro[mi] = m[t];
        ds.true_lambda[mi] = lambda[t];
    }

    const int n_train = static_cast<int>(std::lround(spec.train_frac * T));
    const int n_val = static_cast<int>(std::lround(spec.validate_frac * T));
    ds.validate_begin = spec.start_month + n_train;
    ds.test_begin = spec.start_month + n_train + n_val;
    return ds;
}

double oracle_r2(const PanelDataset& ds, Split split) {
    if (!ds.has_truth) throw InputError("oracle_r2: dataset has no ground truth");
    double sse = 0.0, sst = 0.0;
    for (std::size_t r = 0; r < ds.rows.size(); ++r) {
        if (ds.split_of(ds.rows[r].month) != split) continue;
        const int mi = ds.month_index(ds.rows[r].month);
        const double pred = ds.truth[r].alpha + ds.truth[r].beta * ds.true_lambda[mi];
        const double err = ds.rows[r].excess_return - pred;
        sse += err * err;
        sst += ds.rows[r].excess_return * ds.rows[r].excess_return;
    }
    if (sst == 0.0) throw NumericError("oracle_r2: zero squared returns");
    return 1.0 - sse / sst;
}

} // namespace snap::data
