#include "snap/clustering.hpp"

#include "snap/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace snap::clustering {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline double dist2(const Point2& a, const Point2& b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

std::size_t count_distinct(std::span<const Point2> pts) {
    std::vector<std::pair<double, double>> v;
    v.reserve(pts.size());
    for (const auto& p : pts) v.emplace_back(p.x, p.y);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v.size();
}

std::vector<Point2> seed_kmeanspp(std::span<const Point2> pts, std::size_t k, Rng& rng) {
    std::vector<Point2> centroids;
    centroids.reserve(k);
    centroids.push_back(pts[rng.below(pts.size())]);
    std::vector<double> d2(pts.size());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double best = dist2(pts[i], centroids[0]);
            for (std::size_t c = 1; c < centroids.size(); ++c)
                best = std::min(best, dist2(pts[i], centroids[c]));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            // all remaining mass on existing centroids; pick any new distinct point
            for (const auto& p : pts) {
                bool dup = false;
                for (const auto& c : centroids)
                    if (p.x == c.x && p.y == c.y) dup = true;
                if (!dup) {
                    centroids.push_back(p);
                    break;
                }
            }
            continue;
        }
        double r = rng.uniform() * total;
        std::size_t pick = pts.size() - 1;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            r -= d2[i];
            if (r <= 0.0) {
                pick = i;
                break;
            }
        }
        centroids.push_back(pts[pick]);
    }
    return centroids;
}

KMeansResult lloyd_from(std::span<const Point2> pts, std::vector<Point2> centroids,
                        std::size_t max_iter) {
    KMeansResult res;
    res.k = centroids.size();
    res.centroids = std::move(centroids);
    res.assignments.assign(pts.size(), -1);
    const std::size_t k = res.k;

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            int best = 0;
            double bd = dist2(pts[i], res.centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = dist2(pts[i], res.centroids[c]);
                if (d < bd) {
                    bd = d;
                    best = static_cast<int>(c);
                }
            }
            if (res.assignments[i] != best) {
                res.assignments[i] = best;
                changed = true;
            }
        }

        // Repair empty clusters with the point farthest from its centroid.
        while (true) {
            std::vector<std::size_t> count(k, 0);
            for (int a : res.assignments) ++count[a];
            int empty = -1;
            for (std::size_t c = 0; c < k; ++c)
                if (count[c] == 0) empty = static_cast<int>(c);
            if (empty < 0) break;
            double worst = -1.0;
            std::size_t worst_i = 0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (count[res.assignments[i]] <= 1) continue;
                const double d = dist2(pts[i], res.centroids[res.assignments[i]]);
                if (d > worst) {
                    worst = d;
                    worst_i = i;
                }
            }
            res.assignments[worst_i] = empty;
            res.centroids[empty] = pts[worst_i];
            changed = true;
        }

        std::vector<Point2> sums(k, {0.0, 0.0});
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            sums[res.assignments[i]].x += pts[i].x;
            sums[res.assignments[i]].y += pts[i].y;
            ++count[res.assignments[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            res.centroids[c].x = sums[c].x / static_cast<double>(count[c]);
            res.centroids[c].y = sums[c].y / static_cast<double>(count[c]);
        }

        double inertia = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            inertia += dist2(pts[i], res.centroids[res.assignments[i]]);
        res.inertia_trace.push_back(inertia);
        res.inertia = inertia;

        if (!changed) break;
    }

    // Final assignment pass so every point ends on its nearest centroid.
    double inertia = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        int best = 0;
        double bd = dist2(pts[i], res.centroids[0]);
        for (std::size_t c = 1; c < k; ++c) {
            const double d = dist2(pts[i], res.centroids[c]);
            if (d < bd) {
                bd = d;
                best = static_cast<int>(c);
            }
        }
        res.assignments[i] = best;
        inertia += bd;
    }
    res.inertia = inertia;
    return res;
}

} // namespace

KMeansResult kmeans(std::span<const Point2> points, std::size_t k, Rng& rng,
                    std::size_t max_iter, std::size_t n_init) {
    if (k == 0) throw ParamError("kmeans: k must be >= 1");
    if (points.empty()) throw InputError("kmeans: no points");
    if (k > count_distinct(points))
        throw InputError("kmeans: k = " + std::to_string(k) +
                         " exceeds distinct point count");
    KMeansResult best;
    for (std::size_t init = 0; init < std::max<std::size_t>(1, n_init); ++init) {
        Rng child = rng.child(init);
        KMeansResult run = lloyd_from(points, seed_kmeanspp(points, k, child), max_iter);
        if (init == 0 || run.inertia < best.inertia) best = std::move(run);
    }
    return best;
}

std::size_t elbow_from_curve(std::span<const double> inertia, std::size_t k_min) {
    if (inertia.size() < 3) return k_min;
    std::size_t best_k = k_min + 1;
    double best_curv = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < inertia.size(); ++i) {
        const double curv = inertia[i - 1] - 2.0 * inertia[i] + inertia[i + 1];
        if (curv > best_curv + 1e-15) {
            best_curv = curv;
            best_k = k_min + i;
        }
    }
    return best_k;
}

ElbowResult elbow_detect(std::span<const Point2> points, Rng& rng, std::size_t k_min,
                         std::size_t k_max, std::size_t max_iter, std::size_t n_init) {
    if (k_min < 1 || k_max < k_min) throw ParamError("elbow_detect: bad k range");
    const std::size_t distinct = count_distinct(points);
    k_max = std::min(k_max, distinct);
    if (k_max < k_min) throw InputError("elbow_detect: too few distinct points");
    ElbowResult res;
    res.k_min = k_min;
    KMeansResult prev;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        Rng child = rng.child(k);
        KMeansResult run = kmeans(points, k, child, max_iter, n_init);
        // Warm start from the previous solution plus its farthest point: an
        // extra centroid can only lower the cost, which keeps the inertia
        // curve non-increasing even when a random restart lands badly.
        if (k > k_min && prev.k > 0) {
            std::vector<Point2> warm = prev.centroids;
            double worst = -1.0;
            std::size_t worst_i = 0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                const auto& c = prev.centroids[prev.assignments[i]];
                const double d = dist2(points[i], c);
                if (d > worst) {
                    worst = d;
                    worst_i = i;
                }
            }
            warm.push_back(points[worst_i]);
            KMeansResult warm_run = lloyd_from(points, std::move(warm), max_iter);
            if (warm_run.inertia < run.inertia) run = std::move(warm_run);
        }
        res.inertia.push_back(run.inertia);
        prev = std::move(run);
    }
    res.chosen_k = elbow_from_curve(res.inertia, k_min);
    return res;
}

// ---------------------------------------------------------------------------
// Monthly protocol
// ---------------------------------------------------------------------------

namespace {

struct Quartiles {
    double median, iqr;
};

Quartiles quartiles_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    auto at = [&](double q) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return v[lo] * (1.0 - frac) + v[hi] * frac;
    };
    return {at(0.5), at(0.75) - at(0.25)};
}

} // namespace

MonthlyClusteringResult monthly_cluster_sharpes(std::span<const MonthPoints> months,
                                                const ClusterConfig& cfg) {
    if (cfg.k < 1) throw ParamError("monthly_cluster_sharpes: k must be >= 1");
    MonthlyClusteringResult out;
    Rng master(cfg.seed);

    for (std::size_t mi = 0; mi < months.size(); ++mi) {
        const auto& mp = months[mi];
        MonthClustering mc;
        mc.month = mp.month;

        // Outlier rule: drop points beyond cfg.outlier_iqr IQRs of the
        // monthly median in either coordinate.
        mc.used_points.assign(mp.points.begin(), mp.points.end());
        if (cfg.outlier_filter && mp.points.size() >= 4) {
            std::vector<double> xs, ys;
            for (const auto& p : mp.points) {
                xs.push_back(p.alpha_hat);
                ys.push_back(p.excess_return);
            }
            const auto qx = quartiles_of(xs);
            const auto qy = quartiles_of(ys);
            std::vector<AlphaReturn> kept;
            for (const auto& p : mp.points) {
                const bool out_x =
                    qx.iqr > 0 && std::fabs(p.alpha_hat - qx.median) > cfg.outlier_iqr * qx.iqr;
                const bool out_y = qy.iqr > 0 &&
                                   std::fabs(p.excess_return - qy.median) >
                                       cfg.outlier_iqr * qy.iqr;
                if (!out_x && !out_y) kept.push_back(p);
            }
            if (kept.size() < mc.used_points.size())
                out.warnings.push_back(data::format_month(mp.month) + ": dropped " +
                                       std::to_string(mc.used_points.size() - kept.size()) +
                                       " outlier point(s)");
            mc.used_points = std::move(kept);
        }

        if (mc.used_points.size() < cfg.k) {
            out.warnings.push_back(data::format_month(mp.month) +
                                   ": fewer points than clusters, month skipped");
            continue;
        }

        std::vector<Point2> feats(mc.used_points.size());
        for (std::size_t i = 0; i < feats.size(); ++i)
            feats[i] = {mc.used_points[i].alpha_hat, mc.used_points[i].excess_return};
        if (cfg.standardize) {
            for (int dim = 0; dim < 2; ++dim) {
                double mean = 0.0;
                for (const auto& p : feats) mean += dim == 0 ? p.x : p.y;
                mean /= static_cast<double>(feats.size());
                double ss = 0.0;
                for (const auto& p : feats) {
                    const double v = (dim == 0 ? p.x : p.y) - mean;
                    ss += v * v;
                }
                const double sd = std::sqrt(ss / static_cast<double>(feats.size()));
                for (auto& p : feats) {
                    double& v = dim == 0 ? p.x : p.y;
                    v = sd > 0 ? (v - mean) / sd : v - mean;
                }
            }
        }

        Rng month_rng = master.child(mi);
        try {
            mc.km = kmeans(feats, cfg.k, month_rng, cfg.max_iter, cfg.n_init);
        } catch (const InputError&) {
            out.warnings.push_back(data::format_month(mp.month) +
                                   ": too few distinct points, month skipped");
            continue;
        }

        // Cross-sectional Sharpe of each cluster's realized returns.
        mc.cluster_sharpe.assign(cfg.k, kNaN);
        mc.cluster_size.assign(cfg.k, 0);
        for (std::size_t c = 0; c < cfg.k; ++c) {
            std::vector<double> rets;
            for (std::size_t i = 0; i < mc.used_points.size(); ++i)
                if (mc.km.assignments[i] == static_cast<int>(c))
                    rets.push_back(mc.used_points[i].excess_return);
            mc.cluster_size[c] = rets.size();
            if (rets.size() < 2) {
                out.warnings.push_back(data::format_month(mp.month) + ": cluster " +
                                       std::to_string(c) + " has < 2 members, excluded");
                continue;
            }
            double mean = 0.0;
            for (double r : rets) mean += r;
            mean /= static_cast<double>(rets.size());
            double ss = 0.0;
            for (double r : rets) ss += (r - mean) * (r - mean);
            const double sd = std::sqrt(ss / static_cast<double>(rets.size() - 1));
            if (sd == 0.0) {
                out.warnings.push_back(data::format_month(mp.month) + ": cluster " +
                                       std::to_string(c) +
                                       " has zero return SD, excluded");
                continue;
            }
            mc.cluster_sharpe[c] = mean / sd;
        }

        // Rank the defined cluster Sharpes.
        std::vector<std::pair<double, int>> ranked;
        for (std::size_t c = 0; c < cfg.k; ++c)
            if (std::isfinite(mc.cluster_sharpe[c]))
                ranked.emplace_back(mc.cluster_sharpe[c], static_cast<int>(c));
        if (ranked.empty()) {
            out.warnings.push_back(data::format_month(mp.month) +
                                   ": no rankable cluster, month skipped");
            continue;
        }
        std::sort(ranked.begin(), ranked.end());
        mc.lowest = ranked.front().second;
        mc.highest = ranked.back().second;
        mc.median = ranked[(ranked.size() - 1) / 2].second;

        out.series.months.push_back(mp.month);
        out.series.highest.push_back(mc.cluster_sharpe[mc.highest]);
        out.series.median.push_back(mc.cluster_sharpe[mc.median]);
        out.series.lowest.push_back(mc.cluster_sharpe[mc.lowest]);
        out.months.push_back(std::move(mc));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trend regressions
// ---------------------------------------------------------------------------

TrendReport sharpe_trend(const ClusterSharpeSeries& series) {
    const std::size_t n = series.months.size();
    if (n < 3) throw InputError("sharpe_trend: need at least 3 months");
    Matrix X(n, 2);
    for (std::size_t t = 0; t < n; ++t) {
        X(t, 0) = 1.0;
        X(t, 1) = static_cast<double>(t);
    }
    TrendReport rep;
    rep.highest = stats::ols_robust(series.highest, X);
    rep.median = stats::ols_robust(series.median, X);
    rep.lowest = stats::ols_robust(series.lowest, X);
    rep.spread_series.resize(n);
    for (std::size_t t = 0; t < n; ++t)
        rep.spread_series[t] = series.highest[t] - series.lowest[t];
    rep.spread = stats::ols_robust(rep.spread_series, X);
    return rep;
}

namespace {

nlohmann::json fit_to_json(const stats::OlsFit& f) {
    nlohmann::json j;
    j["intercept"] = f.coefficients[0];
    j["slope"] = f.coefficients[1];
    j["intercept_se"] = f.robust_se[0];
    j["slope_se"] = f.robust_se[1];
    j["intercept_t"] = f.t_stats[0];
    j["slope_t"] = f.t_stats[1];
    j["slope_p"] = 2.0 * stats::normal_sf(std::fabs(f.t_stats[1]));
    j["r_squared"] = f.r_squared;
    return j;
}

} // namespace

std::string TrendReport::to_json() const {
    nlohmann::json j;
    j["highest"] = fit_to_json(highest);
    j["median"] = fit_to_json(median);
    j["lowest"] = fit_to_json(lowest);
    j["spread_high_minus_low"] = fit_to_json(spread);
    return j.dump(2);
}

} // namespace snap::clustering
