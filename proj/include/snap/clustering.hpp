#pragma once

#include "snap/data.hpp"
#include "snap/rng.hpp"
#include "snap/stats.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace snap::clustering {

struct Point2 {
    double x = 0.0; // alpha estimate
    double y = 0.0; // realized excess return
};

struct KMeansResult {
    std::size_t k = 0;
    std::vector<Point2> centroids;
    std::vector<int> assignments;      // per input point
    double inertia = 0.0;              // sum of squared distances
    std::vector<double> inertia_trace; // per Lloyd iteration of the best run
};

/// Lloyd's algorithm with k-means++ seeding and n_init restarts; the best
/// inertia wins. Empty clusters are repaired by promoting the point farthest
/// from its centroid. Requires k <= number of distinct points.
KMeansResult kmeans(std::span<const Point2> points, std::size_t k, Rng& rng,
                    std::size_t max_iter = 100, std::size_t n_init = 10);

struct ElbowResult {
    std::size_t chosen_k = 0;
    std::size_t k_min = 2;
    std::vector<double> inertia; // per k in [k_min, k_min + size)
};

/// Inertia curve over k in [k_min, k_max]; picks the k with the largest
/// second difference (discrete curvature), smallest k on ties.
ElbowResult elbow_detect(std::span<const Point2> points, Rng& rng, std::size_t k_min = 2,
                         std::size_t k_max = 15, std::size_t max_iter = 100,
                         std::size_t n_init = 10);

/// Curvature rule on a precomputed inertia curve (index i holds k_min + i).
std::size_t elbow_from_curve(std::span<const double> inertia, std::size_t k_min);

// ---------------------------------------------------------------------------
// Monthly clustering of (alpha, return) pairs
// ---------------------------------------------------------------------------

struct AlphaReturn {
    int stock_id = 0;
    double alpha_hat = 0.0;
    double excess_return = 0.0;
};

struct MonthPoints {
    data::MonthId month = 0;
    std::vector<AlphaReturn> points;
};

struct ClusterConfig {
    std::size_t k = 5;
    bool standardize = true;     // per-month zero mean / unit variance features
    bool outlier_filter = true;  // drop points beyond outlier_iqr IQRs of the median
    double outlier_iqr = 8.0;
    std::size_t n_init = 10;
    std::size_t max_iter = 100;
    std::uint64_t seed = 1;
};

struct MonthClustering {
    data::MonthId month = 0;
    std::vector<AlphaReturn> used_points; // after outlier filtering
    KMeansResult km;                      // on (standardized) features
    std::vector<double> cluster_sharpe;   // NaN when undefined (< 2 members or zero SD)
    std::vector<std::size_t> cluster_size;
    int highest = -1, median = -1, lowest = -1; // cluster ids by Sharpe rank
};

struct ClusterSharpeSeries {
    std::vector<data::MonthId> months;
    std::vector<double> highest;
    std::vector<double> median;
    std::vector<double> lowest;
};

struct MonthlyClusteringResult {
    std::vector<MonthClustering> months;
    ClusterSharpeSeries series;
    std::vector<std::string> warnings;
};

/// Per month: optional outlier filter, optional standardization, k-means
/// with a child seed keyed by month index, cross-sectional Sharpe
/// (mean/SD of member returns) per cluster, and the highest/median/lowest
/// ranking. Months without enough points or without any rankable cluster
/// are skipped with a warning.
MonthlyClusteringResult monthly_cluster_sharpes(std::span<const MonthPoints> months,
                                                const ClusterConfig& cfg);

// ---------------------------------------------------------------------------
// Time trend of cluster Sharpe ratios
// ---------------------------------------------------------------------------

struct TrendReport {
    stats::OlsFit highest;
    stats::OlsFit median;
    stats::OlsFit lowest;
    stats::OlsFit spread; // highest - lowest
    std::vector<double> spread_series;

    std::string to_json() const;
};

/// OLS of each rank's Sharpe series (and the highest-minus-lowest spread)
/// on a 0-based month index, with HC1 robust errors.
TrendReport sharpe_trend(const ClusterSharpeSeries& series);

} // namespace snap::clustering
