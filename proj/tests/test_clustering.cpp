#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "snap/clustering.hpp"
#include "snap/error.hpp"
#include "snap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace snap;
using namespace snap::clustering;

namespace {

std::vector<Point2> gaussian_blob(Rng& rng, double cx, double cy, double sd,
                                  std::size_t n) {
    std::vector<Point2> pts;
    for (std::size_t i = 0; i < n; ++i)
        pts.push_back({cx + rng.normal(0, sd), cy + rng.normal(0, sd)});
    return pts;
}

} // namespace

TEST_CASE("kmeans k=1 returns the mean") {
    Rng rng(1);
    auto pts = gaussian_blob(rng, 2.0, -1.0, 1.0, 50);
    Rng krng(2);
    auto res = kmeans(pts, 1, krng);
    double mx = 0, my = 0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= 50;
    my /= 50;
    CHECK(res.centroids[0].x == doctest::Approx(mx).epsilon(1e-12));
    CHECK(res.centroids[0].y == doctest::Approx(my).epsilon(1e-12));
    for (int a : res.assignments) CHECK(a == 0);
}

TEST_CASE("kmeans separates two well-separated blobs exactly") {
    Rng rng(2);
    auto pts = gaussian_blob(rng, 0.0, 0.0, 0.3, 40);
    auto blob2 = gaussian_blob(rng, 10.0, 10.0, 0.3, 35);
    pts.insert(pts.end(), blob2.begin(), blob2.end());
    Rng krng(3);
    auto res = kmeans(pts, 2, krng);
    const int first = res.assignments[0];
    for (std::size_t i = 0; i < 40; ++i) CHECK(res.assignments[i] == first);
    for (std::size_t i = 40; i < pts.size(); ++i) CHECK(res.assignments[i] == 1 - first);
}

TEST_CASE("kmeans k = n gives zero inertia") {
    std::vector<Point2> pts = {{0, 0}, {1, 0}, {0, 1}, {2, 2}, {-1, 3}};
    Rng krng(4);
    auto res = kmeans(pts, pts.size(), krng);
    CHECK(res.inertia == doctest::Approx(0.0));
}

TEST_CASE("kmeans rejects k beyond the distinct point count") {
    std::vector<Point2> pts = {{1, 1}, {1, 1}, {2, 2}};
    Rng krng(5);
    CHECK_THROWS_AS(kmeans(pts, 3, krng), InputError);
    CHECK_NOTHROW(kmeans(pts, 2, krng));
}

TEST_CASE("kmeans is deterministic for a fixed seed with n_init = 1") {
    Rng rng(6);
    auto pts = gaussian_blob(rng, 0, 0, 2.0, 60);
    Rng k1(7), k2(7);
    auto a = kmeans(pts, 4, k1, 100, 1);
    auto b = kmeans(pts, 4, k2, 100, 1);
    CHECK(a.assignments == b.assignments);
    CHECK(a.inertia == b.inertia);
}

TEST_CASE("lloyd inertia is non-increasing across iterations") {
    Rng rng(8);
    auto pts = gaussian_blob(rng, 0, 0, 3.0, 120);
    Rng krng(9);
    auto res = kmeans(pts, 5, krng, 100, 3);
    REQUIRE(res.inertia_trace.size() >= 1);
    for (std::size_t i = 1; i < res.inertia_trace.size(); ++i)
        CHECK(res.inertia_trace[i] <= res.inertia_trace[i - 1] + 1e-9);
}

TEST_CASE("k=2 on collinear points matches the optimal threshold partition") {
    Rng rng(10);
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t n = 8 + rng.below(13); // up to 20
        std::vector<Point2> pts;
        std::vector<double> xs;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = rng.uniform(-5, 5);
            pts.push_back({x, 0.0});
            xs.push_back(x);
        }
        std::sort(xs.begin(), xs.end());
        // exhaustive threshold search on the sorted 1-D values
        double best = 1e300;
        for (std::size_t cut = 1; cut < n; ++cut) {
            double m1 = 0, m2 = 0;
            for (std::size_t i = 0; i < cut; ++i) m1 += xs[i];
            for (std::size_t i = cut; i < n; ++i) m2 += xs[i];
            m1 /= static_cast<double>(cut);
            m2 /= static_cast<double>(n - cut);
            double ss = 0;
            for (std::size_t i = 0; i < cut; ++i) ss += (xs[i] - m1) * (xs[i] - m1);
            for (std::size_t i = cut; i < n; ++i) ss += (xs[i] - m2) * (xs[i] - m2);
            best = std::min(best, ss);
        }
        Rng krng(100 + rep);
        auto res = kmeans(pts, 2, krng, 100, 10);
        CHECK(res.inertia == doctest::Approx(best).epsilon(1e-9));
    }
}

TEST_CASE("elbow picks the planted cluster count of 5") {
    Rng rng(11);
    std::vector<Point2> pts;
    const double centers[5][2] = {{0, 0}, {8, 0}, {0, 8}, {8, 8}, {4, 16}};
    for (const auto& c : centers) {
        auto blob = gaussian_blob(rng, c[0], c[1], 0.4, 40);
        pts.insert(pts.end(), blob.begin(), blob.end());
    }
    Rng erng(12);
    auto res = elbow_detect(pts, erng);
    CHECK(res.chosen_k == 5);
    // curve non-increasing
    for (std::size_t i = 1; i < res.inertia.size(); ++i)
        CHECK(res.inertia[i] <= res.inertia[i - 1] + 1e-9);
}

TEST_CASE("elbow on a single blob: curve non-increasing, small k chosen") {
    Rng rng(13);
    auto pts = gaussian_blob(rng, 0, 0, 1.0, 150);
    Rng erng(14);
    auto res = elbow_detect(pts, erng);
    for (std::size_t i = 1; i < res.inertia.size(); ++i)
        CHECK(res.inertia[i] <= res.inertia[i - 1] + 1e-9);
}

TEST_CASE("elbow curvature rule on a synthetic curve") {
    // sharp knee at k = 5, then gentle decay
    std::vector<double> curve = {100.0, 60.0, 30.0, 10.0, 8.5, 7.2, 6.1, 5.2};
    CHECK(elbow_from_curve(curve, 2) == 5);

    // strictly convex decreasing: curvature maximal at the first interior k
    std::vector<double> convex;
    for (int i = 0; i < 10; ++i) convex.push_back(std::pow(0.5, i) * 64.0);
    CHECK(elbow_from_curve(convex, 2) == 3);
}

TEST_CASE("monthly cluster sharpes: k=1 degenerate gives equal ranks") {
    Rng rng(15);
    MonthPoints mp;
    mp.month = 500;
    for (int i = 0; i < 20; ++i)
        mp.points.push_back({i, rng.normal(0, 0.01), rng.normal(0.01, 0.05)});
    ClusterConfig cfg;
    cfg.k = 1;
    cfg.seed = 9;
    std::vector<MonthPoints> months = {mp};
    auto res = monthly_cluster_sharpes(months, cfg);
    REQUIRE(res.series.months.size() == 1);
    CHECK(res.series.highest[0] == res.series.median[0]);
    CHECK(res.series.median[0] == res.series.lowest[0]);
}

TEST_CASE("cluster of identical returns is excluded with a warning") {
    MonthPoints mp;
    mp.month = 501;
    // cluster A: identical returns at alpha ~ -5; cluster B: dispersed at +5
    for (int i = 0; i < 6; ++i) mp.points.push_back({i, -5.0 + 0.01 * i, 0.02});
    Rng rng(16);
    for (int i = 6; i < 12; ++i)
        mp.points.push_back({i, 5.0 + 0.01 * i, 0.05 + 0.01 * (i - 6)});
    ClusterConfig cfg;
    cfg.k = 2;
    cfg.seed = 10;
    cfg.outlier_filter = false;
    std::vector<MonthPoints> months = {mp};
    auto res = monthly_cluster_sharpes(months, cfg);
    bool warned = false;
    for (const auto& w : res.warnings)
        if (w.find("zero return SD") != std::string::npos) warned = true;
    CHECK(warned);
    REQUIRE(res.series.months.size() == 1);
    CHECK(res.series.highest[0] == res.series.lowest[0]); // only one rankable cluster
}

TEST_CASE("planted high/low clusters produce signed sharpes near +-5") {
    Rng rng(17);
    MonthPoints mp;
    mp.month = 502;
    for (int i = 0; i < 50; ++i)
        mp.points.push_back({i, 0.03 + rng.normal(0, 0.001), rng.normal(0.05, 0.01)});
    for (int i = 50; i < 100; ++i)
        mp.points.push_back({i, -0.03 + rng.normal(0, 0.001), rng.normal(-0.05, 0.01)});
    ClusterConfig cfg;
    cfg.k = 2;
    cfg.seed = 11;
    std::vector<MonthPoints> months = {mp};
    auto res = monthly_cluster_sharpes(months, cfg);
    REQUIRE(res.series.months.size() == 1);
    CHECK(res.series.highest[0] > 3.0);
    CHECK(res.series.highest[0] < 7.0);
    CHECK(res.series.lowest[0] < -3.0);
    CHECK(res.series.lowest[0] > -7.0);
}

TEST_CASE("monthly ranking is ordered every month") {
    Rng rng(18);
    std::vector<MonthPoints> months;
    for (int m = 0; m < 12; ++m) {
        MonthPoints mp;
        mp.month = 600 + m;
        for (int i = 0; i < 40; ++i)
            mp.points.push_back({i, rng.normal(0, 0.01), rng.normal(0.005, 0.04)});
        months.push_back(mp);
    }
    ClusterConfig cfg;
    cfg.k = 3;
    cfg.seed = 12;
    auto res = monthly_cluster_sharpes(months, cfg);
    for (std::size_t i = 0; i < res.series.months.size(); ++i) {
        CHECK(res.series.highest[i] >= res.series.median[i]);
        CHECK(res.series.median[i] >= res.series.lowest[i]);
    }
}

TEST_CASE("outlier rule drops far points") {
    MonthPoints mp;
    mp.month = 700;
    Rng rng(19);
    for (int i = 0; i < 30; ++i)
        mp.points.push_back({i, rng.normal(0, 0.01), rng.normal(0, 0.02)});
    mp.points.push_back({99, 0.0, 50.0}); // absurd return
    ClusterConfig cfg;
    cfg.k = 2;
    cfg.seed = 13;
    std::vector<MonthPoints> months = {mp};
    auto res = monthly_cluster_sharpes(months, cfg);
    REQUIRE(res.months.size() == 1);
    CHECK(res.months[0].used_points.size() == 30);
    bool warned = false;
    for (const auto& w : res.warnings)
        if (w.find("outlier") != std::string::npos) warned = true;
    CHECK(warned);
}

TEST_CASE("sharpe_trend: constant and exact linear series") {
    ClusterSharpeSeries s;
    for (int t = 0; t < 24; ++t) {
        s.months.push_back(800 + t);
        s.highest.push_back(0.1 - 0.001 * t);
        s.median.push_back(0.5);
        s.lowest.push_back(-0.2 + 0.002 * t);
    }
    auto rep = sharpe_trend(s);
    CHECK(rep.median.coefficients[1] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(rep.median.coefficients[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(rep.highest.coefficients[1] == doctest::Approx(-0.001).epsilon(1e-10));
    CHECK(rep.spread.coefficients[1] == doctest::Approx(-0.003).epsilon(1e-10));

    ClusterSharpeSeries tiny;
    tiny.months = {1, 2};
    tiny.highest = {1, 2};
    tiny.median = {0, 0};
    tiny.lowest = {-1, -2};
    CHECK_THROWS_AS(sharpe_trend(tiny), InputError);
}

TEST_CASE("planted converging spread has a negative significant slope") {
    Rng rng(20);
    ClusterSharpeSeries s;
    for (int t = 0; t < 120; ++t) {
        const double spread = 2.0 * std::exp(-t / 60.0) + rng.normal(0, 0.1);
        s.months.push_back(900 + t);
        s.highest.push_back(spread / 2.0 + rng.normal(0, 0.05));
        s.lowest.push_back(-spread / 2.0 + rng.normal(0, 0.05));
        s.median.push_back(rng.normal(0, 0.05));
    }
    auto rep = sharpe_trend(s);
    CHECK(rep.spread.coefficients[1] < 0.0);
    const double p = 2.0 * stats::normal_sf(std::fabs(rep.spread.t_stats[1]));
    CHECK(p < 0.05);
}
