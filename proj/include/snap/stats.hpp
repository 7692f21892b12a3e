#pragma once

#include "snap/matrix.hpp"

#include <span>
#include <string>
#include <vector>

namespace snap::stats {

enum class TestMethod { shapiro_wilk, ks, mann_whitney_u, welch_t };
const char* method_name(TestMethod m);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    TestMethod method = TestMethod::shapiro_wilk;
    std::size_t n1 = 0;
    std::size_t n2 = 0;

    std::string to_json() const;
};

// Normal distribution helpers (shared by the tests below).
double normal_cdf(double z);
double normal_sf(double z);
double normal_quantile(double p); // Wichura PPND16

/// Royston's approximation of the Shapiro-Wilk W test. Valid for
/// 3 <= n <= 5000; constant samples are degenerate input.
TestResult shapiro_wilk(std::span<const double> sample);

/// Kolmogorov-Smirnov distance against N(sample mean, sample sd) with the
/// asymptotic KS p-value (a Lilliefors-style approximation: parameters are
/// estimated, so the reported p is conservative). Requires n >= 8.
TestResult ks_normality(std::span<const double> sample);

/// Two-sided Mann-Whitney U with midrank ties. Exact enumeration of all
/// rank assignments when n1*n2 <= 20, otherwise the normal approximation
/// with tie-corrected variance and a 0.5 continuity correction. The
/// statistic is U for sample 1.
TestResult mann_whitney_u(std::span<const double> sample1, std::span<const double> sample2);

/// Welch's unequal-variance t with Satterthwaite degrees of freedom,
/// two-sided p. Both samples need n >= 2.
TestResult welch_t(std::span<const double> sample1, std::span<const double> sample2);

/// The mispricing decision procedure: screen both residual groups for
/// normality (Shapiro-Wilk when n <= 5000, KS otherwise), then test the
/// group difference with Mann-Whitney if either screen rejects at
/// `screen_level`, Welch t otherwise.
struct MispricingResult {
    TestResult normality_unmasked;
    TestResult normality_masked;
    TestResult group_test;
    bool used_nonparametric = false;
    double screen_level = 0.05;

    std::string to_json() const;
};

MispricingResult mispricing_test(std::span<const double> unmasked_residuals,
                                 std::span<const double> masked_residuals,
                                 double screen_level = 0.05);

// ---------------------------------------------------------------------------
// OLS with heteroskedasticity-robust standard errors
// ---------------------------------------------------------------------------

struct OlsFit {
    std::vector<double> coefficients;
    std::vector<double> robust_se; // HC1
    std::vector<double> t_stats;
    double r_squared = 0.0;
    std::vector<double> residuals;
};

/// X must already contain the intercept column if one is wanted; requires
/// rows(X) > cols(X) and full column rank (SingularError otherwise).
OlsFit ols_robust(std::span<const double> y, const Matrix& X);

} // namespace snap::stats
