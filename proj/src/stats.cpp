#include "snap/stats.hpp"

#include "snap/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace snap::stats {

namespace {

constexpr double kSqrt1_2 = 0.70710678118654752440;

double mean_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double var_of(std::span<const double> x, double mean) {
    double s = 0.0;
    for (double v : x) s += (v - mean) * (v - mean);
    return s / static_cast<double>(x.size() - 1);
}

// Midranks of the pooled sample, scaled by 2 so ties stay integral.
// Returns ranks2[i] = 2 * rank of pooled[i], plus the tie term sum(t^3 - t).
std::vector<long long> midranks2(const std::vector<double>& pooled, double& tie_sum) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<long long> ranks2(n);
    tie_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[idx[j + 1]] == pooled[idx[i]]) ++j;
        const long long r2 = static_cast<long long>(i) + static_cast<long long>(j) + 2;
        for (std::size_t q = i; q <= j; ++q) ranks2[idx[q]] = r2;
        const double t = static_cast<double>(j - i + 1);
        tie_sum += t * t * t - t;
        i = j + 1;
    }
    return ranks2;
}

} // namespace

const char* method_name(TestMethod m) {
    switch (m) {
        case TestMethod::shapiro_wilk: return "shapiro_wilk";
        case TestMethod::ks: return "ks";
        case TestMethod::mann_whitney_u: return "mann_whitney_u";
        default: return "welch_t";
    }
}

std::string TestResult::to_json() const {
    nlohmann::json j;
    j["method"] = method_name(method);
    j["statistic"] = statistic;
    j["p_value"] = p_value;
    j["n1"] = n1;
    j["n2"] = n2;
    return j.dump();
}

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kSqrt1_2); }

double normal_sf(double z) { return 0.5 * std::erfc(z * kSqrt1_2); }

double normal_quantile(double p) {
    // Wichura's PPND16 (algorithm AS 241).
    if (!(p > 0.0 && p < 1.0)) throw ParamError("normal_quantile: p must be in (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

namespace {

// Regularized incomplete beta by Lentz continued fraction.
double beta_cf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-14) break;
    }
    return h;
}

double incbeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_sf_two_sided(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    const double x = df / (df + t * t);
    return incbeta(0.5 * df, 0.5, x); // P(|T| >= |t|)
}

// Asymptotic Kolmogorov distribution survival function.
double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 ? term : -term);
        if (term < 1e-12) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

} // namespace

// ---------------------------------------------------------------------------
// Shapiro-Wilk (Royston's AS R94 approximation)
// ---------------------------------------------------------------------------

TestResult shapiro_wilk(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 3 || n > 5000)
        throw ParamError("shapiro_wilk: n must be in [3, 5000], got " + std::to_string(n));
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    if (x.front() == x.back())
        throw InputError("shapiro_wilk: constant sample (zero variance)");

    // Expected normal order statistics.
    std::vector<double> m(n);
    double ssq_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) /
                               (static_cast<double>(n) + 0.25));
        ssq_m += m[i] * m[i];
    }

    std::vector<double> a(n);
    const double u = 1.0 / std::sqrt(static_cast<double>(n));
    if (n > 5) {
        const double cn = m[n - 1] / std::sqrt(ssq_m);
        const double cn1 = m[n - 2] / std::sqrt(ssq_m);
        const double an = cn + 0.221157 * u - 0.147981 * u * u -
                          2.071190 * u * u * u + 4.434685 * u * u * u * u -
                          2.706056 * u * u * u * u * u;
        const double an1 = cn1 + 0.042981 * u - 0.293762 * u * u -
                           1.752461 * u * u * u + 5.682633 * u * u * u * u -
                           3.582633 * u * u * u * u * u;
        const double phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                           (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
        a[n - 1] = an;
        a[n - 2] = an1;
        a[0] = -an;
        a[1] = -an1;
        for (std::size_t i = 2; i < n - 2; ++i) a[i] = m[i] / std::sqrt(phi);
    } else if (n > 3) {
        const double cn = m[n - 1] / std::sqrt(ssq_m);
        const double an = cn + 0.221157 * u - 0.147981 * u * u -
                          2.071190 * u * u * u + 4.434685 * u * u * u * u -
                          2.706056 * u * u * u * u * u;
        const double phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
        a[n - 1] = an;
        a[0] = -an;
        for (std::size_t i = 1; i < n - 1; ++i) a[i] = m[i] / std::sqrt(phi);
    } else {
        a[0] = -std::sqrt(0.5);
        a[1] = 0.0;
        a[2] = std::sqrt(0.5);
    }

    const double xbar = mean_of(x);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += a[i] * x[i];
        den += (x[i] - xbar) * (x[i] - xbar);
    }
    double w = num * num / den;
    if (w > 1.0) w = 1.0;

    double p;
    if (n == 3) {
        constexpr double pi6 = 1.90985931710274403; // 6/pi
        constexpr double stqr = 1.04719755119659775; // asin(sqrt(3/4))
        p = pi6 * (std::asin(std::sqrt(w)) - stqr);
        p = std::clamp(p, 0.0, 1.0);
    } else if (n <= 11) {
        const double dn = static_cast<double>(n);
        const double g = -2.273 + 0.459 * dn;
        const double mu = 0.5440 - 0.39978 * dn + 0.025054 * dn * dn -
                          0.0006714 * dn * dn * dn;
        const double sigma = std::exp(1.3822 - 0.77857 * dn + 0.062767 * dn * dn -
                                      0.0020322 * dn * dn * dn);
        const double z = (-std::log(g - std::log1p(-w)) - mu) / sigma;
        p = normal_sf(z);
    } else {
        const double ln_n = std::log(static_cast<double>(n));
        const double mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n * ln_n +
                          0.0038915 * ln_n * ln_n * ln_n;
        const double sigma = std::exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n * ln_n);
        const double z = (std::log1p(-w) - mu) / sigma;
        p = normal_sf(z);
    }

    TestResult r;
    r.statistic = w;
    r.p_value = p;
    r.method = TestMethod::shapiro_wilk;
    r.n1 = n;
    return r;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov normality
// ---------------------------------------------------------------------------

TestResult ks_normality(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 8) throw ParamError("ks_normality: n must be >= 8");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double mu = mean_of(x);
    const double var = var_of(x, mu);
    if (var <= 0.0) throw InputError("ks_normality: constant sample (zero variance)");
    const double sd = std::sqrt(var);

    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = normal_cdf((x[i] - mu) / sd);
        const double lo = static_cast<double>(i) / static_cast<double>(n);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        d = std::max({d, f - lo, hi - f});
    }

    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = d * (sn + 0.12 + 0.11 / sn); // Stephens' effective n
    TestResult r;
    r.statistic = d;
    r.p_value = kolmogorov_sf(lambda);
    r.method = TestMethod::ks;
    r.n1 = n;
    return r;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U
// ---------------------------------------------------------------------------

TestResult mann_whitney_u(std::span<const double> sample1,
                          std::span<const double> sample2) {
    const std::size_t n1 = sample1.size(), n2 = sample2.size();
    if (n1 == 0 || n2 == 0) throw InputError("mann_whitney_u: empty sample");
    const std::size_t n = n1 + n2;

    std::vector<double> pooled;
    pooled.reserve(n);
    pooled.insert(pooled.end(), sample1.begin(), sample1.end());
    pooled.insert(pooled.end(), sample2.begin(), sample2.end());

    double tie_sum = 0.0;
    const auto ranks2 = midranks2(pooled, tie_sum);

    long long r1_2 = 0; // 2 * rank sum of sample 1
    for (std::size_t i = 0; i < n1; ++i) r1_2 += ranks2[i];
    const long long u1_2 = r1_2 - static_cast<long long>(n1) * (n1 + 1); // 2 * U1
    const long long mu_2 = static_cast<long long>(n1) * static_cast<long long>(n2);

    TestResult r;
    r.method = TestMethod::mann_whitney_u;
    r.statistic = 0.5 * static_cast<double>(u1_2);
    r.n1 = n1;
    r.n2 = n2;

    if (n1 * n2 <= 20) {
        // Exact two-sided p: fraction of all C(n, n1) rank assignments at
        // least as far from the null mean. Integer arithmetic throughout
        // (ranks are half-integers, everything is doubled).
        const long long obs_dev = std::llabs(u1_2 - mu_2);
        std::vector<std::size_t> comb(n1);
        std::iota(comb.begin(), comb.end(), 0);
        unsigned long long total = 0, extreme = 0;
        while (true) {
            long long rs2 = 0;
            for (auto i : comb) rs2 += ranks2[i];
            const long long u2 = rs2 - static_cast<long long>(n1) * (n1 + 1);
            ++total;
            if (std::llabs(u2 - mu_2) >= obs_dev) ++extreme;
            // next combination (lexicographic)
            std::size_t k = n1;
            while (k > 0 && comb[k - 1] == n - n1 + k - 1) --k;
            if (k == 0) break;
            ++comb[k - 1];
            for (std::size_t j = k; j < n1; ++j) comb[j] = comb[j - 1] + 1;
        }
        r.p_value = static_cast<double>(extreme) / static_cast<double>(total);
        return r;
    }

    const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
    const double dn = static_cast<double>(n);
    double var = dn1 * dn2 / 12.0 * (dn + 1.0 - tie_sum / (dn * (dn - 1.0)));
    if (var <= 0.0) {
        r.p_value = 1.0; // all observations tied
        return r;
    }
    const double u1 = 0.5 * static_cast<double>(u1_2);
    const double mu = 0.5 * static_cast<double>(mu_2);
    double dev = std::fabs(u1 - mu) - 0.5; // continuity correction
    if (dev < 0.0) dev = 0.0;
    const double z = dev / std::sqrt(var);
    r.p_value = std::min(1.0, 2.0 * normal_sf(z));
    return r;
}

// ---------------------------------------------------------------------------
// Welch's t
// ---------------------------------------------------------------------------

TestResult welch_t(std::span<const double> sample1, std::span<const double> sample2) {
    const std::size_t n1 = sample1.size(), n2 = sample2.size();
    if (n1 < 2 || n2 < 2) throw InputError("welch_t: both samples need n >= 2");
    const double m1 = mean_of(sample1), m2 = mean_of(sample2);
    const double v1 = var_of(sample1, m1), v2 = var_of(sample2, m2);

    TestResult r;
    r.method = TestMethod::welch_t;
    r.n1 = n1;
    r.n2 = n2;

    const double se2 = v1 / static_cast<double>(n1) + v2 / static_cast<double>(n2);
    if (se2 == 0.0) {
        if (m1 == m2) {
            r.statistic = 0.0;
            r.p_value = 1.0;
            return r;
        }
        throw NumericError("welch_t: zero variance with distinct means");
    }
    r.statistic = (m1 - m2) / std::sqrt(se2);
    const double a = v1 / static_cast<double>(n1), b = v2 / static_cast<double>(n2);
    const double df = se2 * se2 /
                      (a * a / static_cast<double>(n1 - 1) +
                       b * b / static_cast<double>(n2 - 1));
    r.p_value = student_t_sf_two_sided(r.statistic, df);
    return r;
}

// ---------------------------------------------------------------------------
// Mispricing procedure
// ---------------------------------------------------------------------------

namespace {

// Normality screen; degenerate (constant) residuals count as non-normal.
TestResult normality_screen(std::span<const double> sample) {
    if (sample.size() >= 3 && sample.size() <= 5000) {
        try {
            return shapiro_wilk(sample);
        } catch (const InputError&) {
            TestResult r;
            r.method = TestMethod::shapiro_wilk;
            r.statistic = 0.0;
            r.p_value = 0.0;
            r.n1 = sample.size();
            return r;
        }
    }
    if (sample.size() > 5000) {
        try {
            return ks_normality(sample);
        } catch (const InputError&) {
            TestResult r;
            r.method = TestMethod::ks;
            r.statistic = 1.0;
            r.p_value = 0.0;
            r.n1 = sample.size();
            return r;
        }
    }
    // Too small to screen: report no evidence against normality but the
    // procedure below still takes the nonparametric route for safety.
    TestResult r;
    r.method = TestMethod::shapiro_wilk;
    r.statistic = 1.0;
    r.p_value = 0.0;
    r.n1 = sample.size();
    return r;
}

} // namespace

std::string MispricingResult::to_json() const {
    nlohmann::json j;
    j["normality_unmasked"] = nlohmann::json::parse(normality_unmasked.to_json());
    j["normality_masked"] = nlohmann::json::parse(normality_masked.to_json());
    j["group_test"] = nlohmann::json::parse(group_test.to_json());
    j["used_nonparametric"] = used_nonparametric;
    j["screen_level"] = screen_level;
    j["decision_path"] = std::string(method_name(normality_unmasked.method)) + "+" +
                         method_name(normality_masked.method) + " -> " +
                         method_name(group_test.method);
    return j.dump(2);
}

MispricingResult mispricing_test(std::span<const double> unmasked_residuals,
                                 std::span<const double> masked_residuals,
                                 double screen_level) {
    if (unmasked_residuals.empty() || masked_residuals.empty())
        throw InputError("mispricing_test: empty residual vector");
    MispricingResult out;
    out.screen_level = screen_level;
    out.normality_unmasked = normality_screen(unmasked_residuals);
    out.normality_masked = normality_screen(masked_residuals);
    const bool reject_normal = out.normality_unmasked.p_value < screen_level ||
                               out.normality_masked.p_value < screen_level;
    out.used_nonparametric = reject_normal;
    out.group_test = reject_normal ? mann_whitney_u(unmasked_residuals, masked_residuals)
                                   : welch_t(unmasked_residuals, masked_residuals);
    return out;
}

// ---------------------------------------------------------------------------
// OLS with HC1 errors
// ---------------------------------------------------------------------------

namespace {

// Cholesky factorization; throws SingularError when a pivot collapses.
Matrix cholesky(const Matrix& a) {
    const std::size_t n = a.rows;
    Matrix l(n, n);
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::fabs(a(i, i)));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 1e-12 * std::max(1.0, max_diag))
                    throw SingularError("ols_robust: design matrix is rank deficient");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

std::vector<double> chol_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows;
    std::vector<double> y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
    return x;
}

} // namespace

OlsFit ols_robust(std::span<const double> y, const Matrix& X) {
    const std::size_t n = X.rows, k = X.cols;
    if (y.size() != n) throw ShapeError("ols_robust: y length != rows(X)");
    if (n <= k) throw InputError("ols_robust: need rows(X) > cols(X)");

    // Normal equations.
    Matrix xtx(k, k);
    std::vector<double> xty(k, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = X.row(r);
        for (std::size_t i = 0; i < k; ++i) {
            xty[i] += row[i] * y[r];
            for (std::size_t j = 0; j <= i; ++j) xtx(i, j) += row[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) xtx(i, j) = xtx(j, i);

    const Matrix l = cholesky(xtx);
    OlsFit fit;
    fit.coefficients = chol_solve(l, xty);

    fit.residuals.resize(n);
    double ssr = 0.0, sst = 0.0;
    const double ybar = mean_of(y);
    for (std::size_t r = 0; r < n; ++r) {
        double pred = 0.0;
        const double* row = X.row(r);
        for (std::size_t i = 0; i < k; ++i) pred += row[i] * fit.coefficients[i];
        fit.residuals[r] = y[r] - pred;
        ssr += fit.residuals[r] * fit.residuals[r];
        sst += (y[r] - ybar) * (y[r] - ybar);
    }
    fit.r_squared = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 0.0;

    // HC1 sandwich: (X'X)^-1 X' diag(e^2) X (X'X)^-1 scaled by n/(n-k).
    Matrix meat(k, k);
    for (std::size_t r = 0; r < n; ++r) {
        const double e2 = fit.residuals[r] * fit.residuals[r];
        const double* row = X.row(r);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j <= i; ++j) meat(i, j) += e2 * row[i] * row[j];
    }
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) meat(i, j) = meat(j, i);

    // bread column c: solve (X'X) b_c = meat_c, then (X'X) cov_c = b_c^T rows.
    Matrix half(k, k);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> col(k);
        for (std::size_t i = 0; i < k; ++i) col[i] = meat(i, c);
        auto sol = chol_solve(l, col);
        for (std::size_t i = 0; i < k; ++i) half(i, c) = sol[i];
    }
    const double scale = static_cast<double>(n) / static_cast<double>(n - k);
    fit.robust_se.resize(k);
    fit.t_stats.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> row(k);
        for (std::size_t i = 0; i < k; ++i) row[i] = half(c, i);
        auto sol = chol_solve(l, row);
        const double var = scale * sol[c];
        fit.robust_se[c] = std::sqrt(std::max(0.0, var));
        fit.t_stats[c] = fit.robust_se[c] > 0.0 ? fit.coefficients[c] / fit.robust_se[c]
                                                : 0.0;
    }
    return fit;
}

} // namespace snap::stats
