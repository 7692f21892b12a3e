#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "snap/kernels.hpp"
#include "snap/rng.hpp"

#include <cmath>
#include <vector>

using namespace snap;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

} // namespace

TEST_CASE("scalar kernels basic results") {
    const auto& ops = kernels::ops(kernels::Isa::scalar);
    std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
    CHECK(ops.dot(a.data(), b.data(), 3) == doctest::Approx(32.0));
    CHECK(ops.sumsq(a.data(), 3) == doctest::Approx(14.0));
    CHECK(ops.sum(b.data(), 3) == doctest::Approx(15.0));
    std::vector<double> y = {1, 1, 1};
    ops.axpy(3, 2.0, a.data(), y.data());
    CHECK(y[0] == doctest::Approx(3.0));
    CHECK(y[2] == doctest::Approx(7.0));
    ops.scale(3, 0.5, y.data());
    CHECK(y[0] == doctest::Approx(1.5));
}

TEST_CASE("avx2 variants match scalar reference on awkward sizes") {
    if (!kernels::cpu_has_avx2()) return; // nothing to compare on this machine
    const auto& sc = kernels::ops(kernels::Isa::scalar);
    const auto& vec = kernels::ops(kernels::Isa::avx2);
    Rng rng(42);
    // cover remainders around all unroll widths
    for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 12, 15, 16, 17, 31, 64, 1000, 1023}) {
        auto a = random_vec(rng, n);
        auto b = random_vec(rng, n);
        const double tol = 1e-13 * (1.0 + static_cast<double>(n));

        CHECK(std::fabs(sc.dot(a.data(), b.data(), n) - vec.dot(a.data(), b.data(), n)) <=
              tol);
        CHECK(std::fabs(sc.sumsq(a.data(), n) - vec.sumsq(a.data(), n)) <= tol);
        CHECK(std::fabs(sc.sum(a.data(), n) - vec.sum(a.data(), n)) <= tol);

        auto y1 = b, y2 = b;
        sc.axpy(n, 0.7, a.data(), y1.data());
        vec.axpy(n, 0.7, a.data(), y2.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]));

        auto s1 = a, s2 = a;
        sc.scale(n, -1.3, s1.data());
        vec.scale(n, -1.3, s2.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(s1[i] == s2[i]);
    }
}

TEST_CASE("force_isa switches the active table and restores") {
    const auto prev = kernels::active_isa();
    kernels::force_isa(kernels::Isa::scalar);
    CHECK(kernels::active_isa() == kernels::Isa::scalar);
    std::vector<double> a = {1, 2}, b = {3, 4};
    CHECK(kernels::dot(a.data(), b.data(), 2) == doctest::Approx(11.0));
    kernels::force_isa(prev);
    CHECK(kernels::active_isa() == prev);
}
