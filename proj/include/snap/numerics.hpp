#pragma once

#include <functional>
#include <span>
#include <vector>

namespace snap {

/// Central-difference gradient: (f(x + h e_i) - f(x - h e_i)) / (2h) per
/// coordinate. This is the oracle every analytic gradient in the repo is
/// certified against; it must stay independent of any backprop code.
///
/// Default h balances truncation and rounding error for parameters of
/// order 1 in 64-bit arithmetic. Throws NumericError if f returns a
/// non-finite value at any probe point.
std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h = 1e-5);

/// Euclidean norm of a vector (kernel-backed).
double norm2(std::span<const double> x);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor) — the relative-error metric
/// used by the gradient-check suites.
double max_rel_err(std::span<const double> a, std::span<const double> b,
                   double floor = 1e-8);

} // namespace snap
