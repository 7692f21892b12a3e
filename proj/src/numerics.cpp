#include "snap/numerics.hpp"

#include "snap/error.hpp"
#include "snap/kernels.hpp"

#include <cmath>

namespace snap {

std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h) {
    if (h <= 0.0) throw ParamError("finite_diff_grad: h must be > 0");
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double xi = probe[i];
        probe[i] = xi + h;
        const double fp = f(probe);
        probe[i] = xi - h;
        const double fm = f(probe);
        probe[i] = xi;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("finite_diff_grad: non-finite function value");
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

double norm2(std::span<const double> x) {
    return std::sqrt(kernels::sumsq(x.data(), x.size()));
}

double max_rel_err(std::span<const double> a, std::span<const double> b, double floor) {
    if (a.size() != b.size()) throw ShapeError("max_rel_err: length mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), floor});
        worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
    }
    return worst;
}

} // namespace snap
