#include "snap/kernels.hpp"

#include "snap/error.hpp"

#include <cstdlib>
#include <cstring>

namespace snap::kernels {

// ---------------------------------------------------------------------------
// Scalar reference kernels
// ---------------------------------------------------------------------------

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sumsq(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void scale(std::size_t n, double alpha, double* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

} // namespace scalar

static const Ops kScalarOps = {
    scalar::dot, scalar::axpy, scalar::sumsq, scalar::sum, scalar::scale,
};

// Defined in kernels_avx2.cpp on x86-64; null table otherwise.
const Ops* avx2_ops_or_null();

bool cpu_has_avx2() { return avx2_ops_or_null() != nullptr; }

const Ops& ops(Isa isa) {
    if (isa == Isa::avx2) {
        const Ops* o = avx2_ops_or_null();
        if (!o) throw ParamError("kernels: avx2 not supported on this CPU/build");
        return *o;
    }
    return kScalarOps;
}

const char* isa_name(Isa isa) {
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

namespace {

Isa detect_initial_isa() {
    if (const char* env = std::getenv("SNAP_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
        if (std::strcmp(env, "avx2") == 0) {
            if (!cpu_has_avx2())
                throw ConfigError("SNAP_KERNELS=avx2 but CPU lacks AVX2+FMA");
            return Isa::avx2;
        }
        // anything else (incl. "auto") falls through to detection
    }
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

Isa g_active = detect_initial_isa();

} // namespace

Isa active_isa() { return g_active; }

const Ops& active() { return ops(g_active); }

Isa force_isa(Isa isa) {
    if (isa == Isa::avx2 && !cpu_has_avx2())
        throw ParamError("kernels: avx2 not supported on this CPU/build");
    Isa prev = g_active;
    g_active = isa;
    return prev;
}

} // namespace snap::kernels
