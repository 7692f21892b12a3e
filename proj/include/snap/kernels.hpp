#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner loops used by the numerics layer. Each kernel has a
// scalar reference implementation and, on x86-64, an AVX2+FMA variant.
// The active implementation is chosen once at startup from CPUID and can be
// forced with the SNAP_KERNELS environment variable ("scalar", "avx2",
// "auto") or snap::kernels::force_isa(). Selection is process-wide, so a run
// is reproducible on a given machine; scalar and SIMD variants are
// equivalence-tested against each other in tests/test_kernels.cpp.
namespace snap::kernels {

enum class Isa { scalar, avx2 };

struct Ops {
    // sum_i a[i]*b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
    // sum_i x[i]^2
    double (*sumsq)(const double* x, std::size_t n);
    // sum_i x[i]
    double (*sum)(const double* x, std::size_t n);
    // x[i] *= alpha
    void (*scale)(std::size_t n, double alpha, double* x);
};

// Table for an explicit ISA (used by equivalence tests).
const Ops& ops(Isa isa);

// Table for the active ISA.
const Ops& active();

Isa active_isa();
const char* isa_name(Isa isa);

// Override the runtime choice (e.g. to force the scalar path). Returns the
// previously active ISA. Forcing avx2 on a CPU without it throws.
Isa force_isa(Isa isa);

bool cpu_has_avx2();

// Convenience wrappers through the active table.
inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline void axpy(std::size_t n, double alpha, const double* x, double* y) {
    active().axpy(n, alpha, x, y);
}
inline double sumsq(const double* x, std::size_t n) { return active().sumsq(x, n); }
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline void scale(std::size_t n, double alpha, double* x) { active().scale(n, alpha, x); }

} // namespace snap::kernels
