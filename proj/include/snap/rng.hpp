#pragma once

#include <cstdint>
#include <vector>

namespace snap {

/// Seeded pseudo-random generator: xoshiro256++ with splitmix64 seed
/// expansion. Both algorithms are fixed-width integer recurrences, so the
/// same seed yields the same sequence on every platform.
///
/// Normal draws use Box-Muller on 53-bit uniforms (the spare value is
/// cached), so the full draw sequence is part of the contract: same seed,
/// same calls, same doubles.
///
/// An Rng is single-owner. Parallel or per-unit work derives independent
/// streams with child(), never by sharing one generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    /// One draw from N(mean, sd^2); sd = 0 returns mean exactly.
    double normal(double mean = 0.0, double sd = 1.0);

    /// Integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Independent child stream keyed by `stream`. Deterministic in
    /// (seed, stream) and unaffected by draws made from this generator.
    Rng child(std::uint64_t stream) const;

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// n draws from N(mean, scale^2). scale = 0 returns n copies of mean;
/// negative scale throws ParamError.
std::vector<double> sample_normal(Rng& rng, double mean, double scale, std::size_t n);

/// Fisher-Yates shuffle driven by rng (deterministic given seed).
template <typename T>
void shuffle(Rng& rng, std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace snap
