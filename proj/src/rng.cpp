#include "snap/rng.hpp"

#include "snap/error.hpp"

#include <cmath>

namespace snap {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal(double mean, double sd) {
    if (sd == 0.0) return mean;
    if (has_spare_) {
        has_spare_ = false;
        return mean + sd * spare_;
    }
    // Box-Muller; 1-u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return mean + sd * r * std::cos(kTwoPi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw ParamError("Rng::below: n must be > 0");
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

Rng Rng::child(std::uint64_t stream) const {
    std::uint64_t sm = seed_ ^ 0xD2B74407B1CE6E93ULL;
    std::uint64_t mixed = splitmix64(sm);
    std::uint64_t sm2 = mixed + (stream + 1) * 0xA0761D6478BD642FULL;
    return Rng(splitmix64(sm2));
}

std::vector<double> sample_normal(Rng& rng, double mean, double scale, std::size_t n) {
    if (scale < 0.0) throw ParamError("sample_normal: negative scale");
    std::vector<double> out(n);
    for (auto& v : out) v = rng.normal(mean, scale);
    return out;
}

} // namespace snap
