#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sessrec {

/// Deterministic random generator with hand-rolled distributions.
///
/// std::mt19937_64 is fully specified by the standard, but the library
/// distributions are not, so uniform/gaussian/shuffle are implemented here.
/// Two runs with the same seed produce the same stream on any platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe as a log() argument.
    double uniform_pos() { return static_cast<double>((bits() >> 11) + 1) * 0x1.0p-53; }

    /// Unbiased integer in [0, n), n >= 1.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = bits();
            if (r >= threshold) return r % n;
        }
    }

    /// One N(mean, stddev^2) draw via Box-Muller.
    double gaussian(double mean, double stddev) {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * radius * std::cos(6.283185307179586476925287 * u2);
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[below(i)]);
        }
    }

  private:
    std::mt19937_64 eng_;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Derives the seed of a named sub-stream from one root seed.
///
/// All randomness in the pipeline flows from a single root through named
/// streams ("walks", "init", "shuffle", "negatives", ...) so that components
/// are individually reproducible regardless of execution order.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream_name,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream name
    for (const char c : stream_name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    h = detail::mix64(h ^ detail::mix64(root));
    return detail::mix64(h ^ index);
}

}  // namespace sessrec
