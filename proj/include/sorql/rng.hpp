#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "sorql/errors.hpp"

namespace sorql {

/// Deterministic random source.
///
/// Wraps std::mt19937_64 but implements its own variate transforms: the
/// standard <random> distributions are implementation-defined, so relying on
/// them would make outputs differ across standard libraries. Everything here
/// is pinned to the raw 64-bit stream, which the standard does specify.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Requires n >= 1.
    int uniform_int(int n) {
        if (n < 1) throw InvalidParams("uniform_int: n must be >= 1");
        // Multiply-shift rejection-free mapping; bias is < 2^-53 * n which is
        // far below anything observable at our sample counts.
        int k = static_cast<int>(uniform() * static_cast<double>(n));
        return k >= n ? n - 1 : k;
    }

    /// Standard normal via Box-Muller (cached spare).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // Guard against log(0).
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Samples an index from an unnormalized non-negative weight vector.
    int sample_categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw InvalidParams("sample_categorical: negative or NaN weight");
            total += w;
        }
        if (total <= 0.0) throw InvalidParams("sample_categorical: weights sum to zero");
        double u = uniform() * total;
        double cum = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            cum += weights[i];
            if (u < cum) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    /// Derives an independent stream seed from (seed, tag). FNV-1a over the
    /// seed bytes and the tag, then a splitmix64 finalizer so nearby seeds
    /// map to distant streams.
    static std::uint64_t derive(std::uint64_t seed, std::string_view tag) {
        std::uint64_t h = 1469598103934665603ull;
        for (int i = 0; i < 8; ++i) {
            h ^= (seed >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
        for (char c : tag) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        h += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = h;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sorql
