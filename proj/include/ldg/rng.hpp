#ifndef LDG_RNG_HPP
#define LDG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace ldg {

// Seedable, splittable random source. All stochastic operations take an
// explicit Rng& so runs are bit-reproducible from (config, seed). Draws are
// hand-rolled on top of mt19937_64 rather than going through
// std::*_distribution, whose output is not pinned down by the standard and
// differs across library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Child generator for an independent stream; mixing the key through a
    // splitmix64 round keeps child seeds decorrelated even for small keys.
    Rng split(std::uint64_t key) {
        std::uint64_t z = engine_() + 0x9e3779b97f4a7c15ULL * (key + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::uint64_t bits() { return engine_(); }

    // Index draw from an (approximately normalized) probability vector by
    // walking the CDF; any rounding residue falls on the last index.
    template <typename Derived>
    Eigen::Index categorical(const Eigen::MatrixBase<Derived>& probs) {
        double u = uniform();
        double acc = 0.0;
        const Eigen::Index m = probs.size();
        for (Eigen::Index i = 0; i + 1 < m; ++i) {
            acc += static_cast<double>(probs(i));
            if (u < acc) return i;
        }
        return m - 1;
    }

    // Standard normal via Box-Muller (polar form avoided to keep the draw
    // count per call fixed at two).
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace ldg

#endif
