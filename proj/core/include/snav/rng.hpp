#ifndef SNAV_RNG_HPP
#define SNAV_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace snav {

/// Deterministic RNG used everywhere in the stack. Gaussian samples are
/// produced with an explicit Box-Muller transform so that streams are
/// reproducible independent of the standard library's distribution
/// implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

    /// Standard normal via Box-Muller (one sample per call; the pair's
    /// second value is cached).
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 1e-300);
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        cached_ = mag * std::sin(2.0 * M_PI * u2);
        have_cached_ = true;
        return mag * std::cos(2.0 * M_PI * u2);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace snav

#endif
