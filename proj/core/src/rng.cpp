#include "ilt/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ilt {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t task_index) {
    // Counter-based derivation: fold the task index into the seed with an
    // odd multiplier, then expand through splitmix64. Distinct indices give
    // distinct, well-mixed xoshiro states.
    std::uint64_t x = master_seed ^ (task_index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    for (auto& s : state_) s = splitmix64(x);
    // xoshiro must not start from the all-zero state.
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double RngStream::uniform() {
    // 53-bit mantissa, offset by half an ulp so the result is strictly in (0, 1).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

double RngStream::exponential() {
    return -std::log(uniform());
}

double RngStream::gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw std::invalid_argument("RngStream::gamma: shape and scale must be positive");
    if (shape < 1.0) {
        const double u = uniform();
        return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
}

long long RngStream::poisson(double mean) {
    if (!(mean >= 0.0))
        throw std::invalid_argument("RngStream::poisson: mean must be >= 0");
    if (mean == 0.0) return 0;
    if (mean < 10.0) {
        // Inversion by multiplication (Knuth).
        const double limit = std::exp(-mean);
        double prod = uniform();
        long long k = 0;
        while (prod > limit) {
            prod *= uniform();
            ++k;
        }
        return k;
    }
    // PTRS transformed rejection, Hormann (1993). O(1) for any mean.
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        const double u = uniform() - 0.5;
        const double v = uniform();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<long long>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            kf * log_mean - mean - std::lgamma(kf + 1.0)) {
            return static_cast<long long>(kf);
        }
    }
}

}  // namespace ilt
