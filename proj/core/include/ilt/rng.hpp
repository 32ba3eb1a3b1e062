#ifndef ILT_RNG_HPP
#define ILT_RNG_HPP

#include <cstdint>

namespace ilt {

/// Deterministic random stream built on xoshiro256++ with splitmix64 seeding.
///
/// Streams are derived from a (master_seed, task_index) pair, so a pool of
/// workers can be handed disjoint substreams whose output does not depend on
/// how tasks are scheduled. Identical (seed, index) pairs always reproduce
/// the same variate sequence.
class RngStream {
public:
    RngStream() : RngStream(0x853c49e6748fea9bULL, 0) {}

    RngStream(std::uint64_t master_seed, std::uint64_t task_index);

    /// Substream derivation contract used by the experiment harness.
    static RngStream derive(std::uint64_t master_seed, std::uint64_t task_index) {
        return RngStream(master_seed, task_index);
    }

    std::uint64_t next_u64();

    /// Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform();

    /// Standard normal via Box-Muller (second variate cached).
    double normal();

    /// Exponential with rate 1.
    double exponential();

    /// Gamma(shape, scale) via Marsaglia-Tsang, with the power boost for shape < 1.
    double gamma(double shape, double scale);

    /// Poisson(mean); inversion by multiplication below mean 10, Hormann's
    /// PTRS transformed rejection above.
    long long poisson(double mean);

private:
    std::uint64_t state_[4];
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace ilt

#endif
