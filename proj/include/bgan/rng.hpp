#pragma once

#include <cstdint>

namespace bgan {

/// Counter-based random stream. A stream is fully determined by
/// (seed, stream id, counter), so any (seed, stream) pair replays the
/// same sequence regardless of what other streams were consumed —
/// the property the per-row table generation and per-chain samplers
/// rely on for worker-count-independent determinism.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t counter() const { return counter_; }

    /// Skip n raw draws; a clone advanced by k replays exactly the draws
    /// the original would produce at counter+k, which lets callers hand
    /// disjoint counter ranges to parallel workers deterministically.
    void skip(std::uint64_t n) { counter_ += n; }

    std::uint64_t next_u64();

    /// Uniform on [0,1).
    double uniform();
    /// Uniform on [lo,hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [0,n).
    std::uint64_t uniform_index(std::uint64_t n);
    /// Standard normal (Box-Muller, no cached spare).
    double normal();
    /// Exponential with the given rate.
    double exponential(double rate);
    /// Poisson by sequential inversion; requires mean < 700.
    long poisson(double mean);
    /// Binomial(n, p) by sequential inversion.
    long binomial(long n, double p);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace bgan
