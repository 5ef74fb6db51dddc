#include "bgan/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bgan {

namespace {

// SplitMix64 finalizer (Stafford mix13).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
    key_ = mix64(mix64(seed) ^ mix64(stream ^ 0x5851f42d4c957f2dULL));
}

std::uint64_t RngStream::next_u64() {
    return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    // Multiply-shift; bias is ~n/2^64, irrelevant at our scales.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double RngStream::normal() {
    const double u1 = 1.0 - uniform();  // (0,1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
    return -std::log(1.0 - uniform()) / rate;
}

long RngStream::poisson(double mean) {
    if (mean < 0.0 || !std::isfinite(mean)) throw std::invalid_argument("poisson: bad mean");
    if (mean == 0.0) return 0;
    if (mean >= 700.0) throw std::invalid_argument("poisson: mean too large for inversion");
    const double u = uniform();
    double p = std::exp(-mean);
    double cum = p;
    long k = 0;
    while (u > cum) {
        ++k;
        p *= mean / static_cast<double>(k);
        cum += p;
        if (k > 100000) break;  // cdf numerically exhausted
    }
    return k;
}

long RngStream::binomial(long n, double p) {
    if (n < 0 || p < 0.0 || p > 1.0) throw std::invalid_argument("binomial: bad arguments");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);  // keep (1-p)^n away from underflow
    const double u = uniform();
    const double q = 1.0 - p;
    double pmf = std::pow(q, static_cast<double>(n));
    double cum = pmf;
    long k = 0;
    while (u > cum && k < n) {
        ++k;
        pmf *= (static_cast<double>(n - k + 1) / static_cast<double>(k)) * (p / q);
        cum += pmf;
    }
    return k;
}

}  // namespace bgan
