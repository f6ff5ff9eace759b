#include "wthin/rng.hpp"

#include <cmath>
#include <numbers>

namespace wthin {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

double RngStream::uniform() {
    // (k + 0.5) / 2^53 never hits 0 or 1.
    const std::uint64_t k = engine_() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_normal_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

std::uint64_t RngStream::uniform_index(std::uint64_t bound) {
    // Reject the top partial block so every residue is equally likely.
    const std::uint64_t limit = bound * (~std::uint64_t{0} / bound);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

}  // namespace wthin
