#pragma once

#include <cstdint>
#include <random>

namespace wthin {

/// Seeded random stream keyed by (seed, stream_id). Distinct stream ids give
/// independent streams, so parallel replications can each own one.
///
/// Only the raw 64-bit engine comes from <random>; the uniform and normal
/// transforms are implemented here because the standard distributions are
/// implementation-defined and would break cross-platform reproducibility.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform();

    /// Standard normal via the Box-Muller transform; draws come in pairs.
    double normal();

    /// Uniform integer in [0, bound) without modulo bias. bound must be > 0.
    std::uint64_t uniform_index(std::uint64_t bound);

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace wthin
