#pragma once

#include <cstdint>
#include <string_view>

namespace atrfas {

/// Deterministic counter-based random stream (SplitMix64 in counter mode).
///
/// Draw i of a stream is a pure function of (seed, i): mix64(seed + GAMMA*i).
/// Independent child streams are derived with split(), so every component of
/// a run (per-sample renders, shuffles, parameter init, fold assignment) owns
/// its own stream and reproduces regardless of evaluation order.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : seed_(seed) {}

    /// Child stream independent of this one; does not advance the parent.
    RngStream split(uint64_t key) const;
    RngStream split(std::string_view name) const;

    uint64_t next_u64();
    double next_double();        // [0, 1), 53-bit
    float next_float();          // [0, 1), 24-bit
    float uniform(float lo, float hi);
    /// Standard normal via inverse-CDF (Acklam's rational approximation).
    float normal();
    /// Unbiased integer in [0, n), n >= 1. Rejection-free (Lemire).
    uint64_t below(uint64_t n);

    uint64_t seed() const { return seed_; }
    uint64_t position() const { return counter_; }

    static uint64_t mix64(uint64_t x);
    static uint64_t hash_name(std::string_view name);

private:
    uint64_t seed_;
    uint64_t counter_ = 0;
};

} // namespace atrfas
