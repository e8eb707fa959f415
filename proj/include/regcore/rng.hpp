#pragma once

#include <array>
#include <cstdint>

namespace regcore {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A (seed,
// stream) pair selects an independent sequence; draws are a pure function of
// (seed, stream, position), so results are portable and schedule-independent.
class Philox {
public:
    using result_type = std::uint32_t;

    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return 0xFFFFFFFFu; }

    result_type operator()();

    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    // Uniform in [lo, hi]; returns lo exactly when lo == hi.
    double uniform(double lo, double hi);
    // Standard normal via Box-Muller.
    double normal();

    // Raw block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                              std::array<std::uint32_t, 2> key);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> buffer_{};
    unsigned used_ = 4;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

// Draws lambda log-uniformly on [lo, hi]: exp(u), u ~ U[ln lo, ln hi].
double sample_lambda(Philox& rng, double lo = 1e-6, double hi = 10.0);

} // namespace regcore
