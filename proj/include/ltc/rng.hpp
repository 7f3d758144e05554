#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ltc {

// xoshiro256** seeded through splitmix64. Normal variates use the
// Box-Muller transform (one variate per call, no cached spare), so the whole
// generator state is the four 64-bit words and can be checkpointed exactly.
class Rng {
public:
    using State = std::array<std::uint64_t, 4>;

    explicit Rng(std::uint64_t seed = 0);

    // Generator for an independent sub-stream: all randomness in a run funnels
    // from one seed plus fixed per-component offsets.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    // Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // k distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    const State& state() const noexcept { return s_; }
    void set_state(const State& s) noexcept { s_ = s; }

private:
    State s_{};
};

} // namespace ltc
