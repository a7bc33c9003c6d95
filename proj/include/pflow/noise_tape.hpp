#ifndef PFLOW_NOISE_TAPE_HPP
#define PFLOW_NOISE_TAPE_HPP

#include <cstddef>
#include <cstdint>

#include "pflow/linalg.hpp"

namespace pflow {

// Counter-based standard-normal stream: the draw for (stream, index) is a pure
// function of (seed, stream, index), so nothing has to be stored and results
// do not depend on evaluation order or thread count.
// Independent 64-bit seed for sub-stream `stream` of `seed` (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class CounterNormal {
public:
    explicit CounterNormal(std::uint64_t seed) : seed_(seed) {}

    double operator()(std::uint64_t stream, std::uint64_t index) const;

private:
    std::uint64_t seed_;
};

/**
 * Pre-drawn standard normal increments xi[particle][step] in R^m used by
 * Euler-Maruyama. Fixed by (seed, N, steps, m); reusing one tape across
 * homotopy schedules gives common random numbers.
 */
class NoiseTape {
public:
    NoiseTape(std::uint64_t seed, std::size_t n_particles, std::size_t steps, std::size_t m);

    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t particles() const noexcept { return n_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t dim() const noexcept { return m_; }

    Vec increment(std::size_t particle, std::size_t step) const;

    // FNV-1a over every increment, in (particle, step, component) order.
    std::uint64_t hash() const;

private:
    std::uint64_t seed_;
    std::size_t n_;
    std::size_t steps_;
    std::size_t m_;
    CounterNormal normal_;
};

}  // namespace pflow

#endif  // PFLOW_NOISE_TAPE_HPP
