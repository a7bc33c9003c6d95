#include "pflow/noise_tape.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "pflow/errors.hpp"

namespace pflow {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Uniform on (0, 1): 53 random bits, offset by half an ulp so log() is finite.
double to_open_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

double CounterNormal::operator()(std::uint64_t stream, std::uint64_t index) const {
    const std::uint64_t key = splitmix64(seed_ ^ splitmix64(stream ^ splitmix64(index)));
    const double u1 = to_open_unit(splitmix64(key));
    const double u2 = to_open_unit(splitmix64(key ^ 0xD1B54A32D192ED03ull));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

NoiseTape::NoiseTape(std::uint64_t seed, std::size_t n_particles, std::size_t steps, std::size_t m)
    : seed_(seed), n_(n_particles), steps_(steps), m_(m), normal_(seed) {
    if (n_ == 0 || steps_ == 0 || m_ == 0) throw ContractViolation("NoiseTape: N, steps and m must be positive");
}

Vec NoiseTape::increment(std::size_t particle, std::size_t step) const {
    if (particle >= n_ || step >= steps_) throw ContractViolation("NoiseTape::increment: index out of range");
    Vec xi(static_cast<Eigen::Index>(m_));
    for (std::size_t j = 0; j < m_; ++j) {
        xi(static_cast<Eigen::Index>(j)) = normal_(particle, step * m_ + j);
    }
    return xi;
}

std::uint64_t NoiseTape::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xFFu;
            h *= 0x100000001b3ull;
        }
    };
    mix(seed_);
    mix(n_);
    mix(steps_);
    mix(m_);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t k = 0; k < steps_ * m_; ++k) {
            const double v = normal_(i, k);
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            mix(bits);
        }
    }
    return h;
}

}  // namespace pflow
