#ifndef PFLOW_RANDOM_INSTANCE_HPP
#define PFLOW_RANDOM_INSTANCE_HPP

#include <cstdint>
#include <random>

#include "pflow/gaussian_model.hpp"
#include "pflow/homotopy_path.hpp"
#include "pflow/linalg.hpp"

namespace pflow {

// Small platform-independent generator for randomized checks. The engine is
// std::mt19937_64 (fully specified by the standard); the distributions are
// written out here because the standard library ones are not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }
    double normal();

    Vec normal_vector(Eigen::Index n);
    Mat normal_matrix(Eigen::Index rows, Eigen::Index cols);
    Mat orthogonal(Eigen::Index n);
    // Q diag(eigs) Q^T with eigenvalues uniform in [lo, hi].
    Mat spd(Eigen::Index n, double lo, double hi);

private:
    std::mt19937_64 engine_;
};

enum class DiffusionKind { zero, singular, definite };

struct GaussianInstance {
    GaussianLogDensity prior;
    GaussianLogDensity lik;
    Mat Q;
    HomotopyPath path;
};

/**
 * Random prior N(m, P), linear-Gaussian likelihood with d <= n rows, diffusion
 * of the requested kind and a smooth schedule beta = lambda + a sin(pi lambda),
 * |a| <= 0.3 (so beta >= 0 and the blended Hessian stays negative definite).
 */
GaussianInstance random_instance(Rng& rng, Eigen::Index n, DiffusionKind q_kind,
                                 std::size_t intervals = 200, bool straight = false);

}  // namespace pflow

#endif  // PFLOW_RANDOM_INSTANCE_HPP
