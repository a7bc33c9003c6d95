#ifndef PFLOW_PARTICLE_FLOW_HPP
#define PFLOW_PARTICLE_FLOW_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "pflow/gaussian_model.hpp"
#include "pflow/homotopy_path.hpp"
#include "pflow/noise_tape.hpp"

namespace pflow {

/**
 * Everything the drift needs: prior and likelihood quadratics, the diffusion
 * matrix Q = q q^T (symmetric PSD, may be singular) and the homotopy schedule.
 * Construction checks Q and that A0 + beta*Ah is negative definite at every
 * path node.
 */
class FlowContext {
public:
    FlowContext(GaussianLogDensity prior, GaussianLogDensity lik, Mat Q, HomotopyPath path);

    const GaussianLogDensity& prior() const noexcept { return prior_; }
    const GaussianLogDensity& lik() const noexcept { return lik_; }
    const Mat& Q() const noexcept { return Q_; }
    // Symmetric PSD square root of Q.
    const Mat& q() const noexcept { return q_; }
    const HomotopyPath& path() const noexcept { return path_; }
    Eigen::Index dim() const noexcept { return prior_.dim(); }

    FlowContext with_path(HomotopyPath path) const;
    FlowContext with_likelihood(GaussianLogDensity lik) const;

private:
    GaussianLogDensity prior_;
    GaussianLogDensity lik_;
    Mat Q_;
    Mat q_;
    HomotopyPath path_;
};

// f(x) = jacobian * x + offset.
struct AffineField {
    Mat jacobian;
    Vec offset;

    Vec operator()(const Vec& x) const { return jacobian * x + offset; }
};

// Drift of the flow at a given (beta, beta_dot), independent of any path:
//   S  = A0 + beta*Ah
//   K1 = Q/2 + (beta_dot/2) S^{-1} Ah S^{-1},  K2 = -beta_dot S^{-1}
//   f  = K1 grad log p + K2 grad log h
// Throws AssumptionViolation (carrying `lambda`) if S is singular.
AffineField drift_field(const GaussianLogDensity& prior, const GaussianLogDensity& lik, const Mat& Q, double beta,
                        double beta_dot, double lambda = 0.0);

AffineField drift_field(double lambda, const FlowContext& ctx);

Vec drift(const Vec& x, double lambda, const FlowContext& ctx);

// F = Q S / 2 - (beta_dot/2) S^{-1} Ah.
Mat flow_jacobian_at(const GaussianLogDensity& prior, const GaussianLogDensity& lik, const Mat& Q, double beta,
                     double beta_dot, double lambda = 0.0);
Mat flow_jacobian(double lambda, const FlowContext& ctx);

struct StiffnessRatio {
    enum class Status { defined, infinite, undefined };
    Status status;
    double value;  // NaN when undefined, +inf when infinite
};

// max|Re ev| / min|Re ev| over eigenvalues of F; undefined unless every
// eigenvalue has strictly negative real part.
StiffnessRatio stiffness_ratio(const Mat& F);

/**
 * N particles plus the Brownian increments that drive them. The tape is
 * shared (never copied) so that compared runs provably use the same noise.
 */
struct ParticleEnsemble {
    Mat states;  // N x n
    std::shared_ptr<const NoiseTape> tape;

    std::size_t size() const noexcept { return static_cast<std::size_t>(states.rows()); }
    Vec mean() const;
    Mat sample_covariance() const;
};

// Draws N particles from the prior moments and a noise tape sized for
// (N, steps, m) from `seed`.
ParticleEnsemble sample_ensemble(const MomentPair& prior, std::size_t n_particles, std::size_t steps, std::size_t m,
                                 std::uint64_t seed);

struct Relinearization {
    MeasurementModel model;
    Vec z;
    Mat R;
};

struct IntegrateOptions {
    // Re-linearize the likelihood at the running ensemble mean before every step.
    std::optional<Relinearization> relinearize;
    std::size_t jobs = 1;
};

/**
 * Euler-Maruyama over lambda in [0, 1] with `steps` uniform steps:
 *   x_{k+1} = x_k + f(x_k, lambda_k) dl + q sqrt(dl) xi_k,
 * xi_k read from the ensemble's tape. Deterministic given tape and schedule.
 * Throws FlowError with lambda and particle index if the drift fails or a
 * particle becomes non-finite.
 */
ParticleEnsemble integrate_ensemble(const ParticleEnsemble& ens, const FlowContext& ctx, std::size_t steps,
                                    const IntegrateOptions& opts = {});

// RK4 on dmean/dl = F mean + b, dP/dl = F P + P F^T + Q from the prior moments.
// Each of the `steps` output intervals is sub-stepped so that h*||F|| stays
// inside the RK4 stability region. Returns steps + 1 moment pairs.
std::vector<MomentPair> moment_ode_oracle(const FlowContext& ctx, std::size_t steps);

}  // namespace pflow

#endif  // PFLOW_PARTICLE_FLOW_HPP
