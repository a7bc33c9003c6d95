#ifndef PFLOW_HOMOTOPY_OPTIMIZER_HPP
#define PFLOW_HOMOTOPY_OPTIMIZER_HPP

#include <cstddef>
#include <string>

#include "pflow/condition.hpp"
#include "pflow/gaussian_model.hpp"
#include "pflow/homotopy_path.hpp"

namespace pflow {

enum class IntegratorKind { adaptive, fixed };

struct OptimizerConfig {
    double mu = 0.2;
    NormChoice norm = NormChoice::nuclear;
    // Uniform grid intervals on [0, 1] (K + 1 nodes).
    std::size_t intervals = 200;
    // Initial bracket for beta_dot(0); each widening adds its width on both
    // sides, clipped to +-bracket_limit.
    double bracket_lo = -5.0;
    double bracket_hi = 5.0;
    double bracket_limit = 100.0;
    // Accept a slope once |beta(1) - 1| <= shoot_tol. Strongly curved kappa
    // makes beta(1) very sensitive to the slope (1e9 is not unusual), so much
    // tighter values can be below what a double-precision slope resolves.
    double shoot_tol = 1e-8;
    // When bisection has narrowed the slope to adjacent doubles without
    // reaching shoot_tol, the best trajectory is still accepted (and flagged)
    // if |beta(1) - 1| <= resolution_cap.
    double resolution_cap = 1e-5;
    std::size_t max_bisections = 200;
    // Dormand-Prince 5(4) step control.
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    IntegratorKind integrator = IntegratorKind::adaptive;
    // RK4 sub-steps per grid interval when integrator == fixed.
    std::size_t fixed_substeps = 64;
    // Fallback when shooting does not reach shoot_tol: finite-difference
    // relaxation on a grid refined this many times; 0 disables it.
    std::size_t relaxation_refine = 16;

    void validate() const;
};

// M(beta) = -A0 - beta*Ah (negated Hessian of log p under alpha + beta = 1).
Mat m_matrix(const GaussianLogDensity& prior, const GaussianLogDensity& lik, double beta);

/**
 * d kappa(M(beta)) / d beta with dM/dbeta = -Ah:
 *   nuclear:  tr(-Ah) tr(M^{-1}) + tr(M) tr(M^{-2} Ah)
 *   spectral: -v_max^T Ah v_max / l_min + l_max v_min^T Ah v_min / l_min^2
 * The spectral form needs simple extreme eigenvalues; when either is within
 * 1e-8 (relative) of its neighbour a central difference of kappa is used.
 * Throws AssumptionViolation if M(beta) is not SPD.
 */
double kappa_gradient(const GaussianLogDensity& prior, const GaussianLogDensity& lik, double beta, NormChoice norm);

// beta'' = mu * d kappa / d beta; errors are re-thrown tagged with lambda.
double bvp_rhs(double lambda, double beta, const OptimizerConfig& config, const GaussianLogDensity& prior,
               const GaussianLogDensity& lik);

/**
 * Shooting with bisection on beta_dot(0) so that beta(1) = 1. Trial
 * trajectories that lose positive definiteness of M are scored by the sign of
 * beta - 1 where they failed. If bisection stalls above shoot_tol, the
 * integrator tolerances are tightened by 100x (down to 1e-14) and the search
 * repeated. If that still stalls, the boundary value problem is solved by
 * relaxation: Numerov differences on the refined grid, damped Newton and
 * continuation in mu, which is also tried when no bracket straddles the
 * target. Throws ShootingError when relaxation fails too and no shooting
 * trajectory is within resolution_cap.
 */
HomotopyPath solve_optimal_homotopy(const GaussianLogDensity& prior, const GaussianLogDensity& lik,
                                    const OptimizerConfig& config);

enum class BvpMethod {
    shooting,
    relaxation,
    // Shooting accepted under resolution_cap rather than shoot_tol.
    shooting_resolution_limited,
};

struct ShootingResult {
    // beta pinned to exactly 0 and 1 at the ends.
    HomotopyPath path;
    double slope;
    // beta(1) - 1 of the accepted trajectory before pinning.
    double residual;
    BvpMethod method;
    // Integrator relative tolerance of the accepted trajectory (0 for relaxation).
    double rel_tol;
};

ShootingResult solve_optimal_homotopy_detailed(const GaussianLogDensity& prior, const GaussianLogDensity& lik,
                                               const OptimizerConfig& config);

/**
 * J = int_0^1 [ u^2/2 + mu kappa(M(beta)) ] dlambda over the path's
 * interpolant, composite Simpson per grid interval with adaptive refinement
 * inside each interval. +infinity if kappa is infinite anywhere sampled.
 */
double objective(const HomotopyPath& path, const GaussianLogDensity& prior, const GaussianLogDensity& lik, double mu,
                 NormChoice norm);

/**
 * Per node keep the optimal (beta, beta_dot) if kappa(F) does not exceed the
 * baseline's kappa(F), else take the baseline node. F is the flow Jacobian.
 * Afterwards kappa(F(lambda_i, modified)) <= kappa(F(lambda_i, baseline)) at
 * every node.
 */
HomotopyPath guard_modified_beta(const HomotopyPath& optimal, const HomotopyPath& baseline,
                                 const GaussianLogDensity& prior, const GaussianLogDensity& lik, const Mat& Q,
                                 NormChoice norm);

// Sufficient condition for a non-negative optimal schedule: monotone
// (spectral) norm, -A0 and -Ah both SPD and kappa(Ah) <= kappa(A0).
struct NonnegativityReport {
    bool applicable = false;
    std::string reason;
    bool hypotheses_hold = false;
    double min_beta = 0.0;
    bool conclusion_holds = false;
    // Hypotheses hold but the path dips below zero.
    bool solver_bug = false;
};

NonnegativityReport check_nonnegative_optimum(const GaussianLogDensity& prior, const GaussianLogDensity& lik,
                                              const HomotopyPath& path, NormChoice norm);

}  // namespace pflow

#endif  // PFLOW_HOMOTOPY_OPTIMIZER_HPP
