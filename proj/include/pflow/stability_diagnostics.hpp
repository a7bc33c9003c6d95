#ifndef PFLOW_STABILITY_DIAGNOSTICS_HPP
#define PFLOW_STABILITY_DIAGNOSTICS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pflow/particle_flow.hpp"

namespace pflow {

/**
 * Infinity norm of LHS - RHS of the density-consistency condition
 *   grad d(log p)/d lambda = -grad div f - (Hess log p) f - (grad^T f)(grad log p)
 *                            + grad[ (1/2p) sum_ij Q_ij d2p/dxi dxj ]
 * evaluated in closed form for Gaussian p(x, lambda) and affine f. With
 * g = grad log p = S x + b0 + beta*bh this is
 *   LHS = beta_dot (Ah x + bh),   RHS = -S f - F^T g + S Q g.
 * The second overload checks an arbitrary affine drift against the context.
 */
double cond1_residual(const FlowContext& ctx, double lambda, const Vec& x);
double cond1_residual(const FlowContext& ctx, double lambda, const Vec& x, const AffineField& f);

// Lyapunov function V = x~^T M x~ along the linearized difference flow
// dx~/dl = F x~, with M(lambda) = -(A0 + beta Ah).
struct LyapunovTrace {
    std::vector<double> lambdas;
    std::vector<double> V;
    // dV/dl predicted as -x~^T M Q M x~.
    std::vector<double> dV_pred;
    // c exp(-r lambda).
    std::vector<double> bound;
    // x~^T M0 x~.
    std::vector<double> v_m0;
    double c = 0.0;
    double r = 0.0;
};

struct A3Result {
    bool holds = false;
    Mat M0;
};

// Candidate M0 = c I with c = (1 - 1e-6) * min over path nodes of
// lambda_min(M(lambda)); holds iff c > 0 and M - M0 is PSD at every node.
A3Result check_A3(const FlowContext& ctx);

// RK4 on a uniform grid of `steps` intervals, sub-stepped for stability.
// r = lambda_min(Q) lambda_min(M0) when (A3) holds, else 0.
LyapunovTrace lyapunov_trace(const Vec& x_tilde0, const FlowContext& ctx, std::size_t steps);

struct GronwallReport {
    std::size_t nodes = 0;
    std::size_t violations = 0;
    // max over nodes of V - V0 exp(-r lambda) (negative when comfortably inside).
    double max_excess = 0.0;
    double first_violation_lambda = 0.0;
    double rate = 0.0;
};

// V(l_i) <= V(0) exp(-r l_i) + 1e-9 + 1e-6 V(0) at every node. `rate`
// overrides trace.r (used to probe the detector).
GronwallReport gronwall_check(const LyapunovTrace& trace, std::optional<double> rate = std::nullopt);

struct ConditionSweepReport {
    std::size_t trials = 0;
    std::size_t violations = 0;
    // max of (kappa(A + d1 B) - kappa(A - d2 B)) / kappa(A - d2 B).
    double max_rel_excess = 0.0;
};

/**
 * Spectral condition-number monotonicity: random SPD pairs A, B with
 * kappa(B) <= kappa(A), d1 >= 0, d2 >= 0 with A - d2 B SPD, checked for
 * kappa(A + d1 B) <= kappa(A - d2 B) within 1e-10 relative.
 */
ConditionSweepReport condition_inequality_sweep(std::size_t trials, std::uint64_t seed);

}  // namespace pflow

#endif  // PFLOW_STABILITY_DIAGNOSTICS_HPP
