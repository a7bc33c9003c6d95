#include "pflow/stability_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pflow/condition.hpp"
#include "pflow/errors.hpp"
#include "pflow/random_instance.hpp"

namespace pflow {

namespace {

Mat blended_hessian(const FlowContext& ctx, double beta) { return ctx.prior().hessian() + beta * ctx.lik().hessian(); }

}  // namespace

double cond1_residual(const FlowContext& ctx, double lambda, const Vec& x, const AffineField& f) {
    if (x.size() != ctx.dim() || f.jacobian.rows() != ctx.dim() || f.offset.size() != ctx.dim()) {
        throw ContractViolation("cond1_residual: dimension mismatch");
    }
    const PathSample s = ctx.path().at(lambda);
    const Mat S = blended_hessian(ctx, s.beta);
    if (!Eigen::FullPivLU<Mat>(S).isInvertible()) {
        throw AssumptionViolation("cond1_residual: blended Hessian is singular", lambda);
    }
    const Vec g = S * x + ctx.prior().linear() + s.beta * ctx.lik().linear();
    const Vec lhs = s.beta_dot * grad_log_density(ctx.lik(), x);
    // grad div f vanishes for affine f.
    const Vec rhs = -S * f(x) - f.jacobian.transpose() * g + S * ctx.Q() * g;
    return (lhs - rhs).lpNorm<Eigen::Infinity>();
}

double cond1_residual(const FlowContext& ctx, double lambda, const Vec& x) {
    return cond1_residual(ctx, lambda, x, drift_field(lambda, ctx));
}

A3Result check_A3(const FlowContext& ctx) {
    const Eigen::Index n = ctx.dim();
    double lo = std::numeric_limits<double>::infinity();
    for (double beta : ctx.path().betas()) lo = std::min(lo, min_eigenvalue(-blended_hessian(ctx, beta)));
    A3Result out;
    const double c = (1.0 - 1e-6) * lo;
    out.M0 = c * Mat::Identity(n, n);
    if (!(c > 0.0)) return out;
    out.holds = true;
    for (double beta : ctx.path().betas()) {
        if (!is_psd(-blended_hessian(ctx, beta) - out.M0, 1e-12)) {
            out.holds = false;
            break;
        }
    }
    return out;
}

LyapunovTrace lyapunov_trace(const Vec& x_tilde0, const FlowContext& ctx, std::size_t steps) {
    if (steps < 1) throw ContractViolation("lyapunov_trace: steps must be >= 1");
    if (x_tilde0.size() != ctx.dim()) throw ContractViolation("lyapunov_trace: x_tilde0 has wrong dimension");

    const A3Result a3 = check_A3(ctx);
    LyapunovTrace tr;
    tr.r = a3.holds ? min_eigenvalue(ctx.Q()) * a3.M0(0, 0) : 0.0;
    tr.r = std::max(0.0, tr.r);

    auto m_at = [&ctx](double lambda) { return Mat(-blended_hessian(ctx, ctx.path().at(lambda).beta)); };
    auto record = [&](double lambda, const Vec& x) {
        const Mat M = m_at(lambda);
        const Vec Mx = M * x;
        tr.lambdas.push_back(lambda);
        tr.V.push_back(x.dot(Mx));
        tr.dV_pred.push_back(-Mx.dot(ctx.Q() * Mx));
        tr.v_m0.push_back(x.dot(a3.M0 * x));
    };

    Vec x = x_tilde0;
    record(0.0, x);
    tr.c = tr.V.front();

    const double h = 1.0 / static_cast<double>(steps);
    constexpr double kStageBudget = 0.05;
    for (std::size_t k = 0; k < steps; ++k) {
        const double l0 = static_cast<double>(k) * h;
        const double l1 = (k + 1 == steps) ? 1.0 : static_cast<double>(k + 1) * h;
        double stiff = 0.0;
        for (double l : {l0, 0.5 * (l0 + l1), l1}) stiff = std::max(stiff, flow_jacobian(l, ctx).operatorNorm());
        const auto sub = static_cast<std::size_t>(std::max(4.0, std::ceil((l1 - l0) * stiff / kStageBudget)));
        const double dh = (l1 - l0) / static_cast<double>(sub);
        for (std::size_t j = 0; j < sub; ++j) {
            const double t = l0 + static_cast<double>(j) * dh;
            const Mat Fa = flow_jacobian(t, ctx);
            const Mat Fm = flow_jacobian(t + 0.5 * dh, ctx);
            const Mat Fb = flow_jacobian(std::min(1.0, t + dh), ctx);
            const Vec k1 = Fa * x;
            const Vec k2 = Fm * (x + 0.5 * dh * k1);
            const Vec k3 = Fm * (x + 0.5 * dh * k2);
            const Vec k4 = Fb * (x + dh * k3);
            x += dh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        record(l1, x);
    }
    tr.bound.reserve(tr.lambdas.size());
    for (double l : tr.lambdas) tr.bound.push_back(tr.c * std::exp(-tr.r * l));
    return tr;
}

GronwallReport gronwall_check(const LyapunovTrace& trace, std::optional<double> rate) {
    GronwallReport rep;
    rep.rate = rate.value_or(trace.r);
    rep.nodes = trace.V.size();
    rep.max_excess = -std::numeric_limits<double>::infinity();
    if (trace.V.empty()) return rep;
    const double v0 = trace.V.front();
    for (std::size_t i = 0; i < trace.V.size(); ++i) {
        const double bound = v0 * std::exp(-rep.rate * trace.lambdas[i]);
        const double excess = trace.V[i] - bound;
        rep.max_excess = std::max(rep.max_excess, excess);
        if (excess > 1e-9 + 1e-6 * std::abs(v0)) {
            if (rep.violations == 0) rep.first_violation_lambda = trace.lambdas[i];
            ++rep.violations;
        }
    }
    return rep;
}

ConditionSweepReport condition_inequality_sweep(std::size_t trials, std::uint64_t seed) {
    Rng rng(seed);
    ConditionSweepReport rep;
    rep.max_rel_excess = -std::numeric_limits<double>::infinity();
    while (rep.trials < trials) {
        const auto n = static_cast<Eigen::Index>(2 + rng.index(4));
        Mat A = rng.spd(n, 0.1, 10.0);
        Mat B = rng.spd(n, 0.1, 10.0);
        if (condition_number(B, NormChoice::spectral) > condition_number(A, NormChoice::spectral)) std::swap(A, B);
        // Largest d with A - d B SPD is the smallest generalized eigenvalue of (A, B).
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(A, B, Eigen::EigenvaluesOnly);
        const double d2_max = ges.eigenvalues().minCoeff();
        const double d1 = rng.uniform(0.0, 5.0);
        const double d2 = rng.uniform(0.0, 0.99) * d2_max;
        const double k_plus = condition_number(A + d1 * B, NormChoice::spectral);
        const double k_minus = condition_number(A - d2 * B, NormChoice::spectral);
        const double excess = (k_plus - k_minus) / k_minus;
        rep.max_rel_excess = std::max(rep.max_rel_excess, excess);
        if (excess > 1e-10) ++rep.violations;
        ++rep.trials;
    }
    return rep;
}

}  // namespace pflow
