#include <gtest/gtest.h>

#include <cmath>

#include "pflow/errors.hpp"
#include "pflow/random_instance.hpp"
#include "pflow/stability_diagnostics.hpp"

using namespace pflow;

namespace {

GaussianLogDensity scalar(double a, double b, DensityRole role) {
    return {Mat::Constant(1, 1, a), Vec::Constant(1, b), 0.0, role};
}

}  // namespace

TEST(Cond1Residual, ScalarHandCaseIsZero) {
    const FlowContext ctx(scalar(-1, 0, DensityRole::prior), scalar(-1, 0, DensityRole::likelihood), Mat::Zero(1, 1),
                          HomotopyPath::linear(10));
    for (double x : {-2.0, 0.0, 0.7, 5.0}) EXPECT_LT(cond1_residual(ctx, 0.0, Vec::Constant(1, x)), 1e-14);
}

TEST(Cond1Residual, SmallForTheFlowDrift) {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(4));
        const GaussianInstance g = random_instance(rng, n, static_cast<DiffusionKind>(trial % 3));
        const FlowContext ctx(g.prior, g.lik, g.Q, g.path);
        for (int k = 0; k < 10; ++k) {
            EXPECT_LE(cond1_residual(ctx, rng.uniform(), rng.normal_vector(n)), 1e-8);
        }
    }
}

TEST(Cond1Residual, DetectsPerturbedDrift) {
    Rng rng(2);
    const GaussianInstance g = random_instance(rng, 3, DiffusionKind::definite);
    const FlowContext ctx(g.prior, g.lik, g.Q, g.path);
    for (int k = 0; k < 10; ++k) {
        const double lambda = rng.uniform();
        Vec x = rng.normal_vector(3);
        x(0) = 1.0;
        AffineField f = drift_field(lambda, ctx);
        f.jacobian(0, 0) += 0.1;
        EXPECT_GT(cond1_residual(ctx, lambda, x, f), 1e-3);
    }
}

TEST(CheckA3, ScalarLineCase) {
    const FlowContext ctx(scalar(-1, 0, DensityRole::prior), scalar(-1, 0, DensityRole::likelihood), Mat::Zero(1, 1),
                          HomotopyPath::linear(10));
    const A3Result r = check_A3(ctx);
    EXPECT_TRUE(r.holds);
    EXPECT_NEAR(r.M0(0, 0), 1.0 - 1e-6, 1e-15);
}

TEST(CheckA3, NonnegativeScheduleBoundedByPriorHessian) {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const GaussianInstance g = random_instance(rng, 3, DiffusionKind::definite);
        const FlowContext ctx(g.prior, g.lik, g.Q, HomotopyPath::linear(100));
        const A3Result r = check_A3(ctx);
        EXPECT_TRUE(r.holds);
        EXPECT_LE(r.M0(0, 0), min_eigenvalue(-g.prior.hessian()));
    }
}

TEST(CheckA3, NegativeDipShrinksCandidate) {
    const GaussianLogDensity p0 = scalar(-1, 0, DensityRole::prior);
    const GaussianLogDensity h = scalar(-1, 0, DensityRole::likelihood);
    const std::vector<double> l = HomotopyPath::uniform_grid(4);
    const HomotopyPath dip(l, {0.0, -0.5, -0.9, 0.2, 1.0}, {0.0, 0.0, 0.0, 0.0, 0.0});
    const A3Result r = check_A3(FlowContext(p0, h, Mat::Zero(1, 1), dip));
    EXPECT_TRUE(r.holds);
    EXPECT_NEAR(r.M0(0, 0), (1.0 - 1e-6) * 0.1, 1e-12);
}

TEST(LyapunovTrace, ConstantWithoutDiffusion) {
    Rng rng(4);
    const GaussianInstance g = random_instance(rng, 3, DiffusionKind::zero);
    const FlowContext ctx(g.prior, g.lik, g.Q, g.path);
    const LyapunovTrace tr = lyapunov_trace(rng.normal_vector(3), ctx, 200);
    const double v0 = tr.V.front();
    for (double v : tr.V) EXPECT_NEAR(v, v0, 1e-8 * v0);
    for (double d : tr.dV_pred) EXPECT_EQ(d, 0.0);
}

TEST(LyapunovTrace, StartsAtPriorQuadraticForm) {
    Rng rng(5);
    const GaussianInstance g = random_instance(rng, 2, DiffusionKind::definite);
    const Vec x0 = rng.normal_vector(2);
    const LyapunovTrace tr = lyapunov_trace(x0, FlowContext(g.prior, g.lik, g.Q, g.path), 50);
    EXPECT_NEAR(tr.V.front(), x0.dot(-g.prior.hessian() * x0), 1e-12);
    EXPECT_EQ(tr.c, tr.V.front());
    EXPECT_EQ(tr.lambdas.size(), 51u);
}

TEST(LyapunovTrace, NonIncreasingAndMatchesPredictedDerivative) {
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const GaussianInstance g =
            random_instance(rng, 1 + static_cast<Eigen::Index>(rng.index(4)),
                            trial % 2 ? DiffusionKind::definite : DiffusionKind::singular);
        const LyapunovTrace tr =
            lyapunov_trace(rng.normal_vector(g.prior.dim()), FlowContext(g.prior, g.lik, g.Q, g.path), 1000);
        const double v0 = tr.V.front();
        for (std::size_t i = 1; i < tr.V.size(); ++i) EXPECT_LE(tr.V[i], tr.V[i - 1] + 1e-9 + 1e-6 * v0);
        for (std::size_t i = 1; i + 1 < tr.V.size(); ++i) {
            const double fd = (tr.V[i + 1] - tr.V[i - 1]) / (tr.lambdas[i + 1] - tr.lambdas[i - 1]);
            EXPECT_NEAR(fd, tr.dV_pred[i], 1e-4 * std::max(1.0, v0));
        }
    }
}

TEST(Gronwall, BoundHoldsAndDetectorFires) {
    Rng rng(7);
    std::size_t fired = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const GaussianInstance g = random_instance(rng, 2, DiffusionKind::definite);
        const FlowContext ctx(g.prior, g.lik, g.Q, g.path);
        ASSERT_TRUE(check_A3(ctx).holds);
        const LyapunovTrace tr = lyapunov_trace(rng.normal_vector(2), ctx, 400);
        EXPECT_GT(tr.r, 0.0);
        const GronwallReport ok = gronwall_check(tr);
        EXPECT_EQ(ok.violations, 0u);
        for (std::size_t i = 0; i < tr.V.size(); ++i) EXPECT_LE(tr.v_m0[i], tr.bound[i] * (1 + 1e-6) + 1e-9);
        // V decays at least at rate r; a much larger rate is not a valid bound.
        if (gronwall_check(tr, 50.0 * tr.r).violations > 0) ++fired;
    }
    EXPECT_GT(fired, 0u);
}

TEST(Gronwall, DoubledRateIsDetectedOnTightInstance) {
    // Ah = 0 and Q = 1 give M = 1 and F = -1/2, so V = exp(-lambda) decays at
    // exactly the certified rate and doubling r must trip.
    const GaussianLogDensity p0 = scalar(-1, 0, DensityRole::prior);
    const GaussianLogDensity h = scalar(0, 0, DensityRole::likelihood);
    const FlowContext ctx(p0, h, Mat::Constant(1, 1, 1.0), HomotopyPath::linear(100));
    const LyapunovTrace tr = lyapunov_trace(Vec::Ones(1), ctx, 200);
    EXPECT_EQ(gronwall_check(tr).violations, 0u);
    const GronwallReport doubled = gronwall_check(tr, 2.0 * tr.r);
    EXPECT_GT(doubled.violations, 0u);
    EXPECT_GT(doubled.first_violation_lambda, 0.0);
}

TEST(Gronwall, ZeroStartIsTrivial) {
    Rng rng(8);
    const GaussianInstance g = random_instance(rng, 3, DiffusionKind::definite);
    const LyapunovTrace tr = lyapunov_trace(Vec::Zero(3), FlowContext(g.prior, g.lik, g.Q, g.path), 100);
    for (double v : tr.V) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(gronwall_check(tr).violations, 0u);
}

TEST(BoundedSingular, VNeverExceedsStart) {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const GaussianInstance g = random_instance(rng, 3, DiffusionKind::singular);
        const LyapunovTrace tr =
            lyapunov_trace(rng.normal_vector(3), FlowContext(g.prior, g.lik, g.Q, g.path), 400);
        for (double v : tr.V) EXPECT_LE(v, tr.c * (1 + 1e-6) + 1e-9);
    }
}

TEST(ConditionSweep, NoViolations) {
    const ConditionSweepReport r = condition_inequality_sweep(1000, 123);
    EXPECT_EQ(r.trials, 1000u);
    EXPECT_EQ(r.violations, 0u);
    EXPECT_LE(r.max_rel_excess, 1e-10);
}
