#include "pflow/particle_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "pflow/errors.hpp"

namespace pflow {

namespace {

constexpr std::size_t kNoParticle = std::numeric_limits<std::size_t>::max();

Mat inverse_blended_hessian(const Mat& S, double lambda) {
    Eigen::FullPivLU<Mat> lu(S);
    if (!lu.isInvertible()) {
        std::ostringstream os;
        os << "blended Hessian A0 + beta*Ah is singular at lambda = " << lambda;
        throw AssumptionViolation(os.str(), lambda);
    }
    return lu.inverse();
}

void check_flow_inputs(const GaussianLogDensity& prior, const GaussianLogDensity& lik, const Mat& Q) {
    if (prior.dim() != lik.dim() || Q.rows() != prior.dim() || Q.cols() != prior.dim()) {
        throw ContractViolation("flow: prior, likelihood and Q dimensions disagree");
    }
}

}  // namespace

FlowContext::FlowContext(GaussianLogDensity prior, GaussianLogDensity lik, Mat Q, HomotopyPath path)
    : prior_(std::move(prior)), lik_(std::move(lik)), Q_(std::move(Q)), path_(std::move(path)) {
    check_flow_inputs(prior_, lik_, Q_);
    if (!is_symmetric(Q_, 1e-12) || !is_psd(Q_, 1e-12)) {
        throw ContractViolation("FlowContext: Q must be symmetric positive semi-definite");
    }
    Q_ = symmetrized(Q_);
    q_ = psd_sqrt(Q_);
    for (std::size_t i = 0; i < path_.size(); ++i) {
        const Mat S = prior_.hessian() + path_.betas()[i] * lik_.hessian();
        if (!is_spd(-S)) {
            std::ostringstream os;
            os << "FlowContext: A0 + beta*Ah not negative definite at lambda = " << path_.lambdas()[i]
               << " (beta = " << path_.betas()[i] << ")";
            throw AssumptionViolation(os.str(), path_.lambdas()[i]);
        }
    }
}

FlowContext FlowContext::with_path(HomotopyPath path) const { return FlowContext(prior_, lik_, Q_, std::move(path)); }

FlowContext FlowContext::with_likelihood(GaussianLogDensity lik) const {
    return FlowContext(prior_, std::move(lik), Q_, path_);
}

AffineField drift_field(const GaussianLogDensity& prior, const GaussianLogDensity& lik, const Mat& Q, double beta,
                        double beta_dot, double lambda) {
    check_flow_inputs(prior, lik, Q);
    const Mat& Ah = lik.hessian();
    const Mat S = prior.hessian() + beta * Ah;
    const Mat Sinv = inverse_blended_hessian(S, lambda);
    const Mat K1 = 0.5 * Q + 0.5 * beta_dot * Sinv * Ah * Sinv;
    const Mat K2 = -beta_dot * Sinv;
    AffineField field;
    field.jacobian = K1 * S + K2 * Ah;
    field.offset = K1 * (prior.linear() + beta * lik.linear()) + K2 * lik.linear();
    return field;
}

AffineField drift_field(double lambda, const FlowContext& ctx) {
    const PathSample s = ctx.path().at(lambda);
    return drift_field(ctx.prior(), ctx.lik(), ctx.Q(), s.beta, s.beta_dot, lambda);
}

Vec drift(const Vec& x, double lambda, const FlowContext& ctx) {
    if (x.size() != ctx.dim()) throw ContractViolation("drift: x has wrong dimension");
    const PathSample s = ctx.path().at(lambda);
    const Mat& Ah = ctx.lik().hessian();
    const Mat S = ctx.prior().hessian() + s.beta * Ah;
    const Mat Sinv = inverse_blended_hessian(S, lambda);
    const Mat K1 = 0.5 * ctx.Q() + 0.5 * s.beta_dot * Sinv * Ah * Sinv;
    const Mat K2 = -s.beta_dot * Sinv;
    const Vec grad_log_p = S * x + ctx.prior().linear() + s.beta * ctx.lik().linear();
    const Vec grad_log_h = grad_log_density(ctx.lik(), x);
    return K1 * grad_log_p + K2 * grad_log_h;
}

Mat flow_jacobian_at(const GaussianLogDensity& prior, const GaussianLogDensity& lik, const Mat& Q, double beta,
                     double beta_dot, double lambda) {
    check_flow_inputs(prior, lik, Q);
    const Mat S = prior.hessian() + beta * lik.hessian();
    const Mat Sinv = inverse_blended_hessian(S, lambda);
    return 0.5 * Q * S - 0.5 * beta_dot * Sinv * lik.hessian();
}

Mat flow_jacobian(double lambda, const FlowContext& ctx) {
    const PathSample s = ctx.path().at(lambda);
    return flow_jacobian_at(ctx.prior(), ctx.lik(), ctx.Q(), s.beta, s.beta_dot, lambda);
}

StiffnessRatio stiffness_ratio(const Mat& F) {
    if (!is_square(F) || F.size() == 0) throw ContractViolation("stiffness_ratio: F must be square");
    Eigen::EigenSolver<Mat> es(F, false);
    const Vec re = es.eigenvalues().real();
    if (re.maxCoeff() >= 0.0) {
        return {StiffnessRatio::Status::undefined, std::numeric_limits<double>::quiet_NaN()};
    }
    const double hi = re.cwiseAbs().maxCoeff();
    const double lo = re.cwiseAbs().minCoeff();
    if (lo < 1e-14 * hi) return {StiffnessRatio::Status::infinite, std::numeric_limits<double>::infinity()};
    return {StiffnessRatio::Status::defined, hi / lo};
}

Vec ParticleEnsemble::mean() const { return states.colwise().mean().transpose(); }

Mat ParticleEnsemble::sample_covariance() const {
    const Eigen::Index n = states.cols();
    if (states.rows() < 2) return Mat::Zero(n, n);
    const Mat centered = states.rowwise() - states.colwise().mean();
    return (centered.transpose() * centered) / static_cast<double>(states.rows() - 1);
}

ParticleEnsemble sample_ensemble(const MomentPair& prior, std::size_t n_particles, std::size_t steps, std::size_t m,
                                 std::uint64_t seed) {
    const Eigen::Index n = prior.mean.size();
    Eigen::LLT<Mat> llt(symmetrized(prior.cov));
    if (llt.info() != Eigen::Success) throw ContractViolation("sample_ensemble: prior covariance is not SPD");
    const Mat L = llt.matrixL();
    const CounterNormal normal(seed);
    constexpr std::uint64_t kInitialStateDomain = 1ull << 63;

    ParticleEnsemble ens;
    ens.states.resize(static_cast<Eigen::Index>(n_particles), n);
    Vec xi(n);
    for (std::size_t i = 0; i < n_particles; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) xi(j) = normal(kInitialStateDomain | i, static_cast<std::uint64_t>(j));
        ens.states.row(static_cast<Eigen::Index>(i)) = (prior.mean + L * xi).transpose();
    }
    ens.tape = std::make_shared<const NoiseTape>(seed, n_particles, steps, m);
    return ens;
}

namespace {

void advance_particles(Mat& states, const NoiseTape& tape, const std::vector<AffineField>& fields, const Mat& q,
                       double dl, std::size_t begin, std::size_t end) {
    const double sqrt_dl = std::sqrt(dl);
    for (std::size_t i = begin; i < end; ++i) {
        Vec x = states.row(static_cast<Eigen::Index>(i)).transpose();
        for (std::size_t k = 0; k < fields.size(); ++k) {
            x += fields[k](x) * dl + q * (sqrt_dl * tape.increment(i, k));
        }
        states.row(static_cast<Eigen::Index>(i)) = x.transpose();
    }
}

void check_finite(const Mat& states, double lambda) {
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
        if (!states.row(i).allFinite()) {
            std::ostringstream os;
            os << "integrate_ensemble: particle " << i << " diverged by lambda = " << lambda;
            throw FlowError(os.str(), lambda, static_cast<std::size_t>(i));
        }
    }
}

}  // namespace

ParticleEnsemble integrate_ensemble(const ParticleEnsemble& ens, const FlowContext& ctx, std::size_t steps,
                                    const IntegrateOptions& opts) {
    if (steps < 1) throw ContractViolation("integrate_ensemble: steps must be >= 1");
    if (!ens.tape) throw ContractViolation("integrate_ensemble: ensemble has no noise tape");
    const NoiseTape& tape = *ens.tape;
    if (ens.states.cols() != ctx.dim() || tape.particles() != ens.size() || tape.steps() != steps ||
        static_cast<Eigen::Index>(tape.dim()) != ctx.q().cols()) {
        throw ContractViolation("integrate_ensemble: tape must be sized (N, steps, m) for this ensemble and Q");
    }

    const double dl = 1.0 / static_cast<double>(steps);
    ParticleEnsemble out{ens.states, ens.tape};

    auto field_at = [&](std::size_t k, const FlowContext& c) {
        const double lambda = static_cast<double>(k) * dl;
        try {
            return drift_field(lambda, c);
        } catch (const AssumptionViolation& e) {
            throw FlowError(std::string("integrate_ensemble: drift failed: ") + e.what(), lambda, kNoParticle);
        }
    };

    if (opts.relinearize) {
        const Relinearization& rl = *opts.relinearize;
        for (std::size_t k = 0; k < steps; ++k) {
            const double lambda = static_cast<double>(k) * dl;
            FlowContext step_ctx = [&] {
                try {
                    return ctx.with_likelihood(linearize_likelihood(rl.model, rl.z, rl.R, out.mean()));
                } catch (const std::exception& e) {
                    throw FlowError(std::string("integrate_ensemble: relinearization failed: ") + e.what(), lambda,
                                    kNoParticle);
                }
            }();
            const std::vector<AffineField> field{field_at(k, step_ctx)};
            const double sqrt_dl = std::sqrt(dl);
            for (std::size_t i = 0; i < out.size(); ++i) {
                Vec x = out.states.row(static_cast<Eigen::Index>(i)).transpose();
                x += field[0](x) * dl + ctx.q() * (sqrt_dl * tape.increment(i, k));
                out.states.row(static_cast<Eigen::Index>(i)) = x.transpose();
            }
            check_finite(out.states, lambda + dl);
        }
        return out;
    }

    std::vector<AffineField> fields;
    fields.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) fields.push_back(field_at(k, ctx));

    const std::size_t jobs = std::clamp<std::size_t>(opts.jobs, 1, std::max<std::size_t>(1, out.size()));
    if (jobs == 1) {
        advance_particles(out.states, tape, fields, ctx.q(), dl, 0, out.size());
    } else {
        std::vector<std::thread> workers;
        const std::size_t chunk = (out.size() + jobs - 1) / jobs;
        for (std::size_t begin = 0; begin < out.size(); begin += chunk) {
            const std::size_t end = std::min(out.size(), begin + chunk);
            workers.emplace_back(advance_particles, std::ref(out.states), std::cref(tape), std::cref(fields),
                                 std::cref(ctx.q()), dl, begin, end);
        }
        for (auto& w : workers) w.join();
    }
    check_finite(out.states, 1.0);
    return out;
}

std::vector<MomentPair> moment_ode_oracle(const FlowContext& ctx, std::size_t steps) {
    if (steps < 1) throw ContractViolation("moment_ode_oracle: steps must be >= 1");
    struct State {
        Vec mean;
        Mat cov;
    };
    auto rhs = [&ctx](double lambda, const State& s) {
        const AffineField f = drift_field(std::min(1.0, std::max(0.0, lambda)), ctx);
        State d;
        d.mean = f.jacobian * s.mean + f.offset;
        d.cov = f.jacobian * s.cov + s.cov * f.jacobian.transpose() + ctx.Q();
        return d;
    };
    auto axpy = [](const State& s, double h, const State& d) { return State{s.mean + h * d.mean, s.cov + h * d.cov}; };

    const MomentPair start = posterior_moments(ctx.prior(), ctx.lik(), 0.0);
    State s{start.mean, start.cov};
    std::vector<MomentPair> out;
    out.reserve(steps + 1);
    out.push_back(start);

    const double h = 1.0 / static_cast<double>(steps);
    // RK4 on y' = 2 F y is stable for h*rho <= 2.78; the small budget is for accuracy, the error scales as budget^4.
    constexpr double kStageBudget = 0.005;
    for (std::size_t k = 0; k < steps; ++k) {
        const double l0 = static_cast<double>(k) * h;
        const double l1 = (k + 1 == steps) ? 1.0 : static_cast<double>(k + 1) * h;
        double stiff = 0.0;
        for (double l : {l0, 0.5 * (l0 + l1), l1}) {
            stiff = std::max(stiff, 2.0 * flow_jacobian(l, ctx).operatorNorm());
        }
        const auto sub = static_cast<std::size_t>(std::max(1.0, std::ceil((l1 - l0) * stiff / kStageBudget)));
        const double dh = (l1 - l0) / static_cast<double>(sub);
        for (std::size_t j = 0; j < sub; ++j) {
            const double t = l0 + static_cast<double>(j) * dh;
            const State k1 = rhs(t, s);
            const State k2 = rhs(t + 0.5 * dh, axpy(s, 0.5 * dh, k1));
            const State k3 = rhs(t + 0.5 * dh, axpy(s, 0.5 * dh, k2));
            const State k4 = rhs(t + dh, axpy(s, dh, k3));
            s.mean += dh / 6.0 * (k1.mean + 2.0 * k2.mean + 2.0 * k3.mean + k4.mean);
            s.cov += dh / 6.0 * (k1.cov + 2.0 * k2.cov + 2.0 * k3.cov + k4.cov);
        }
        s.cov = symmetrized(s.cov);
        out.push_back({s.mean, s.cov});
    }
    return out;
}

}  // namespace pflow
