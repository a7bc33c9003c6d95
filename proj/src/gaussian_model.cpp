#include "pflow/gaussian_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "pflow/errors.hpp"

namespace pflow {

double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(a, two_pi);
    if (r <= -std::numbers::pi) r += two_pi;
    if (r > std::numbers::pi) r -= two_pi;
    return r;
}

GaussianLogDensity::GaussianLogDensity(Mat A, Vec b, double c, DensityRole role)
    : A_(std::move(A)), b_(std::move(b)), c_(c), role_(role) {
    if (!is_square(A_) || A_.rows() != b_.size() || b_.size() == 0) {
        throw ContractViolation("GaussianLogDensity: A must be n x n and b length n (n >= 1)");
    }
    if (!A_.allFinite() || !b_.allFinite() || !std::isfinite(c_)) {
        throw ContractViolation("GaussianLogDensity: non-finite coefficients");
    }
    if (!is_symmetric(A_)) {
        throw ContractViolation("GaussianLogDensity: A is not symmetric");
    }
    A_ = symmetrized(A_);
    if (role_ == DensityRole::prior) {
        if (!is_spd(-A_)) throw ContractViolation("GaussianLogDensity: prior Hessian is not negative definite");
    } else if (!is_psd(-A_, 1e-10)) {
        throw ContractViolation("GaussianLogDensity: likelihood Hessian is not negative semi-definite");
    }
}

GaussianLogDensity GaussianLogDensity::from_moments(const Vec& mean, const Mat& cov) {
    if (!is_square(cov) || cov.rows() != mean.size()) {
        throw ContractViolation("from_moments: dimension mismatch");
    }
    Eigen::LLT<Mat> llt(symmetrized(cov));
    if (llt.info() != Eigen::Success) throw ContractViolation("from_moments: covariance is not SPD");
    const Mat info = llt.solve(Mat::Identity(mean.size(), mean.size()));
    const Vec eta = info * mean;
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double n = static_cast<double>(mean.size());
    const double c = -0.5 * mean.dot(eta) - 0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det);
    return GaussianLogDensity(-symmetrized(info), eta, c, DensityRole::prior);
}

namespace {

void require_dim(const GaussianLogDensity& q, const Vec& x, const char* who) {
    if (x.size() != q.dim()) {
        std::ostringstream os;
        os << who << ": x has length " << x.size() << ", density has dimension " << q.dim();
        throw ContractViolation(os.str());
    }
}

}  // namespace

double eval_log_density(const GaussianLogDensity& q, const Vec& x) {
    require_dim(q, x, "eval_log_density");
    return 0.5 * x.dot(q.hessian() * x) + q.linear().dot(x) + q.offset();
}

Vec grad_log_density(const GaussianLogDensity& q, const Vec& x) {
    require_dim(q, x, "grad_log_density");
    return q.hessian() * x + q.linear();
}

GaussianLogDensity combine(const GaussianLogDensity& prior, const GaussianLogDensity& lik) {
    if (prior.dim() != lik.dim()) throw ContractViolation("combine: dimension mismatch");
    return GaussianLogDensity(prior.hessian() + lik.hessian(), prior.linear() + lik.linear(),
                              prior.offset() + lik.offset(), DensityRole::prior);
}

Mat numeric_jacobian(const std::function<Vec(const Vec&)>& h, const Vec& x, double step) {
    const Vec h0 = h(x);
    Mat J(h0.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double dx = step * std::max(1.0, std::abs(x(j)));
        Vec xp = x, xm = x;
        xp(j) += dx;
        xm(j) -= dx;
        J.col(j) = (h(xp) - h(xm)) / (2.0 * dx);
    }
    return J;
}

GaussianLogDensity linearize_likelihood(const MeasurementModel& model, const Vec& z, const Mat& R,
                                        const Vec& x_lin) {
    if (!model.h) throw ContractViolation("linearize_likelihood: measurement function missing");
    if (!is_square(R) || R.rows() != z.size()) {
        throw ContractViolation("linearize_likelihood: R must be d x d with d = len(z)");
    }
    if (!is_symmetric(R, 1e-12)) throw ContractViolation("linearize_likelihood: R is not symmetric");
    Eigen::LLT<Mat> llt(symmetrized(R));
    if (llt.info() != Eigen::Success) throw ContractViolation("linearize_likelihood: R is not SPD");

    const Vec hx = model.h(x_lin);
    const Mat H = model.jacobian ? model.jacobian(x_lin) : numeric_jacobian(model.h, x_lin);
    if (hx.size() != z.size() || H.rows() != z.size() || H.cols() != x_lin.size()) {
        throw ContractViolation("linearize_likelihood: measurement/Jacobian dimensions disagree with z, x_lin");
    }
    if (!hx.allFinite() || !H.allFinite()) {
        throw MeasurementError("linearize_likelihood: measurement model not finite at linearization point");
    }

    Vec residual = z - hx;
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
        if (static_cast<std::size_t>(i) < model.angular.size() && model.angular[static_cast<std::size_t>(i)]) {
            residual(i) = wrap_angle(residual(i));
        }
    }
    const Mat RinvH = llt.solve(H);
    const Mat Ah = -(H.transpose() * RinvH);
    const Vec bh = RinvH.transpose() * (residual + H * x_lin);
    return GaussianLogDensity(symmetrized(Ah), bh, 0.0, DensityRole::likelihood);
}

MomentPair posterior_moments(const GaussianLogDensity& prior, const GaussianLogDensity& lik, double beta) {
    if (prior.dim() != lik.dim()) throw ContractViolation("posterior_moments: dimension mismatch");
    const Mat S = prior.hessian() + beta * lik.hessian();
    Eigen::LLT<Mat> llt(-S);
    if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << "posterior_moments: A0 + beta*Ah is not negative definite at beta = " << beta;
        throw AssumptionViolation(os.str(), beta);
    }
    const Eigen::Index n = prior.dim();
    MomentPair out;
    out.cov = symmetrized(llt.solve(Mat::Identity(n, n)));
    out.mean = llt.solve(prior.linear() + beta * lik.linear());
    return out;
}

}  // namespace pflow
