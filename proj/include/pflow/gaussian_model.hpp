#ifndef PFLOW_GAUSSIAN_MODEL_HPP
#define PFLOW_GAUSSIAN_MODEL_HPP

#include <functional>
#include <vector>

#include "pflow/linalg.hpp"

namespace pflow {

enum class DensityRole { prior, likelihood };

/**
 * Quadratic log-density  log q(x) = 1/2 x^T A x + b^T x + c.
 *
 * A prior must have A negative definite; a likelihood only negative
 * semi-definite (a rank-deficient measurement is fine). Both are checked
 * on construction, together with symmetry of A. Immutable afterwards.
 */
class GaussianLogDensity {
public:
    GaussianLogDensity(Mat A, Vec b, double c, DensityRole role);

    // Prior from mean/covariance: A = -P^{-1}, b = P^{-1} m, c normalizes.
    static GaussianLogDensity from_moments(const Vec& mean, const Mat& cov);

    const Mat& hessian() const noexcept { return A_; }
    const Vec& linear() const noexcept { return b_; }
    double offset() const noexcept { return c_; }
    DensityRole role() const noexcept { return role_; }
    Eigen::Index dim() const noexcept { return b_.size(); }

private:
    Mat A_;
    Vec b_;
    double c_;
    DensityRole role_;
};

struct MomentPair {
    Vec mean;
    Mat cov;
};

double eval_log_density(const GaussianLogDensity& q, const Vec& x);
Vec grad_log_density(const GaussianLogDensity& q, const Vec& x);

// log p1 = log p0 + log h, as a (prior-role) quadratic.
GaussianLogDensity combine(const GaussianLogDensity& prior, const GaussianLogDensity& lik);

struct MeasurementModel {
    std::function<Vec(const Vec&)> h;
    // Optional analytic Jacobian; central differences are used when empty.
    std::function<Mat(const Vec&)> jacobian;
    // Residual components flagged here are wrapped to (-pi, pi].
    std::vector<bool> angular;
};

Mat numeric_jacobian(const std::function<Vec(const Vec&)>& h, const Vec& x, double step = 1e-6);

/**
 * Quadratic approximation of log h(x) = -1/2 (z - h(x))^T R^{-1} (z - h(x))
 * about x_lin: Ah = -H^T R^{-1} H and bh = H^T R^{-1} (z - h(x_lin) + H x_lin),
 * with H the Jacobian at x_lin. Ah is negative semi-definite by construction.
 * The constant term is left at zero.
 */
GaussianLogDensity linearize_likelihood(const MeasurementModel& model, const Vec& z, const Mat& R,
                                        const Vec& x_lin);

// Mean and covariance of p(x, beta) ∝ p0(x) h(x)^beta; throws
// AssumptionViolation when A0 + beta*Ah is not negative definite.
MomentPair posterior_moments(const GaussianLogDensity& prior, const GaussianLogDensity& lik, double beta);

}  // namespace pflow

#endif  // PFLOW_GAUSSIAN_MODEL_HPP
