#ifndef PFLOW_LINALG_HPP
#define PFLOW_LINALG_HPP

#include <Eigen/Dense>

namespace pflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline bool is_square(const Mat& A) { return A.rows() == A.cols(); }

// ||A - A^T|| <= rel_tol * ||A||  (Frobenius).
inline bool is_symmetric(const Mat& A, double rel_tol = 1e-12) {
    if (!is_square(A)) return false;
    const double scale = A.norm();
    return (A - A.transpose()).norm() <= rel_tol * (scale > 0.0 ? scale : 1.0);
}

inline Mat symmetrized(const Mat& A) { return 0.5 * (A + A.transpose()); }

// Cholesky succeeds.
inline bool is_spd(const Mat& A) {
    if (!is_square(A) || A.size() == 0) return false;
    Eigen::LLT<Mat> llt(symmetrized(A));
    return llt.info() == Eigen::Success;
}

// Smallest eigenvalue >= -rel_tol * ||A||.
inline bool is_psd(const Mat& A, double rel_tol = 1e-12) {
    if (!is_square(A)) return false;
    if (A.size() == 0) return true;
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(A), Eigen::EigenvaluesOnly);
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    return es.eigenvalues().minCoeff() >= -rel_tol * scale;
}

inline double min_eigenvalue(const Mat& A) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(A), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// Symmetric square root via eigendecomposition; negative round-off
// eigenvalues are clipped so singular PSD inputs are fine.
inline Mat psd_sqrt(const Mat& A) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(A));
    const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace pflow

#endif  // PFLOW_LINALG_HPP
