#include "pflow/random_instance.hpp"

#include <cmath>
#include <numbers>

namespace pflow {

double Rng::normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec Rng::normal_vector(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
}

Mat Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    }
    return m;
}

Mat Rng::orthogonal(Eigen::Index n) {
    Eigen::HouseholderQR<Mat> qr(normal_matrix(n, n));
    return qr.householderQ() * Mat::Identity(n, n);
}

Mat Rng::spd(Eigen::Index n, double lo, double hi) {
    const Mat O = orthogonal(n);
    Vec eigs(n);
    for (Eigen::Index i = 0; i < n; ++i) eigs(i) = uniform(lo, hi);
    return symmetrized(O * eigs.asDiagonal() * O.transpose());
}

GaussianInstance random_instance(Rng& rng, Eigen::Index n, DiffusionKind q_kind, std::size_t intervals,
                                 bool straight) {
    const Mat P = rng.spd(n, 0.5, 3.0);
    const Vec m = rng.normal_vector(n);
    const GaussianLogDensity prior = GaussianLogDensity::from_moments(m, P);

    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    const Mat H = rng.normal_matrix(d, n);
    Vec r(d);
    for (Eigen::Index i = 0; i < d; ++i) r(i) = rng.uniform(0.2, 1.0);
    const Vec z = rng.normal_vector(d);
    const Mat Rinv = r.cwiseInverse().asDiagonal();
    const GaussianLogDensity lik(symmetrized(-H.transpose() * Rinv * H), H.transpose() * Rinv * z, 0.0,
                                 DensityRole::likelihood);

    Mat Q = Mat::Zero(n, n);
    if (q_kind == DiffusionKind::definite) {
        Q = rng.spd(n, 0.1, 1.0);
    } else if (q_kind == DiffusionKind::singular) {
        const Vec v = rng.normal_vector(n);
        Q = v * v.transpose() / std::max(1.0, v.squaredNorm());
    }

    const std::vector<double> grid = HomotopyPath::uniform_grid(intervals);
    const double a = straight ? 0.0 : rng.uniform(-0.3, 0.3);
    std::vector<double> betas(grid.size()), dots(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double l = grid[i];
        betas[i] = l + a * std::sin(std::numbers::pi * l);
        dots[i] = 1.0 + a * std::numbers::pi * std::cos(std::numbers::pi * l);
    }
    betas.front() = 0.0;
    betas.back() = 1.0;
    return {prior, lik, Q, HomotopyPath(grid, std::move(betas), std::move(dots))};
}

}  // namespace pflow
