#include "pflow/homotopy_path.hpp"

#include <algorithm>
#include <cmath>

#include "pflow/errors.hpp"

namespace pflow {

HomotopyPath::HomotopyPath(std::vector<double> lambdas, std::vector<double> betas, std::vector<double> beta_dots)
    : lambdas_(std::move(lambdas)), betas_(std::move(betas)), beta_dots_(std::move(beta_dots)) {
    if (lambdas_.size() < 2 || betas_.size() != lambdas_.size() || beta_dots_.size() != lambdas_.size()) {
        throw ContractViolation("HomotopyPath: need >= 2 nodes and equal-length lambda/beta/beta_dot");
    }
    if (lambdas_.front() != 0.0 || lambdas_.back() != 1.0) {
        throw ContractViolation("HomotopyPath: grid must start at 0 and end at 1");
    }
    for (std::size_t i = 1; i < lambdas_.size(); ++i) {
        if (!(lambdas_[i] > lambdas_[i - 1])) throw ContractViolation("HomotopyPath: grid not strictly increasing");
    }
    if (betas_.front() != 0.0 || betas_.back() != 1.0) {
        throw ContractViolation("HomotopyPath: boundary values must be beta(0) = 0, beta(1) = 1");
    }
    for (std::size_t i = 0; i < betas_.size(); ++i) {
        if (!std::isfinite(betas_[i]) || !std::isfinite(beta_dots_[i])) {
            throw ContractViolation("HomotopyPath: non-finite node value");
        }
    }
}

std::vector<double> HomotopyPath::uniform_grid(std::size_t intervals) {
    if (intervals < 1) throw ContractViolation("uniform_grid: need at least one interval");
    std::vector<double> grid(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) {
        grid[i] = static_cast<double>(i) / static_cast<double>(intervals);
    }
    grid.back() = 1.0;
    return grid;
}

HomotopyPath HomotopyPath::linear(std::size_t intervals) {
    auto grid = uniform_grid(intervals);
    std::vector<double> betas = grid;
    std::vector<double> dots(grid.size(), 1.0);
    return HomotopyPath(std::move(grid), std::move(betas), std::move(dots));
}

PathSample HomotopyPath::at(double lambda) const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractViolation("HomotopyPath::at: lambda outside [0, 1]");
    auto it = std::upper_bound(lambdas_.begin(), lambdas_.end(), lambda);
    std::size_t i = static_cast<std::size_t>(std::distance(lambdas_.begin(), it));
    i = std::clamp<std::size_t>(i, 1, lambdas_.size() - 1) - 1;

    const double h = lambdas_[i + 1] - lambdas_[i];
    const double t = (lambda - lambdas_[i]) / h;
    const double y0 = betas_[i], y1 = betas_[i + 1];
    const double m0 = beta_dots_[i] * h, m1 = beta_dots_[i + 1] * h;

    const double t2 = t * t, t3 = t2 * t;
    const double beta = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
    const double dbeta_dt =
        (6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * y1 + (3 * t2 - 2 * t) * m1;
    return {beta, dbeta_dt / h};
}

bool HomotopyPath::same_grid(const HomotopyPath& other) const { return lambdas_ == other.lambdas_; }

}  // namespace pflow
