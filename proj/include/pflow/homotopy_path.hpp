#ifndef PFLOW_HOMOTOPY_PATH_HPP
#define PFLOW_HOMOTOPY_PATH_HPP

#include <cstddef>
#include <vector>

namespace pflow {

struct PathSample {
    double beta;
    double beta_dot;
};

/**
 * Sampled schedule lambda -> (beta, beta_dot) on [0, 1].
 *
 * Grid is strictly increasing with lambda_0 = 0 and lambda_K = 1, and the
 * endpoints are pinned to beta = 0 and beta = 1 exactly. Between nodes beta is
 * the cubic Hermite interpolant of (beta, beta_dot) and beta_dot is its
 * derivative, so queries are C^1 in lambda and mutually consistent.
 * The weight on the prior is alpha = 1 - beta throughout.
 */
class HomotopyPath {
public:
    HomotopyPath(std::vector<double> lambdas, std::vector<double> betas, std::vector<double> beta_dots);

    // Straight line beta = lambda on `intervals` uniform intervals.
    static HomotopyPath linear(std::size_t intervals);

    static std::vector<double> uniform_grid(std::size_t intervals);

    PathSample at(double lambda) const;

    std::size_t size() const noexcept { return lambdas_.size(); }
    const std::vector<double>& lambdas() const noexcept { return lambdas_; }
    const std::vector<double>& betas() const noexcept { return betas_; }
    const std::vector<double>& beta_dots() const noexcept { return beta_dots_; }

    bool same_grid(const HomotopyPath& other) const;

private:
    std::vector<double> lambdas_;
    std::vector<double> betas_;
    std::vector<double> beta_dots_;
};

}  // namespace pflow

#endif  // PFLOW_HOMOTOPY_PATH_HPP
