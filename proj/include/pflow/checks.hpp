#ifndef PFLOW_CHECKS_HPP
#define PFLOW_CHECKS_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pflow/condition.hpp"
#include "pflow/scenario_bench.hpp"

namespace pflow {

struct CheckResult {
    std::string name;
    bool passed = false;
    // Worst observed value of the checked quantity and the limit it is held to.
    double worst = 0.0;
    double limit = 0.0;
    std::string detail;
};

struct CheckOptions {
    std::uint64_t seed = 7;
    std::size_t instances = 20;
    // Adds 0.1 * x_0 to the first drift component in the cond1 check.
    bool inject_perturbation = false;
};

// max over instances x points of cond1_residual for the flow drift.
CheckResult check_cond1(const CheckOptions& opt, std::size_t points, double tol);
// Same with a perturbed drift; passes when the smallest residual exceeds `floor`.
CheckResult check_cond1_probe(const CheckOptions& opt, std::size_t points, double floor);
// flow_jacobian vs central differences of drift, relative.
CheckResult check_flow_jacobian(const CheckOptions& opt, double tol);
// moment_ode_oracle vs posterior_moments along the path, error / max(1, |ref|).
CheckResult check_moment_oracle(const CheckOptions& opt, std::size_t steps, double tol);
CheckResult check_moment_oracle_scenario(const Scenario& scenario, std::size_t steps, double tol);
// Lyapunov checks on random instances: V non-increasing (Q PSD), finite-difference
// dV/dl vs -x~^T MQM x~, exponential bound (Q SPD), boundedness (Q singular).
CheckResult check_lyapunov_monotone(const CheckOptions& opt, std::size_t steps);
CheckResult check_lyapunov_derivative(const CheckOptions& opt, std::size_t steps, double tol);
CheckResult check_exponential_bound(const CheckOptions& opt, std::size_t steps);
CheckResult check_bounded_singular(const CheckOptions& opt, std::size_t steps);
CheckResult check_condition_sweep(std::uint64_t seed, std::size_t trials);
// Analytic kappa_gradient vs central differences of condition_number.
CheckResult check_kappa_gradient(std::uint64_t seed, std::size_t count, NormChoice norm, double tol);
// Spectral-norm optimal schedules on instances meeting the non-negativity hypotheses.
CheckResult check_nonnegative_schedules(const CheckOptions& opt);
// kappa(F) dominance of the guarded schedule and J(optimal) <= J(line).
CheckResult check_guard_dominance(const CheckOptions& opt, double mu, NormChoice norm);
CheckResult check_guard_dominance_scenario(const Scenario& scenario, const BenchOptions& options);
CheckResult check_optimality(const CheckOptions& opt, double mu, NormChoice norm);

std::vector<CheckResult> run_verify_suite(const CheckOptions& opt);

}  // namespace pflow

#endif  // PFLOW_CHECKS_HPP
