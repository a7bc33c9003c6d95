#ifndef PFLOW_SCENARIO_BENCH_HPP
#define PFLOW_SCENARIO_BENCH_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pflow/condition.hpp"
#include "pflow/gaussian_model.hpp"
#include "pflow/homotopy_optimizer.hpp"
#include "pflow/homotopy_path.hpp"
#include "pflow/particle_flow.hpp"

namespace pflow {

// Bearings-only localization of a static 2-D target from fixed sensors.
struct Scenario {
    std::vector<Vec> sensors;
    Vec truth;
    Vec prior_mean;
    Mat prior_cov;
    Mat R;  // rad^2
    Vec z;  // rad
    Mat Q;
    double mu = 0.2;
    NormChoice norm = NormChoice::nuclear;
    std::size_t n_particles = 50;
    std::size_t n_mc_runs = 20;
    std::uint64_t seed = 42;

    void validate() const;
};

// Knobs that are not part of the physical scenario.
struct BenchOptions {
    OptimizerConfig optimizer;  // mu and norm are taken from the scenario
    std::size_t flow_steps = 500;
    // Filter with the kappa(F)-guarded optimal schedule.
    bool guard = true;
    // Re-linearize the likelihood at the ensemble mean before every flow step.
    bool relinearize = false;
    std::size_t jobs = 1;

    void validate() const;
};

/**
 * Two sensors at (3.5, 0) and (-3.5, 0), truth (4, 4), prior N((3, 5),
 * diag(1000, 2)), R = diag(0.04, 0.04), z = (0.4754, 1.1868),
 * Q = diag(4, 0.4), mu = 0.2, nuclear norm, 50 particles, 20 runs.
 * `reversed_sensors` lists the sensors in the opposite order, which matches z
 * much better (see README).
 */
Scenario paper_scenario(bool reversed_sensors = false);

// atan2(y - y_s, x - x_s) per sensor. Throws MeasurementError if x sits on a sensor.
Vec bearing_model(const Vec& x, const std::vector<Vec>& sensors);
Mat bearing_jacobian(const Vec& x, const std::vector<Vec>& sensors);
MeasurementModel bearing_measurement(const std::vector<Vec>& sensors);

struct BenchProblem {
    GaussianLogDensity prior;
    // Linearized once at the prior mean.
    GaussianLogDensity lik;
    MeasurementModel model;
};

BenchProblem build_problem(const Scenario& scenario);

OptimizerConfig optimizer_config(const Scenario& scenario, const BenchOptions& options);

struct Homotopies {
    HomotopyPath baseline;
    HomotopyPath optimal;
    // The schedule used for filtering: guarded optimal, or optimal when the guard is off.
    HomotopyPath filtering;
    double j_baseline;
    double j_optimal;
};

Homotopies solve_scenario(const Scenario& scenario, const BenchOptions& options);

struct McRow {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    double mse_baseline = 0.0;
    double mse_optimal = 0.0;
    double trp_baseline = 0.0;
    double trp_optimal = 0.0;
    std::uint64_t tape_hash_baseline = 0;
    std::uint64_t tape_hash_optimal = 0;
};

struct McReport {
    std::vector<McRow> rows;
    std::size_t failed = 0;
    // Arithmetic means over rows that did not fail (NaN if all failed).
    double avg_mse_baseline = 0.0;
    double avg_mse_optimal = 0.0;
    double avg_trp_baseline = 0.0;
    double avg_trp_optimal = 0.0;
    double j_baseline = 0.0;
    double j_optimal = 0.0;
};

/**
 * Monte Carlo comparison with common random numbers: run i draws particles
 * and a noise tape from derive_seed(scenario.seed, i) and integrates the same
 * ensemble under beta = lambda and under the optimal schedule. The estimate is
 * the ensemble mean at lambda = 1, MSE its squared distance to the truth and
 * trP the trace of the ensemble sample covariance. A flow failure marks the
 * run failed without aborting the others.
 */
McReport run_mc(const Scenario& scenario, const BenchOptions& options);
McReport run_mc(const Scenario& scenario, const BenchOptions& options, const Homotopies& homotopies);

struct Figure2Row {
    double lambda;
    double beta;
    double beta_minus_lambda;
    double beta_dot;
    double kappa_baseline;
    double kappa_optimal;
    StiffnessRatio rstiff_baseline;
    StiffnessRatio rstiff_optimal;
};

// Node-by-node comparison of the (unguarded) optimal schedule with the line.
std::vector<Figure2Row> figure2_traces(const Scenario& scenario, const Homotopies& homotopies);

}  // namespace pflow

#endif  // PFLOW_SCENARIO_BENCH_HPP
