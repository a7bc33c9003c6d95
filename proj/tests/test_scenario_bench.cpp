#include <gtest/gtest.h>

#include <cmath>

#include "pflow/errors.hpp"
#include "pflow/scenario_bench.hpp"

using namespace pflow;

namespace {

Vec vec2(double a, double b) { return (Vec(2) << a, b).finished(); }

Scenario small_scenario() {
    Scenario s = paper_scenario();
    s.n_mc_runs = 3;
    s.n_particles = 20;
    return s;
}

BenchOptions quick_options() {
    BenchOptions o;
    o.flow_steps = 100;
    return o;
}

}  // namespace

TEST(BearingModel, HandValues) {
    const Vec b = bearing_model(vec2(4, 4), {vec2(3.5, 0), vec2(-3.5, 0)});
    EXPECT_NEAR(b(0), std::atan(8.0), 1e-14);
    EXPECT_NEAR(b(0), 1.44644, 5e-6);
    EXPECT_NEAR(b(1), std::atan(8.0 / 15.0), 1e-14);
    EXPECT_NEAR(b(1), 0.4899573, 5e-8);
    EXPECT_EQ(bearing_model(vec2(5, 1), {vec2(2, 1)})(0), 0.0);
}

TEST(BearingModel, CoincidentSensorThrows) {
    EXPECT_THROW(bearing_model(vec2(3.5, 0), {vec2(3.5, 0)}), MeasurementError);
    EXPECT_THROW(bearing_jacobian(vec2(3.5, 0), {vec2(3.5, 0)}), MeasurementError);
}

TEST(BearingModel, JacobianMatchesFiniteDifferences) {
    const std::vector<Vec> sensors = {vec2(3.5, 0), vec2(-3.5, 0)};
    const Mat H = bearing_jacobian(vec2(3, 5), sensors);
    const Mat fd = numeric_jacobian([&](const Vec& x) { return bearing_model(x, sensors); }, vec2(3, 5));
    EXPECT_LT((H - fd).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(PaperScenario, Constants) {
    const Scenario s = paper_scenario();
    EXPECT_DOUBLE_EQ(s.prior_cov.trace(), 1002.0);
    EXPECT_EQ(s.z, vec2(0.4754, 1.1868));
    EXPECT_EQ(s.mu, 0.2);
    EXPECT_EQ(s.Q(0, 0), 4.0);
    EXPECT_EQ(s.Q(1, 1), 0.4);
    EXPECT_EQ(s.Q(0, 1), 0.0);
    EXPECT_EQ(s.R, Mat(vec2(0.04, 0.04).asDiagonal()));
    EXPECT_EQ(s.sensors[0], vec2(3.5, 0));
    EXPECT_EQ(s.n_particles, 50u);
    EXPECT_EQ(s.n_mc_runs, 20u);
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(paper_scenario(true).sensors[0], vec2(-3.5, 0));
}

TEST(PaperScenario, ReversedOrderFitsMeasurementsBetter) {
    const Scenario s = paper_scenario();
    const Vec listed = bearing_model(s.truth, s.sensors) - s.z;
    const Vec reversed = bearing_model(s.truth, paper_scenario(true).sensors) - s.z;
    EXPECT_LT(reversed.norm(), 0.25 * listed.norm());
}

TEST(Scenario, ValidationRejectsBadInput) {
    Scenario s = paper_scenario();
    s.prior_cov(0, 0) = -1.0;
    EXPECT_THROW(s.validate(), ContractViolation);
    s = paper_scenario();
    s.truth = s.sensors[1];
    EXPECT_THROW(s.validate(), ContractViolation);
    s = paper_scenario();
    s.z = Vec::Zero(3);
    EXPECT_THROW(s.validate(), ContractViolation);
}

TEST(SolveScenario, OptimalNoWorseThanLine) {
    BenchOptions o;
    o.guard = false;
    const Homotopies hs = solve_scenario(paper_scenario(), o);
    EXPECT_LE(hs.j_optimal, hs.j_baseline);
    EXPECT_EQ(hs.optimal.betas(), hs.filtering.betas());
}

TEST(Figure2, BoundaryRowsAndZeroWeight) {
    Scenario s = paper_scenario();
    BenchOptions o;
    const std::vector<Figure2Row> rows = figure2_traces(s, solve_scenario(s, o));
    EXPECT_EQ(rows.front().lambda, 0.0);
    EXPECT_EQ(rows.front().beta, 0.0);
    EXPECT_EQ(rows.back().lambda, 1.0);
    EXPECT_EQ(rows.back().beta, 1.0);

    s.mu = 0.0;
    for (const Figure2Row& r : figure2_traces(s, solve_scenario(s, o))) EXPECT_NEAR(r.beta_minus_lambda, 0.0, 1e-8);
}

TEST(Figure2, MeanStiffnessNoWorseThanLine) {
    const Scenario s = paper_scenario();
    const std::vector<Figure2Row> rows = figure2_traces(s, solve_scenario(s, BenchOptions{}));
    double base = 0.0;
    double opt = 0.0;
    for (const Figure2Row& r : rows) {
        ASSERT_EQ(r.rstiff_baseline.status, StiffnessRatio::Status::defined);
        ASSERT_EQ(r.rstiff_optimal.status, StiffnessRatio::Status::defined);
        base += r.rstiff_baseline.value;
        opt += r.rstiff_optimal.value;
    }
    EXPECT_LE(opt / static_cast<double>(rows.size()), base / static_cast<double>(rows.size()));
}

TEST(RunMc, DeterministicWithCommonRandomNumbers) {
    const Scenario s = small_scenario();
    BenchOptions o = quick_options();
    const McReport a = run_mc(s, o);
    o.jobs = 2;
    const McReport b = run_mc(s, o);
    ASSERT_EQ(a.rows.size(), 3u);
    EXPECT_EQ(a.failed, 0u);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].mse_baseline, b.rows[i].mse_baseline);
        EXPECT_EQ(a.rows[i].mse_optimal, b.rows[i].mse_optimal);
        EXPECT_EQ(a.rows[i].trp_optimal, b.rows[i].trp_optimal);
        EXPECT_EQ(a.rows[i].tape_hash_baseline, a.rows[i].tape_hash_optimal);
        if (i > 0) EXPECT_NE(a.rows[i].tape_hash_baseline, a.rows[i - 1].tape_hash_baseline);
    }
}

TEST(RunMc, AveragesAreRowMeans) {
    const McReport r = run_mc(small_scenario(), quick_options());
    double mb = 0.0;
    double mo = 0.0;
    double tb = 0.0;
    double to = 0.0;
    for (const McRow& row : r.rows) {
        mb += row.mse_baseline;
        mo += row.mse_optimal;
        tb += row.trp_baseline;
        to += row.trp_optimal;
    }
    const double n = static_cast<double>(r.rows.size());
    EXPECT_NEAR(r.avg_mse_baseline, mb / n, 1e-12 * mb);
    EXPECT_NEAR(r.avg_mse_optimal, mo / n, 1e-12 * mo);
    EXPECT_NEAR(r.avg_trp_baseline, tb / n, 1e-12 * tb);
    EXPECT_NEAR(r.avg_trp_optimal, to / n, 1e-12 * to);
}

TEST(RunMc, ZeroWeightArmsCoincide) {
    Scenario s = small_scenario();
    s.mu = 0.0;
    const McReport r = run_mc(s, quick_options());
    for (const McRow& row : r.rows) {
        EXPECT_NEAR(row.mse_optimal, row.mse_baseline, 1e-6 * row.mse_baseline);
        EXPECT_NEAR(row.trp_optimal, row.trp_baseline, 1e-6 * row.trp_baseline);
    }
}

TEST(RunMc, SingleRun) {
    Scenario s = small_scenario();
    s.n_mc_runs = 1;
    const McReport r = run_mc(s, quick_options());
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.avg_mse_baseline, r.rows[0].mse_baseline);
    EXPECT_EQ(r.avg_trp_optimal, r.rows[0].trp_optimal);
}
