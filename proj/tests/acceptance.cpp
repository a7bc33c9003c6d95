#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pflow/checks.hpp"
#include "pflow/homotopy_optimizer.hpp"
#include "pflow/noise_tape.hpp"
#include "pflow/particle_flow.hpp"
#include "pflow/random_instance.hpp"
#include "pflow/scenario_bench.hpp"
#include "pflow/stability_diagnostics.hpp"

using namespace pflow;
namespace fs = std::filesystem;

namespace {

// Criterion 1
constexpr double kLineTol = 1e-6;
constexpr double kLineSeconds = 1.0;
// Criterion 2
constexpr double kJBaseLo = 3.8, kJBaseHi = 4.2;
constexpr double kJOptLo = 3.2, kJOptHi = 3.6;
constexpr double kObjectiveSeconds = 10.0;
// Criterion 3
constexpr std::size_t kOracleInstances = 20;
constexpr std::size_t kOracleSteps = 1000;
constexpr double kOracleTol = 1e-6;
constexpr std::size_t kEnsembleParticles = 100000;
constexpr std::size_t kEnsembleSteps = 1000;
constexpr double kStandardErrors = 4.0;
constexpr double kMomentSeconds = 120.0;
// Criterion 4
constexpr std::size_t kCond1Instances = 20;
constexpr std::size_t kCond1Points = 100;
constexpr double kCond1Tol = 1e-8;
constexpr double kProbeFloor = 1e-3;
constexpr double kCond1Seconds = 30.0;
// Criterion 5
constexpr std::size_t kLyapInstances = 20;
constexpr std::size_t kLyapSteps = 400;
constexpr double kLyapSeconds = 30.0;
// Criterion 6
constexpr std::size_t kSweepPairs = 1000;
constexpr double kSweepSeconds = 30.0;
// Criterion 7
constexpr std::size_t kGradientInstances = 500;
constexpr double kGradientTol = 1e-5;
constexpr double kGradientSeconds = 30.0;
// Criterion 8
constexpr double kMseRatioLo = 0.5, kMseRatioHi = 0.95;
constexpr double kMcSeconds = 300.0;
// Criterion 9
constexpr std::size_t kGuardInstances = 10;
constexpr double kGuardSeconds = 30.0;

constexpr std::uint64_t kSeed = 20240901;

struct Outcome {
    bool passed;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

bool run_criterion(int id, const std::string& title, double budget, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = seconds_since(t0);
    const bool in_time = budget <= 0.0 || dt <= budget;
    const bool ok = o.passed && in_time;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << " (" << title << "): " << o.detail << "; "
              << fmt(dt) << " s";
    if (budget > 0.0) std::cout << " (limit " << fmt(budget) << " s)";
    std::cout << std::endl;
    return ok;
}

double max_abs_moment_error(const FlowContext& ctx, std::size_t steps) {
    const std::vector<MomentPair> ode = moment_ode_oracle(ctx, steps);
    double worst = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double l = static_cast<double>(k) / static_cast<double>(steps);
        const MomentPair ref = posterior_moments(ctx.prior(), ctx.lik(), ctx.path().at(l).beta);
        worst = std::max(worst, (ode[k].mean - ref.mean).cwiseAbs().maxCoeff());
        worst = std::max(worst, (ode[k].cov - ref.cov).cwiseAbs().maxCoeff());
    }
    return worst;
}

// Largest |ensemble - closed form| in units of its sampling standard error.
double ensemble_z_score(const Scenario& sc, const FlowContext& ctx, std::uint64_t seed) {
    const ParticleEnsemble start =
        sample_ensemble({sc.prior_mean, sc.prior_cov}, kEnsembleParticles, kEnsembleSteps, 2, seed);
    const ParticleEnsemble end = integrate_ensemble(start, ctx, kEnsembleSteps);
    const MomentPair ref = posterior_moments(ctx.prior(), ctx.lik(), 1.0);
    const Vec m = end.mean();
    const Mat P = end.sample_covariance();
    const double n = static_cast<double>(kEnsembleParticles);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < 2; ++i) {
        worst = std::max(worst, std::abs(m(i) - ref.mean(i)) / std::sqrt(ref.cov(i, i) / n));
        for (Eigen::Index j = i; j < 2; ++j) {
            const double se = std::sqrt((ref.cov(i, i) * ref.cov(j, j) + ref.cov(i, j) * ref.cov(i, j)) / n);
            worst = std::max(worst, std::abs(P(i, j) - ref.cov(i, j)) / se);
        }
    }
    return worst;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PFLOW_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

int main() {
    const Scenario paper = paper_scenario();
    const BenchProblem problem = build_problem(paper);
    BenchOptions unguarded;
    unguarded.guard = false;
    int failures = 0;
    auto tally = [&failures](bool ok) { failures += ok ? 0 : 1; };

    tally(run_criterion(1, "zero weight gives the straight line", kLineSeconds, [&] {
        OptimizerConfig cfg = optimizer_config(paper, unguarded);
        cfg.mu = 0.0;
        const HomotopyPath p = solve_optimal_homotopy(problem.prior, problem.lik, cfg);
        double worst = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(p.betas()[i] - p.lambdas()[i]));
        return Outcome{worst <= kLineTol, "max |beta - lambda| = " + fmt(worst) + " (tol " + fmt(kLineTol) + ")"};
    }));

    tally(run_criterion(2, "objective values on the preset", kObjectiveSeconds, [&] {
        const Homotopies hs = solve_scenario(paper, unguarded);
        const bool base_ok = hs.j_baseline >= kJBaseLo && hs.j_baseline <= kJBaseHi;
        const bool opt_ok = hs.j_optimal >= kJOptLo && hs.j_optimal <= kJOptHi;
        const bool order_ok = hs.j_optimal <= hs.j_baseline;
        return Outcome{base_ok && opt_ok && order_ok,
                       "J_baseline = " + fmt(hs.j_baseline) + " (want [" + fmt(kJBaseLo) + ", " + fmt(kJBaseHi) +
                           "]), J_optimal = " + fmt(hs.j_optimal) + " (want [" + fmt(kJOptLo) + ", " +
                           fmt(kJOptHi) + "]), J_optimal <= J_baseline: " + (order_ok ? "yes" : "no")};
    }));

    tally(run_criterion(3, "moment ODE and ensemble vs closed-form moments", kMomentSeconds, [&] {
        Rng rng(derive_seed(kSeed, 3));
        double worst_random = 0.0;
        for (std::size_t i = 0; i < kOracleInstances; ++i) {
            const auto kind = static_cast<DiffusionKind>(rng.index(3));
            const GaussianInstance g = random_instance(rng, 1 + static_cast<Eigen::Index>(rng.index(4)), kind);
            worst_random = std::max(worst_random, max_abs_moment_error(FlowContext(g.prior, g.lik, g.Q, g.path),
                                                                       kOracleSteps));
        }
        const Homotopies hs = solve_scenario(paper, BenchOptions{});
        const FlowContext base(problem.prior, problem.lik, paper.Q, hs.baseline);
        const FlowContext opt = base.with_path(hs.filtering);
        const double worst_paper =
            std::max(max_abs_moment_error(base, kOracleSteps), max_abs_moment_error(opt, kOracleSteps));
        const double z_base = ensemble_z_score(paper, base, derive_seed(kSeed, 31));
        const double z_opt = ensemble_z_score(paper, opt, derive_seed(kSeed, 32));
        const bool ok = worst_random <= kOracleTol && worst_paper <= kOracleTol && z_base <= kStandardErrors &&
                        z_opt <= kStandardErrors;
        return Outcome{ok, "max abs moment error: random " + fmt(worst_random) + ", preset " + fmt(worst_paper) +
                               " (tol " + fmt(kOracleTol) + "); ensemble worst |error|/SE: line " + fmt(z_base) +
                               ", optimal " + fmt(z_opt) + " (tol " + fmt(kStandardErrors) + ")"};
    }));

    tally(run_criterion(4, "density-consistency residual", kCond1Seconds, [&] {
        CheckOptions opt;
        opt.seed = kSeed;
        opt.instances = kCond1Instances;
        const CheckResult r = check_cond1(opt, kCond1Points, kCond1Tol);
        const CheckResult p = check_cond1_probe(opt, kCond1Points, kProbeFloor);
        return Outcome{r.passed && p.passed, "max residual " + fmt(r.worst) + " (tol " + fmt(kCond1Tol) +
                                                 "), smallest perturbed residual " + fmt(p.worst) + " (must exceed " +
                                                 fmt(kProbeFloor) + ")"};
    }));

    tally(run_criterion(5, "Lyapunov bounds", kLyapSeconds, [&] {
        CheckOptions opt;
        opt.seed = kSeed;
        opt.instances = kLyapInstances;
        const CheckResult e = check_exponential_bound(opt, kLyapSteps);
        const CheckResult b = check_bounded_singular(opt, kLyapSteps);
        return Outcome{e.passed && b.passed, "exponential: " + e.detail + ", worst excess " + fmt(e.worst) +
                                                 "; singular Q: " + b.detail + ", worst excess " + fmt(b.worst)};
    }));

    tally(run_criterion(6, "spectral condition-number monotonicity sweep", kSweepSeconds, [&] {
        const ConditionSweepReport r = condition_inequality_sweep(kSweepPairs, kSeed);
        return Outcome{r.trials == kSweepPairs && r.violations == 0,
                       std::to_string(r.trials) + " pairs, " + std::to_string(r.violations) +
                           " violations, max relative excess " + fmt(r.max_rel_excess)};
    }));

    tally(run_criterion(7, "kappa gradient vs finite differences", kGradientSeconds, [&] {
        const CheckResult n = check_kappa_gradient(kSeed, kGradientInstances, NormChoice::nuclear, kGradientTol);
        const CheckResult s = check_kappa_gradient(kSeed, kGradientInstances, NormChoice::spectral, kGradientTol);
        return Outcome{n.passed && s.passed, "worst relative error: nuclear " + fmt(n.worst) + ", spectral " +
                                                 fmt(s.worst) + " (tol " + fmt(kGradientTol) + ", " +
                                                 std::to_string(kGradientInstances) + " instances each)"};
    }));

    tally(run_criterion(8, "Monte Carlo comparison on the preset", kMcSeconds, [&] {
        const McReport r = run_mc(paper, BenchOptions{});
        const double ratio = r.avg_mse_optimal / r.avg_mse_baseline;
        const bool mse_dir = r.avg_mse_optimal < r.avg_mse_baseline;
        const bool trp_dir = r.avg_trp_optimal < r.avg_trp_baseline;
        const bool ratio_ok = ratio >= kMseRatioLo && ratio <= kMseRatioHi;
        return Outcome{r.failed == 0 && mse_dir && trp_dir && ratio_ok,
                       "avg MSE " + fmt(r.avg_mse_optimal) + " vs " + fmt(r.avg_mse_baseline) + " (ratio " +
                           fmt(ratio) + ", want [" + fmt(kMseRatioLo) + ", " + fmt(kMseRatioHi) + "]), avg trP " +
                           fmt(r.avg_trp_optimal) + " vs " + fmt(r.avg_trp_baseline) + ", failed runs " +
                           std::to_string(r.failed)};
    }));

    tally(run_criterion(9, "guarded schedule kappa(F) dominance", kGuardSeconds, [&] {
        CheckOptions opt;
        opt.seed = kSeed;
        opt.instances = kGuardInstances;
        const CheckResult r = check_guard_dominance(opt, paper.mu, paper.norm);
        const CheckResult p = check_guard_dominance_scenario(paper, BenchOptions{});
        return Outcome{r.passed && p.passed, "max kappa(F_mod)/kappa(F_line): random " + fmt(r.worst) +
                                                 ", preset " + fmt(p.worst) + " (limit 1)"};
    }));

    tally(run_criterion(10, "byte-identical compare output", 0.0, [&] {
        const fs::path root = fs::temp_directory_path() / "pflow_acceptance";
        fs::remove_all(root);
        const fs::path a = root / "a";
        const fs::path b = root / "b";
        const int sa = run_cli("compare --preset paper --seed 42 --out " + a.string());
        const int sb = run_cli("compare --preset paper --seed 42 --out " + b.string());
        const std::string ca = slurp(a / "table1.csv");
        const std::string cb = slurp(b / "table1.csv");
        const bool same = !ca.empty() && ca == cb;
        return Outcome{sa == 0 && sb == 0 && same, "exit codes " + std::to_string(sa) + "/" + std::to_string(sb) +
                                                       ", " + std::to_string(ca.size()) + " bytes, identical: " +
                                                       (same ? "yes" : "no")};
    }));

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
