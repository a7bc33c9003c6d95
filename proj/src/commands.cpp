#include "pflow/commands.hpp"

#include <filesystem>
#include <iomanip>

#include "pflow/checks.hpp"
#include "pflow/csv.hpp"
#include "pflow/errors.hpp"
#include "pflow/noise_tape.hpp"

namespace pflow {

namespace {

std::string out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

std::string stiffness_cell(const StiffnessRatio& r) {
    switch (r.status) {
        case StiffnessRatio::Status::defined:
            return format_number(r.value);
        case StiffnessRatio::Status::infinite:
            return "inf";
        case StiffnessRatio::Status::undefined:
            break;
    }
    return "nan";
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ShootingError& e) {
        err << "error: shooting failed: " << e.what() << "\n";
    } catch (const AssumptionViolation& e) {
        err << "error: " << e.what() << "\n";
    } catch (const FlowError& e) {
        err << "error: " << e.what() << " (lambda = " << e.lambda() << ")\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return 1;
}

}  // namespace

int cmd_solve_homotopy(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Scenario sc = cfg.effective_scenario();
        BenchOptions opts = cfg.bench;
        opts.guard = false;
        const Homotopies hs = solve_scenario(sc, opts);
        const std::vector<Figure2Row> rows = figure2_traces(sc, hs);

        CsvWriter h(out_path(cfg, "homotopy.csv"));
        h.row({"lambda", "beta", "beta_dot", "kappa_baseline", "kappa_optimal", "rstiff_baseline", "rstiff_optimal"});
        for (const Figure2Row& r : rows) {
            h.row({format_number(r.lambda), format_number(r.beta), format_number(r.beta_dot),
                   format_number(r.kappa_baseline), format_number(r.kappa_optimal), stiffness_cell(r.rstiff_baseline),
                   stiffness_cell(r.rstiff_optimal)});
        }
        CsvWriter f(out_path(cfg, "figure2.csv"));
        f.row({"lambda", "beta", "beta_minus_lambda", "u", "rstiff_baseline", "rstiff_optimal"});
        for (const Figure2Row& r : rows) {
            f.row({format_number(r.lambda), format_number(r.beta), format_number(r.beta_minus_lambda),
                   format_number(r.beta_dot), stiffness_cell(r.rstiff_baseline), stiffness_cell(r.rstiff_optimal)});
        }
        out << std::setprecision(10);
        out << "norm = " << to_string(sc.norm) << ", mu = " << sc.mu << "\n";
        out << "beta_dot(0) = " << hs.optimal.beta_dots().front() << "\n";
        out << "J_baseline = " << hs.j_baseline << "\n";
        out << "J_optimal = " << hs.j_optimal << "\n";
        return 0;
    });
}

int cmd_run_filter(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Scenario sc = cfg.effective_scenario();
        const Homotopies hs = solve_scenario(sc, cfg.bench);
        const BenchProblem p = build_problem(sc);
        const FlowContext base_ctx(p.prior, p.lik, sc.Q, hs.baseline);
        const FlowContext opt_ctx = base_ctx.with_path(hs.filtering);
        const std::uint64_t seed = derive_seed(sc.seed, 0);
        const ParticleEnsemble start = sample_ensemble({sc.prior_mean, sc.prior_cov}, sc.n_particles,
                                                       cfg.bench.flow_steps, 2, seed);
        IntegrateOptions io;
        io.jobs = cfg.bench.jobs;
        if (cfg.bench.relinearize) io.relinearize = Relinearization{p.model, sc.z, sc.R};

        CsvWriter w(out_path(cfg, "filter.csv"));
        w.row({"arm", "mean_x", "mean_y", "cov_xx", "cov_xy", "cov_yy", "trP", "mse"});
        auto emit = [&](const std::string& arm, const Vec& m, const Mat& P) {
            const double mse = (m - sc.truth).squaredNorm();
            w.row({arm, format_number(m(0)), format_number(m(1)), format_number(P(0, 0)), format_number(P(0, 1)),
                   format_number(P(1, 1)), format_number(P.trace()), format_number(mse)});
            out << std::setprecision(6) << arm << ": mean = (" << m(0) << ", " << m(1) << "), trP = " << P.trace()
                << ", squared error = " << mse << "\n";
        };
        const ParticleEnsemble b = integrate_ensemble(start, base_ctx, cfg.bench.flow_steps, io);
        emit("baseline", b.mean(), b.sample_covariance());
        const ParticleEnsemble o = integrate_ensemble(start, opt_ctx, cfg.bench.flow_steps, io);
        emit(cfg.bench.guard ? "optimal_guarded" : "optimal", o.mean(), o.sample_covariance());
        const MomentPair post = posterior_moments(p.prior, p.lik, 1.0);
        emit("linearized_posterior", post.mean, post.cov);
        return 0;
    });
}

int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Scenario sc = cfg.effective_scenario();
        const McReport rep = run_mc(sc, cfg.bench);

        CsvWriter w(out_path(cfg, "table1.csv"));
        w.row({"run", "mse_baseline", "mse_optimal", "trp_baseline", "trp_optimal", "status"});
        for (const McRow& r : rep.rows) {
            if (r.failed) {
                w.row({std::to_string(r.run + 1), "nan", "nan", "nan", "nan", "failed"});
                err << "run " << r.run + 1 << " failed: " << r.error << "\n";
                continue;
            }
            w.row({std::to_string(r.run + 1), format_number(r.mse_baseline), format_number(r.mse_optimal),
                   format_number(r.trp_baseline), format_number(r.trp_optimal), "ok"});
        }
        w.row({"average", format_number(rep.avg_mse_baseline), format_number(rep.avg_mse_optimal),
               format_number(rep.avg_trp_baseline), format_number(rep.avg_trp_optimal),
               std::to_string(rep.rows.size() - rep.failed) + "/" + std::to_string(rep.rows.size())});

        out << "# MSE: squared Euclidean error of the ensemble-mean estimate at lambda = 1, per run\n";
        out << "# trP: trace of the ensemble sample covariance at lambda = 1\n";
        out << "# optimal arm: " << (cfg.bench.guard ? "guarded" : "unguarded") << " schedule, "
            << cfg.bench.flow_steps << " Euler-Maruyama steps, " << sc.n_particles << " particles\n";
        out << std::setprecision(6) << "J_baseline = " << rep.j_baseline << ", J_optimal = " << rep.j_optimal << "\n";
        out << "average MSE: baseline " << rep.avg_mse_baseline << ", optimal " << rep.avg_mse_optimal << "\n";
        out << "average trP: baseline " << rep.avg_trp_baseline << ", optimal " << rep.avg_trp_optimal << "\n";
        if (rep.failed) out << rep.failed << " of " << rep.rows.size() << " runs failed\n";
        return rep.failed == rep.rows.size() ? 1 : 0;
    });
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        CheckOptions opt;
        opt.seed = cfg.scenario.seed;
        opt.instances = cfg.verify_instances;
        opt.inject_perturbation = cfg.inject_perturbation;
        std::vector<CheckResult> results = run_verify_suite(opt);
        const Scenario sc = cfg.effective_scenario();
        for (auto&& fn : {+[](const Scenario& s, const BenchOptions&) { return check_moment_oracle_scenario(s, 200, 1e-6); },
                          +[](const Scenario& s, const BenchOptions& b) { return check_guard_dominance_scenario(s, b); }}) {
            try {
                results.push_back(fn(sc, cfg.bench));
            } catch (const std::exception& e) {
                results.push_back({"scenario check", false, 0.0, 0.0, e.what()});
            }
        }
        bool all = true;
        out << std::setprecision(3);
        for (const CheckResult& r : results) {
            all = all && r.passed;
            out << (r.passed ? "PASS " : "FAIL ") << r.name << ": worst = " << r.worst << ", limit = " << r.limit;
            if (!r.detail.empty()) out << " (" << r.detail << ")";
            out << "\n";
        }
        out << (all ? "all checks passed" : "some checks FAILED") << "\n";
        return all ? 0 : 1;
    });
}

}  // namespace pflow
