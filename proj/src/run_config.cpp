#include "pflow/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include "pflow/errors.hpp"

namespace pflow {

using nlohmann::json;

Scenario RunConfig::effective_scenario() const {
    Scenario s = scenario;
    if (reverse_sensors) std::reverse(s.sensors.begin(), s.sensors.end());
    return s;
}

void RunConfig::validate() const {
    effective_scenario().validate();
    bench.validate();
    if (out_dir.empty()) throw ContractViolation("config: out must not be empty");
    if (verify_instances < 1) throw ContractViolation("config: verify.instances must be >= 1");
}

RunConfig paper_preset() { return RunConfig{}; }

namespace {

json vec_to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_to_json(m.row(i).transpose()));
    return rows;
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
    throw ContractViolation("config: '" + key + "' " + why);
}

void only_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) bad(where, "must be an object");
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            bad(where.empty() ? item.key() : where + "." + item.key(), "is not a recognised key");
        }
    }
}

Vec json_to_vec(const json& j, const std::string& key) {
    if (!j.is_array()) bad(key, "must be an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) bad(key, "must be an array of numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Mat json_to_mat(const json& j, const std::string& key) {
    if (!j.is_array() || j.empty()) bad(key, "must be a non-empty array of rows");
    const Vec first = json_to_vec(j[0], key);
    Mat m(static_cast<Eigen::Index>(j.size()), first.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Vec r = json_to_vec(j[i], key);
        if (r.size() != first.size()) bad(key, "rows must have equal length");
        m.row(static_cast<Eigen::Index>(i)) = r.transpose();
    }
    return m;
}

template <class T>
void read(const json& obj, const char* name, const std::string& where, T& target) {
    if (!obj.contains(name)) return;
    try {
        target = obj.at(name).get<T>();
    } catch (const json::exception&) {
        bad(where + "." + name, "has the wrong type");
    }
}

}  // namespace

json config_to_json(const RunConfig& cfg) {
    const Scenario& s = cfg.scenario;
    json sensors = json::array();
    for (const Vec& p : s.sensors) sensors.push_back(vec_to_json(p));
    const OptimizerConfig& o = cfg.bench.optimizer;
    return json{
        {"scenario",
         {{"sensors", sensors},
          {"reverse_sensors", cfg.reverse_sensors},
          {"truth", vec_to_json(s.truth)},
          {"prior_mean", vec_to_json(s.prior_mean)},
          {"prior_cov", mat_to_json(s.prior_cov)},
          {"R", mat_to_json(s.R)},
          {"z", vec_to_json(s.z)},
          {"Q", mat_to_json(s.Q)},
          {"mu", s.mu},
          {"norm", to_string(s.norm)},
          {"n_particles", s.n_particles},
          {"n_mc_runs", s.n_mc_runs},
          {"seed", s.seed}}},
        {"optimizer",
         {{"intervals", o.intervals},
          {"bracket_lo", o.bracket_lo},
          {"bracket_hi", o.bracket_hi},
          {"bracket_limit", o.bracket_limit},
          {"shoot_tol", o.shoot_tol},
          {"resolution_cap", o.resolution_cap},
          {"max_bisections", o.max_bisections},
          {"rel_tol", o.rel_tol},
          {"abs_tol", o.abs_tol},
          {"integrator", o.integrator == IntegratorKind::adaptive ? "adaptive" : "fixed"},
          {"fixed_substeps", o.fixed_substeps},
          {"relaxation_refine", o.relaxation_refine}}},
        {"flow",
         {{"steps", cfg.bench.flow_steps},
          {"guard", cfg.bench.guard},
          {"relinearize", cfg.bench.relinearize},
          {"jobs", cfg.bench.jobs}}},
        {"verify", {{"instances", cfg.verify_instances}, {"inject_perturbation", cfg.inject_perturbation}}},
        {"out", cfg.out_dir},
    };
}

RunConfig config_from_json(const json& j) {
    RunConfig cfg = paper_preset();
    only_keys(j, "", {"scenario", "optimizer", "flow", "verify", "out"});
    read(j, "out", "", cfg.out_dir);

    if (j.contains("scenario")) {
        const json& s = j.at("scenario");
        only_keys(s, "scenario",
                  {"sensors", "reverse_sensors", "truth", "prior_mean", "prior_cov", "R", "z", "Q", "mu", "norm",
                   "n_particles", "n_mc_runs", "seed"});
        Scenario& sc = cfg.scenario;
        if (s.contains("sensors")) {
            const json& list = s.at("sensors");
            if (!list.is_array()) bad("scenario.sensors", "must be an array of 2-vectors");
            sc.sensors.clear();
            for (const json& p : list) sc.sensors.push_back(json_to_vec(p, "scenario.sensors"));
        }
        read(s, "reverse_sensors", "scenario", cfg.reverse_sensors);
        if (s.contains("truth")) sc.truth = json_to_vec(s.at("truth"), "scenario.truth");
        if (s.contains("prior_mean")) sc.prior_mean = json_to_vec(s.at("prior_mean"), "scenario.prior_mean");
        if (s.contains("prior_cov")) sc.prior_cov = json_to_mat(s.at("prior_cov"), "scenario.prior_cov");
        if (s.contains("R")) sc.R = json_to_mat(s.at("R"), "scenario.R");
        if (s.contains("z")) sc.z = json_to_vec(s.at("z"), "scenario.z");
        if (s.contains("Q")) sc.Q = json_to_mat(s.at("Q"), "scenario.Q");
        read(s, "mu", "scenario", sc.mu);
        if (s.contains("norm")) {
            std::string name;
            read(s, "norm", "scenario", name);
            sc.norm = parse_norm(name);
        }
        read(s, "n_particles", "scenario", sc.n_particles);
        read(s, "n_mc_runs", "scenario", sc.n_mc_runs);
        read(s, "seed", "scenario", sc.seed);
    }
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        only_keys(o, "optimizer",
                  {"intervals", "bracket_lo", "bracket_hi", "bracket_limit", "shoot_tol", "resolution_cap", "max_bisections", "rel_tol",
                   "abs_tol", "integrator", "fixed_substeps", "relaxation_refine"});
        OptimizerConfig& oc = cfg.bench.optimizer;
        read(o, "intervals", "optimizer", oc.intervals);
        read(o, "bracket_lo", "optimizer", oc.bracket_lo);
        read(o, "bracket_hi", "optimizer", oc.bracket_hi);
        read(o, "bracket_limit", "optimizer", oc.bracket_limit);
        read(o, "shoot_tol", "optimizer", oc.shoot_tol);
        read(o, "resolution_cap", "optimizer", oc.resolution_cap);
        read(o, "max_bisections", "optimizer", oc.max_bisections);
        read(o, "rel_tol", "optimizer", oc.rel_tol);
        read(o, "abs_tol", "optimizer", oc.abs_tol);
        read(o, "fixed_substeps", "optimizer", oc.fixed_substeps);
        read(o, "relaxation_refine", "optimizer", oc.relaxation_refine);
        if (o.contains("integrator")) {
            std::string kind;
            read(o, "integrator", "optimizer", kind);
            if (kind == "adaptive") {
                oc.integrator = IntegratorKind::adaptive;
            } else if (kind == "fixed") {
                oc.integrator = IntegratorKind::fixed;
            } else {
                bad("optimizer.integrator", "must be \"adaptive\" or \"fixed\"");
            }
        }
    }
    if (j.contains("flow")) {
        const json& f = j.at("flow");
        only_keys(f, "flow", {"steps", "guard", "relinearize", "jobs"});
        read(f, "steps", "flow", cfg.bench.flow_steps);
        read(f, "guard", "flow", cfg.bench.guard);
        read(f, "relinearize", "flow", cfg.bench.relinearize);
        read(f, "jobs", "flow", cfg.bench.jobs);
    }
    if (j.contains("verify")) {
        const json& v = j.at("verify");
        only_keys(v, "verify", {"instances", "inject_perturbation"});
        read(v, "instances", "verify", cfg.verify_instances);
        read(v, "inject_perturbation", "verify", cfg.inject_perturbation);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ContractViolation("config file not found: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ContractViolation("config file " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

}  // namespace pflow
