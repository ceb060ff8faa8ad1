#include "pertrl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <limits>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pertrl/errors.hpp"
#include "pertrl/estimators.hpp"
#include "pertrl/exact_pe.hpp"
#include "pertrl/ppe.hpp"
#include "pertrl/rng.hpp"

namespace pertrl {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvWriter {
    std::ofstream out;
    explicit CsvWriter(const std::string& path) : out(path) {
        if (!out) throw ConfigError("cannot open output file: " + path);
    }
};

void write_header_comment(std::ofstream& out, const RunFlags& flags,
                          const std::string& extra = "") {
    out << "# pertrl result table\n";
    if (!extra.empty()) out << "# " << extra << "\n";
    if (!flags.reproducible) {
        const std::time_t now = std::time(nullptr);
        char buf[64];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&now));
        out << "# generated: " << buf << "\n";
    }
}

void write_results_csv(const std::string& path, const ResultTable& table,
                       const RunFlags& flags) {
    CsvWriter w(path);
    write_header_comment(w.out, flags,
                         "error statistic: max-abs coefficient error vs the exact ladder "
                         "restricted to the estimated basis; mean/median/variance over seeds");
    w.out << "experiment,t,M,sigma_x,R,eps,statistic,value,stderr,seed_count\n";
    for (const ResultRow& r : table.rows) {
        w.out << r.experiment << ',';
        if (r.t >= 0) w.out << r.t;
        w.out << ',';
        if (r.M >= 0) w.out << r.M;
        w.out << ',';
        if (r.has_sigma_x) w.out << fmt(r.sigma_x);
        w.out << ',';
        if (r.R >= 0) w.out << r.R;
        w.out << ',';
        if (r.has_eps) w.out << fmt(r.eps);
        w.out << ',' << r.statistic << ',' << fmt(r.value) << ',';
        if (r.std_error) w.out << fmt(*r.std_error);
        w.out << ',' << r.seed_count << '\n';
    }
}

json poly_to_json(const Polynomial& p) {
    json arr = json::array();
    for (int i = 0; i <= p.degree(); ++i) arr.push_back(p.coeff(i));
    return arr;
}

json row_to_json(const Eigen::RowVectorXd& row) {
    json arr = json::array();
    for (int i = 0; i < row.size(); ++i) arr.push_back(row(i));
    return arr;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Config parsing

const char* kKindNames[] = {"exact-pe", "rl-pe", "ppe", "variance-sweep", "tpfc", "eps-sweep"};

template <typename T>
bool read_field(const json& j, const std::string& path, const char* key, T& into,
                std::vector<std::string>& errors) {
    if (!j.contains(key)) return false;
    try {
        into = j.at(key).get<T>();
        return true;
    } catch (const json::exception&) {
        errors.push_back(path + key + ": wrong type");
        return false;
    }
}

void validate_into(const json& j, ExperimentConfig& cfg, std::vector<std::string>& errors) {
    if (!j.is_object()) {
        errors.push_back("config root must be a JSON object");
        return;
    }
    read_field(j, "", "schema_version", cfg.schema_version, errors);
    if (cfg.schema_version != 1) errors.push_back("schema_version: expected 1");

    std::string kind;
    if (read_field(j, "", "experiment", kind, errors)) {
        if (auto parsed = parse_experiment(kind))
            cfg.experiment = *parsed;
        else
            errors.push_back("experiment: unknown kind '" + kind + "'");
    } else {
        errors.push_back("experiment: required");
    }
    read_field(j, "", "output", cfg.output_dir, errors);

    if (j.contains("system")) {
        const json& s = j.at("system");
        read_field(s, "system.", "eps", cfg.system.eps, errors);
        read_field(s, "system.", "dt", cfg.system.dt, errors);
        read_field(s, "system.", "c", cfg.system.c, errors);
        read_field(s, "system.", "alpha", cfg.system.alpha, errors);
        read_field(s, "system.", "T", cfg.system.T, errors);
        read_field(s, "system.", "x0", cfg.system.x0, errors);
        if (cfg.system.dt <= 0.0) errors.push_back("system.dt: must be > 0");
        if (cfg.system.T < 1) errors.push_back("system.T: must be >= 1");
    }

    if (j.contains("estimator")) {
        const json& e = j.at("estimator");
        EstimatorConfig& est = cfg.estimator;
        read_field(e, "estimator.", "orders", est.orders, errors);
        read_field(e, "estimator.", "basis", est.basis, errors);
        read_field(e, "estimator.", "sigma_x", est.sigma_x, errors);
        read_field(e, "estimator.", "sigma_v", est.sigma_v, errors);
        read_field(e, "estimator.", "samples", est.samples, errors);
        read_field(e, "estimator.", "n_seeds", est.n_seeds, errors);
        read_field(e, "estimator.", "master_seed", est.master_seed, errors);
        read_field(e, "estimator.", "ridge", est.ridge, errors);
        read_field(e, "estimator.", "cond_max", est.cond_max, errors);
        if (est.cond_max < 0.0) errors.push_back("estimator.cond_max: must be >= 0 (0 disables the refusal)");
        read_field(e, "estimator.", "steps", est.steps, errors);
        if (e.contains("beta")) {
            double beta = 0.0;
            if (read_field(e, "estimator.", "beta", beta, errors)) {
                est.beta = beta;
                if (beta <= 0.0 || beta >= 1.0) errors.push_back("estimator.beta: out of (0,1)");
            }
        }
        if (est.orders.empty()) errors.push_back("estimator.orders: must be nonempty");
        if (est.sigma_x.empty()) errors.push_back("estimator.sigma_x: must be nonempty");
        if (est.samples.empty()) errors.push_back("estimator.samples: must be nonempty");
        for (double s : est.sigma_x)
            if (s <= 0.0) errors.push_back("estimator.sigma_x: entries must be > 0");
        if (est.n_seeds < 1) errors.push_back("estimator.n_seeds: must be >= 1");
        if (est.steps < 1) errors.push_back("estimator.steps: must be >= 1");
        if (est.basis != "monomial" && est.basis != "hermite")
            errors.push_back("estimator.basis: must be 'monomial' or 'hermite'");
        if (est.basis == "hermite" && cfg.experiment == ExperimentKind::RlPe)
            errors.push_back(
                "estimator.basis: the rl-pe sweep is monomial-only (hermite rows carry "
                "constants its known cost rows cannot represent)");
        for (std::size_t i = 0; i < est.samples.size(); ++i)
            for (std::size_t m = 0; m < est.orders.size(); ++m)
                if (est.samples[i] < est.orders[m])
                    errors.push_back("estimator.samples[" + std::to_string(i) + "] = " +
                                     std::to_string(est.samples[i]) + " < orders[" +
                                     std::to_string(m) + "] = " +
                                     std::to_string(est.orders[m]));
    }

    if (j.contains("tpfc")) {
        const json& t = j.at("tpfc");
        TpfcConfig& tp = cfg.tpfc;
        read_field(t, "tpfc.", "eps_grid", tp.eps_grid, errors);
        read_field(t, "tpfc.", "n_rollouts", tp.n_rollouts, errors);
        read_field(t, "tpfc.", "quad_feedback", tp.quad_feedback, errors);
        read_field(t, "tpfc.", "opt_tol", tp.opt_tol, errors);
        read_field(t, "tpfc.", "opt_max_iters", tp.opt_max_iters, errors);
        if (t.contains("system")) {
            const json& s = t.at("system");
            ControlSystemConfig& cs = tp.system;
            read_field(s, "tpfc.system.", "fbar", cs.fbar, errors);
            read_field(s, "tpfc.system.", "gbar", cs.gbar, errors);
            read_field(s, "tpfc.system.", "lbar", cs.lbar, errors);
            read_field(s, "tpfc.system.", "terminal", cs.terminal, errors);
            read_field(s, "tpfc.system.", "dt", cs.dt, errors);
            read_field(s, "tpfc.system.", "horizon", cs.horizon, errors);
            read_field(s, "tpfc.system.", "x0", cs.x0, errors);
            read_field(s, "tpfc.system.", "r", cs.r, errors);
            if (cs.dt <= 0.0) errors.push_back("tpfc.system.dt: must be > 0");
            if (cs.horizon < 1) errors.push_back("tpfc.system.horizon: must be >= 1");
            if (cs.r <= 0.0) errors.push_back("tpfc.system.r: must be > 0");
        }
        if (tp.n_rollouts < 2) errors.push_back("tpfc.n_rollouts: must be >= 2");
        if (cfg.experiment == ExperimentKind::EpsSweep && tp.eps_grid.size() < 4)
            errors.push_back("tpfc.eps_grid: need at least 4 points");
        for (double e : tp.eps_grid)
            if (e <= 0.0) errors.push_back("tpfc.eps_grid: entries must be > 0");
    }

    if (!j.contains("estimator") || !j.at("estimator").contains("master_seed"))
        errors.push_back("estimator.master_seed: required");
}

// ---------------------------------------------------------------------------
// Experiments

PeProblem problem_from(const SystemConfig& s) {
    return cubic_benchmark(s.eps, s.dt, s.c, s.alpha, s.T);
}

RunOutput run_exact_pe(const ExperimentConfig& cfg, const RunFlags& flags,
                       const std::string& out_dir) {
    const PeProblem problem = problem_from(cfg.system);
    const CostToGoLadder ladder =
        exact_backward(problem.f, problem.cost, problem.terminal, problem.horizon);

    RunOutput out;
    json j;
    j["experiment"] = "exact-pe";
    j["ladder"] = json::array();
    j["basis_counts"] = ladder.basis_counts;
    for (const Polynomial& p : ladder.polys) j["ladder"].push_back(poly_to_json(p));
    const std::string ladder_path = out_dir + "/ladder.json";
    write_json(ladder_path, j);
    out.files.push_back(ladder_path);

    for (int t = 0; t <= ladder.horizon; ++t) {
        ResultRow r;
        r.experiment = "exact-pe";
        r.t = t;
        r.statistic = "degree";
        r.value = ladder.basis_counts[static_cast<std::size_t>(t)];
        out.table.rows.push_back(r);
    }
    (void)flags;
    return out;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

RunOutput run_rl_pe(const ExperimentConfig& cfg, const RunFlags& flags,
                    const std::string& out_dir) {
    const PeProblem problem = problem_from(cfg.system);
    const CostToGoLadder oracle =
        exact_backward(problem.f, problem.cost, problem.terminal, problem.horizon);
    const EstimatorConfig& est = cfg.estimator;
    const int steps = std::min(est.steps, problem.horizon);

    struct Task {
        int order, R, seed_index;
        double sigma_x;
    };
    std::vector<Task> tasks;
    for (int order : est.orders)
        for (double sx : est.sigma_x)
            for (int R : est.samples)
                for (int k = 0; k < est.n_seeds; ++k) tasks.push_back({order, R, k, sx});

    std::vector<std::vector<EstimateReport>> results(tasks.size());
    std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(tasks.size()); ++i) {
        try {
            const Task& task = tasks[static_cast<std::size_t>(i)];
            SweepParams params;
            params.steps = steps;
            params.basis_sizes.assign(static_cast<std::size_t>(steps), task.order);
            params.sigma_X2 = task.sigma_x * task.sigma_x;
            params.sigma_v2 = est.sigma_v * est.sigma_v;
            params.R = task.R;
            params.master_seed = rng::derive(est.master_seed, rng::Stream::Replication,
                                             {static_cast<std::uint64_t>(task.seed_index)});
            params.options.cond_max = est.cond_max == 0.0
                                          ? std::numeric_limits<double>::infinity()
                                          : est.cond_max;
            params.options.ridge = est.ridge;
            results[static_cast<std::size_t>(i)] = rl_ls_sweep(problem, params, &oracle);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    RunOutput out;

    // Per-replication detail rows.
    const std::string reports_path = out_dir + "/reports.csv";
    {
        CsvWriter w(reports_path);
        write_header_comment(w.out, flags);
        w.out << "t,R,M,sigma_x,sigma_v,seed,err_max,err_l2,gram_cond,ls_cov_norm\n";
        for (std::size_t i = 0; i < tasks.size(); ++i)
            for (const EstimateReport& r : results[i])
                w.out << r.t << ',' << r.R << ',' << r.M << ',' << fmt(tasks[i].sigma_x) << ','
                      << fmt(est.sigma_v) << ',' << r.seed << ',' << fmt(r.err_max) << ','
                      << fmt(r.err_l2) << ',' << fmt(r.gram_condition) << ','
                      << fmt(r.ls_cov_norm) << '\n';
    }
    out.files.push_back(reports_path);

    // Aggregates per (t, M, sigma_x, R).
    for (int order : est.orders)
        for (double sx : est.sigma_x)
            for (int R : est.samples)
                for (int s = 0; s < steps; ++s) {
                    const int t = problem.horizon - 1 - s;
                    std::vector<double> errs;
                    for (std::size_t i = 0; i < tasks.size(); ++i) {
                        if (tasks[i].order != order || tasks[i].R != R ||
                            tasks[i].sigma_x != sx)
                            continue;
                        errs.push_back(results[i][static_cast<std::size_t>(s)].err_max);
                    }
                    double mean = 0.0;
                    for (double e : errs) mean += e;
                    mean /= static_cast<double>(errs.size());
                    double var = 0.0;
                    for (double e : errs) var += (e - mean) * (e - mean);
                    if (errs.size() > 1) var /= static_cast<double>(errs.size() - 1);

                    auto push = [&](const char* stat, double value) {
                        ResultRow r;
                        r.experiment = "rl-pe";
                        r.t = t;
                        r.M = order;
                        r.sigma_x = sx;
                        r.has_sigma_x = true;
                        r.R = R;
                        r.statistic = stat;
                        r.value = value;
                        r.seed_count = static_cast<int>(errs.size());
                        out.table.rows.push_back(r);
                    };
                    push("err_mean", mean);
                    push("err_median", median_of(errs));
                    push("err_var", var);
                }
    return out;
}

RunOutput run_ppe(const ExperimentConfig& cfg, const RunFlags& flags,
                  const std::string& out_dir) {
    const PeProblem problem = problem_from(cfg.system);
    const int order = cfg.estimator.orders.front();
    const NominalTrajectory nominal =
        rollout_nominal(PolynomialDynamics{problem.f, problem.horizon}, cfg.system.x0, order);
    const PpeInputs inputs = expand_about_nominal(problem, nominal, order);
    const PpeLadder ladder = ppe_backward(inputs.C_rows, inputs.K_terminal, inputs.transfers,
                                          inputs.cbar, inputs.Jbar_terminal);

    RunOutput out;
    json j;
    j["experiment"] = "ppe";
    j["order"] = order;
    j["nominal"] = nominal.states;
    j["Jbar"] = ladder.Jbar;
    j["K_rows"] = json::array();
    for (const auto& row : ladder.K_rows) j["K_rows"].push_back(row_to_json(row));

    for (std::size_t t = 0; t < ladder.Jbar.size(); ++t) {
        ResultRow r;
        r.experiment = "ppe";
        r.t = static_cast<int>(t);
        r.M = order;
        r.statistic = "Jbar";
        r.value = ladder.Jbar[t];
        out.table.rows.push_back(r);
    }

    if (cfg.estimator.beta) {
        const double beta = *cfg.estimator.beta;
        const double x0 = cfg.system.x0;
        const Polynomial local_f = problem.f.shifted(x0);
        const Polynomial local_c = problem.cost.shifted(x0);
        Eigen::RowVectorXd f_row(order), c_row(order);
        for (int i = 1; i <= order; ++i) {
            f_row(i - 1) = local_f.coeff(i);
            c_row(i - 1) = local_c.coeff(i);
        }
        const int T = default_discount_horizon(beta);
        const DiscountedPpe disc = ppe_discounted(
            c_row, local_c.coeff(0), {build_ppe_transfer(f_row, order)}, beta, T);
        j["discounted"]["beta"] = beta;
        j["discounted"]["transient_index"] = disc.transient_index;
        j["discounted"]["K_stationary"] = row_to_json(disc.ladder.K_rows.front());
        ResultRow r;
        r.experiment = "ppe";
        r.M = order;
        r.statistic = "transient_index";
        r.value = disc.transient_index;
        out.table.rows.push_back(r);
    }

    const std::string path = out_dir + "/ppe.json";
    write_json(path, j);
    out.files.push_back(path);
    (void)flags;
    return out;
}

RunOutput run_variance_sweep(const ExperimentConfig& cfg, const RunFlags& flags,
                             const std::string& out_dir) {
    const PeProblem problem = problem_from(cfg.system);
    const EstimatorConfig& est = cfg.estimator;
    const BasisKind basis =
        est.basis == "hermite" ? BasisKind::Hermite : BasisKind::Monomial;

    RunOutput out;
    int grid_index = 0;
    for (int M : est.orders)
        for (double sx : est.sigma_x)
            for (int R : est.samples) {
                std::vector<double> tops(static_cast<std::size_t>(est.n_seeds));
                std::vector<double> conds(static_cast<std::size_t>(est.n_seeds));
#pragma omp parallel for schedule(dynamic)
                for (int k = 0; k < est.n_seeds; ++k) {
                    const std::uint64_t seed = rng::derive(
                        est.master_seed, rng::Stream::Replication,
                        {static_cast<std::uint64_t>(grid_index), static_cast<std::uint64_t>(k)});
                    const SampleBatch b =
                        draw_batch(seed, sx * sx, R, basis, M, problem.f, 0.0);
                    tops[static_cast<std::size_t>(k)] = b.gram(M - 1, M - 1);
                    conds[static_cast<std::size_t>(k)] = sym_condition_number(b.gram);
                }
                double mean = 0.0;
                for (double v : tops) mean += v;
                mean /= static_cast<double>(tops.size());
                double var = 0.0;
                for (double v : tops) var += (v - mean) * (v - mean);
                if (tops.size() > 1) var /= static_cast<double>(tops.size() - 1);

                auto push = [&](const char* stat, double value) {
                    ResultRow r;
                    r.experiment = "variance-sweep";
                    r.M = M;
                    r.sigma_x = sx;
                    r.has_sigma_x = true;
                    r.R = R;
                    r.statistic = stat;
                    r.value = value;
                    r.seed_count = est.n_seeds;
                    out.table.rows.push_back(r);
                };
                push("gram_var_empirical", var);
                if (basis == BasisKind::Monomial) {
                    // the closed form targets the top monomial moment
                    const double theory = gram_moment_variance(M, sx * sx) / R;
                    push("gram_var_theory", theory);
                    push("gram_var_ratio", var / theory);
                }
                push("gram_cond_median", median_of(conds));
                ++grid_index;
            }
    (void)flags;
    (void)out_dir;
    return out;
}

RunOutput run_tpfc(const ExperimentConfig& cfg, const RunFlags& flags,
                   const std::string& out_dir) {
    const ControlAffineSystem sys = make_control_system(cfg.tpfc.system, 0.0);
    if (sys.coarse_dt())
        std::cerr << "warning: tpfc.system.dt = " << sys.dt
                  << " is coarse for the small-step feedback design\n";
    const NominalTrajectory nominal = optimize_nominal(sys, cfg.tpfc.system.x0,
                                                       cfg.tpfc.opt_max_iters, cfg.tpfc.opt_tol);
    const TpfcDesign design = tpfc_backward(sys, nominal);

    RunOutput out;
    json j;
    j["experiment"] = "tpfc";
    j["states"] = design.nominal.states;
    j["controls"] = design.nominal.controls;
    j["costate"] = design.costate;
    j["hessian"] = design.hessian;
    j["gains"] = design.gains;
    const std::string path = out_dir + "/tpfc.json";
    write_json(path, j);
    out.files.push_back(path);

    for (std::size_t t = 0; t < design.gains.size(); ++t) {
        ResultRow r;
        r.experiment = "tpfc";
        r.t = static_cast<int>(t);
        r.statistic = "gain";
        r.value = design.gains[t];
        out.table.rows.push_back(r);
    }
    (void)flags;
    return out;
}

RunOutput run_eps_sweep(const ExperimentConfig& cfg, const RunFlags& flags,
                        const std::string& out_dir) {
    const ControlAffineSystem sys = make_control_system(cfg.tpfc.system, 0.0);
    if (sys.coarse_dt())
        std::cerr << "warning: tpfc.system.dt = " << sys.dt
                  << " is coarse for the small-step feedback design\n";
    const PolicyUnderTest policy =
        make_tpfc_policy(sys, cfg.tpfc.system.x0, cfg.tpfc.opt_tol, cfg.tpfc.opt_max_iters,
                         cfg.tpfc.quad_feedback);
    const EpsScalingResult res = eps_scaling(sys, policy, cfg.tpfc.eps_grid,
                                             cfg.tpfc.n_rollouts, cfg.estimator.master_seed);

    RunOutput out;
    const std::string scaling_path = out_dir + "/scaling.csv";
    {
        CsvWriter w(scaling_path);
        write_header_comment(w.out, flags);
        w.out << "quantity,eps,estimate,stderr\n";
        for (const EpsScalingRow& r : res.rows) {
            w.out << "mean_offset," << fmt(r.eps) << ',' << fmt(r.mean_offset) << ",\n";
            w.out << "cost_variance," << fmt(r.eps) << ',' << fmt(r.var_cost) << ",\n";
            w.out << "truncation_gap," << fmt(r.eps) << ',' << fmt(r.truncation_gap) << ','
                  << fmt(r.gap_std_error) << '\n';
        }
    }
    out.files.push_back(scaling_path);

    json j;
    j["experiment"] = "eps-sweep";
    j["slopes"]["mean_offset"] = {{"slope", res.mean_offset.slope},
                                  {"std_error", res.mean_offset.std_error}};
    j["slopes"]["cost_variance"] = {{"slope", res.cost_variance.slope},
                                    {"std_error", res.cost_variance.std_error}};
    j["slopes"]["truncation_gap"] = {{"slope", res.truncation_gap.slope},
                                     {"std_error", res.truncation_gap.std_error}};
    j["excluded_eps"] = res.excluded_eps;
    const std::string slopes_path = out_dir + "/slopes.json";
    write_json(slopes_path, j);
    out.files.push_back(slopes_path);

    auto push_slope = [&](const char* stat, const SlopeFit& fit) {
        ResultRow r;
        r.experiment = "eps-sweep";
        r.statistic = stat;
        r.value = fit.slope;
        r.std_error = fit.std_error;
        r.seed_count = cfg.tpfc.n_rollouts;
        out.table.rows.push_back(r);
    };
    push_slope("slope_mean_offset", res.mean_offset);
    push_slope("slope_cost_variance", res.cost_variance);
    push_slope("slope_truncation_gap", res.truncation_gap);
    for (const EpsScalingRow& r : res.rows) {
        ResultRow row;
        row.experiment = "eps-sweep";
        row.eps = r.eps;
        row.has_eps = true;
        row.statistic = "mean_offset";
        row.value = r.mean_offset;
        out.table.rows.push_back(row);
        row.statistic = "cost_variance";
        row.value = r.var_cost;
        out.table.rows.push_back(row);
        row.statistic = "truncation_gap";
        row.value = r.truncation_gap;
        row.std_error = r.gap_std_error;
        out.table.rows.push_back(row);
    }
    return out;
}

}  // namespace

std::string to_string(ExperimentKind kind) { return kKindNames[static_cast<int>(kind)]; }

std::optional<ExperimentKind> parse_experiment(const std::string& name) {
    for (int i = 0; i < 6; ++i)
        if (name == kKindNames[i]) return static_cast<ExperimentKind>(i);
    return std::nullopt;
}

std::vector<std::string> validate_config_text(const std::string& json_text) {
    std::vector<std::string> errors;
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded()) {
        errors.push_back("config is not valid JSON");
        return errors;
    }
    ExperimentConfig cfg;
    validate_into(j, cfg, errors);
    return errors;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();

    json j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw ConfigError(path + ": config is not valid JSON");
    ExperimentConfig cfg;
    std::vector<std::string> errors;
    validate_into(j, cfg, errors);
    if (!errors.empty()) {
        std::string msg = path + ": invalid config";
        for (const std::string& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    return cfg;
}

ControlAffineSystem make_control_system(const ControlSystemConfig& config, double eps) {
    ControlAffineSystem sys;
    sys.fbar = Polynomial(config.fbar);
    sys.gbar = Polynomial(config.gbar);
    sys.lbar = Polynomial(config.lbar);
    sys.terminal_cost = Polynomial(config.terminal);
    sys.dt = config.dt;
    sys.eps = eps;
    sys.r = config.r;
    sys.horizon = config.horizon;
    return sys;
}

PolicyUnderTest make_tpfc_policy(const ControlAffineSystem& system, double x0, double opt_tol,
                                 int opt_max_iters, double quad_feedback) {
    const NominalTrajectory nominal = optimize_nominal(system, x0, opt_max_iters, opt_tol);
    const TpfcDesign design = tpfc_backward(system, nominal);
    Polynomial s;
    if (quad_feedback != 0.0) s = Polynomial({0.0, 0.0, quad_feedback});
    return policy_from_design(design, std::move(s));
}

RunOutput run(const ExperimentConfig& config, const RunFlags& flags) {
#ifdef _OPENMP
    if (flags.threads > 0) omp_set_num_threads(flags.threads);
#endif
    const std::string out_dir = flags.out_dir.empty() ? config.output_dir : flags.out_dir;
    std::filesystem::create_directories(out_dir);

    RunOutput out;
    switch (config.experiment) {
        case ExperimentKind::ExactPe: out = run_exact_pe(config, flags, out_dir); break;
        case ExperimentKind::RlPe: out = run_rl_pe(config, flags, out_dir); break;
        case ExperimentKind::Ppe: out = run_ppe(config, flags, out_dir); break;
        case ExperimentKind::VarianceSweep:
            out = run_variance_sweep(config, flags, out_dir);
            break;
        case ExperimentKind::Tpfc: out = run_tpfc(config, flags, out_dir); break;
        case ExperimentKind::EpsSweep: out = run_eps_sweep(config, flags, out_dir); break;
    }
    const std::string results_path = out_dir + "/results.csv";
    write_results_csv(results_path, out.table, flags);
    out.files.push_back(results_path);
    return out;
}

}  // namespace pertrl
