#ifndef PERTRL_EXPERIMENT_HPP
#define PERTRL_EXPERIMENT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pertrl/systems.hpp"
#include "pertrl/tpfc.hpp"

namespace pertrl {

enum class ExperimentKind { ExactPe, RlPe, Ppe, VarianceSweep, Tpfc, EpsSweep };

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment(const std::string& name);

/// The benchmark map and costs: x' = x + dt (-x + eps x^3), costs c x^2 and
/// alpha x^2.
struct SystemConfig {
    double eps = 1.0;
    double dt = 0.1;
    double c = 10.0;
    double alpha = 10.0;
    int T = 3;
    double x0 = 0.0;
};

struct EstimatorConfig {
    std::vector<int> orders = {6, 12, 18};
    std::string basis = "monomial";
    std::vector<double> sigma_x = {0.1, 1.0};
    double sigma_v = 0.1;
    std::vector<int> samples = {1000, 10000, 100000};
    int n_seeds = 30;
    std::uint64_t master_seed = 1;
    double ridge = 0.0;
    double cond_max = 1e14;
    int steps = 3;
    std::optional<double> beta;   // discounted recursion when present
};

/// Control-affine system for the feedback experiments, polynomials as
/// coefficient arrays.
struct ControlSystemConfig {
    std::vector<double> fbar = {0.0, -1.0, 0.0, 0.2};
    std::vector<double> gbar = {1.0};
    std::vector<double> lbar = {0.0, 1.0, 1.0};
    std::vector<double> terminal = {0.0, 1.0, 1.0};
    double dt = 0.1;
    int horizon = 20;
    double x0 = 0.8;
    double r = 1.0;
};

struct TpfcConfig {
    ControlSystemConfig system;
    std::vector<double> eps_grid = {0.4, 0.2, 0.1, 0.05};
    int n_rollouts = 100000;
    double quad_feedback = -0.3;   // S(dx) = quad_feedback dx^2 in the policy under test
    double opt_tol = 1e-7;
    int opt_max_iters = 50000;
};

struct ExperimentConfig {
    int schema_version = 1;
    ExperimentKind experiment = ExperimentKind::ExactPe;
    SystemConfig system;
    EstimatorConfig estimator;
    TpfcConfig tpfc;
    std::string output_dir = "out";
};

/// Parse and fully validate a config file. Throws ConfigError with every
/// violation named by its path into the config.
ExperimentConfig load_config(const std::string& path);

/// All schema/range violations, one message per offence; empty means ok.
std::vector<std::string> validate_config_text(const std::string& json_text);

struct ResultRow {
    std::string experiment;
    int t = -1;
    int M = -1;
    double sigma_x = 0.0;
    bool has_sigma_x = false;
    long R = -1;
    double eps = 0.0;
    bool has_eps = false;
    std::string statistic;
    double value = 0.0;
    std::optional<double> std_error;
    int seed_count = 0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

struct RunFlags {
    bool reproducible = false;
    int threads = 0;   // 0 = leave the OpenMP default
    std::string out_dir;
};

struct RunOutput {
    ResultTable table;
    std::vector<std::string> files;   // paths written
};

/// Dispatch an experiment, write results.csv (+ per-experiment JSON/CSV
/// artifacts) under the output directory, and return the table. Re-running a
/// config under reproducible mode yields byte-identical files.
RunOutput run(const ExperimentConfig& config, const RunFlags& flags);

/// Systems and policies the feedback experiments default to; exposed so the
/// test suites drive exactly what the CLI drives.
ControlAffineSystem make_control_system(const ControlSystemConfig& config, double eps);
PolicyUnderTest make_tpfc_policy(const ControlAffineSystem& system, double x0, double opt_tol,
                                 int opt_max_iters, double quad_feedback);

}  // namespace pertrl

#endif
