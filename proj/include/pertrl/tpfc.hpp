#ifndef PERTRL_TPFC_HPP
#define PERTRL_TPFC_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pertrl/poly.hpp"
#include "pertrl/systems.hpp"

namespace pertrl {

/// Decoupled feedback design: co-state G_t and cost Hessian P_t integrated
/// backward along the nominal, gains K_t = -(gbar(xbar_t)/r) P_t. The P
/// recursion carries the second-order dynamics term f'' G absent from LQR;
/// with f'' = 0 and constant g it reduces to the Riccati solution exactly.
struct TpfcDesign {
    NominalTrajectory nominal;
    std::vector<double> costate;   // G_t, size T+1
    std::vector<double> hessian;   // P_t, size T+1
    std::vector<double> gains;     // K_t, size T
};

/// A feedback policy under evaluation: u_t(x) = ubar_t + K_t dx + S(dx).
/// The higher-order part S must start at dx^2; the linear truncation drops it
/// and changes nothing else.
struct PolicyUnderTest {
    std::vector<double> nominal_states;     // size T+1
    std::vector<double> nominal_controls;   // size T
    std::vector<double> gains;              // size T
    Polynomial higher_order;                // zero polynomial => linear policy

    PolicyUnderTest linear_truncation() const;
    double control(int t, double x) const;
    int horizon() const { return static_cast<int>(nominal_controls.size()); }
};

PolicyUnderTest policy_from_design(const TpfcDesign& design,
                                   Polynomial higher_order = Polynomial());

/// Monte-Carlo closed-loop cost statistics. nominal_cost is the eps = 0
/// closed-loop cost; with eps = 0 the summary reproduces it exactly with
/// zero variance.
struct McCostSummary {
    double eps = 0.0;
    int n_rollouts = 0;
    double mean_cost = 0.0;
    double var_cost = 0.0;
    double mean_abs_offset = 0.0;   // |mean_cost - nominal_cost|
    double nominal_cost = 0.0;
    std::uint64_t seed = 0;
    int diverged = 0;
};

/// Open-loop optimal controls by adjoint gradient descent with backtracking;
/// first-order stationarity max_t |dJ/du_t| <= tol on exit. The gain design
/// below never feeds back into this stage.
NominalTrajectory optimize_nominal(const ControlAffineSystem& system, double x0, int max_iters,
                                   double tol);

/// Backward Euler integration of the co-state and Hessian equations at the
/// system dt, terminal conditions from the terminal cost. Handles the scalar
/// case with state-dependent control influence (gbar' != 0 terms included).
TpfcDesign tpfc_backward(const ControlAffineSystem& system, const NominalTrajectory& nominal);

/// Closed-loop rollouts under the policy with common random numbers: the
/// noise path for rollout i depends only on (seed, i), never on the policy,
/// so paired policy comparisons share identical noise arrays.
McCostSummary mc_evaluate(const ControlAffineSystem& system, const PolicyUnderTest& policy,
                          double eps, int n_rollouts, std::uint64_t seed, bool parallel = true);

/// Per-path cost batch behind mc_evaluate; the serial path is the reference
/// the parallel one is tested against. Diverged paths carry NaN.
std::vector<double> rollout_cost_batch(const ControlAffineSystem& system,
                                       const PolicyUnderTest& policy, double eps, int n_rollouts,
                                       std::uint64_t seed, bool parallel);

/// Mean cost gap between two policies on identical noise paths (the pairing
/// subtracts the O(eps) sampling noise that would otherwise drown the gap).
struct PairedGap {
    double mean_gap = 0.0;
    double std_error = 0.0;
    int used_paths = 0;
    int diverged = 0;
};

PairedGap paired_gap(const ControlAffineSystem& system, const PolicyUnderTest& a,
                     const PolicyUnderTest& b, double eps, int n_rollouts, std::uint64_t seed,
                     bool parallel = true);

/// Log-log least-squares slope of a statistic against eps.
struct SlopeFit {
    double slope = 0.0;
    double std_error = 0.0;
    std::vector<std::array<double, 2>> points;   // (eps, value)
};

struct EpsScalingRow {
    double eps = 0.0;
    double mean_offset = 0.0;
    double var_cost = 0.0;
    double truncation_gap = 0.0;
    double gap_std_error = 0.0;
    int diverged = 0;
};

struct EpsScalingResult {
    SlopeFit mean_offset;       // |E[J] - Jbar|        ~ eps^2
    SlopeFit cost_variance;     // Var(J)               ~ eps^2
    SlopeFit truncation_gap;    // |E[J] - E[J_linear]| ~ eps^4
    std::vector<EpsScalingRow> rows;
    std::vector<double> excluded_eps;   // divergence fraction above 1%
};

/// Runs the policy and its linear truncation over the eps grid (>= 4 points)
/// and fits the three scaling laws. Grid points with more than 1% diverged
/// paths are excluded from the fits and reported.
EpsScalingResult eps_scaling(const ControlAffineSystem& system, const PolicyUnderTest& policy,
                             std::span<const double> eps_grid, int n_rollouts,
                             std::uint64_t seed, bool parallel = true);

/// One noise path decomposed into its linear closed-loop part and the
/// remainder: dx_t = dx_t^l + e_t with e defined as the difference, so the
/// identity is exact by construction; the content is how e scales with eps.
struct RolloutDecomposition {
    std::vector<double> dx;       // nonlinear closed loop deviation
    std::vector<double> dx_lin;   // linear closed loop on the same noise
    std::vector<double> err;      // e_t = dx_t - dx_t^l
};

RolloutDecomposition decompose_rollout(const ControlAffineSystem& system,
                                       const PolicyUnderTest& policy, double eps,
                                       std::uint64_t seed, std::uint64_t path_index = 0);

/// Linear part Abar_t of the closed loop about the nominal.
std::vector<double> closed_loop_linearization(const ControlAffineSystem& system,
                                              const PolicyUnderTest& policy);

/// Quadratic coefficient S2_t of the closed-loop map about the nominal
/// (drives the second-order recursion e2_{t+1} = Abar_t e2_t + S2_t (dx^l)^2).
std::vector<double> closed_loop_quadratic(const ControlAffineSystem& system,
                                          const PolicyUnderTest& policy);

SlopeFit fit_loglog(std::span<const std::array<double, 2>> points);

}  // namespace pertrl

#endif
