#ifndef PERTRL_ESTIMATORS_HPP
#define PERTRL_ESTIMATORS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "pertrl/exact_pe.hpp"
#include "pertrl/poly.hpp"
#include "pertrl/systems.hpp"

namespace pertrl {

enum class BasisKind { Monomial, Hermite };

/// Seeded draws plus everything the least-squares steps consume: the basis
/// matrices at the draws and at their images under f, the observation-noise
/// row, and the empirical Gram. Regenerating from (seed, sigma_X2, R) is
/// bit-identical; the draw, observation-noise and dynamics-noise streams are
/// split separately so toggling one never reshuffles another.
struct SampleBatch {
    std::uint64_t seed = 0;
    double sigma_X2 = 1.0;
    int R = 0;
    int N = 0;        // rows of phi_t
    int N_next = 0;   // rows of phi_next
    BasisKind basis = BasisKind::Monomial;
    std::vector<double> draws;        // x (or perturbations dx)
    std::vector<double> next;         // f(x), plus dynamics noise when enabled
    Eigen::MatrixXd phi_t;            // N x R
    Eigen::MatrixXd phi_next;         // N_next x R
    Eigen::RowVectorXd obs_noise;     // 1 x R, variance sigma_v2
    Eigen::MatrixXd gram;             // (1/R) phi_t phi_t'
    double obs_noise_var = 0.0;
    double dyn_noise_var = 0.0;
    bool has_dyn_noise = false;
};

/// Draws ~ N(0, sigma_X2) i.i.d. Requires R >= N (otherwise the Gram is
/// singular by construction). N_next defaults to N.
SampleBatch draw_batch(std::uint64_t seed, double sigma_X2, int R, BasisKind basis, int N,
                       const Polynomial& f, double obs_noise_var,
                       std::optional<double> dyn_noise_var = std::nullopt, int N_next = -1,
                       bool parallel = false);

/// One estimator's outcome and diagnostics.
struct EstimateReport {
    Eigen::RowVectorXd coefficients;
    double err_max = -1.0;     // vs oracle; negative when no oracle was given
    double err_l2 = -1.0;
    double gram_condition = 0.0;
    double ls_cov_norm = 0.0;   // sigma_v^2 ||(Phi Phi')^{-1}||
    int R = 0;
    int M = 0;
    double sigma_X2 = 0.0;
    double sigma_v2 = 0.0;
    double ridge = 0.0;
    int t = -1;
    std::uint64_t seed = 0;
};

/// Solver guards. Above cond_max the solve is refused (ConditioningError),
/// never silently regularized; the ridge is for explicit exploratory runs and
/// is echoed in every report.
struct LsOptions {
    double cond_max = 1e14;
    double ridge = 0.0;
};

/// One backward least-squares step:
/// alpha_t = c_row + (alpha_next Phi_next + v) Phi_t' (Phi_t Phi_t')^{-1}.
EstimateReport rl_ls_step(const SampleBatch& batch, const Eigen::RowVectorXd& alpha_next,
                          const Eigen::RowVectorXd& c_row, const LsOptions& options = {},
                          const Eigen::RowVectorXd* oracle = nullptr);

struct SweepParams {
    int steps = 3;                    // backward steps from the terminal time
    std::vector<int> basis_sizes;     // size == steps; basis at t = T-1, T-2, ...
    double sigma_X2 = 1.0;
    double sigma_v2 = 0.0;
    int R = 1000;
    std::uint64_t master_seed = 0;
    std::optional<double> dyn_noise_var;
    LsOptions options;
    bool parallel = false;
};

/// Backward sweep from the known terminal row; the estimate at t+1 feeds the
/// step at t. Reports come back in sweep order (t = T-1 first). Oracle errors
/// are against the exact ladder restricted to each step's basis when a ladder
/// is supplied. Step failures are rethrown with the time index attached.
std::vector<EstimateReport> rl_ls_sweep(const PeProblem& problem, const SweepParams& params,
                                        const CostToGoLadder* oracle = nullptr);

/// Model-based Taylor-coefficient fit about a nominal point. The batch's
/// draws are the perturbations and batch.next their images under the local
/// dynamics df (a polynomial with no constant term). Alongside the fitted
/// row, reports the analytic truncation-bias row Delta G^{-1} the estimate
/// converges to, computed from the known higher-order coefficients of df and
/// exact Gaussian moments.
struct MbLsReport {
    EstimateReport report;
    Eigen::RowVectorXd delta_row;       // Delta_t
    Eigen::RowVectorXd limiting_bias;   // Delta_t G^{-1}
};

MbLsReport mb_ls_fit(const SampleBatch& batch, const Polynomial& local_dynamics,
                     const LsOptions& options = {});

/// Model-free perturbation step: K_t = C + K_next (dX_next dX') (dX dX')^{-1},
/// where dX_next holds powers of the observed next-state deviation
/// (batch.phi_next). The transfer is inferred from data instead of assembled
/// from known Taylor coefficients.
EstimateReport model_free_ppe_step(const SampleBatch& batch, const Eigen::RowVectorXd& K_next,
                                   const Eigen::RowVectorXd& C_row,
                                   const LsOptions& options = {},
                                   const Eigen::RowVectorXd* oracle = nullptr);

/// Cost model for one perturbation step: inferring the transfer from data
/// costs about twice the flops of using the known coefficients.
struct PpeFlopModel {
    double model_free = 0.0;    // 2 R^2 M^2
    double model_based = 0.0;   // (R^2 + R) M^2
    double ratio() const { return model_free / model_based; }
};

PpeFlopModel ppe_flop_model(double R, int M);

/// Least squares over user-supplied instantaneous basis rows (N x R matrix of
/// basis values at the draws): theta = (c + dh) H' (H H')^{-1}. Identical
/// Gram diagnostics to the fixed-basis case.
EstimateReport instantaneous_basis_ls(const Eigen::MatrixXd& basis_values,
                                      const Eigen::RowVectorXd& c_values,
                                      const Eigen::RowVectorXd& delta_h_values,
                                      double sigma_v2 = 0.0, const LsOptions& options = {});

/// Sample count quoted by the concentration bound:
/// R > max[ ((n/beta) C C')^2 var(x^{2M}), sigma_v^2 C / (delta (1 - beta)) ].
struct ComplexityQuote {
    std::int64_t R_required = 0;
    double variance_part = 0.0;
    double covariance_part = 0.0;
    double n = 0.0, beta = 0.0, delta = 0.0, C = 0.0, C_prime = 0.0;
    int M = 0;
    double sigma_X2 = 0.0, sigma_v2 = 0.0;
};

ComplexityQuote sample_complexity(double n, double beta, double delta, double C, double C_prime,
                                  int M, double sigma_X2, double sigma_v2);

/// Measured counterparts of the bound's constants: ||G^{-1}|| from an exact
/// (or empirical) Gram, and ||H_M|| ||H^N|| from a basis transform (norm of
/// the last column times norm of the last row).
double measured_gram_bound(const Eigen::MatrixXd& gram);
double measured_basis_bound(const Eigen::MatrixXd& H);

}  // namespace pertrl

#endif
