#ifndef PERTRL_PPE_HPP
#define PERTRL_PPE_HPP

#include <Eigen/Dense>
#include <vector>

#include "pertrl/poly.hpp"
#include "pertrl/systems.hpp"

namespace pertrl {

/// Order-M transfer of the perturbation recursion: entry (i-1, j-1) is the
/// coefficient of dx^j in (df_t)^i, df_t = sum_k F_t^k dx^k. Upper triangular
/// because the lowest power of (df)^i is i; diagonal (i, i) = (F_t^1)^i.
/// Closing the recursion at any order is therefore exact for the orders kept.
struct PpeTransfer {
    Eigen::MatrixXd B;       // M x M
    int order = 0;
    int nominal_index = 0;   // t
};

/// F_row holds F^1..F^M (no zeroth-order entry; the nominal absorbs it).
PpeTransfer build_ppe_transfer(const Eigen::RowVectorXd& F_row, int order);

/// Local cost-to-go ladder: K_rows[t] = [K_t^1..K_t^M] about xbar_t, and the
/// nominal values Jbar[t]. K_rows[T] equals the terminal cost's local
/// coefficients exactly.
struct PpeLadder {
    std::vector<Eigen::RowVectorXd> K_rows;   // size T+1
    std::vector<double> Jbar;                 // size T+1
    int order = 0;
};

/// K_t = C_t + K_{t+1} B_t, Jbar_t = cbar_t + Jbar_{t+1}.
/// C_rows, transfers and cbar are indexed by the step they produce (0..T-1).
PpeLadder ppe_backward(const std::vector<Eigen::RowVectorXd>& C_rows,
                       const Eigen::RowVectorXd& K_terminal,
                       const std::vector<PpeTransfer>& transfers,
                       const std::vector<double>& cbar, double Jbar_terminal);

/// Discounted variant K_t = C_t + beta K_{t+1} B_t run from J_T = 0, plus the
/// first time index below which the ladder has equilibriated. Only rows with
/// t < transient_index approximate the stationary solution. transfers may
/// hold a single element, reused at every step.
struct DiscountedPpe {
    PpeLadder ladder;
    int transient_index = 0;
};

DiscountedPpe ppe_discounted(const Eigen::RowVectorXd& C_row, double cbar,
                             const std::vector<PpeTransfer>& transfers, double beta, int T);

/// Smallest horizon with beta^T < 1e-10.
int default_discount_horizon(double beta);

/// Similarity transform of the transfer into the Hermite basis. The transfer
/// acts on powers 1..M but Hermite polynomials carry constants, so B is first
/// embedded in the 0..M span with a passthrough constant row. Returns the
/// full (M+1) x (M+1) matrix H B_ext H^{-1}; generally dense, i.e. the
/// triangular structure does not survive the change of basis.
Eigen::MatrixXd hermite_conjugate(const PpeTransfer& transfer, const HermiteTransform& h);

/// One-step noise-averaged expansion: G[k] is the coefficient of dx^k in
/// E_w[ Jbar_next + sum_i K_next^i (df + w)^i ] with w ~ N(0, noise_var),
/// truncated at the given order after the expectation is taken exactly.
struct StochasticClosure {
    Eigen::RowVectorXd G;   // size order+1; G(0) is the constant term
    double noise_var = 0.0;
};

StochasticClosure stochastic_closure(const Eigen::RowVectorXd& F_row,
                                     const Eigen::RowVectorXd& K_next, double Jbar_next,
                                     double noise_var, int order);

/// Backward sweep routed through the noise closure each step:
/// Jbar_t = cbar_t + G^0, K_t^k = C_t^k + G^k. With noise_var = 0 this
/// reproduces ppe_backward exactly; with noise the orders couple and the
/// triangular decoupling is gone.
PpeLadder stochastic_ppe_backward(const std::vector<Eigen::RowVectorXd>& C_rows,
                                  const Eigen::RowVectorXd& K_terminal,
                                  const std::vector<Eigen::RowVectorXd>& F_rows,
                                  double noise_var, int order, const std::vector<double>& cbar,
                                  double Jbar_terminal);

/// Everything ppe_backward needs, expanded about a nominal trajectory of the
/// autonomous problem: local cost rows, dynamics rows and their transfers,
/// nominal costs, and the terminal row.
struct PpeInputs {
    std::vector<Eigen::RowVectorXd> C_rows;   // size T
    std::vector<Eigen::RowVectorXd> F_rows;   // size T
    std::vector<PpeTransfer> transfers;       // size T
    std::vector<double> cbar;                 // size T
    Eigen::RowVectorXd K_terminal;
    double Jbar_terminal = 0.0;
};

PpeInputs expand_about_nominal(const PeProblem& problem, const NominalTrajectory& nominal,
                               int order);

}  // namespace pertrl

#endif
