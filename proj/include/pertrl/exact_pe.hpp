#ifndef PERTRL_EXACT_PE_HPP
#define PERTRL_EXACT_PE_HPP

#include <Eigen/Dense>
#include <vector>

#include "pertrl/poly.hpp"
#include "pertrl/systems.hpp"

namespace pertrl {

/// Exact cost-to-go polynomials J_0..J_T (index = time) with the number of
/// non-constant monomials each one needs. basis_counts[t] = deg J_t.
struct CostToGoLadder {
    std::vector<Polynomial> polys;   // size T+1, polys[t] = J_t
    std::vector<int> basis_counts;   // size T+1
    int horizon = 0;
};

/// Ground-truth backward recursion J_t = c + J_{t+1} o f, J_T = g.
/// Exact polynomial composition; refuses once deg J_t exceeds 10^4.
CostToGoLadder exact_backward(const Polynomial& f, const Polynomial& c, const Polynomial& g,
                              int T);

/// Row i holds the monomial coefficients of f(x)^i, so that a coefficient row
/// over powers 0..source_degree times this matrix is the row of the composed
/// function over powers 0..target_degree. Index 0 is the constant, carried
/// explicitly throughout.
struct TransferMatrixB {
    Eigen::MatrixXd entries;   // (source_degree+1) x (target_degree+1)
    int source_degree = 0;     // N_{t+1}
    int target_degree = 0;     // N_t

    /// The block over powers 1.. only (how the coefficients are usually
    /// quoted; the constant row/column is bookkeeping).
    Eigen::MatrixXd nonconstant_block() const;
};

/// Exact transfer for the monomial basis 0..source_size composed with f.
/// Throws (naming the first overflowing row) if target_size is too small to
/// hold some f(x)^i.
TransferMatrixB build_transfer(const Polynomial& f, int source_size, int target_size);

/// Pad a polynomial's coefficients into a row over powers 0..size.
Eigen::RowVectorXd coefficient_row(const Polynomial& p, int size);

/// Pure matrix recursion for the projected coefficients:
/// alpha_t = c_t + alpha_{t+1} B_t, alpha_T = g_row. c_rows[t] pairs with
/// transfers[t]; both are indexed by the step they produce (t = 0..T-1).
/// Returns rows for t = 0..T.
std::vector<Eigen::RowVectorXd> galerkin_recursion(
    const std::vector<Eigen::RowVectorXd>& c_rows, const Eigen::RowVectorXd& g_row,
    const std::vector<TransferMatrixB>& transfers);

/// The R -> infinity limit of the least-squares sweep when only the monomial
/// powers 1..basis_size are kept: overflow powers are projected back onto the
/// kept basis through the exact Gram under N(0, sigma_X2). This is the bias
/// floor a truncated sampled sweep converges to. Rows are over powers
/// 1..basis_size, t = 0..T.
std::vector<Eigen::RowVectorXd> truncated_galerkin_recursion(const Polynomial& f,
                                                             const Polynomial& c,
                                                             const Polynomial& g, int T,
                                                             int basis_size, double sigma_X2);

}  // namespace pertrl

#endif
