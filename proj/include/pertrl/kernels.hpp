#ifndef PERTRL_KERNELS_HPP
#define PERTRL_KERNELS_HPP

#include <Eigen/Dense>
#include <span>

namespace pertrl::kernels {

/// Number of fixed accumulation chunks for the Gram kernels. The chunk
/// boundaries depend only on the sample count, never on the thread count, and
/// partial sums are combined in chunk order, so parallel and serial runs are
/// bit-identical.
inline constexpr int kGramChunks = 64;

/// Basis matrix with rows x^1..x^max_power (row p-1 = draws^p), one column
/// per sample. The parallel variant splits the columns across threads; every
/// column is computed independently, so the results agree exactly.
Eigen::MatrixXd power_basis_serial(std::span<const double> draws, int max_power);
Eigen::MatrixXd power_basis_parallel(std::span<const double> draws, int max_power);

/// Empirical Gram (1/R) Phi Phi'. Both variants accumulate per-chunk partial
/// products and reduce them in chunk order.
Eigen::MatrixXd gram_serial(const Eigen::MatrixXd& phi);
Eigen::MatrixXd gram_parallel(const Eigen::MatrixXd& phi);

/// Dispatchers used by the estimator pipeline; `parallel` normally comes from
/// the experiment config.
Eigen::MatrixXd power_basis(std::span<const double> draws, int max_power, bool parallel);
Eigen::MatrixXd gram(const Eigen::MatrixXd& phi, bool parallel);

/// Normalized cross product (1/R) A B' over matched sample columns, same
/// chunked fixed-order accumulation as gram.
Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, bool parallel);

/// T X column by column with an explicit inner loop (basis changes on sample
/// matrices; library GEMM re-blocking would make the result depend on the
/// thread count).
Eigen::MatrixXd transform_columns(const Eigen::MatrixXd& t, const Eigen::MatrixXd& x,
                                  bool parallel);

}  // namespace pertrl::kernels

#endif
