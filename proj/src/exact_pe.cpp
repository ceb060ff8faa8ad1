#include "pertrl/exact_pe.hpp"

#include <stdexcept>
#include <string>

#include "pertrl/errors.hpp"

namespace pertrl {

namespace {
constexpr int kDegreeGuard = 10000;
}

CostToGoLadder exact_backward(const Polynomial& f, const Polynomial& c, const Polynomial& g,
                              int T) {
    if (T < 0) throw std::invalid_argument("exact_backward: T must be >= 0");
    CostToGoLadder ladder;
    ladder.horizon = T;
    ladder.polys.assign(static_cast<std::size_t>(T) + 1, Polynomial());
    ladder.basis_counts.assign(static_cast<std::size_t>(T) + 1, 0);
    ladder.polys[static_cast<std::size_t>(T)] = g;
    for (int t = T - 1; t >= 0; --t) {
        const Polynomial& next = ladder.polys[static_cast<std::size_t>(t) + 1];
        Polynomial cur = c + compose(next, f);
        if (cur.degree() > kDegreeGuard)
            throw DivergenceError("exact_backward: degree explosion at t = " + std::to_string(t),
                                  t, static_cast<double>(cur.degree()));
        ladder.polys[static_cast<std::size_t>(t)] = std::move(cur);
    }
    for (int t = 0; t <= T; ++t)
        ladder.basis_counts[static_cast<std::size_t>(t)] =
            std::max(0, ladder.polys[static_cast<std::size_t>(t)].degree());
    return ladder;
}

Eigen::MatrixXd TransferMatrixB::nonconstant_block() const {
    return entries.block(1, 1, source_degree, target_degree);
}

TransferMatrixB build_transfer(const Polynomial& f, int source_size, int target_size) {
    if (source_size < 1) throw std::invalid_argument("build_transfer: source_size must be >= 1");
    TransferMatrixB b;
    b.source_degree = source_size;
    b.target_degree = target_size;
    b.entries = Eigen::MatrixXd::Zero(source_size + 1, target_size + 1);
    Polynomial power = Polynomial::constant(1.0);
    b.entries(0, 0) = 1.0;
    for (int i = 1; i <= source_size; ++i) {
        power = power * f;
        if (power.degree() > target_size)
            throw DimensionError("build_transfer: row " + std::to_string(i) +
                                 " needs degree " + std::to_string(power.degree()) +
                                 " > target_size " + std::to_string(target_size));
        for (int j = 0; j <= power.degree(); ++j) b.entries(i, j) = power.coeff(j);
    }
    return b;
}

Eigen::RowVectorXd coefficient_row(const Polynomial& p, int size) {
    Eigen::RowVectorXd row(size + 1);
    for (int i = 0; i <= size; ++i) row(i) = p.coeff(i);
    return row;
}

std::vector<Eigen::RowVectorXd> galerkin_recursion(const std::vector<Eigen::RowVectorXd>& c_rows,
                                                   const Eigen::RowVectorXd& g_row,
                                                   const std::vector<TransferMatrixB>& transfers) {
    const int T = static_cast<int>(transfers.size());
    if (static_cast<int>(c_rows.size()) != T)
        throw DimensionError("galerkin_recursion: need one c row per transfer");
    std::vector<Eigen::RowVectorXd> rows(static_cast<std::size_t>(T) + 1);
    rows[static_cast<std::size_t>(T)] = g_row;
    for (int t = T - 1; t >= 0; --t) {
        const TransferMatrixB& b = transfers[static_cast<std::size_t>(t)];
        const Eigen::RowVectorXd& next = rows[static_cast<std::size_t>(t) + 1];
        if (next.size() != b.entries.rows())
            throw DimensionError("galerkin_recursion: row size " + std::to_string(next.size()) +
                                 " does not match transfer rows " +
                                 std::to_string(b.entries.rows()) + " at t = " +
                                 std::to_string(t));
        if (c_rows[static_cast<std::size_t>(t)].size() != b.entries.cols())
            throw DimensionError("galerkin_recursion: c row size mismatch at t = " +
                                 std::to_string(t));
        rows[static_cast<std::size_t>(t)] =
            c_rows[static_cast<std::size_t>(t)] + next * b.entries;
    }
    return rows;
}

std::vector<Eigen::RowVectorXd> truncated_galerkin_recursion(const Polynomial& f,
                                                             const Polynomial& c,
                                                             const Polynomial& g, int T,
                                                             int basis_size, double sigma_X2) {
    if (basis_size < 1)
        throw std::invalid_argument("truncated_galerkin_recursion: basis_size >= 1");
    const int N = basis_size;

    // Cross moments E[f(x)^i x^j] for i, j = 1..N, and the exact Gram.
    std::vector<Polynomial> powers(static_cast<std::size_t>(N) + 1);
    powers[0] = Polynomial::constant(1.0);
    int max_deg = 0;
    for (int i = 1; i <= N; ++i) {
        powers[static_cast<std::size_t>(i)] = powers[static_cast<std::size_t>(i) - 1] * f;
        max_deg = std::max(max_deg, powers[static_cast<std::size_t>(i)].degree());
    }
    GaussianMomentTable table(max_deg + N, sigma_X2);
    Eigen::MatrixXd cross(N, N);
    for (int i = 1; i <= N; ++i) {
        const Polynomial& p = powers[static_cast<std::size_t>(i)];
        for (int j = 1; j <= N; ++j) {
            double acc = 0.0;
            for (int k = 0; k <= p.degree(); ++k) acc += p.coeff(k) * table.moment(k + j);
            cross(i - 1, j - 1) = acc;
        }
    }
    const Eigen::MatrixXd gram = exact_gram(N, false, sigma_X2);
    const Eigen::MatrixXd limit_op = cross * gram.ldlt().solve(Eigen::MatrixXd::Identity(N, N));

    Eigen::RowVectorXd c_row(N), g_row(N);
    for (int j = 1; j <= N; ++j) {
        c_row(j - 1) = c.coeff(j);
        g_row(j - 1) = g.coeff(j);
    }

    std::vector<Eigen::RowVectorXd> rows(static_cast<std::size_t>(T) + 1);
    rows[static_cast<std::size_t>(T)] = g_row;
    for (int t = T - 1; t >= 0; --t)
        rows[static_cast<std::size_t>(t)] =
            c_row + rows[static_cast<std::size_t>(t) + 1] * limit_op;
    return rows;
}

}  // namespace pertrl
