#include "pertrl/ppe.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pertrl/errors.hpp"

namespace pertrl {

namespace {

/// Fixed-order accumulation so that ladders built through different code
/// paths (deterministic vs zero-noise stochastic) agree bit for bit.
Eigen::RowVectorXd row_times_matrix(const Eigen::RowVectorXd& k, const Eigen::MatrixXd& b) {
    Eigen::RowVectorXd out(b.cols());
    for (int j = 0; j < b.cols(); ++j) {
        double acc = 0.0;
        for (int i = 0; i < b.rows(); ++i) acc += k(i) * b(i, j);
        out(j) = acc;
    }
    return out;
}

Polynomial local_dynamics_poly(const Eigen::RowVectorXd& F_row, int order) {
    std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
    const int kmax = std::min<int>(order, static_cast<int>(F_row.size()));
    for (int k = 1; k <= kmax; ++k) c[static_cast<std::size_t>(k)] = F_row(k - 1);
    return Polynomial(std::move(c));
}

void check_ladder_inputs(std::size_t c_size, std::size_t t_size, std::size_t cbar_size) {
    if (c_size != t_size || c_size != cbar_size)
        throw DimensionError("ppe: C_rows, transfers and cbar must have equal length");
}

}  // namespace

PpeTransfer build_ppe_transfer(const Eigen::RowVectorXd& F_row, int order) {
    if (order < 1) throw std::invalid_argument("build_ppe_transfer: order must be >= 1");
    PpeTransfer t;
    t.order = order;
    t.B = Eigen::MatrixXd::Zero(order, order);
    const Polynomial df = local_dynamics_poly(F_row, order);
    Polynomial power = Polynomial::constant(1.0);
    for (int i = 1; i <= order; ++i) {
        power = (power * df).truncated(order);
        for (int j = 1; j <= order; ++j) t.B(i - 1, j - 1) = power.coeff(j);
    }
    return t;
}

PpeLadder ppe_backward(const std::vector<Eigen::RowVectorXd>& C_rows,
                       const Eigen::RowVectorXd& K_terminal,
                       const std::vector<PpeTransfer>& transfers,
                       const std::vector<double>& cbar, double Jbar_terminal) {
    check_ladder_inputs(C_rows.size(), transfers.size(), cbar.size());
    const int T = static_cast<int>(transfers.size());
    const int M = static_cast<int>(K_terminal.size());

    PpeLadder ladder;
    ladder.order = M;
    ladder.K_rows.assign(static_cast<std::size_t>(T) + 1, Eigen::RowVectorXd());
    ladder.Jbar.assign(static_cast<std::size_t>(T) + 1, 0.0);
    ladder.K_rows[static_cast<std::size_t>(T)] = K_terminal;
    ladder.Jbar[static_cast<std::size_t>(T)] = Jbar_terminal;

    for (int t = T - 1; t >= 0; --t) {
        const PpeTransfer& b = transfers[static_cast<std::size_t>(t)];
        if (b.order != M || C_rows[static_cast<std::size_t>(t)].size() != M)
            throw DimensionError("ppe_backward: inconsistent order at t = " + std::to_string(t));
        const Eigen::RowVectorXd s =
            row_times_matrix(ladder.K_rows[static_cast<std::size_t>(t) + 1], b.B);
        Eigen::RowVectorXd k(M);
        for (int j = 0; j < M; ++j) k(j) = C_rows[static_cast<std::size_t>(t)](j) + s(j);
        ladder.K_rows[static_cast<std::size_t>(t)] = std::move(k);
        ladder.Jbar[static_cast<std::size_t>(t)] =
            cbar[static_cast<std::size_t>(t)] + ladder.Jbar[static_cast<std::size_t>(t) + 1];
    }
    return ladder;
}

DiscountedPpe ppe_discounted(const Eigen::RowVectorXd& C_row, double cbar,
                             const std::vector<PpeTransfer>& transfers, double beta, int T) {
    if (beta <= 0.0 || beta >= 1.0)
        throw std::invalid_argument("ppe_discounted: beta must lie in (0, 1)");
    if (transfers.empty()) throw DimensionError("ppe_discounted: no transfers");
    const int M = static_cast<int>(C_row.size());

    PpeLadder ladder;
    ladder.order = M;
    ladder.K_rows.assign(static_cast<std::size_t>(T) + 1, Eigen::RowVectorXd::Zero(M));
    ladder.Jbar.assign(static_cast<std::size_t>(T) + 1, 0.0);

    for (int t = T - 1; t >= 0; --t) {
        const PpeTransfer& b = transfers.size() == 1
                                   ? transfers.front()
                                   : transfers.at(static_cast<std::size_t>(t));
        if (b.order != M)
            throw DimensionError("ppe_discounted: transfer order mismatch at t = " +
                                 std::to_string(t));
        const Eigen::RowVectorXd s =
            row_times_matrix(ladder.K_rows[static_cast<std::size_t>(t) + 1], b.B);
        Eigen::RowVectorXd k(M);
        for (int j = 0; j < M; ++j) k(j) = C_row(j) + beta * s(j);
        ladder.K_rows[static_cast<std::size_t>(t)] = std::move(k);
        ladder.Jbar[static_cast<std::size_t>(t)] =
            cbar + beta * ladder.Jbar[static_cast<std::size_t>(t) + 1];
    }

    // Stationary once consecutive rows agree to a relative 1e-8; the ladder is
    // trusted only below the first step where that fails.
    int transient = 0;
    double residual = 0.0;
    while (transient < T) {
        const Eigen::RowVectorXd& cur = ladder.K_rows[static_cast<std::size_t>(transient)];
        const Eigen::RowVectorXd& nxt = ladder.K_rows[static_cast<std::size_t>(transient) + 1];
        residual = (cur - nxt).cwiseAbs().maxCoeff();
        const double tol = 1e-8 * (1.0 + cur.cwiseAbs().maxCoeff());
        if (residual > tol) break;
        ++transient;
    }
    if (transient == 0)
        throw ConvergenceError("ppe_discounted: no stationary segment within horizon", residual);

    return DiscountedPpe{std::move(ladder), transient};
}

int default_discount_horizon(double beta) {
    if (beta <= 0.0 || beta >= 1.0)
        throw std::invalid_argument("default_discount_horizon: beta must lie in (0, 1)");
    int T = static_cast<int>(std::ceil(std::log(1e-10) / std::log(beta)));
    while (std::pow(beta, T) >= 1e-10) ++T;
    return T;
}

Eigen::MatrixXd hermite_conjugate(const PpeTransfer& transfer, const HermiteTransform& h) {
    const int M = transfer.order;
    if (h.H.rows() != M + 1)
        throw DimensionError("hermite_conjugate: transform size must be order + 1");
    Eigen::MatrixXd ext = Eigen::MatrixXd::Zero(M + 1, M + 1);
    ext(0, 0) = 1.0;
    ext.block(1, 1, M, M) = transfer.B;
    return h.H * ext * h.H_inv;
}

StochasticClosure stochastic_closure(const Eigen::RowVectorXd& F_row,
                                     const Eigen::RowVectorXd& K_next, double Jbar_next,
                                     double noise_var, int order) {
    if (order < 1) throw std::invalid_argument("stochastic_closure: order must be >= 1");
    if (noise_var < 0.0) throw std::invalid_argument("stochastic_closure: noise_var < 0");
    if (static_cast<int>(K_next.size()) != order)
        throw DimensionError("stochastic_closure: K_next must have size order");

    // Noise moments E[w^p]; p = 0..order suffices since b >= 0 in the binomial.
    std::vector<double> m(static_cast<std::size_t>(order) + 1, 0.0);
    m[0] = 1.0;
    for (int p = 2; p <= order; ++p)
        m[static_cast<std::size_t>(p)] =
            static_cast<double>(p - 1) * noise_var * m[static_cast<std::size_t>(p - 2)];

    // Exact powers of df; only coefficients up to the order are read out.
    const Polynomial df = local_dynamics_poly(F_row, order);
    std::vector<Polynomial> powers(static_cast<std::size_t>(order) + 1);
    powers[0] = Polynomial::constant(1.0);
    for (int b = 1; b <= order; ++b)
        powers[static_cast<std::size_t>(b)] = powers[static_cast<std::size_t>(b) - 1] * df;

    std::vector<std::vector<double>> binom(static_cast<std::size_t>(order) + 1);
    for (int i = 0; i <= order; ++i) {
        binom[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(i) + 1, 1.0);
        for (int b = 1; b < i; ++b)
            binom[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)] =
                binom[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(b) - 1] +
                binom[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(b)];
    }

    StochasticClosure out;
    out.noise_var = noise_var;
    out.G = Eigen::RowVectorXd::Zero(order + 1);
    out.G(0) = Jbar_next;
    for (int k = 0; k <= order; ++k) {
        for (int i = 1; i <= order; ++i) {
            // E[(df + w)^i] = sum_b C(i,b) E[w^{i-b}] df^b, taken exactly, then
            // the composite is truncated at the order by reading only dx^k,
            // k <= order.
            double contrib = 0.0;
            for (int b = 0; b <= i; ++b)
                contrib += binom[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)] *
                           m[static_cast<std::size_t>(i - b)] *
                           powers[static_cast<std::size_t>(b)].coeff(k);
            out.G(k) += K_next(i - 1) * contrib;
        }
    }
    return out;
}

PpeLadder stochastic_ppe_backward(const std::vector<Eigen::RowVectorXd>& C_rows,
                                  const Eigen::RowVectorXd& K_terminal,
                                  const std::vector<Eigen::RowVectorXd>& F_rows,
                                  double noise_var, int order, const std::vector<double>& cbar,
                                  double Jbar_terminal) {
    check_ladder_inputs(C_rows.size(), F_rows.size(), cbar.size());
    const int T = static_cast<int>(F_rows.size());
    if (static_cast<int>(K_terminal.size()) != order)
        throw DimensionError("stochastic_ppe_backward: terminal row size must equal order");

    PpeLadder ladder;
    ladder.order = order;
    ladder.K_rows.assign(static_cast<std::size_t>(T) + 1, Eigen::RowVectorXd());
    ladder.Jbar.assign(static_cast<std::size_t>(T) + 1, 0.0);
    ladder.K_rows[static_cast<std::size_t>(T)] = K_terminal;
    ladder.Jbar[static_cast<std::size_t>(T)] = Jbar_terminal;

    for (int t = T - 1; t >= 0; --t) {
        const StochasticClosure closure = stochastic_closure(
            F_rows[static_cast<std::size_t>(t)], ladder.K_rows[static_cast<std::size_t>(t) + 1],
            ladder.Jbar[static_cast<std::size_t>(t) + 1], noise_var, order);
        Eigen::RowVectorXd k(order);
        for (int j = 0; j < order; ++j)
            k(j) = C_rows[static_cast<std::size_t>(t)](j) + closure.G(j + 1);
        ladder.K_rows[static_cast<std::size_t>(t)] = std::move(k);
        ladder.Jbar[static_cast<std::size_t>(t)] =
            cbar[static_cast<std::size_t>(t)] + closure.G(0);
    }
    return ladder;
}

PpeInputs expand_about_nominal(const PeProblem& problem, const NominalTrajectory& nominal,
                               int order) {
    if (nominal.states.empty()) throw DimensionError("expand_about_nominal: empty nominal");
    const int T = static_cast<int>(nominal.states.size()) - 1;

    PpeInputs in;
    in.C_rows.reserve(static_cast<std::size_t>(T));
    in.F_rows.reserve(static_cast<std::size_t>(T));
    in.transfers.reserve(static_cast<std::size_t>(T));
    in.cbar.reserve(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        const double xbar = nominal.states[static_cast<std::size_t>(t)];
        const Polynomial local_f = problem.f.shifted(xbar);
        const Polynomial local_c = problem.cost.shifted(xbar);
        Eigen::RowVectorXd f_row(order), c_row(order);
        for (int i = 1; i <= order; ++i) {
            f_row(i - 1) = local_f.coeff(i);
            c_row(i - 1) = local_c.coeff(i);
        }
        in.F_rows.push_back(f_row);
        in.C_rows.push_back(std::move(c_row));
        PpeTransfer transfer = build_ppe_transfer(f_row, order);
        transfer.nominal_index = t;
        in.transfers.push_back(std::move(transfer));
        in.cbar.push_back(local_c.coeff(0));
    }
    const Polynomial local_g = problem.terminal.shifted(nominal.states.back());
    in.K_terminal = Eigen::RowVectorXd(order);
    for (int i = 1; i <= order; ++i) in.K_terminal(i - 1) = local_g.coeff(i);
    in.Jbar_terminal = local_g.coeff(0);
    return in;
}

}  // namespace pertrl
