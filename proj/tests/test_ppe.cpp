#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "pertrl/errors.hpp"
#include "pertrl/exact_pe.hpp"
#include "pertrl/ppe.hpp"

using namespace pertrl;

namespace {

const PeProblem kCubic = cubic_benchmark(1.0, 0.1, 10.0, 10.0, 3);

Eigen::RowVectorXd make_row(std::initializer_list<double> vals) {
    Eigen::RowVectorXd r(static_cast<Eigen::Index>(vals.size()));
    int i = 0;
    for (double v : vals) r(i++) = v;
    return r;
}

PpeInputs cubic_inputs_about_origin(int order, int T) {
    PeProblem p = kCubic;
    p.horizon = T;
    const NominalTrajectory nominal =
        rollout_nominal(PolynomialDynamics{p.f, T}, 0.0, order);
    return expand_about_nominal(p, nominal, order);
}

}  // namespace

TEST_CASE("ppe transfer: cubic dynamics at order 3") {
    const PpeTransfer t = build_ppe_transfer(make_row({0.9, 0.0, 0.1}), 3);
    Eigen::MatrixXd want(3, 3);
    want << 0.9, 0.0, 0.1, 0.0, 0.81, 0.0, 0.0, 0.0, 0.729;
    CHECK((t.B - want).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("ppe transfer: linear dynamics give powers on the diagonal") {
    const double a = -0.6;
    const PpeTransfer t = build_ppe_transfer(make_row({a}), 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (i == j)
                CHECK(t.B(i, j) == doctest::Approx(std::pow(a, i + 1)).epsilon(1e-14));
            else
                CHECK(t.B(i, j) == 0.0);
        }
}

TEST_CASE("ppe transfer: quadratic map at order 2") {
    const PpeTransfer t = build_ppe_transfer(make_row({1.0, 1.0}), 2);
    Eigen::MatrixXd want(2, 2);
    want << 1.0, 1.0, 0.0, 1.0;   // (d + d^2)^2 = d^2 + O(d^3)
    CHECK((t.B - want).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transfer is upper triangular with power diagonal") {
    const PpeTransfer t = build_ppe_transfer(make_row({0.7, -0.3, 0.2, 0.05}), 6);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < i; ++j) CHECK(t.B(i, j) == 0.0);
        CHECK(t.B(i, i) == doctest::Approx(std::pow(0.7, i + 1)).epsilon(1e-12));
    }
}

TEST_CASE("one backward step about the origin matches the exact ladder") {
    {
        const PpeInputs in = cubic_inputs_about_origin(3, 1);
        const PpeLadder ladder =
            ppe_backward(in.C_rows, in.K_terminal, in.transfers, in.cbar, in.Jbar_terminal);
        CHECK(ladder.K_rows[0](0) == doctest::Approx(0.0));
        CHECK(ladder.K_rows[0](1) == doctest::Approx(18.1).epsilon(1e-14));
        CHECK(ladder.K_rows[0](2) == doctest::Approx(0.0));
    }
    {
        const PpeInputs in = cubic_inputs_about_origin(6, 1);
        const PpeLadder ladder =
            ppe_backward(in.C_rows, in.K_terminal, in.transfers, in.cbar, in.Jbar_terminal);
        const Eigen::RowVectorXd want = make_row({0.0, 18.1, 0.0, 1.8, 0.0, 0.1});
        CHECK((ladder.K_rows[0] - want).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("identity transfer with zero cost keeps the terminal row") {
    PpeTransfer ident;
    ident.order = 3;
    ident.B = Eigen::MatrixXd::Identity(3, 3);
    const std::vector<Eigen::RowVectorXd> c(4, Eigen::RowVectorXd::Zero(3));
    const std::vector<double> cb(4, 0.0);
    const Eigen::RowVectorXd k_t = make_row({1.0, -2.0, 0.5});
    const PpeLadder ladder = ppe_backward(c, k_t, {ident, ident, ident, ident}, cb, 0.0);
    for (const auto& row : ladder.K_rows) CHECK((row - k_t).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("higher orders never leak into lower ones (exact closure)") {
    const int order = 6;
    const int T = 3;
    const PpeInputs full = cubic_inputs_about_origin(order, T);
    const PpeLadder ladder =
        ppe_backward(full.C_rows, full.K_terminal, full.transfers, full.cbar,
                     full.Jbar_terminal);

    for (int m0 : {1, 2, 3}) {
        PpeInputs cut = full;
        for (auto& row : cut.F_rows)
            for (int i = m0; i < order; ++i) row(i) = 0.0;
        cut.transfers.clear();
        for (const auto& row : cut.F_rows)
            cut.transfers.push_back(build_ppe_transfer(row, order));
        Eigen::RowVectorXd k_t = cut.K_terminal;
        for (int i = m0; i < order; ++i) k_t(i) = 0.0;
        const PpeLadder cut_ladder =
            ppe_backward(cut.C_rows, k_t, cut.transfers, cut.cbar, cut.Jbar_terminal);
        for (std::size_t t = 0; t < ladder.K_rows.size(); ++t)
            for (int i = 0; i < m0; ++i)
                CHECK(cut_ladder.K_rows[t](i) == ladder.K_rows[t](i));   // bitwise
    }
}

TEST_CASE("discounted recursion reaches the scalar fixed point") {
    // linear f = a x, c = q x^2: stationary K^2 = q / (1 - beta a^2)
    const double a = 0.8, q = 2.0, beta = 0.95;
    const Eigen::RowVectorXd c_row = make_row({0.0, q});
    const std::vector<PpeTransfer> transfer{build_ppe_transfer(make_row({a}), 2)};
    const int T = default_discount_horizon(beta);
    const DiscountedPpe d = ppe_discounted(c_row, 0.0, transfer, beta, T);
    CHECK(d.ladder.K_rows[0](1) ==
          doctest::Approx(q / (1.0 - beta * a * a)).epsilon(1e-9));
    CHECK(d.transient_index > 0);
    CHECK(d.transient_index < T);

    // cubic benchmark about the origin at beta = 0.9: K^2 -> 10/(1 - 0.9*0.81)
    const Eigen::RowVectorXd c_cubic = make_row({0.0, 10.0, 0.0});
    const std::vector<PpeTransfer> cubic_transfer{
        build_ppe_transfer(make_row({0.9, 0.0, 0.1}), 3)};
    const DiscountedPpe dc =
        ppe_discounted(c_cubic, 0.0, cubic_transfer, 0.9, default_discount_horizon(0.9));
    CHECK(dc.ladder.K_rows[0](1) ==
          doctest::Approx(10.0 / (1.0 - 0.9 * 0.81)).epsilon(1e-9));
}

TEST_CASE("discounted recursion: beta near zero keeps the cost row") {
    const Eigen::RowVectorXd c_row = make_row({0.3, 1.7});
    const std::vector<PpeTransfer> transfer{build_ppe_transfer(make_row({0.9}), 2)};
    const DiscountedPpe d = ppe_discounted(c_row, 0.1, transfer, 1e-9, 50);
    CHECK((d.ladder.K_rows[0] - c_row).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("discounted recursion flags non-convergence") {
    const Eigen::RowVectorXd c_row = make_row({0.0, 1.0});
    const std::vector<PpeTransfer> transfer{build_ppe_transfer(make_row({0.99}), 2)};
    CHECK_THROWS_AS((void)ppe_discounted(c_row, 0.0, transfer, 0.999, 3), ConvergenceError);
}

TEST_CASE("hermite conjugation destroys the triangular structure but not the spectrum") {
    const PpeTransfer t = build_ppe_transfer(make_row({0.9, 0.0, 0.1}), 3);
    const HermiteTransform h = hermite_matrix(3, 1.0);
    const Eigen::MatrixXd conj = hermite_conjugate(t, h);
    CHECK(conj.rows() == 4);

    double below = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < i; ++j) below = std::max(below, std::abs(conj(i, j)));
    CHECK(below > 1e-6);   // structure-loss witness

    // Similarity preserves eigenvalues; the embedded transfer is triangular
    // with diagonal {1, 0.9, 0.81, 0.729}.
    Eigen::EigenSolver<Eigen::MatrixXd> es(conj);
    std::vector<double> eigs;
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(es.eigenvalues()(i).imag()) < 1e-9);
        eigs.push_back(es.eigenvalues()(i).real());
    }
    std::sort(eigs.begin(), eigs.end());
    const std::vector<double> want = {0.729, 0.81, 0.9, 1.0};
    for (int i = 0; i < 4; ++i) CHECK(eigs[static_cast<std::size_t>(i)] ==
                                      doctest::Approx(want[static_cast<std::size_t>(i)])
                                          .epsilon(1e-9));
}

TEST_CASE("identity transform leaves the embedded transfer unchanged") {
    const PpeTransfer t = build_ppe_transfer(make_row({0.9, 0.0, 0.1}), 3);
    HermiteTransform ident;
    ident.H = Eigen::MatrixXd::Identity(4, 4);
    ident.H_inv = Eigen::MatrixXd::Identity(4, 4);
    ident.sigma_X2 = 1.0;
    const Eigen::MatrixXd conj = hermite_conjugate(t, ident);
    CHECK(conj(0, 0) == 1.0);
    CHECK((conj.block(1, 1, 3, 3) - t.B).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("running the recursion in hermite coordinates reproduces the ladder") {
    // rho_t = c_t H^{-1} + rho_{t+1} (H B_ext H^{-1}); mapping back with H
    // must land on the monomial ladder even though the conjugated transfers
    // are dense.
    const int order = 6, T = 3;
    PeProblem p = kCubic;
    p.horizon = T;
    const NominalTrajectory nominal =
        rollout_nominal(PolynomialDynamics{p.f, T}, 0.5, order);
    const PpeInputs in = expand_about_nominal(p, nominal, order);
    const PpeLadder ladder =
        ppe_backward(in.C_rows, in.K_terminal, in.transfers, in.cbar, in.Jbar_terminal);

    const HermiteTransform h = hermite_matrix(order, 1.0);
    auto extend = [&](const Eigen::RowVectorXd& k, double jbar) {
        Eigen::RowVectorXd r(order + 1);
        r(0) = jbar;
        r.tail(order) = k;
        return r;
    };
    Eigen::RowVectorXd rho =
        extend(in.K_terminal, in.Jbar_terminal) * h.H_inv;
    for (int t = T - 1; t >= 0; --t) {
        const Eigen::MatrixXd bh =
            hermite_conjugate(in.transfers[static_cast<std::size_t>(t)], h);
        rho = extend(in.C_rows[static_cast<std::size_t>(t)],
                     in.cbar[static_cast<std::size_t>(t)]) *
                  h.H_inv +
              rho * bh;
        const Eigen::RowVectorXd back = rho * h.H;
        const Eigen::RowVectorXd want =
            extend(ladder.K_rows[static_cast<std::size_t>(t)],
                   ladder.Jbar[static_cast<std::size_t>(t)]);
        for (int i = 0; i <= order; ++i)
            CHECK(std::abs(back(i) - want(i)) <= 1e-9 * (1.0 + std::abs(want(i))));
    }
}

TEST_CASE("stochastic closure: linear dynamics worked examples") {
    const double a = 0.7, s = 0.3;
    {
        const StochasticClosure c =
            stochastic_closure(make_row({a}), make_row({2.0, 5.0}), 1.5, s, 2);
        CHECK(c.G(0) == doctest::Approx(1.5 + 5.0 * s).epsilon(1e-14));
        CHECK(c.G(1) == doctest::Approx(2.0 * a).epsilon(1e-14));
        CHECK(c.G(2) == doctest::Approx(5.0 * a * a).epsilon(1e-14));
    }
    {
        // third-order term feeds the slope through the noise: G^1 = K1 a + 3 K3 a s
        const StochasticClosure c =
            stochastic_closure(make_row({a}), make_row({2.0, 5.0, 4.0}), 0.0, 1.0, 3);
        CHECK(c.G(1) == doctest::Approx(2.0 * a + 3.0 * 4.0 * a).epsilon(1e-14));
    }
}

TEST_CASE("zero-noise closure equals the deterministic row") {
    const Eigen::RowVectorXd f_row = make_row({0.9, 0.0, 0.1});
    const Eigen::RowVectorXd k_next = make_row({0.4, 10.0, -1.0});
    const PpeTransfer b = build_ppe_transfer(f_row, 3);
    const StochasticClosure c = stochastic_closure(f_row, k_next, 2.5, 0.0, 3);
    CHECK(c.G(0) == 2.5);
    for (int j = 1; j <= 3; ++j) {
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) acc += k_next(i) * b.B(i, j - 1);
        CHECK(c.G(j) == acc);   // bitwise
    }
}

TEST_CASE("stochastic sweep with zero noise is bit-identical to the deterministic one") {
    const int order = 6;
    const PpeInputs in = cubic_inputs_about_origin(order, 3);
    const PpeLadder det =
        ppe_backward(in.C_rows, in.K_terminal, in.transfers, in.cbar, in.Jbar_terminal);
    const PpeLadder sto = stochastic_ppe_backward(in.C_rows, in.K_terminal, in.F_rows, 0.0,
                                                  order, in.cbar, in.Jbar_terminal);
    for (std::size_t t = 0; t < det.K_rows.size(); ++t) {
        CHECK(det.Jbar[t] == sto.Jbar[t]);
        for (int i = 0; i < order; ++i) CHECK(det.K_rows[t](i) == sto.K_rows[t](i));
    }
}

TEST_CASE("linear-quadratic case: value recursion plus noise accrual") {
    const double a = 0.85, q = 3.0, q_t = 7.0, s = 0.04;
    const int order = 2, T = 5;
    const std::vector<Eigen::RowVectorXd> c_rows(
        static_cast<std::size_t>(T), make_row({0.0, q}));
    const std::vector<Eigen::RowVectorXd> f_rows(
        static_cast<std::size_t>(T), make_row({a, 0.0}));
    const std::vector<double> cbar(static_cast<std::size_t>(T), 0.0);
    const PpeLadder ladder = stochastic_ppe_backward(c_rows, make_row({0.0, q_t}), f_rows, s,
                                                     order, cbar, 0.0);
    double k2 = q_t, jbar = 0.0;
    for (int t = T - 1; t >= 0; --t) {
        jbar = jbar + k2 * s;
        k2 = q + a * a * k2;
        CHECK(ladder.K_rows[static_cast<std::size_t>(t)](1) ==
              doctest::Approx(k2).epsilon(1e-13));
        CHECK(ladder.Jbar[static_cast<std::size_t>(t)] ==
              doctest::Approx(jbar).epsilon(1e-13));
    }
}

TEST_CASE("cubic benchmark: one stochastic step from the terminal") {
    const int order = 6;
    const PpeInputs in = cubic_inputs_about_origin(order, 1);
    const PpeLadder ladder = stochastic_ppe_backward(in.C_rows, in.K_terminal, in.F_rows,
                                                     0.01, order, in.cbar, in.Jbar_terminal);
    // only K^2 = 10 contributes at order zero: Jbar_{T-1} = 0 + 10 * 0.01
    CHECK(ladder.Jbar[0] == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("with noise, higher orders do couple into the constant term") {
    const int order = 6;
    const PpeInputs in = cubic_inputs_about_origin(order, 3);
    const PpeLadder base = stochastic_ppe_backward(in.C_rows, in.K_terminal, in.F_rows, 0.01,
                                                   order, in.cbar, in.Jbar_terminal);
    Eigen::RowVectorXd bumped = in.K_terminal;
    bumped(3) += 1.0;   // perturb K^4 at the terminal time
    const PpeLadder draw = stochastic_ppe_backward(in.C_rows, bumped, in.F_rows, 0.01, order,
                                                   in.cbar, in.Jbar_terminal);
    CHECK(std::abs(draw.Jbar[0] - base.Jbar[0]) > 0.0);
}

TEST_CASE("full-order rows match the exact ladder about a nonzero nominal") {
    PeProblem p = kCubic;
    const int T = 3;
    p.horizon = T;
    const int order = 54;   // deg J_0
    const NominalTrajectory nominal = rollout_nominal(PolynomialDynamics{p.f, T}, 0.5, order);
    const PpeInputs in = expand_about_nominal(p, nominal, order);
    const PpeLadder ladder =
        ppe_backward(in.C_rows, in.K_terminal, in.transfers, in.cbar, in.Jbar_terminal);
    const CostToGoLadder exact = exact_backward(p.f, p.cost, p.terminal, T);
    for (int t = 0; t <= T; ++t) {
        const Polynomial local =
            exact.polys[static_cast<std::size_t>(t)].shifted(
                nominal.states[static_cast<std::size_t>(t)]);
        CHECK(std::abs(ladder.Jbar[static_cast<std::size_t>(t)] - local.coeff(0)) <=
              1e-9 * (1.0 + std::abs(local.coeff(0))));
        for (int i = 1; i <= order; ++i) {
            const double want = local.coeff(i);
            CHECK(std::abs(ladder.K_rows[static_cast<std::size_t>(t)](i - 1) - want) <=
                  1e-9 * (1.0 + std::abs(want)));
        }
    }
}

TEST_CASE("a nominal-centered expansion beats the static one at matched order") {
    // Contracting cubic from x0 = 2; compare local evaluation error of the
    // order-M ladder about the nominal vs the same order about the origin.
    const double dt = 0.25;
    PeProblem p;
    p.f = Polynomial({0.0, 1.0 - dt, 0.0, dt * 0.05});
    p.cost = Polynomial({0.0, 0.0, 1.0});
    p.terminal = Polynomial({0.0, 0.0, 1.0});
    const int T = 6;
    p.horizon = T;
    const CostToGoLadder exact = exact_backward(p.f, p.cost, p.terminal, T);

    const NominalTrajectory moving = rollout_nominal(PolynomialDynamics{p.f, T}, 2.0, 4);
    const NominalTrajectory still = rollout_nominal(PolynomialDynamics{p.f, T}, 0.0, 4);

    for (int order : {2, 3, 4}) {
        const PpeInputs in_tv = expand_about_nominal(p, moving, order);
        const PpeInputs in_st = expand_about_nominal(p, still, order);
        const PpeLadder tv = ppe_backward(in_tv.C_rows, in_tv.K_terminal, in_tv.transfers,
                                          in_tv.cbar, in_tv.Jbar_terminal);
        const PpeLadder st = ppe_backward(in_st.C_rows, in_st.K_terminal, in_st.transfers,
                                          in_st.cbar, in_st.Jbar_terminal);
        double err_tv = 0.0, err_st = 0.0;
        for (int t = 0; t < T; ++t) {
            const double xbar = moving.states[static_cast<std::size_t>(t)];
            for (int k = -10; k <= 10; ++k) {
                const double d = 0.01 * k;
                const double x = xbar + d;
                const double truth = exact.polys[static_cast<std::size_t>(t)](x);
                double jtv = tv.Jbar[static_cast<std::size_t>(t)];
                double jst = st.Jbar[static_cast<std::size_t>(t)];
                double ptv = 1.0, pst = 1.0;
                for (int i = 1; i <= order; ++i) {
                    ptv *= d;
                    pst *= x;   // static expansion sits at the origin
                    jtv += tv.K_rows[static_cast<std::size_t>(t)](i - 1) * ptv;
                    jst += st.K_rows[static_cast<std::size_t>(t)](i - 1) * pst;
                }
                err_tv = std::max(err_tv, std::abs(jtv - truth));
                err_st = std::max(err_st, std::abs(jst - truth));
            }
        }
        CHECK(err_tv < err_st);
    }
}
