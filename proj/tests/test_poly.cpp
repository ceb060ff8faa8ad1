#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pertrl/poly.hpp"
#include "pertrl/rng.hpp"

using namespace pertrl;

namespace {

Polynomial random_poly(std::mt19937_64& eng, int max_degree) {
    std::uniform_int_distribution<int> deg(0, max_degree);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    const int d = deg(eng);
    std::vector<double> c(static_cast<std::size_t>(d) + 1);
    for (double& v : c) v = coef(eng);
    if (c.back() == 0.0) c.back() = 1.0;
    return Polynomial(std::move(c));
}

}  // namespace

TEST_CASE("canonical form strips exact trailing zeros only") {
    const Polynomial p({1.0, 2.0, 0.0, 0.0});
    CHECK(p.degree() == 1);
    CHECK(p.coeff(1) == 2.0);
    const Polynomial tiny({0.0, 1e-300});
    CHECK(tiny.degree() == 1);   // no epsilon thresholding
    const Polynomial zero({0.0, 0.0});
    CHECK(zero.degree() == -1);
    CHECK(zero.is_zero());
    CHECK(zero(3.7) == 0.0);
}

TEST_CASE("shifted re-centers exactly") {
    const Polynomial p({1.0, -2.0, 0.5, 3.0});
    const Polynomial q = p.shifted(0.7);
    for (double u : {-1.0, -0.3, 0.0, 0.2, 1.5})
        CHECK(q(u) == doctest::Approx(p(0.7 + u)).epsilon(1e-13));
    // shifted(0) is the identity
    CHECK(p.shifted(0.0) == p);
}

TEST_CASE("compose: hand-expanded cubic example") {
    const Polynomial outer = Polynomial::monomial(2);            // x^2
    const Polynomial inner({0.0, 0.9, 0.0, 0.1});                // 0.9x + 0.1x^3
    const Polynomial got = compose(outer, inner);
    // (0.9x + 0.1x^3)^2 = 0.81x^2 + 0.18x^4 + 0.01x^6
    CHECK(got.degree() == 6);
    CHECK(got.coeff(2) == doctest::Approx(0.81).epsilon(1e-14));
    CHECK(got.coeff(4) == doctest::Approx(0.18).epsilon(1e-14));
    CHECK(got.coeff(6) == doctest::Approx(0.01).epsilon(1e-14));
    // and agrees pointwise with the direct evaluation
    std::mt19937_64 eng(42);
    std::uniform_real_distribution<double> pt(-2.0, 2.0);
    for (int i = 0; i < 5; ++i) {
        const double x = pt(eng);
        CHECK(got(x) == doctest::Approx(outer(inner(x))).epsilon(1e-12));
    }
}

TEST_CASE("compose: identity and truncation") {
    const Polynomial p({1.0, 2.0, 3.0});
    CHECK(compose(Polynomial::monomial(1), p) == p);
    // x^3 o 2x truncated to degree 2 drops everything
    const Polynomial t = compose(Polynomial::monomial(3), Polynomial({0.0, 2.0}), 2);
    CHECK(t.is_zero());
}

TEST_CASE("compose agrees with evaluation at 100 random points") {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> pt(-1.2, 1.2);
    for (int rep = 0; rep < 10; ++rep) {
        const Polynomial outer = random_poly(eng, 4);
        const Polynomial inner = random_poly(eng, 3);   // composed degree <= 12
        const Polynomial comp = compose(outer, inner);
        for (int i = 0; i < 100; ++i) {
            const double x = pt(eng);
            const double direct = outer(inner(x));
            const double via = comp(x);
            CHECK(std::abs(via - direct) <= 1e-10 * (1.0 + std::abs(direct)));
        }
    }
}

TEST_CASE("double_factorial") {
    CHECK(double_factorial(3) == 3);
    CHECK(double_factorial(7) == 105);
    CHECK(double_factorial(-1) == 1);
    CHECK(double_factorial(0) == 1);
    CHECK(double_factorial(11) == 10395);
    CHECK_THROWS_AS((void)double_factorial(4), std::invalid_argument);
    CHECK_THROWS_AS((void)double_factorial(-3), std::invalid_argument);
}

TEST_CASE("gram_moment_variance: closed-form values") {
    CHECK(gram_moment_variance(1, 1.0) == doctest::Approx(2.0));
    CHECK(gram_moment_variance(2, 1.0) == doctest::Approx(96.0));
    CHECK(gram_moment_variance(2, 4.0) == doctest::Approx(24576.0));
}

TEST_CASE("gram_moment_variance matches a Monte-Carlo estimate of Var(x^4)") {
    // Independent oracle: 10^6-sample empirical variance of x^{2M} at M=2,
    // sigma_X^2 = 4.
    rng::NormalStream stream(12345);
    const int n = 1000000;
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = stream.normal(2.0);
        const double y = x * x * x * x;
        mean += y;
        m2 += y * y;
    }
    mean /= n;
    const double var = m2 / n - mean * mean;
    CHECK(gram_moment_variance(2, 4.0) == doctest::Approx(var).epsilon(0.05));
}

TEST_CASE("gram_moment_variance equals the moment-table route to machine precision") {
    for (double s2 : {0.25, 1.0, 2.0})
        for (int M = 1; M <= 6; ++M) {
            const GaussianMomentTable table(4 * M, s2);
            const double via_table =
                table.moment(4 * M) - table.moment(2 * M) * table.moment(2 * M);
            CHECK(gram_moment_variance(M, s2) ==
                  doctest::Approx(via_table).epsilon(1e-13));
        }
}

TEST_CASE("moment table basics") {
    const GaussianMomentTable t(8, 1.0);
    CHECK(t.moment(0) == 1.0);
    CHECK(t.moment(1) == 0.0);
    CHECK(t.moment(2) == 1.0);
    CHECK(t.moment(4) == 3.0);
    CHECK(t.moment(6) == 15.0);
    CHECK(t.moment(8) == 105.0);
    const GaussianMomentTable s(4, 0.25);
    CHECK(s.moment(4) == doctest::Approx(3.0 * 0.0625));
}

TEST_CASE("exact_gram: Gaussian moment matrices") {
    const Eigen::MatrixXd g2 = exact_gram(2, false, 1.0);
    CHECK(g2(0, 0) == 1.0);
    CHECK(g2(0, 1) == 0.0);
    CHECK(g2(1, 1) == 3.0);

    const Eigen::MatrixXd g3 = exact_gram(3, false, 1.0);
    CHECK(g3(0, 2) == 3.0);
    CHECK(g3(1, 1) == 3.0);
    CHECK(g3(2, 2) == 15.0);

    // Condition number oracle: the odd block [[1,3],[3,15]] has eigenvalues
    // 8 +- sqrt(58); the even block is the single entry 3.
    const double lam_hi = 8.0 + std::sqrt(58.0);
    const double lam_lo = 8.0 - std::sqrt(58.0);
    CHECK(sym_condition_number(g3) == doctest::Approx(lam_hi / lam_lo).epsilon(1e-10));
    CHECK(lam_hi / lam_lo == doctest::Approx(40.7).epsilon(0.01));
}

TEST_CASE("empirical Gram converges to exact_gram within 3 standard errors") {
    const int R = 1000000;
    const int N = 3;
    rng::NormalStream stream(99);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(N, N);
    for (int k = 0; k < R; ++k) {
        const double x = stream.normal();
        double p[4] = {1.0, x, x * x, x * x * x};
        for (int i = 1; i <= N; ++i)
            for (int j = 1; j <= N; ++j) g(i - 1, j - 1) += p[i] * p[j];
    }
    g /= R;
    const Eigen::MatrixXd exact = exact_gram(N, false, 1.0);
    const GaussianMomentTable table(2 * 2 * N, 1.0);
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j) {
            const int p = i + j;
            // Var(x^p) = m_{2p} - m_p^2, standard error of the mean over R.
            const double var = table.moment(2 * p) - table.moment(p) * table.moment(p);
            const double se = std::sqrt(var / R);
            CHECK(std::abs(g(i - 1, j - 1) - exact(i - 1, j - 1)) <= 3.0 * se);
        }
}

TEST_CASE("hermite_matrix: rows, triangularity, orthonormality") {
    const HermiteTransform h2 = hermite_matrix(2, 1.0);
    CHECK(h2.H(0, 0) == doctest::Approx(1.0));
    CHECK(h2.H(1, 1) == doctest::Approx(1.0));
    CHECK(h2.H(2, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(h2.H(2, 1) == doctest::Approx(0.0));
    CHECK(h2.H(2, 2) == doctest::Approx(1.0 / std::sqrt(2.0)));

    const HermiteTransform h3 = hermite_matrix(3, 1.0);
    // he_3 = x^3 - 3x, normalized by sqrt(6)
    CHECK(h3.H(3, 0) == doctest::Approx(0.0));
    CHECK(h3.H(3, 1) == doctest::Approx(-3.0 / std::sqrt(6.0)));
    CHECK(h3.H(3, 2) == doctest::Approx(0.0));
    CHECK(h3.H(3, 3) == doctest::Approx(1.0 / std::sqrt(6.0)));

    for (double s2 : {0.25, 1.0, 4.0}) {
        const int N = 6;
        const HermiteTransform h = hermite_matrix(N, s2);
        for (int i = 0; i <= N; ++i) {
            CHECK(h.H(i, i) > 0.0);
            for (int j = i + 1; j <= N; ++j) CHECK(h.H(i, j) == 0.0);
        }
        const Eigen::MatrixXd gram = exact_gram(N, true, s2);
        const Eigen::MatrixXd should_be_identity = h.H * gram * h.H.transpose();
        CHECK((should_be_identity - Eigen::MatrixXd::Identity(N + 1, N + 1))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
        const Eigen::MatrixXd round_trip = h.H * h.H_inv;
        CHECK((round_trip - Eigen::MatrixXd::Identity(N + 1, N + 1)).cwiseAbs().maxCoeff() <
              1e-12);
    }
}
