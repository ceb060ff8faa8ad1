#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pertrl/errors.hpp"
#include "pertrl/rng.hpp"
#include "pertrl/systems.hpp"

using namespace pertrl;

TEST_CASE("cubic benchmark map and costs") {
    const PeProblem p = cubic_benchmark(1.0, 0.1, 10.0, 10.0, 3);
    CHECK(p.f.coeff(1) == doctest::Approx(0.9));
    CHECK(p.f.coeff(2) == 0.0);
    CHECK(p.f.coeff(3) == doctest::Approx(0.1));
    CHECK(p.f.degree() == 3);
    CHECK(p.cost.coeff(2) == 10.0);
    CHECK(p.terminal.coeff(2) == 10.0);

    // x = 1 is a fixed point: -1 + 1^3 = 0.
    CHECK(p.f(1.0) == doctest::Approx(1.0));
    CHECK(p.f(0.5) == doctest::Approx(0.4625));
}

TEST_CASE("rollout from the origin: Taylor rows read off the map") {
    const PeProblem p = cubic_benchmark(1.0, 0.1, 10.0, 10.0, 4);
    const NominalTrajectory traj =
        rollout_nominal(PolynomialDynamics{p.f, 4}, 0.0, 5);
    for (double x : traj.states) CHECK(x == 0.0);
    for (const auto& row : traj.dynamics_taylor) {
        CHECK(row(0) == doctest::Approx(0.9));
        CHECK(row(1) == 0.0);
        CHECK(row(2) == doctest::Approx(0.1));
        CHECK(row(3) == 0.0);
        CHECK(row(4) == 0.0);
    }
}

TEST_CASE("rollout from x0 = 0.5 over two steps") {
    const PeProblem p = cubic_benchmark(1.0, 0.1, 10.0, 10.0, 2);
    const NominalTrajectory traj = rollout_nominal(PolynomialDynamics{p.f, 2}, 0.5, 3);
    // direct arithmetic
    const double x1 = 0.9 * 0.5 + 0.1 * 0.5 * 0.5 * 0.5;
    const double x2 = 0.9 * x1 + 0.1 * x1 * x1 * x1;
    CHECK(traj.states[0] == 0.5);
    CHECK(traj.states[1] == doctest::Approx(x1).epsilon(1e-15));
    CHECK(traj.states[2] == doctest::Approx(x2).epsilon(1e-15));
    CHECK(traj.states[1] == doctest::Approx(0.4625));
}

TEST_CASE("linear dynamics have constant first-order rows") {
    const Polynomial f({0.0, 0.7});
    const NominalTrajectory traj = rollout_nominal(PolynomialDynamics{f, 5}, 1.3, 3);
    for (const auto& row : traj.dynamics_taylor) {
        CHECK(row(0) == doctest::Approx(0.7));
        CHECK(row(1) == 0.0);
        CHECK(row(2) == 0.0);
    }
}

TEST_CASE("Taylor rows reconstruct the map pointwise") {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> coef(-0.5, 0.5);
    std::uniform_real_distribution<double> delta(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> c(5);
        for (double& v : c) v = coef(eng);
        const Polynomial f(std::move(c));
        if (f.degree() < 1) continue;
        const NominalTrajectory traj = rollout_nominal(PolynomialDynamics{f, 3}, 0.3,
                                                       std::max(1, f.degree()));
        for (std::size_t t = 0; t < traj.dynamics_taylor.size(); ++t) {
            const double xbar = traj.states[t];
            const auto& row = traj.dynamics_taylor[t];
            for (int i = 0; i < 7; ++i) {
                const double d = delta(eng);
                double recon = f(xbar);
                double p = 1.0;
                for (int k = 1; k <= row.size(); ++k) {
                    p *= d;
                    recon += row(k - 1) * p;
                }
                CHECK(std::abs(recon - f(xbar + d)) <= 1e-12 * (1.0 + std::abs(f(xbar + d))));
            }
        }
    }
}

TEST_CASE("identical rollouts are bit-identical") {
    const PeProblem p = cubic_benchmark(1.0, 0.1, 10.0, 10.0, 6);
    const NominalTrajectory a = rollout_nominal(PolynomialDynamics{p.f, 6}, 0.37, 4);
    const NominalTrajectory b = rollout_nominal(PolynomialDynamics{p.f, 6}, 0.37, 4);
    for (std::size_t i = 0; i < a.states.size(); ++i) CHECK(a.states[i] == b.states[i]);
}

TEST_CASE("divergence guard reports the first offending step") {
    // eps > 0 cubic blows up from far outside the basin
    const PeProblem p = cubic_benchmark(1.0, 0.1, 10.0, 10.0, 50);
    CHECK_THROWS_AS((void)rollout_nominal(PolynomialDynamics{p.f, 50}, 50.0, 3),
                    DivergenceError);
    try {
        (void)rollout_nominal(PolynomialDynamics{p.f, 50}, 50.0, 3);
    } catch (const DivergenceError& e) {
        CHECK(e.time_index() >= 1);
    }
}

TEST_CASE("stochastic step") {
    ControlAffineSystem sys;
    sys.fbar = Polynomial({0.0, -1.0});   // -x
    sys.gbar = Polynomial({1.0});
    sys.lbar = Polynomial({0.0, 0.0, 1.0});
    sys.terminal_cost = Polynomial({0.0, 0.0, 1.0});
    sys.dt = 0.1;
    sys.eps = 0.5;
    sys.horizon = 1;

    // worked example: 0.9 + 0.5 sqrt(0.1)
    CHECK(stochastic_step(sys, 1.0, 0.0, 1.0) ==
          doctest::Approx(0.9 + 0.5 * std::sqrt(0.1)).epsilon(1e-14));

    // eps = 0 reduces to the Euler step
    sys.eps = 0.0;
    CHECK(stochastic_step(sys, 1.0, 0.3, 1.7) ==
          doctest::Approx(1.0 - 0.1 + 0.3 * 0.1).epsilon(1e-14));

    // fixed point with u = 0, eps = 0 stays put
    CHECK(stochastic_step(sys, 0.0, 0.0, 0.4) == 0.0);
}

TEST_CASE("seeded stochastic rollouts are reproducible; eps = 0 matches nominal") {
    ControlAffineSystem sys;
    sys.fbar = Polynomial({0.0, -1.0, 0.0, 0.2});
    sys.gbar = Polynomial({1.0});
    sys.lbar = Polynomial({0.0, 0.0, 1.0});
    sys.terminal_cost = Polynomial({0.0, 0.0, 1.0});
    sys.dt = 0.1;
    sys.eps = 0.3;
    sys.horizon = 15;

    std::vector<double> controls(15, 0.05);
    auto roll = [&](std::uint64_t seed, double eps) {
        ControlAffineSystem s = sys;
        s.eps = eps;
        rng::NormalStream stream(seed);
        std::vector<double> xs{0.8};
        for (int t = 0; t < s.horizon; ++t)
            xs.push_back(stochastic_step(s, xs.back(), controls[static_cast<std::size_t>(t)],
                                         stream.normal()));
        return xs;
    };
    const auto a = roll(17, 0.3);
    const auto b = roll(17, 0.3);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    const auto quiet = roll(17, 0.0);
    const NominalTrajectory nominal = rollout_nominal(sys, 0.8, controls, 2);
    for (std::size_t i = 0; i < quiet.size(); ++i)
        CHECK(quiet[i] == doctest::Approx(nominal.states[i]).epsilon(1e-15));
}
