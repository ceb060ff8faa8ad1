#include "pertrl/systems.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pertrl/errors.hpp"

namespace pertrl {

namespace {

void check_in_bounds(double x, int t) {
    if (!std::isfinite(x) || std::abs(x) > kDivergenceBound)
        throw DivergenceError("rollout diverged at t = " + std::to_string(t), t, x);
}

/// F_t^1..F_t^M of the step map about xbar (constant term dropped).
Eigen::RowVectorXd taylor_row(const Polynomial& step_map, double xbar, int order) {
    const Polynomial local = step_map.shifted(xbar);
    Eigen::RowVectorXd row(order);
    for (int i = 1; i <= order; ++i) row(i - 1) = local.coeff(i);
    return row;
}

}  // namespace

PeProblem cubic_benchmark(double eps, double dt, double c, double alpha, int T) {
    if (dt <= 0.0) throw std::invalid_argument("cubic_benchmark: dt must be > 0");
    PeProblem p;
    p.f = Polynomial({0.0, 1.0 - dt, 0.0, dt * eps});
    p.cost = Polynomial({0.0, 0.0, c});
    p.terminal = Polynomial({0.0, 0.0, alpha});
    p.horizon = T;
    return p;
}

NominalTrajectory rollout_nominal(const PolynomialDynamics& system, double x0, int taylor_order) {
    if (taylor_order < 1) throw std::invalid_argument("rollout_nominal: taylor_order >= 1");
    NominalTrajectory traj;
    traj.states.reserve(static_cast<std::size_t>(system.horizon) + 1);
    traj.dynamics_taylor.reserve(static_cast<std::size_t>(system.horizon));
    double x = x0;
    check_in_bounds(x, 0);
    traj.states.push_back(x);
    for (int t = 0; t < system.horizon; ++t) {
        traj.dynamics_taylor.push_back(taylor_row(system.f, x, taylor_order));
        x = system.f(x);
        check_in_bounds(x, t + 1);
        traj.states.push_back(x);
    }
    return traj;
}

NominalTrajectory rollout_nominal(const ControlAffineSystem& system, double x0,
                                  std::span<const double> controls, int taylor_order) {
    if (taylor_order < 1) throw std::invalid_argument("rollout_nominal: taylor_order >= 1");
    if (static_cast<int>(controls.size()) != system.horizon)
        throw DimensionError("rollout_nominal: controls size must equal horizon");
    NominalTrajectory traj;
    traj.states.reserve(static_cast<std::size_t>(system.horizon) + 1);
    traj.controls.assign(controls.begin(), controls.end());
    double x = x0;
    check_in_bounds(x, 0);
    traj.states.push_back(x);
    const Polynomial ident = Polynomial::monomial(1);
    for (int t = 0; t < system.horizon; ++t) {
        const double u = controls[static_cast<std::size_t>(t)];
        // Step map at fixed u_t is itself a polynomial in x.
        const Polynomial step = ident + system.dt * system.fbar + (system.dt * u) * system.gbar;
        traj.dynamics_taylor.push_back(taylor_row(step, x, taylor_order));
        x = x + system.fbar(x) * system.dt + system.gbar(x) * u * system.dt;
        check_in_bounds(x, t + 1);
        traj.states.push_back(x);
    }
    return traj;
}

double stochastic_step(const ControlAffineSystem& system, double x, double u, double omega) {
    return x + system.fbar(x) * system.dt + system.gbar(x) * u * system.dt +
           system.eps * std::sqrt(system.dt) * omega;
}

}  // namespace pertrl
