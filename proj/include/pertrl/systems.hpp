#ifndef PERTRL_SYSTEMS_HPP
#define PERTRL_SYSTEMS_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "pertrl/poly.hpp"

namespace pertrl {

/// Rollouts abort with a DivergenceError once |x| exceeds this; the cubic
/// benchmark diverges outside its basin and experiments must fail loudly.
inline constexpr double kDivergenceBound = 1e8;

/// Autonomous (or closed-loop) polynomial step map x_{t+1} = f(x_t).
struct PolynomialDynamics {
    Polynomial f;
    int horizon = 1;
};

/// A policy-evaluation problem instance: step map, incremental cost and
/// terminal cost, all polynomial.
struct PeProblem {
    Polynomial f;
    Polynomial cost;
    Polynomial terminal;
    int horizon = 1;
};

/// The benchmark cubic map x_{t+1} = x + dt (-x + eps x^3) with quadratic
/// costs c x^2 and terminal alpha x^2.
PeProblem cubic_benchmark(double eps, double dt, double c, double alpha, int T);

/// Euler-Maruyama control-affine system
///   x_{t+1} = x + fbar(x) dt + gbar(x) u dt + eps sqrt(dt) w,
/// with incremental cost lbar(x) dt + (r/2) u^2 dt and terminal cost cT.
struct ControlAffineSystem {
    Polynomial fbar;
    Polynomial gbar;
    Polynomial lbar;
    Polynomial terminal_cost;
    double dt = 0.1;
    double eps = 0.0;
    double r = 1.0;
    int horizon = 1;

    /// dt above 0.1 puts the small-step feedback design on thin ice.
    bool coarse_dt() const { return dt > 0.1; }
};

/// Zero-noise reference trajectory plus the exact local expansion of the step
/// map about each state (dynamics_taylor[t] holds F_t^1..F_t^M, the
/// coefficients of delta^i in f(xbar_t + delta) - f(xbar_t)).
struct NominalTrajectory {
    std::vector<double> states;                        // size T+1
    std::vector<double> controls;                      // size T; empty if autonomous
    std::vector<Eigen::RowVectorXd> dynamics_taylor;   // size T
};

/// Deterministic rollout of the autonomous map; Taylor rows to the given
/// order, exact by shift-of-basis.
NominalTrajectory rollout_nominal(const PolynomialDynamics& system, double x0, int taylor_order);

/// Deterministic zero-noise rollout of the control-affine system under the
/// given open-loop controls (size == horizon).
NominalTrajectory rollout_nominal(const ControlAffineSystem& system, double x0,
                                  std::span<const double> controls, int taylor_order);

/// One Euler-Maruyama step; omega is a standard-normal draw.
double stochastic_step(const ControlAffineSystem& system, double x, double u, double omega);

}  // namespace pertrl

#endif
