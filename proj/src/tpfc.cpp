#include "pertrl/tpfc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pertrl/errors.hpp"
#include "pertrl/rng.hpp"

namespace pertrl {

namespace {

struct RolloutResult {
    double cost = std::numeric_limits<double>::quiet_NaN();
    bool diverged = false;
};

bool out_of_bounds(double x) { return !std::isfinite(x) || std::abs(x) > kDivergenceBound; }

/// Open-loop rollout cost; diverged rollouts report +inf so a line search
/// simply rejects them.
double open_loop_cost(const ControlAffineSystem& sys, double x0, std::span<const double> u,
                      std::vector<double>* states_out = nullptr) {
    double x = x0;
    double cost = 0.0;
    if (states_out != nullptr) {
        states_out->clear();
        states_out->push_back(x);
    }
    for (int t = 0; t < sys.horizon; ++t) {
        const double ut = u[static_cast<std::size_t>(t)];
        cost += sys.lbar(x) * sys.dt + 0.5 * sys.r * ut * ut * sys.dt;
        x = x + sys.fbar(x) * sys.dt + sys.gbar(x) * ut * sys.dt;
        if (out_of_bounds(x)) return std::numeric_limits<double>::infinity();
        if (states_out != nullptr) states_out->push_back(x);
    }
    return cost + sys.terminal_cost(x);
}

/// Closed-loop rollout under the policy on one noise stream.
RolloutResult closed_loop_cost(const ControlAffineSystem& sys, const PolicyUnderTest& policy,
                               double eps, rng::NormalStream& stream) {
    ControlAffineSystem noisy = sys;
    noisy.eps = eps;
    double x = policy.nominal_states.front();
    double cost = 0.0;
    for (int t = 0; t < sys.horizon; ++t) {
        const double u = policy.control(t, x);
        cost += sys.lbar(x) * sys.dt + 0.5 * sys.r * u * u * sys.dt;
        x = stochastic_step(noisy, x, u, stream.normal());
        if (out_of_bounds(x)) return {std::numeric_limits<double>::quiet_NaN(), true};
    }
    return {cost + sys.terminal_cost(x), false};
}

}  // namespace

PolicyUnderTest PolicyUnderTest::linear_truncation() const {
    PolicyUnderTest p = *this;
    p.higher_order = Polynomial();
    return p;
}

double PolicyUnderTest::control(int t, double x) const {
    const double dx = x - nominal_states[static_cast<std::size_t>(t)];
    double u = nominal_controls[static_cast<std::size_t>(t)] +
               gains[static_cast<std::size_t>(t)] * dx;
    if (!higher_order.is_zero()) u += higher_order(dx);
    return u;
}

PolicyUnderTest policy_from_design(const TpfcDesign& design, Polynomial higher_order) {
    if (!higher_order.is_zero() &&
        (higher_order.coeff(0) != 0.0 || higher_order.coeff(1) != 0.0))
        throw std::invalid_argument("policy_from_design: S(dx) must start at dx^2");
    PolicyUnderTest p;
    p.nominal_states = design.nominal.states;
    p.nominal_controls = design.nominal.controls;
    p.gains = design.gains;
    p.higher_order = std::move(higher_order);
    return p;
}

NominalTrajectory optimize_nominal(const ControlAffineSystem& sys, double x0, int max_iters,
                                   double tol) {
    if (sys.r <= 0.0) throw std::invalid_argument("optimize_nominal: r must be > 0");
    const int T = sys.horizon;
    const Polynomial dl = sys.lbar.derivative();
    const Polynomial df = sys.fbar.derivative();
    const Polynomial dg = sys.gbar.derivative();
    const Polynomial dcT = sys.terminal_cost.derivative();

    std::vector<double> u(static_cast<std::size_t>(T), 0.0);
    std::vector<double> states;
    double cost = open_loop_cost(sys, x0, u, &states);
    if (!std::isfinite(cost))
        throw DivergenceError("optimize_nominal: initial rollout diverged", 0, x0);

    std::vector<double> grad(static_cast<std::size_t>(T), 0.0);
    double step = 1.0;
    double grad_norm = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iters; ++iter) {
        // Adjoint sweep for dJ/du_t.
        double lambda = dcT(states.back());
        for (int t = T - 1; t >= 0; --t) {
            const double x = states[static_cast<std::size_t>(t)];
            const double ut = u[static_cast<std::size_t>(t)];
            grad[static_cast<std::size_t>(t)] =
                sys.r * ut * sys.dt + lambda * sys.gbar(x) * sys.dt;
            lambda = dl(x) * sys.dt + lambda * (1.0 + df(x) * sys.dt + dg(x) * ut * sys.dt);
        }
        grad_norm = 0.0;
        double grad_sq = 0.0;
        for (double g : grad) {
            grad_norm = std::max(grad_norm, std::abs(g));
            grad_sq += g * g;
        }
        if (grad_norm <= tol) {
            NominalTrajectory nominal = rollout_nominal(sys, x0, u, 2);
            return nominal;
        }

        // Backtracking line search (Armijo).
        std::vector<double> trial(u.size());
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] - step * grad[i];
            const double trial_cost = open_loop_cost(sys, x0, trial);
            if (trial_cost <= cost - 1e-4 * step * grad_sq) {
                u = trial;
                cost = open_loop_cost(sys, x0, u, &states);
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            throw ConvergenceError("optimize_nominal: line search stalled, |grad| = " +
                                       std::to_string(grad_norm),
                                   grad_norm);
    }
    throw ConvergenceError("optimize_nominal: no convergence after " +
                               std::to_string(max_iters) + " iterations, |grad| = " +
                               std::to_string(grad_norm),
                           grad_norm);
}

TpfcDesign tpfc_backward(const ControlAffineSystem& sys, const NominalTrajectory& nominal) {
    const int T = static_cast<int>(nominal.controls.size());
    if (static_cast<int>(nominal.states.size()) != T + 1)
        throw DimensionError("tpfc_backward: nominal states/controls length mismatch");

    const Polynomial dl = sys.lbar.derivative();
    const Polynomial d2l = dl.derivative();
    const Polynomial df = sys.fbar.derivative();
    const Polynomial d2f = df.derivative();
    const Polynomial dg = sys.gbar.derivative();
    const Polynomial d2g = dg.derivative();
    const Polynomial dcT = sys.terminal_cost.derivative();
    const Polynomial d2cT = dcT.derivative();

    TpfcDesign design;
    design.nominal = nominal;
    design.costate.assign(static_cast<std::size_t>(T) + 1, 0.0);
    design.hessian.assign(static_cast<std::size_t>(T) + 1, 0.0);
    design.gains.assign(static_cast<std::size_t>(T), 0.0);

    const double xT = nominal.states.back();
    design.costate[static_cast<std::size_t>(T)] = dcT(xT);
    design.hessian[static_cast<std::size_t>(T)] = d2cT(xT);

    for (int t = T - 1; t >= 0; --t) {
        const double x = nominal.states[static_cast<std::size_t>(t)];
        const double u = nominal.controls[static_cast<std::size_t>(t)];
        const double g = sys.gbar(x);
        const double gx = dg(x);
        const double a_open = df(x) + gx * u;          // open-loop linearization
        const double a_quad = df(x) + 2.0 * gx * u;    // appears in the Hessian flow
        const double G_next = design.costate[static_cast<std::size_t>(t) + 1];
        const double P_next = design.hessian[static_cast<std::size_t>(t) + 1];

        design.costate[static_cast<std::size_t>(t)] =
            G_next + sys.dt * (dl(x) + a_open * G_next);
        design.hessian[static_cast<std::size_t>(t)] =
            P_next + sys.dt * (d2l(x) + 2.0 * a_quad * P_next - (g * g / sys.r) * P_next * P_next +
                               (d2f(x) + d2g(x) * u - gx * gx * G_next / sys.r) * G_next);
        if (!std::isfinite(design.hessian[static_cast<std::size_t>(t)]))
            throw DivergenceError("tpfc_backward: Hessian overflow at t = " + std::to_string(t),
                                  t, design.hessian[static_cast<std::size_t>(t)]);
        design.gains[static_cast<std::size_t>(t)] =
            -(g / sys.r) * design.hessian[static_cast<std::size_t>(t)];
    }
    return design;
}

std::vector<double> rollout_cost_batch(const ControlAffineSystem& sys,
                                       const PolicyUnderTest& policy, double eps,
                                       int n_rollouts, std::uint64_t seed, bool parallel) {
    if (policy.horizon() != sys.horizon)
        throw DimensionError("rollout_cost_batch: policy horizon != system horizon");
    std::vector<double> costs(static_cast<std::size_t>(n_rollouts));
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < n_rollouts; ++i) {
        rng::NormalStream stream(
            rng::derive(seed, rng::Stream::McPath, {static_cast<std::uint64_t>(i)}));
        costs[static_cast<std::size_t>(i)] = closed_loop_cost(sys, policy, eps, stream).cost;
    }
    return costs;
}

McCostSummary mc_evaluate(const ControlAffineSystem& sys, const PolicyUnderTest& policy,
                          double eps, int n_rollouts, std::uint64_t seed, bool parallel) {
    if (n_rollouts < 2) throw std::invalid_argument("mc_evaluate: n_rollouts must be >= 2");
    if (policy.horizon() != sys.horizon)
        throw DimensionError("mc_evaluate: policy horizon != system horizon");

    McCostSummary s;
    s.eps = eps;
    s.n_rollouts = n_rollouts;
    s.seed = seed;
    {
        rng::NormalStream unused(0);
        const RolloutResult det = closed_loop_cost(sys, policy, 0.0, unused);
        if (det.diverged)
            throw DivergenceError("mc_evaluate: deterministic closed loop diverged", 0, eps);
        s.nominal_cost = det.cost;
    }
    if (eps == 0.0) {
        // Every path reproduces the deterministic rollout; summing and
        // re-dividing would only inject rounding.
        s.mean_cost = s.nominal_cost;
        s.var_cost = 0.0;
        s.mean_abs_offset = 0.0;
        return s;
    }

    const std::vector<double> costs = rollout_cost_batch(sys, policy, eps, n_rollouts, seed,
                                                         parallel);
    // Fixed-order reduction over path index.
    double mean = 0.0;
    int used = 0;
    for (double c : costs) {
        if (std::isnan(c)) {
            ++s.diverged;
            continue;
        }
        mean += c;
        ++used;
    }
    if (used < 2)
        throw DivergenceError("mc_evaluate: fewer than two rollouts survived", 0, eps);
    mean /= used;
    double var = 0.0;
    for (double c : costs)
        if (!std::isnan(c)) var += (c - mean) * (c - mean);
    var /= (used - 1);

    s.mean_cost = mean;
    s.var_cost = var;
    s.mean_abs_offset = std::abs(mean - s.nominal_cost);
    return s;
}

PairedGap paired_gap(const ControlAffineSystem& sys, const PolicyUnderTest& a,
                     const PolicyUnderTest& b, double eps, int n_rollouts, std::uint64_t seed,
                     bool parallel) {
    const std::vector<double> cost_a = rollout_cost_batch(sys, a, eps, n_rollouts, seed,
                                                          parallel);
    const std::vector<double> cost_b = rollout_cost_batch(sys, b, eps, n_rollouts, seed,
                                                          parallel);
    PairedGap g;
    double mean = 0.0;
    for (int i = 0; i < n_rollouts; ++i) {
        const double d = cost_a[static_cast<std::size_t>(i)] -
                         cost_b[static_cast<std::size_t>(i)];
        if (std::isnan(d)) {
            ++g.diverged;
            continue;
        }
        mean += d;
        ++g.used_paths;
    }
    if (g.used_paths < 2)
        throw DivergenceError("paired_gap: fewer than two shared rollouts survived", 0, eps);
    mean /= g.used_paths;
    double var = 0.0;
    for (int i = 0; i < n_rollouts; ++i) {
        const double d = cost_a[static_cast<std::size_t>(i)] -
                         cost_b[static_cast<std::size_t>(i)];
        if (!std::isnan(d)) var += (d - mean) * (d - mean);
    }
    var /= (g.used_paths - 1);
    g.mean_gap = mean;
    g.std_error = std::sqrt(var / g.used_paths);
    return g;
}

SlopeFit fit_loglog(std::span<const std::array<double, 2>> points) {
    const int n = static_cast<int>(points.size());
    if (n < 2) throw DimensionError("fit_loglog: need at least two points");
    double sx = 0.0, sy = 0.0;
    for (const auto& p : points) {
        sx += std::log(p[0]);
        sy += std::log(p[1]);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : points) {
        const double dx = std::log(p[0]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(p[1]) - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.points.assign(points.begin(), points.end());
    if (n > 2) {
        double ss_res = 0.0;
        for (const auto& p : points) {
            const double pred = my + fit.slope * (std::log(p[0]) - mx);
            const double r = std::log(p[1]) - pred;
            ss_res += r * r;
        }
        fit.std_error = std::sqrt(ss_res / (n - 2) / sxx);
    }
    return fit;
}

EpsScalingResult eps_scaling(const ControlAffineSystem& sys, const PolicyUnderTest& policy,
                             std::span<const double> eps_grid, int n_rollouts,
                             std::uint64_t seed, bool parallel) {
    if (eps_grid.size() < 4)
        throw std::invalid_argument("eps_scaling: need at least four grid points");

    const PolicyUnderTest linear = policy.linear_truncation();
    EpsScalingResult result;
    std::vector<std::array<double, 2>> pts_offset, pts_var, pts_gap;
    for (double eps : eps_grid) {
        const McCostSummary full = mc_evaluate(sys, policy, eps, n_rollouts, seed, parallel);
        const PairedGap gap = paired_gap(sys, policy, linear, eps, n_rollouts, seed, parallel);
        const int diverged = std::max(full.diverged, gap.diverged);
        result.rows.push_back({eps, full.mean_abs_offset, full.var_cost,
                               std::abs(gap.mean_gap), gap.std_error, diverged});
        if (static_cast<double>(diverged) > 0.01 * n_rollouts) {
            result.excluded_eps.push_back(eps);
            continue;
        }
        pts_offset.push_back({eps, full.mean_abs_offset});
        pts_var.push_back({eps, full.var_cost});
        pts_gap.push_back({eps, std::abs(gap.mean_gap)});
    }
    result.mean_offset = fit_loglog(pts_offset);
    result.cost_variance = fit_loglog(pts_var);
    result.truncation_gap = fit_loglog(pts_gap);
    return result;
}

std::vector<double> closed_loop_linearization(const ControlAffineSystem& sys,
                                              const PolicyUnderTest& policy) {
    const Polynomial df = sys.fbar.derivative();
    const Polynomial dg = sys.gbar.derivative();
    std::vector<double> abar(static_cast<std::size_t>(policy.horizon()));
    for (int t = 0; t < policy.horizon(); ++t) {
        const double x = policy.nominal_states[static_cast<std::size_t>(t)];
        const double u = policy.nominal_controls[static_cast<std::size_t>(t)];
        const double k = policy.gains[static_cast<std::size_t>(t)];
        abar[static_cast<std::size_t>(t)] =
            1.0 + (df(x) + dg(x) * u + sys.gbar(x) * k) * sys.dt;
    }
    return abar;
}

std::vector<double> closed_loop_quadratic(const ControlAffineSystem& sys,
                                          const PolicyUnderTest& policy) {
    const Polynomial df = sys.fbar.derivative();
    const Polynomial d2f = df.derivative();
    const Polynomial dg = sys.gbar.derivative();
    const Polynomial d2g = dg.derivative();
    const double s2 = policy.higher_order.coeff(2);
    std::vector<double> quad(static_cast<std::size_t>(policy.horizon()));
    for (int t = 0; t < policy.horizon(); ++t) {
        const double x = policy.nominal_states[static_cast<std::size_t>(t)];
        const double u = policy.nominal_controls[static_cast<std::size_t>(t)];
        const double k = policy.gains[static_cast<std::size_t>(t)];
        quad[static_cast<std::size_t>(t)] =
            (0.5 * d2f(x) + 0.5 * d2g(x) * u + dg(x) * k + sys.gbar(x) * s2) * sys.dt;
    }
    return quad;
}

RolloutDecomposition decompose_rollout(const ControlAffineSystem& sys,
                                       const PolicyUnderTest& policy, double eps,
                                       std::uint64_t seed, std::uint64_t path_index) {
    const int T = policy.horizon();
    const std::vector<double> abar = closed_loop_linearization(sys, policy);
    rng::NormalStream stream(rng::derive(seed, rng::Stream::McPath, {path_index}));
    ControlAffineSystem noisy = sys;
    noisy.eps = eps;

    RolloutDecomposition out;
    out.dx.assign(static_cast<std::size_t>(T) + 1, 0.0);
    out.dx_lin.assign(static_cast<std::size_t>(T) + 1, 0.0);
    out.err.assign(static_cast<std::size_t>(T) + 1, 0.0);

    double x = policy.nominal_states.front();
    double dxl = 0.0;
    for (int t = 0; t < T; ++t) {
        const double omega = stream.normal();
        const double u = policy.control(t, x);
        x = stochastic_step(noisy, x, u, omega);
        if (out_of_bounds(x))
            throw DivergenceError("decompose_rollout: path diverged at t = " + std::to_string(t),
                                  t, x);
        dxl = abar[static_cast<std::size_t>(t)] * dxl + eps * std::sqrt(sys.dt) * omega;
        out.dx[static_cast<std::size_t>(t) + 1] =
            x - policy.nominal_states[static_cast<std::size_t>(t) + 1];
        out.dx_lin[static_cast<std::size_t>(t) + 1] = dxl;
        out.err[static_cast<std::size_t>(t) + 1] =
            out.dx[static_cast<std::size_t>(t) + 1] - dxl;
    }
    return out;
}

}  // namespace pertrl
