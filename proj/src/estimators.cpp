#include "pertrl/estimators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pertrl/errors.hpp"
#include "pertrl/kernels.hpp"
#include "pertrl/rng.hpp"

namespace pertrl {

namespace {

struct GramFactor {
    Eigen::LDLT<Eigen::MatrixXd> ldlt;   // of the (possibly ridged) Gram
    double condition = 0.0;              // of the raw Gram
    double lambda_min = 0.0;             // of the raw Gram
};

GramFactor factor_gram(const Eigen::MatrixXd& gram, const LsOptions& options) {
    GramFactor f;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    f.lambda_min = es.eigenvalues().minCoeff();
    const double lambda_max = es.eigenvalues().maxCoeff();
    f.condition = f.lambda_min > 0.0 ? lambda_max / f.lambda_min
                                     : std::numeric_limits<double>::infinity();

    Eigen::MatrixXd effective = gram;
    double effective_condition = f.condition;
    if (options.ridge > 0.0) {
        effective.diagonal().array() += options.ridge;
        effective_condition = sym_condition_number(effective);
    }
    if (!(effective_condition <= options.cond_max))
        throw ConditioningError("least squares refused: Gram condition " +
                                    std::to_string(effective_condition) + " exceeds cond_max " +
                                    std::to_string(options.cond_max),
                                effective_condition);
    f.ldlt.compute(effective);
    return f;
}

/// Row of basis values: monomial powers 1..N, or Hermite rows 1..N (which
/// carry constants, hence the extra ones row).
Eigen::MatrixXd basis_matrix(std::span<const double> values, int N, BasisKind kind,
                             double sigma_X2, bool parallel) {
    Eigen::MatrixXd powers = kernels::power_basis(values, N, parallel);
    if (kind == BasisKind::Monomial) return powers;
    const HermiteTransform ht = hermite_matrix(N, sigma_X2);
    Eigen::MatrixXd with_const(N + 1, powers.cols());
    with_const.row(0).setOnes();
    with_const.bottomRows(N) = powers;
    return kernels::transform_columns(ht.H.bottomRows(N), with_const, parallel);
}

void fill_oracle_errors(EstimateReport& r, const Eigen::RowVectorXd* oracle) {
    if (oracle == nullptr) return;
    if (oracle->size() != r.coefficients.size())
        throw DimensionError("oracle row size does not match the estimate");
    const Eigen::RowVectorXd diff = r.coefficients - *oracle;
    r.err_max = diff.cwiseAbs().maxCoeff();
    r.err_l2 = diff.norm();
}

}  // namespace

SampleBatch draw_batch(std::uint64_t seed, double sigma_X2, int R, BasisKind basis, int N,
                       const Polynomial& f, double obs_noise_var,
                       std::optional<double> dyn_noise_var, int N_next, bool parallel) {
    if (N < 1) throw std::invalid_argument("draw_batch: N must be >= 1");
    if (R < N)
        throw DimensionError("draw_batch: R = " + std::to_string(R) + " < N = " +
                             std::to_string(N) + " makes the Gram singular");
    if (sigma_X2 <= 0.0) throw std::invalid_argument("draw_batch: sigma_X2 must be > 0");

    SampleBatch b;
    b.seed = seed;
    b.sigma_X2 = sigma_X2;
    b.R = R;
    b.N = N;
    b.N_next = N_next > 0 ? N_next : N;
    b.basis = basis;
    b.obs_noise_var = obs_noise_var;
    b.has_dyn_noise = dyn_noise_var.has_value();
    b.dyn_noise_var = dyn_noise_var.value_or(0.0);

    const double sigma = std::sqrt(sigma_X2);
    rng::NormalStream draw_stream(rng::derive(seed, rng::Stream::BatchDraws, {}));
    b.draws.resize(static_cast<std::size_t>(R));
    for (double& x : b.draws) x = draw_stream.normal(sigma);

    b.next.resize(static_cast<std::size_t>(R));
    for (std::size_t i = 0; i < b.next.size(); ++i) b.next[i] = f(b.draws[i]);
    if (b.has_dyn_noise && b.dyn_noise_var > 0.0) {
        rng::NormalStream dyn_stream(rng::derive(seed, rng::Stream::DynNoise, {}));
        const double s = std::sqrt(b.dyn_noise_var);
        for (double& x : b.next) x += dyn_stream.normal(s);
    }

    b.obs_noise = Eigen::RowVectorXd::Zero(R);
    if (obs_noise_var > 0.0) {
        rng::NormalStream obs_stream(rng::derive(seed, rng::Stream::ObsNoise, {}));
        const double s = std::sqrt(obs_noise_var);
        for (int i = 0; i < R; ++i) b.obs_noise(i) = obs_stream.normal(s);
    }

    b.phi_t = basis_matrix(b.draws, N, basis, sigma_X2, parallel);
    b.phi_next = basis_matrix(b.next, b.N_next, basis, sigma_X2, parallel);
    b.gram = kernels::gram(b.phi_t, parallel);
    return b;
}

EstimateReport rl_ls_step(const SampleBatch& batch, const Eigen::RowVectorXd& alpha_next,
                          const Eigen::RowVectorXd& c_row, const LsOptions& options,
                          const Eigen::RowVectorXd* oracle) {
    if (alpha_next.size() != batch.phi_next.rows())
        throw DimensionError("rl_ls_step: alpha_next size " + std::to_string(alpha_next.size()) +
                             " != phi_next rows " + std::to_string(batch.phi_next.rows()));
    if (c_row.size() != batch.N)
        throw DimensionError("rl_ls_step: c_row size must equal the basis size");

    const GramFactor f = factor_gram(batch.gram, options);
    const Eigen::RowVectorXd target = alpha_next * batch.phi_next + batch.obs_noise;
    const Eigen::RowVectorXd rhs = (target * batch.phi_t.transpose()) / batch.R;
    const Eigen::RowVectorXd fitted = f.ldlt.solve(rhs.transpose()).transpose();

    EstimateReport r;
    r.coefficients = c_row + fitted;
    r.gram_condition = f.condition;
    r.ls_cov_norm = batch.obs_noise_var / (static_cast<double>(batch.R) * f.lambda_min);
    r.R = batch.R;
    r.M = batch.N;
    r.sigma_X2 = batch.sigma_X2;
    r.sigma_v2 = batch.obs_noise_var;
    r.ridge = options.ridge;
    r.seed = batch.seed;
    fill_oracle_errors(r, oracle);
    return r;
}

std::vector<EstimateReport> rl_ls_sweep(const PeProblem& problem, const SweepParams& params,
                                        const CostToGoLadder* oracle) {
    if (static_cast<int>(params.basis_sizes.size()) != params.steps)
        throw DimensionError("rl_ls_sweep: need one basis size per step");
    if (params.steps > problem.horizon)
        throw DimensionError("rl_ls_sweep: more steps than the horizon");

    // The terminal row is known exactly; the sweep estimates everything else.
    const int n_terminal = std::max(1, problem.terminal.degree());
    Eigen::RowVectorXd alpha(n_terminal);
    for (int i = 1; i <= n_terminal; ++i) alpha(i - 1) = problem.terminal.coeff(i);

    std::vector<EstimateReport> reports;
    if (params.steps == 0) {
        EstimateReport terminal;
        terminal.coefficients = alpha;
        terminal.err_max = 0.0;
        terminal.err_l2 = 0.0;
        terminal.gram_condition = 1.0;
        terminal.M = n_terminal;
        terminal.sigma_X2 = params.sigma_X2;
        terminal.sigma_v2 = params.sigma_v2;
        terminal.t = problem.horizon;
        reports.push_back(std::move(terminal));
        return reports;
    }
    reports.reserve(static_cast<std::size_t>(params.steps));
    for (int s = 0; s < params.steps; ++s) {
        const int t = problem.horizon - 1 - s;
        const int n_t = params.basis_sizes[static_cast<std::size_t>(s)];
        if (problem.cost.degree() > n_t)
            throw DimensionError("rl_ls_sweep: cost not representable in basis at t = " +
                                 std::to_string(t));
        Eigen::RowVectorXd c_row(n_t);
        for (int i = 1; i <= n_t; ++i) c_row(i - 1) = problem.cost.coeff(i);

        const std::uint64_t seed = rng::derive(params.master_seed, rng::Stream::BatchDraws,
                                               {static_cast<std::uint64_t>(t)});
        const SampleBatch batch =
            draw_batch(seed, params.sigma_X2, params.R, BasisKind::Monomial, n_t, problem.f,
                       params.sigma_v2, params.dyn_noise_var, static_cast<int>(alpha.size()),
                       params.parallel);

        Eigen::RowVectorXd oracle_row;
        const Eigen::RowVectorXd* oracle_ptr = nullptr;
        if (oracle != nullptr) {
            const Polynomial& truth = oracle->polys.at(static_cast<std::size_t>(t));
            oracle_row.resize(n_t);
            for (int i = 1; i <= n_t; ++i) oracle_row(i - 1) = truth.coeff(i);
            oracle_ptr = &oracle_row;
        }

        try {
            EstimateReport r = rl_ls_step(batch, alpha, c_row, params.options, oracle_ptr);
            r.t = t;
            alpha = r.coefficients;
            reports.push_back(std::move(r));
        } catch (const ConditioningError& e) {
            throw ConditioningError("t = " + std::to_string(t) + ": " + e.what(), e.condition());
        }
    }
    return reports;
}

MbLsReport mb_ls_fit(const SampleBatch& batch, const Polynomial& local_dynamics,
                     const LsOptions& options) {
    if (local_dynamics.coeff(0) != 0.0)
        throw std::invalid_argument("mb_ls_fit: local dynamics must have no constant term");
    const int M = batch.N;

    const GramFactor f = factor_gram(batch.gram, options);
    Eigen::RowVectorXd target(batch.R);
    for (int i = 0; i < batch.R; ++i) target(i) = batch.next[static_cast<std::size_t>(i)];
    target += batch.obs_noise;
    const Eigen::RowVectorXd rhs = (target * batch.phi_t.transpose()) / batch.R;

    MbLsReport out;
    out.report.coefficients = f.ldlt.solve(rhs.transpose()).transpose();
    out.report.gram_condition = f.condition;
    out.report.ls_cov_norm = batch.obs_noise_var / (static_cast<double>(batch.R) * f.lambda_min);
    out.report.R = batch.R;
    out.report.M = M;
    out.report.sigma_X2 = batch.sigma_X2;
    out.report.sigma_v2 = batch.obs_noise_var;
    out.report.ridge = options.ridge;
    out.report.seed = batch.seed;

    Eigen::RowVectorXd truth(M);
    for (int i = 1; i <= M; ++i) truth(i - 1) = local_dynamics.coeff(i);
    fill_oracle_errors(out.report, &truth);

    // Limiting bias from the neglected orders: Delta_l = sum_{k>M} F^k m_{k+l}.
    const int deg = local_dynamics.degree();
    out.delta_row = Eigen::RowVectorXd::Zero(M);
    if (deg > M) {
        GaussianMomentTable table(deg + M, batch.sigma_X2);
        for (int l = 1; l <= M; ++l) {
            double acc = 0.0;
            for (int k = M + 1; k <= deg; ++k)
                acc += local_dynamics.coeff(k) * table.moment(k + l);
            out.delta_row(l - 1) = acc;
        }
    }
    const Eigen::MatrixXd exact = exact_gram(M, false, batch.sigma_X2);
    out.limiting_bias = exact.ldlt().solve(out.delta_row.transpose()).transpose();
    return out;
}

EstimateReport model_free_ppe_step(const SampleBatch& batch, const Eigen::RowVectorXd& K_next,
                                   const Eigen::RowVectorXd& C_row, const LsOptions& options,
                                   const Eigen::RowVectorXd* oracle) {
    if (K_next.size() != batch.phi_next.rows())
        throw DimensionError("model_free_ppe_step: K_next size must equal phi_next rows");
    if (C_row.size() != batch.N)
        throw DimensionError("model_free_ppe_step: C_row size must equal the basis size");

    const GramFactor f = factor_gram(batch.gram, options);
    const Eigen::MatrixXd cross = kernels::cross_gram(batch.phi_next, batch.phi_t, false);
    const Eigen::RowVectorXd fitted =
        f.ldlt.solve((K_next * cross).transpose()).transpose();

    EstimateReport r;
    r.coefficients = C_row + fitted;
    r.gram_condition = f.condition;
    r.ls_cov_norm = batch.obs_noise_var / (static_cast<double>(batch.R) * f.lambda_min);
    r.R = batch.R;
    r.M = batch.N;
    r.sigma_X2 = batch.sigma_X2;
    r.sigma_v2 = batch.obs_noise_var;
    r.ridge = options.ridge;
    r.seed = batch.seed;
    fill_oracle_errors(r, oracle);
    return r;
}

PpeFlopModel ppe_flop_model(double R, int M) {
    PpeFlopModel m;
    const double m2 = static_cast<double>(M) * M;
    m.model_free = 2.0 * R * R * m2;
    m.model_based = (R * R + R) * m2;
    return m;
}

EstimateReport instantaneous_basis_ls(const Eigen::MatrixXd& basis_values,
                                      const Eigen::RowVectorXd& c_values,
                                      const Eigen::RowVectorXd& delta_h_values,
                                      double sigma_v2, const LsOptions& options) {
    const int R = static_cast<int>(basis_values.cols());
    if (c_values.size() != R || delta_h_values.size() != R)
        throw DimensionError("instantaneous_basis_ls: value rows must have one entry per draw");

    const Eigen::MatrixXd gram = kernels::gram(basis_values, false);
    const GramFactor f = factor_gram(gram, options);
    const Eigen::RowVectorXd rhs =
        ((c_values + delta_h_values) * basis_values.transpose()) / R;

    EstimateReport r;
    r.coefficients = f.ldlt.solve(rhs.transpose()).transpose();
    r.gram_condition = f.condition;
    r.ls_cov_norm = sigma_v2 / (static_cast<double>(R) * f.lambda_min);
    r.R = R;
    r.M = static_cast<int>(basis_values.rows());
    r.sigma_v2 = sigma_v2;
    r.ridge = options.ridge;
    return r;
}

ComplexityQuote sample_complexity(double n, double beta, double delta, double C, double C_prime,
                                  int M, double sigma_X2, double sigma_v2) {
    if (beta <= 0.0 || beta >= 1.0)
        throw std::invalid_argument("sample_complexity: beta must lie in (0, 1)");
    if (delta <= 0.0) throw std::invalid_argument("sample_complexity: delta must be > 0");
    if (n <= 0.0 || C <= 0.0 || C_prime <= 0.0)
        throw std::invalid_argument("sample_complexity: n, C, C' must be > 0");

    ComplexityQuote q;
    q.n = n;
    q.beta = beta;
    q.delta = delta;
    q.C = C;
    q.C_prime = C_prime;
    q.M = M;
    q.sigma_X2 = sigma_X2;
    q.sigma_v2 = sigma_v2;
    const double scale = (n / beta) * C * C_prime;
    q.variance_part = scale * scale * gram_moment_variance(M, sigma_X2);
    q.covariance_part = sigma_v2 * C / (delta * (1.0 - beta));
    q.R_required = static_cast<std::int64_t>(std::ceil(std::max(q.variance_part,
                                                                q.covariance_part)));
    return q;
}

double measured_gram_bound(const Eigen::MatrixXd& gram) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / lo;
}

double measured_basis_bound(const Eigen::MatrixXd& H) {
    return H.col(H.cols() - 1).norm() * H.row(H.rows() - 1).norm();
}

}  // namespace pertrl
