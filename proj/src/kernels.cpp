#include "pertrl/kernels.hpp"

#include <stdexcept>
#include <vector>

namespace pertrl::kernels {

namespace {

void fill_columns(Eigen::MatrixXd& phi, std::span<const double> draws, int max_power,
                  std::ptrdiff_t begin, std::ptrdiff_t end) {
    for (std::ptrdiff_t k = begin; k < end; ++k) {
        double p = 1.0;
        for (int row = 0; row < max_power; ++row) {
            p *= draws[static_cast<std::size_t>(k)];
            phi(row, k) = p;
        }
    }
}

/// Column-range partial of A B'; written out explicitly so the accumulation
/// order is a function of the column range alone (library GEMMs re-block by
/// thread count, which moves the rounding around).
Eigen::MatrixXd cross_partial(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              Eigen::Index lo, Eigen::Index len) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(a.rows(), b.rows());
    for (Eigen::Index k = lo; k < lo + len; ++k)
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            const double bj = b(j, k);
            for (Eigen::Index i = 0; i < a.rows(); ++i) acc(i, j) += a(i, k) * bj;
        }
    return acc;
}

Eigen::MatrixXd chunked_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              bool parallel) {
    if (a.cols() != b.cols()) throw std::invalid_argument("gram: column counts differ");
    const Eigen::Index r = a.cols();
    if (r == 0) throw std::invalid_argument("gram: empty sample matrix");

    const Eigen::Index chunk = (r + kGramChunks - 1) / kGramChunks;
    const int n_chunks = static_cast<int>((r + chunk - 1) / chunk);
    std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(n_chunks));

#pragma omp parallel for schedule(static) if (parallel)
    for (int c = 0; c < n_chunks; ++c) {
        const Eigen::Index lo = static_cast<Eigen::Index>(c) * chunk;
        partial[static_cast<std::size_t>(c)] = cross_partial(a, b, lo, std::min(chunk, r - lo));
    }

    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(a.rows(), b.rows());
    for (int c = 0; c < n_chunks; ++c) g += partial[static_cast<std::size_t>(c)];
    return g / static_cast<double>(r);
}

}  // namespace

Eigen::MatrixXd power_basis_serial(std::span<const double> draws, int max_power) {
    if (max_power < 1) throw std::invalid_argument("power_basis: max_power must be >= 1");
    Eigen::MatrixXd phi(max_power, static_cast<Eigen::Index>(draws.size()));
    fill_columns(phi, draws, max_power, 0, static_cast<std::ptrdiff_t>(draws.size()));
    return phi;
}

Eigen::MatrixXd power_basis_parallel(std::span<const double> draws, int max_power) {
    if (max_power < 1) throw std::invalid_argument("power_basis: max_power must be >= 1");
    const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(draws.size());
    Eigen::MatrixXd phi(max_power, static_cast<Eigen::Index>(r));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < r; ++k) fill_columns(phi, draws, max_power, k, k + 1);
    return phi;
}

Eigen::MatrixXd gram_serial(const Eigen::MatrixXd& phi) { return chunked_cross(phi, phi, false); }

Eigen::MatrixXd gram_parallel(const Eigen::MatrixXd& phi) {
    return chunked_cross(phi, phi, true);
}

Eigen::MatrixXd power_basis(std::span<const double> draws, int max_power, bool parallel) {
    return parallel ? power_basis_parallel(draws, max_power)
                    : power_basis_serial(draws, max_power);
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& phi, bool parallel) {
    return chunked_cross(phi, phi, parallel);
}

Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, bool parallel) {
    return chunked_cross(a, b, parallel);
}

Eigen::MatrixXd transform_columns(const Eigen::MatrixXd& t, const Eigen::MatrixXd& x,
                                  bool parallel) {
    if (t.cols() != x.rows()) throw std::invalid_argument("transform_columns: shape mismatch");
    Eigen::MatrixXd out(t.rows(), x.cols());
    const Eigen::Index r = x.cols();
#pragma omp parallel for schedule(static) if (parallel)
    for (Eigen::Index k = 0; k < r; ++k)
        for (Eigen::Index i = 0; i < t.rows(); ++i) {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < t.cols(); ++j) acc += t(i, j) * x(j, k);
            out(i, k) = acc;
        }
    return out;
}

}  // namespace pertrl::kernels
