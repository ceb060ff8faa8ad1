#include "pertrl/poly.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pertrl/errors.hpp"

namespace pertrl {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    canonicalize();
}

void Polynomial::canonicalize() {
    while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

Polynomial Polynomial::monomial(int power, double coeff) {
    if (power < 0) throw std::invalid_argument("monomial: negative power");
    std::vector<double> c(static_cast<std::size_t>(power) + 1, 0.0);
    c.back() = coeff;
    return Polynomial(std::move(c));
}

Polynomial Polynomial::constant(double value) { return Polynomial({value}); }

double Polynomial::coeff(int i) const {
    if (i < 0 || i >= static_cast<int>(coeffs_.size())) return 0.0;
    return coeffs_[static_cast<std::size_t>(i)];
}

double Polynomial::operator()(double x) const {
    double y = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) y = y * x + *it;
    return y;
}

Polynomial Polynomial::derivative() const {
    if (coeffs_.size() <= 1) return Polynomial();
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i)
        d[i - 1] = static_cast<double>(i) * coeffs_[i];
    return Polynomial(std::move(d));
}

Polynomial Polynomial::shifted(double center) const {
    if (coeffs_.empty()) return Polynomial();
    std::vector<double> a = coeffs_;
    const std::size_t n = a.size();
    // Repeated synthetic division by (u - center).
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = n - 1; j > i; --j) a[j - 1] += center * a[j];
    return Polynomial(std::move(a));
}

Polynomial Polynomial::truncated(int max_degree) const {
    if (max_degree < 0) return Polynomial();
    if (degree() <= max_degree) return *this;
    std::vector<double> c(coeffs_.begin(),
                          coeffs_.begin() + static_cast<std::ptrdiff_t>(max_degree) + 1);
    return Polynomial(std::move(c));
}

Polynomial Polynomial::operator-() const {
    std::vector<double> c(coeffs_);
    for (double& v : c) v = -v;
    return Polynomial(std::move(c));
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i) c[i] = a.coeffs_[i];
    for (std::size_t i = 0; i < b.coeffs_.size(); ++i) c[i] += b.coeffs_[i];
    return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.coeffs_.empty() || b.coeffs_.empty()) return Polynomial();
    std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
        for (std::size_t j = 0; j < b.coeffs_.size(); ++j)
            c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Polynomial(std::move(c));
}

Polynomial operator*(double s, const Polynomial& p) {
    std::vector<double> c(p.coeffs_);
    for (double& v : c) v *= s;
    return Polynomial(std::move(c));
}

Polynomial compose(const Polynomial& outer, const Polynomial& inner,
                   std::optional<int> truncate_at) {
    Polynomial acc;
    for (int i = outer.degree(); i >= 0; --i) {
        acc = acc * inner;
        if (truncate_at) acc = acc.truncated(*truncate_at);
        acc = acc + Polynomial::constant(outer.coeff(i));
    }
    if (truncate_at) acc = acc.truncated(*truncate_at);
    return acc;
}

std::uint64_t double_factorial(int n) {
    if (n == -1 || n == 0) return 1;
    if (n < -1) throw std::invalid_argument("double_factorial: n < -1");
    if (n % 2 == 0) throw std::invalid_argument("double_factorial: even n > 0 rejected");
    if (n > 33) throw std::overflow_error("double_factorial: n!! exceeds 64 bits for n > 33");
    std::uint64_t acc = 1;
    for (int k = n; k >= 1; k -= 2) acc *= static_cast<std::uint64_t>(k);
    return acc;
}

GaussianMomentTable::GaussianMomentTable(int max_order, double sigma_X2) : sigma_X2_(sigma_X2) {
    if (max_order < 0) throw std::invalid_argument("GaussianMomentTable: negative order");
    if (sigma_X2 <= 0.0) throw std::invalid_argument("GaussianMomentTable: sigma_X2 must be > 0");
    moments_.resize(static_cast<std::size_t>(max_order) + 1, 0.0);
    moments_[0] = 1.0;
    for (int p = 2; p <= max_order; p += 2)
        moments_[static_cast<std::size_t>(p)] =
            static_cast<double>(p - 1) * sigma_X2 * moments_[static_cast<std::size_t>(p - 2)];
}

double gram_moment_variance(int M, double sigma_X2) {
    if (M < 1) throw std::invalid_argument("gram_moment_variance: M must be >= 1");
    const double a = static_cast<double>(double_factorial(4 * M - 1));
    const double b = static_cast<double>(double_factorial(2 * M - 1));
    return (a - b * b) * std::pow(sigma_X2, 2.0 * M);
}

Eigen::MatrixXd exact_gram(int max_power, bool include_constant, double sigma_X2) {
    if (max_power < 1) throw std::invalid_argument("exact_gram: max_power must be >= 1");
    const int lo = include_constant ? 0 : 1;
    const int n = max_power - lo + 1;
    GaussianMomentTable table(2 * max_power, sigma_X2);
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = table.moment(i + lo + j + lo);
    return g;
}

double sym_condition_number(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

HermiteTransform hermite_matrix(int N, double sigma_X2) {
    if (N < 1) throw std::invalid_argument("hermite_matrix: N must be >= 1");
    if (sigma_X2 <= 0.0) throw std::invalid_argument("hermite_matrix: sigma_X2 must be > 0");
    const double sigma = std::sqrt(sigma_X2);

    // Probabilists' Hermite recurrence he_{n+1}(y) = y he_n(y) - n he_{n-1}(y),
    // evaluated at y = x / sigma and scaled by 1/sqrt(n!).
    std::vector<Polynomial> he(static_cast<std::size_t>(N) + 1);
    he[0] = Polynomial::constant(1.0);
    he[1] = Polynomial::monomial(1);
    const Polynomial y = Polynomial::monomial(1);
    for (int n = 1; n < N; ++n)
        he[static_cast<std::size_t>(n) + 1] =
            y * he[static_cast<std::size_t>(n)] -
            static_cast<double>(n) * he[static_cast<std::size_t>(n) - 1];

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N + 1, N + 1);
    double factorial = 1.0;
    for (int n = 0; n <= N; ++n) {
        if (n > 0) factorial *= static_cast<double>(n);
        const double norm = std::sqrt(factorial);
        for (int k = 0; k <= n; ++k)
            H(n, k) = he[static_cast<std::size_t>(n)].coeff(k) / (std::pow(sigma, k) * norm);
    }

    HermiteTransform out;
    out.H = H;
    out.H_inv = H.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(N + 1, N + 1));
    out.sigma_X2 = sigma_X2;
    return out;
}

}  // namespace pertrl
