#ifndef PERTRL_POLY_HPP
#define PERTRL_POLY_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pertrl {

/// Dense univariate polynomial over the reals, coefficients in the monomial
/// basis (index i = coefficient of x^i). Canonical form: the highest-index
/// coefficient is nonzero, and the zero polynomial stores no coefficients.
/// Only exact zeros are stripped; there is no epsilon thresholding, so
/// degrees never change silently.
class Polynomial {
  public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coeffs);

    static Polynomial monomial(int power, double coeff = 1.0);
    static Polynomial constant(double value);

    /// -1 for the zero polynomial.
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.empty(); }

    /// Coefficient of x^i; zero beyond the stored degree.
    double coeff(int i) const;
    std::span<const double> coeffs() const { return coeffs_; }

    /// Horner evaluation.
    double operator()(double x) const;

    Polynomial derivative() const;

    /// p(center + u) as a polynomial in u, via synthetic division. Exact for
    /// polynomial inputs, which is what makes downstream Taylor rows exact.
    Polynomial shifted(double center) const;

    /// Drop all coefficients of index > max_degree, then re-canonicalize.
    Polynomial truncated(int max_degree) const;

    Polynomial operator-() const;
    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(double s, const Polynomial& p);

    bool operator==(const Polynomial&) const = default;

  private:
    void canonicalize();
    std::vector<double> coeffs_;
};

/// outer(inner(x)); exact unless truncate_at is given, in which case all
/// coefficients of index > truncate_at are dropped. Truncating intermediates
/// is safe because multiplication by a polynomial never lowers degree.
Polynomial compose(const Polynomial& outer, const Polynomial& inner,
                   std::optional<int> truncate_at = std::nullopt);

/// n!! with (-1)!! = 0!! = 1. Accepts n == -1, n == 0 and odd n >= 1 only;
/// even n > 0 is rejected (the Gaussian-moment formulas never consume it).
std::uint64_t double_factorial(int n);

/// Moments of N(0, sigma_X2): m_p = E[x^p] for p = 0..max_order.
/// Odd moments are exactly zero; even ones follow m_p = (p-1) sigma^2 m_{p-2}.
class GaussianMomentTable {
  public:
    GaussianMomentTable(int max_order, double sigma_X2);
    double moment(int p) const { return moments_.at(static_cast<std::size_t>(p)); }
    int max_order() const { return static_cast<int>(moments_.size()) - 1; }
    double sigma_X2() const { return sigma_X2_; }

  private:
    double sigma_X2_;
    std::vector<double> moments_;
};

/// Var(x^{2M}) under N(0, sigma_X2): [(4M-1)!! - ((2M-1)!!)^2] sigma_X^{4M}.
/// Evaluated from the double-factorial formula directly; the moment-table
/// route (m_{4M} - m_{2M}^2) is kept as an independent check in the tests.
double gram_moment_variance(int M, double sigma_X2);

/// Exact Gram matrix of the monomial basis under N(0, sigma_X2):
/// entry (i, j) = E[x^{i+j}] over powers 1..max_power, or 0..max_power when
/// include_constant is set. Symmetric positive definite.
Eigen::MatrixXd exact_gram(int max_power, bool include_constant, double sigma_X2);

/// Condition number of a symmetric positive definite matrix (ratio of extreme
/// eigenvalues; +inf if the smallest is not positive).
double sym_condition_number(const Eigen::MatrixXd& a);

/// Basis change between monomials and Hermite polynomials orthonormal under
/// N(0, sigma_X2). H is (N+1)x(N+1) lower triangular with positive diagonal;
/// row n holds the monomial coefficients of he_n(x/sigma)/sqrt(n!), so that
/// H G H' = I where G is the full moment Gram including the constant.
struct HermiteTransform {
    Eigen::MatrixXd H;
    Eigen::MatrixXd H_inv;
    double sigma_X2;
};

HermiteTransform hermite_matrix(int N, double sigma_X2);

}  // namespace pertrl

#endif
