#pragma once

#include <cstddef>
#include <span>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fkpath/field.hpp"
#include "fkpath/random.hpp"

namespace fkpath {

/// P(lambda) = sum_{j=1}^{2n} c_j lambda^j with coupling kappa.
struct PolynomialInteraction {
    /// c_1 .. c_{2n}; coefficients[0] multiplies lambda.
    std::vector<double> coefficients{0.0, 0.0, 0.0, 1.0};
    double kappa = 0.0;

    /// Throws ModelValidityError unless the degree is even and positive with c_{2n} > 0.
    void validate() const;
    [[nodiscard]] std::size_t degree() const { return coefficients.size(); }
    [[nodiscard]] double operator()(double lambda) const;
};

double eval_polynomial(double lambda, const PolynomialInteraction& p);

struct WeightOptions {
    int order = 64;
    /// Accept kappa < 0 (unintegrable weight); the result is then a truncated,
    /// formal quadrature value.
    bool allow_formal = false;
};

struct ConditionalWeight {
    double value = 1.0;
    /// False when doubling the quadrature order moved the value by more than 1e-8 relative.
    bool converged = true;
    bool formal = false;
};

/// E[q(G) exp(-kappa P(G))] for G ~ N(0, sigma2), q a polynomial given by its
/// coefficients q_0, q_1, ... . Gauss-Hermite on a Gaussian matched to the integrand's
/// peak, checked against twice the order.
ConditionalWeight gaussian_expectation(double sigma2, const PolynomialInteraction& p,
                                       std::span<const double> q, const WeightOptions& options = {});

/// E[exp(-kappa P(G))], G ~ N(0, sigma2).
ConditionalWeight conditional_weight_vacuum(double sigma2, const PolynomialInteraction& p,
                                            const WeightOptions& options = {});

/// Sparse polynomial in the variables phi(h_1), ..., phi(h_m).
struct CylinderTerm {
    double coefficient = 1.0;
    /// Exponent per variable (shorter vectors are zero-padded).
    std::vector<int> exponents;
};

struct CylinderPolynomial {
    std::vector<CylinderTerm> terms{CylinderTerm{}};

    /// The constant 1 (the vacuum).
    static CylinderPolynomial one() { return {}; }
    static CylinderPolynomial zero() { return CylinderPolynomial{std::vector<CylinderTerm>{}}; }
    /// :prod_i phi(h_i)^{degrees_i}: expanded into ordinary monomials for the covariance
    /// `cov` of the phi(h_i).
    static CylinderPolynomial wick(const Eigen::MatrixXd& cov, std::span<const int> degrees);

    [[nodiscard]] bool is_constant() const;
    [[nodiscard]] bool is_zero() const;
    [[nodiscard]] std::size_t variables() const;
    [[nodiscard]] int degree() const;
    [[nodiscard]] double operator()(std::span<const double> values) const;
    /// Same polynomial with variable i renamed to i + offset.
    [[nodiscard]] CylinderPolynomial shifted(std::size_t offset) const;
};

CylinderPolynomial operator*(const CylinderPolynomial& a, const CylinderPolynomial& b);

/// E[poly(Y)] for a centred Gaussian vector Y with covariance cov (pairing rule).
double gaussian_polynomial_moment(const Eigen::MatrixXd& cov, const CylinderPolynomial& poly);

/// Field part of a state: a cylinder polynomial in phi(h_1), ..., phi(h_m).
struct FieldState {
    std::vector<FieldVector> vectors;
    CylinderPolynomial polynomial;

    /// The constant polynomial 1.
    [[nodiscard]] bool is_vacuum() const;
};

/// E[L(Y_left) R(Y_right) exp(-kappa P(G))] for the jointly Gaussian (Y_left, Y_right, G)
/// with covariance `cov` (G last); Y_left has n_left entries and the variables of
/// `right` are numbered from 0 within Y_right. With n_inner == 0 the expectation is evaluated
/// exactly: Y given G is Gaussian, so E[L R | G] is a polynomial in G that is integrated
/// against the weight by quadrature. With n_inner > 0 it is estimated from n_inner
/// joint draws instead.
ConditionalWeight conditional_weight_with_observables(const Eigen::MatrixXd& cov,
                                                      std::size_t n_left,
                                                      const CylinderPolynomial& left,
                                                      const CylinderPolynomial& right,
                                                      const PolynomialInteraction& p,
                                                      std::size_t n_inner, RandomStream* rng,
                                                      const WeightOptions& options = {});

/// Functions of one field value, used for insertions G_j and field potentials V_bos.
struct PolynomialFunction {
    /// a_0 + a_1 y + a_2 y^2 + ...
    std::vector<double> coefficients;
};
struct IndicatorFunction {
    double lower = -1.0;
    double upper = 1.0;
    double value = 1.0;
};
/// amplitude * exp(-rate y^2)
struct GaussianDamping {
    double amplitude = 1.0;
    double rate = 1.0;
};

class ScalarFunction {
public:
    using Variant = std::variant<PolynomialFunction, IndicatorFunction, GaussianDamping>;

    ScalarFunction() : f_(PolynomialFunction{{1.0}}) {}
    ScalarFunction(Variant f) : f_(std::move(f)) {}  // NOLINT(google-explicit-constructor)
    template <class T>
        requires(!std::is_same_v<std::decay_t<T>, ScalarFunction> && !std::is_same_v<std::decay_t<T>, Variant> &&
                 std::is_constructible_v<Variant, T>)
    ScalarFunction(T&& f) : f_(Variant(std::forward<T>(f))) {}  // NOLINT(google-explicit-constructor)
    static ScalarFunction constant(double c) { return ScalarFunction(PolynomialFunction{{c}}); }

    double operator()(double y) const;
    [[nodiscard]] bool is_polynomial() const { return std::holds_alternative<PolynomialFunction>(f_); }
    [[nodiscard]] bool is_constant() const;
    [[nodiscard]] bool is_bounded() const;
    [[nodiscard]] bool is_bounded_below() const;
    [[nodiscard]] const Variant& variant() const { return f_; }

private:
    Variant f_;
};

}  // namespace fkpath
