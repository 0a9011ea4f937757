#include "fkpath/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "fkpath/errors.hpp"
#include "fkpath/quadrature.hpp"

namespace fkpath {

void PolynomialInteraction::validate() const {
    if (coefficients.empty() || coefficients.size() % 2 != 0)
        throw ModelValidityError("P must have even positive degree, got degree " +
                                 std::to_string(coefficients.size()));
    for (double c : coefficients)
        if (!std::isfinite(c)) throw ModelValidityError("P coefficients must be finite");
    if (!(coefficients.back() > 0.0))
        throw ModelValidityError("leading coefficient of P must be positive");
    if (!std::isfinite(kappa)) throw ModelValidityError("kappa must be finite");
}

double PolynomialInteraction::operator()(double lambda) const {
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * lambda + *it;
    return acc * lambda;
}

double eval_polynomial(double lambda, const PolynomialInteraction& p) { return p(lambda); }

namespace {

double horner(std::span<const double> q, double x) {
    double acc = 0.0;
    for (auto it = q.rbegin(); it != q.rend(); ++it) acc = acc * x + *it;
    return acc;
}

double double_factorial_odd(int k) {  // (k - 1)!! for even k
    double r = 1.0;
    for (int j = k - 1; j > 1; j -= 2) r *= j;
    return r;
}

struct Peak {
    double center;
    double scale;
};

/// Gaussian matched to exp(logf): centred between the outermost points where logf drops
/// 4 below its maximum, with the width a Gaussian would need to drop 4 there.
template <class LogF>
Peak match_peak(LogF logf, double sigma) {
    constexpr int n_scan = 161;
    constexpr double drop = 4.0;
    double range = 12.0 * sigma;
    std::vector<double> xs(n_scan), ys(n_scan);
    std::size_t best = 0;
    for (int attempt = 0;; ++attempt) {
        for (int i = 0; i < n_scan; ++i) {
            xs[i] = -range + 2.0 * range * i / (n_scan - 1);
            ys[i] = logf(xs[i]);
        }
        best = static_cast<std::size_t>(std::max_element(ys.begin(), ys.end()) - ys.begin());
        if ((ys.front() < ys[best] - drop && ys.back() < ys[best] - drop) || attempt == 20) break;
        range *= 2.0;
    }
    // Golden-section refinement of the mode on the neighbouring scan cell.
    double a = xs[best == 0 ? 0 : best - 1];
    double b = xs[std::min<std::size_t>(best + 1, n_scan - 1)];
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = logf(c), fd = logf(d);
    for (int it = 0; it < 80 && b - a > 1e-14 * (1.0 + std::abs(a)); ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = logf(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = logf(d);
        }
    }
    double mode = 0.5 * (a + b);
    double peak = logf(mode);
    if (ys[best] > peak) {
        mode = xs[best];
        peak = ys[best];
    }
    const double level = peak - drop;

    auto bisect = [&](double below, double above) {
        for (int it = 0; it < 200 && std::abs(above - below) > 1e-13 * (1.0 + std::abs(above)); ++it) {
            const double mid = 0.5 * (below + above);
            (logf(mid) >= level ? above : below) = mid;
        }
        return 0.5 * (below + above);
    };

    // Outermost crossings.
    std::size_t il = 0;
    while (il < n_scan && ys[il] < level) ++il;
    double inner_left = (il < n_scan && xs[il] <= mode) ? xs[il] : mode;
    double outer_left = xs[0];
    for (std::size_t i = 0; i < n_scan && xs[i] < inner_left; ++i) outer_left = xs[i];
    std::size_t ir = n_scan;
    while (ir > 0 && ys[ir - 1] < level) --ir;
    double inner_right = (ir > 0 && xs[ir - 1] >= mode) ? xs[ir - 1] : mode;
    double outer_right = xs[n_scan - 1];
    for (std::size_t i = n_scan; i > 0 && xs[i - 1] > inner_right; --i) outer_right = xs[i - 1];

    const double left = bisect(outer_left, inner_left);
    const double right = bisect(outer_right, inner_right);
    const double half = 0.5 * (right - left);
    return {0.5 * (left + right), half > 0.0 ? half / std::sqrt(2.0 * drop) : sigma * 1e-8};
}

template <class LogF>
std::pair<double, double> hermite_sum(const QuadratureRule& rule, LogF logf, std::span<const double> q,
                                      Peak peak, double sigma) {
    const double prefactor = std::numbers::sqrt2 * peak.scale / (std::sqrt(2.0 * std::numbers::pi) * sigma);
    double sum = 0.0;
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = rule.nodes[i];
        const double g = peak.center + std::numbers::sqrt2 * peak.scale * x;
        const double w = std::exp(std::log(rule.weights[i]) + x * x + logf(g));
        const double term = w * horner(q, g);
        sum += term;
        abs_sum += std::abs(term);
    }
    return {prefactor * sum, prefactor * abs_sum};
}

}  // namespace

ConditionalWeight gaussian_expectation(double sigma2, const PolynomialInteraction& p,
                                       std::span<const double> q, const WeightOptions& options) {
    p.validate();
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw DomainError("variance must be finite and >= 0");
    if (options.order < 2) throw ConfigurationError("Gauss-Hermite order must be at least 2");
    ConditionalWeight out;
    if (p.kappa < 0.0) {
        if (!options.allow_formal)
            throw IntegrabilityError(
                "kappa < 0 with an even-degree P: E[exp(-kappa P(G))] diverges "
                "(pass the formal override to evaluate a truncated quadrature)");
        out.formal = true;
    }
    if (q.empty()) {
        out.value = 0.0;
        return out;
    }
    if (sigma2 == 0.0) {
        out.value = q[0] * std::exp(-p.kappa * p(0.0));
        return out;
    }
    const double sigma = std::sqrt(sigma2);
    if (p.kappa == 0.0) {
        double v = 0.0;
        for (std::size_t k = 0; k < q.size(); k += 2)
            v += q[k] * std::pow(sigma, static_cast<double>(k)) * double_factorial_odd(static_cast<int>(k));
        out.value = v;
        return out;
    }

    auto logf = [&](double g) { return -g * g / (2.0 * sigma2) - p.kappa * p(g); };
    if (out.formal) {
        // No integrable peak: report the Gaussian integral truncated to |g| <= 4 sigma.
        auto truncated = [&](int order) {
            const QuadratureRule r = gauss_legendre(order, -4.0 * sigma, 4.0 * sigma);
            double v = 0.0;
            for (std::size_t i = 0; i < r.nodes.size(); ++i)
                v += r.weights[i] * std::exp(logf(r.nodes[i])) * horner(q, r.nodes[i]);
            return v / (std::sqrt(2.0 * std::numbers::pi) * sigma);
        };
        out.value = truncated(options.order);
        out.converged = std::abs(out.value - truncated(2 * options.order)) <= 1e-8 * std::abs(out.value);
        return out;
    }
    const Peak peak = match_peak(logf, sigma);
    // Order doubling until two successive orders agree (at most three doublings).
    int order = options.order;
    auto [value, abs_value] = hermite_sum(gauss_hermite_cached(order), logf, q, peak, sigma);
    for (int doubling = 0; doubling < 3; ++doubling) {
        order *= 2;
        const auto [check, abs_check] = hermite_sum(gauss_hermite_cached(order), logf, q, peak, sigma);
        out.converged = std::abs(value - check) <= 1e-8 * std::max(std::abs(check), abs_check);
        value = check;
        if (out.converged) break;
    }
    out.value = value;
    return out;
}

ConditionalWeight conditional_weight_vacuum(double sigma2, const PolynomialInteraction& p,
                                            const WeightOptions& options) {
    const double one = 1.0;
    return gaussian_expectation(sigma2, p, std::span<const double>(&one, 1), options);
}

// ---------------------------------------------------------------------------
// Cylinder polynomials

namespace {

std::vector<int> trimmed(std::vector<int> e) {
    while (!e.empty() && e.back() == 0) e.pop_back();
    return e;
}

CylinderPolynomial from_map(const std::map<std::vector<int>, double>& m) {
    CylinderPolynomial out = CylinderPolynomial::zero();
    for (const auto& [e, c] : m)
        if (c != 0.0) out.terms.push_back({c, e});
    return out;
}

std::vector<int> variable_list(const std::vector<int>& exponents, std::size_t offset = 0) {
    std::vector<int> vars;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        if (exponents[i] < 0) throw DomainError("negative exponent in cylinder polynomial");
        vars.insert(vars.end(), static_cast<std::size_t>(exponents[i]), static_cast<int>(i + offset));
    }
    return vars;
}

}  // namespace

CylinderPolynomial CylinderPolynomial::wick(const Eigen::MatrixXd& cov, std::span<const int> degrees) {
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < degrees.size(); ++i) pairs.emplace_back(static_cast<int>(i), degrees[i]);
    const auto vars = monomial_variables(pairs);
    if (!vars.empty() && static_cast<Eigen::Index>(degrees.size()) > cov.rows())
        throw ConfigurationError("wick: covariance smaller than the number of variables");
    std::map<std::vector<int>, double> acc;
    for (const auto& term : wick_expand(cov, vars)) {
        std::vector<int> e(degrees.size(), 0);
        for (int v : term.vars) ++e[static_cast<std::size_t>(v)];
        acc[trimmed(e)] += term.coefficient;
    }
    return from_map(acc);
}

bool CylinderPolynomial::is_constant() const {
    return std::all_of(terms.begin(), terms.end(), [](const CylinderTerm& t) {
        return std::all_of(t.exponents.begin(), t.exponents.end(), [](int e) { return e == 0; });
    });
}

bool CylinderPolynomial::is_zero() const {
    return std::all_of(terms.begin(), terms.end(), [](const CylinderTerm& t) { return t.coefficient == 0.0; });
}

std::size_t CylinderPolynomial::variables() const {
    std::size_t n = 0;
    for (const auto& t : terms) n = std::max(n, trimmed(t.exponents).size());
    return n;
}

int CylinderPolynomial::degree() const {
    int d = 0;
    for (const auto& t : terms) {
        int s = 0;
        for (int e : t.exponents) s += e;
        d = std::max(d, s);
    }
    return d;
}

double CylinderPolynomial::operator()(std::span<const double> values) const {
    double total = 0.0;
    for (const auto& t : terms) {
        double v = t.coefficient;
        for (std::size_t i = 0; i < t.exponents.size(); ++i) {
            if (t.exponents[i] == 0) continue;
            if (i >= values.size()) throw ConfigurationError("cylinder polynomial needs more field values");
            v *= std::pow(values[i], t.exponents[i]);
        }
        total += v;
    }
    return total;
}

CylinderPolynomial CylinderPolynomial::shifted(std::size_t offset) const {
    CylinderPolynomial out = zero();
    for (const auto& t : terms) {
        std::vector<int> e(offset, 0);
        e.insert(e.end(), t.exponents.begin(), t.exponents.end());
        out.terms.push_back({t.coefficient, trimmed(std::move(e))});
    }
    return out;
}

CylinderPolynomial operator*(const CylinderPolynomial& a, const CylinderPolynomial& b) {
    std::map<std::vector<int>, double> acc;
    for (const auto& x : a.terms)
        for (const auto& y : b.terms) {
            std::vector<int> e(std::max(x.exponents.size(), y.exponents.size()), 0);
            for (std::size_t i = 0; i < x.exponents.size(); ++i) e[i] += x.exponents[i];
            for (std::size_t i = 0; i < y.exponents.size(); ++i) e[i] += y.exponents[i];
            acc[trimmed(e)] += x.coefficient * y.coefficient;
        }
    return from_map(acc);
}

double gaussian_polynomial_moment(const Eigen::MatrixXd& cov, const CylinderPolynomial& poly) {
    if (static_cast<Eigen::Index>(poly.variables()) > cov.rows())
        throw ConfigurationError("polynomial uses more variables than the covariance provides");
    double total = 0.0;
    for (const auto& t : poly.terms) total += t.coefficient * gaussian_moment(cov, variable_list(t.exponents));
    return total;
}

bool FieldState::is_vacuum() const {
    return polynomial.is_constant() && polynomial(std::span<const double>{}) == 1.0;
}

// ---------------------------------------------------------------------------
// Weights with observables

namespace {

/// E[prod_v Y_v | G = g] as polynomial coefficients in g, where Y = beta g + Z and
/// Z ~ N(0, cc) independent of G.
std::vector<double> conditional_moment(const std::vector<int>& vars, const Eigen::VectorXd& beta,
                                       const Eigen::MatrixXd& cc) {
    if (vars.empty()) return {1.0};
    const int v0 = vars[0];
    std::vector<int> rest(vars.begin() + 1, vars.end());
    std::vector<double> out(vars.size() + 1, 0.0);
    if (beta[v0] != 0.0) {
        const auto sub = conditional_moment(rest, beta, cc);
        for (std::size_t k = 0; k < sub.size(); ++k) out[k + 1] += beta[v0] * sub[k];
    }
    for (std::size_t j = 0; j < rest.size(); ++j) {
        const double c = cc(v0, rest[j]);
        if (c == 0.0) continue;
        std::vector<int> sub_vars;
        for (std::size_t l = 0; l < rest.size(); ++l)
            if (l != j) sub_vars.push_back(rest[l]);
        const auto sub = conditional_moment(sub_vars, beta, cc);
        for (std::size_t k = 0; k < sub.size(); ++k) out[k] += c * sub[k];
    }
    return out;
}

}  // namespace

ConditionalWeight conditional_weight_with_observables(const Eigen::MatrixXd& cov, std::size_t n_left,
                                                      const CylinderPolynomial& left,
                                                      const CylinderPolynomial& right,
                                                      const PolynomialInteraction& p,
                                                      std::size_t n_inner, RandomStream* rng,
                                                      const WeightOptions& options) {
    if (cov.rows() < 1 || cov.rows() != cov.cols())
        throw ConfigurationError("endpoint covariance must be square and contain the path variable");
    const auto m = static_cast<std::size_t>(cov.rows() - 1);
    if (n_left > m || left.variables() > n_left || right.variables() > m - n_left)
        throw ConfigurationError("cylinder polynomials do not fit the endpoint covariance");
    const CylinderPolynomial product = left * right.shifted(n_left);
    const double sigma2 = cov(cov.rows() - 1, cov.cols() - 1);

    if (product.is_zero()) {
        // Still apply the integrability guard so ill-posed runs fail consistently.
        ConditionalWeight w = conditional_weight_vacuum(sigma2, p, options);
        w.value = 0.0;
        return w;
    }
    if (product.is_constant()) {
        ConditionalWeight w = conditional_weight_vacuum(sigma2, p, options);
        w.value *= product(std::span<const double>{});
        return w;
    }

    if (n_inner > 0) {
        if (rng == nullptr) throw ConfigurationError("sampled conditional weight needs a random stream");
        ConditionalWeight w = conditional_weight_vacuum(0.0, p, options);  // guard only
        const GaussianSampler sampler(cov);
        Eigen::VectorXd y, noise;
        double sum = 0.0;
        for (std::size_t i = 0; i < n_inner; ++i) {
            sampler.sample_into(*rng, y, noise);
            const double g = y[static_cast<Eigen::Index>(m)];
            sum += product(std::span<const double>(y.data(), m)) * std::exp(-p.kappa * p(g));
        }
        w.value = sum / static_cast<double>(n_inner);
        return w;
    }

    const auto mi = static_cast<Eigen::Index>(m);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(mi);
    Eigen::MatrixXd cc = cov.topLeftCorner(mi, mi);
    if (sigma2 > 0.0) {
        beta = cov.topRightCorner(mi, 1) / sigma2;
        cc -= cov.topRightCorner(mi, 1) * cov.bottomLeftCorner(1, mi) / sigma2;
    }
    std::vector<double> q;
    for (const auto& t : product.terms) {
        const auto coeffs = conditional_moment(variable_list(t.exponents), beta, cc);
        if (coeffs.size() > q.size()) q.resize(coeffs.size(), 0.0);
        for (std::size_t k = 0; k < coeffs.size(); ++k) q[k] += t.coefficient * coeffs[k];
    }
    return gaussian_expectation(sigma2, p, q, options);
}

// ---------------------------------------------------------------------------
// Scalar functions

namespace {

std::size_t effective_degree(const std::vector<double>& a) {
    std::size_t n = a.size();
    while (n > 0 && a[n - 1] == 0.0) --n;
    return n == 0 ? 0 : n - 1;
}

}  // namespace

double ScalarFunction::operator()(double y) const {
    if (const auto* p = std::get_if<PolynomialFunction>(&f_)) return horner(p->coefficients, y);
    if (const auto* b = std::get_if<IndicatorFunction>(&f_)) return (y >= b->lower && y <= b->upper) ? b->value : 0.0;
    const auto& g = std::get<GaussianDamping>(f_);
    return g.amplitude * std::exp(-g.rate * y * y);
}

bool ScalarFunction::is_constant() const {
    const auto* p = std::get_if<PolynomialFunction>(&f_);
    return p != nullptr && effective_degree(p->coefficients) == 0;
}

bool ScalarFunction::is_bounded() const {
    if (is_polynomial()) return is_constant();
    if (const auto* g = std::get_if<GaussianDamping>(&f_)) return g->rate >= 0.0;
    return true;
}

bool ScalarFunction::is_bounded_below() const {
    if (const auto* p = std::get_if<PolynomialFunction>(&f_)) {
        const std::size_t d = effective_degree(p->coefficients);
        return d == 0 || (d % 2 == 0 && p->coefficients[d] > 0.0);
    }
    if (const auto* g = std::get_if<GaussianDamping>(&f_)) return g->rate >= 0.0 || g->amplitude >= 0.0;
    return true;
}

}  // namespace fkpath
