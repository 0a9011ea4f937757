#include "fkpath/field.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "fkpath/errors.hpp"
#include "fkpath/quadrature.hpp"

namespace fkpath {
namespace {

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

double distance(std::span<const double> a, std::span<const double> b) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r2 += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(r2);
}

/// Folds a symmetric rule on [-K, K] onto k >= 0.
void fold_symmetric(const QuadratureRule& rule, MomentumQuadrature& q) {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double k = rule.nodes[i];
        if (k > 1e-14 * q.radius) {
            q.nodes.push_back(k);
            q.weights.push_back(2.0 * rule.weights[i]);
        } else if (std::abs(k) <= 1e-14 * q.radius) {
            q.nodes.push_back(0.0);
            q.weights.push_back(rule.weights[i]);
        }
    }
    // Ascending order.
    std::vector<std::size_t> idx(q.nodes.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return q.nodes[a] < q.nodes[b]; });
    std::vector<double> n, w;
    for (auto i : idx) {
        n.push_back(q.nodes[i]);
        w.push_back(q.weights[i]);
    }
    q.nodes = std::move(n);
    q.weights = std::move(w);
}

QuadratureRule trapezoid(double a, double b, std::size_t n) {
    QuadratureRule r;
    const double h = (b - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        r.nodes.push_back(i + 1 == n ? b : a + h * static_cast<double>(i));
        r.weights.push_back((i == 0 || i + 1 == n) ? 0.5 * h : h);
    }
    return r;
}

/// int_{-inf}^{inf} cos(k0 tau) / (omega^2 + k0^2) dk0 by adaptive quadrature.
double frequency_kernel(double omega, double tau) {
    struct Params {
        double omega;
    } p{omega};
    gsl_function fn;
    fn.function = [](double k0, void* vp) {
        const double w = static_cast<Params*>(vp)->omega;
        return 1.0 / (w * w + k0 * k0);
    };
    fn.params = &p;
    gsl_error_handler_t* old = gsl_set_error_handler_off();
    double result = 0.0;
    double abserr = 0.0;
    int status = 0;
    if (tau == 0.0) {
        std::unique_ptr<gsl_integration_workspace, decltype(&gsl_integration_workspace_free)> ws(
            gsl_integration_workspace_alloc(1000), &gsl_integration_workspace_free);
        status = gsl_integration_qagiu(&fn, 0.0, 0.0, 1e-12, 1000, ws.get(), &result, &abserr);
    } else {
        std::unique_ptr<gsl_integration_workspace, decltype(&gsl_integration_workspace_free)> ws(
            gsl_integration_workspace_alloc(1000), &gsl_integration_workspace_free),
            cycle(gsl_integration_workspace_alloc(1000), &gsl_integration_workspace_free);
        std::unique_ptr<gsl_integration_qawo_table, decltype(&gsl_integration_qawo_table_free)> table(
            gsl_integration_qawo_table_alloc(tau, 1.0, GSL_INTEG_COSINE, 50),
            &gsl_integration_qawo_table_free);
        status = gsl_integration_qawf(&fn, 0.0, 1e-11 / omega, 1000, ws.get(), cycle.get(),
                                      table.get(), &result, &abserr);
    }
    gsl_set_error_handler(old);
    if (status != GSL_SUCCESS && status != GSL_EROUND)
        throw NumericalConsistencyError(std::string("k0 integral failed: ") + gsl_strerror(status));
    return 2.0 * result;
}

}  // namespace

// ---------------------------------------------------------------------------
// Quadrature

MomentumQuadrature MomentumQuadrature::build(const FormFactor& form, std::size_t dim,
                                             const QuadratureOptions& options) {
    if (!(form.cutoff > 0.0)) throw ModelValidityError("form factor cutoff must be positive");
    if (options.nodes < 8) throw ConfigurationError("momentum quadrature needs at least 8 nodes");
    if (!(options.radius_factor > 0.0)) throw ConfigurationError("radius_factor must be positive");
    MomentumQuadrature q;
    const bool sharp = form.family == FormFactorFamily::sharp_cutoff;
    q.radius = sharp ? form.cutoff : options.radius_factor * form.cutoff;
    const auto n = static_cast<int>(options.nodes);
    if (dim == 1) {
        if (sharp) {
            fold_symmetric(gauss_legendre(n, -q.radius, q.radius), q);
        } else {
            fold_symmetric(trapezoid(-q.radius, q.radius, options.nodes), q);
            q.uniform = true;
        }
    } else if (dim == 3) {
        const QuadratureRule r = sharp ? gauss_legendre(n, 0.0, q.radius)
                                       : trapezoid(0.0, q.radius, options.nodes);
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            const double k = r.nodes[i];
            if (k == 0.0) continue;  // zero radial weight; omega may vanish there
            q.nodes.push_back(k);
            q.weights.push_back(4.0 * std::numbers::pi * k * k * r.weights[i]);
        }
        q.uniform = !sharp;
    } else {
        throw ModelValidityError("continuum field supports d = 1 or d = 3, got d = " +
                                 std::to_string(dim));
    }
    return q;
}

// ---------------------------------------------------------------------------
// FieldModel

FieldModel FieldModel::continuum(std::size_t dim, Dispersion dispersion, FormFactor form,
                                 QuadratureOptions options) {
    if (!(dispersion.mass >= 0.0) || !std::isfinite(dispersion.mass))
        throw ModelValidityError("field mass must be finite and non-negative");
    if (dim == 1 && dispersion.mass == 0.0 && form(0.0) != 0.0)
        throw ModelValidityError(
            "massless field in d = 1 with rho_hat(0) != 0: int |rho_hat|^2 / omega dk diverges, "
            "so rho is not in K_bos");
    FieldModel m;
    m.dim_ = dim;
    m.dispersion_ = dispersion;
    m.form_ = form;
    m.options_ = options;
    m.quad_ = MomentumQuadrature::build(form, dim, options);
    for (double k : m.quad_.nodes) {
        const double w = dispersion(k);
        if (!(w > 0.0)) throw ModelValidityError("omega vanishes on a quadrature node");
        m.omega_.push_back(w);
    }
    const double norm2 = bos_inner(m.form_at(Point(dim, 0.0)), m.form_at(Point(dim, 0.0)), m);
    if (!(norm2 > 0.0) || !std::isfinite(norm2))
        throw ModelValidityError("||rho||_{K_bos} is not finite and positive");
    return m;
}

FieldModel FieldModel::single_mode(SingleModeModel model) {
    if (!(model.omega0 > 0.0) || !std::isfinite(model.omega0))
        throw ModelValidityError("single-mode frequency must be positive");
    if (!std::isfinite(model.coupling.sup_norm()))
        throw ModelValidityError("single-mode coupling must be bounded");
    FieldModel m;
    m.dim_ = model.coupling.dim();
    m.dispersion_ = Dispersion{model.omega0};
    // One node with weight omega0 at omega = omega0 gives ||e||_{K_bos} = 1.
    m.quad_.nodes = {0.0};
    m.quad_.weights = {model.omega0};
    m.omega_ = {model.omega0};
    m.single_ = std::move(model);
    return m;
}

FieldVector FieldModel::form_at(std::span<const double> x) const {
    if (single_) return FieldVector{single_->coupling(x), {}, std::nullopt};
    return FieldVector{1.0, Point(x.begin(), x.end()), std::nullopt};
}

void FieldModel::validate_vector(const FieldVector& v) const {
    if (!std::isfinite(v.amplitude)) throw DomainError("field vector amplitude must be finite");
    if (single_) {
        if (v.profile) throw ConfigurationError("single-mode field vectors carry no profile");
        return;
    }
    if (v.center.size() != dim_)
        throw ConfigurationError("field vector center has dimension " + std::to_string(v.center.size()) +
                                 ", model has " + std::to_string(dim_));
    if (v.profile) {
        if (!(v.profile->cutoff > 0.0)) throw ModelValidityError("profile cutoff must be positive");
        if (v.profile->cutoff > form_.cutoff * (1.0 + 1e-12))
            throw ModelValidityError("field vector profile wider than the model's momentum quadrature");
    }
}

double FieldModel::pairing(const FieldVector& g, const FieldVector& f, double tau) const {
    const double abs_tau = std::abs(tau);
    if (single_) return g.amplitude * f.amplitude * std::exp(-abs_tau * omega_[0]);
    validate_vector(g);
    validate_vector(f);
    const double r = distance(f.center, g.center);
    double sum = 0.0;
    for (std::size_t i = 0; i < quad_.nodes.size(); ++i) {
        const double k = quad_.nodes[i];
        const double pg = g.profile ? (*g.profile)(k) : form_(k);
        const double pf = f.profile ? (*f.profile)(k) : form_(k);
        const double phase = dim_ == 1 ? std::cos(k * r) : sinc(k * r);
        sum += quad_.weights[i] * pg * pf * phase * std::exp(-abs_tau * omega_[i]) / omega_[i];
    }
    return g.amplitude * f.amplitude * sum;
}

double FieldModel::pairing_via_frequency(const FieldVector& g, const FieldVector& f, double tau) const {
    const double abs_tau = std::abs(tau);
    if (single_)
        return g.amplitude * f.amplitude * quad_.weights[0] * frequency_kernel(omega_[0], abs_tau) /
               std::numbers::pi;
    validate_vector(g);
    validate_vector(f);
    const double r = distance(f.center, g.center);
    double sum = 0.0;
    for (std::size_t i = 0; i < quad_.nodes.size(); ++i) {
        const double k = quad_.nodes[i];
        const double pg = g.profile ? (*g.profile)(k) : form_(k);
        const double pf = f.profile ? (*f.profile)(k) : form_(k);
        if (pg * pf == 0.0) continue;
        const double phase = dim_ == 1 ? std::cos(k * r) : sinc(k * r);
        sum += quad_.weights[i] * pg * pf * phase * frequency_kernel(omega_[i], abs_tau);
    }
    return g.amplitude * f.amplitude * sum / std::numbers::pi;
}

double FieldModel::max_pair_covariance() const {
    if (single_) {
        const double c = single_->coupling.sup_norm();
        return 0.5 * c * c;
    }
    const FieldVector rho = form_at(Point(dim_, 0.0));
    return 0.5 * pairing(rho, rho, 0.0);
}

// ---------------------------------------------------------------------------
// Pairings

double bos_inner(const FieldVector& g, const FieldVector& f, const FieldModel& model) {
    return model.pairing(g, f, 0.0);
}

double euclid_slice_inner(double s, const FieldVector& g, double t, const FieldVector& f,
                          const FieldModel& model) {
    return model.pairing(g, f, t - s);
}

double euclid_slice_inner_frequency(double s, const FieldVector& g, double t, const FieldVector& f,
                                    const FieldModel& model) {
    return model.pairing_via_frequency(g, f, t - s);
}

double pair_covariance(const FieldModel& model, std::span<const double> x, std::span<const double> y,
                       double tau) {
    return 0.5 * model.pairing(model.form_at(x), model.form_at(y), tau);
}

double pair_covariance(const FieldModel& model, double r, double tau) {
    if (model.is_single_mode() || model.dim() != 1)
        throw ConfigurationError("pair_covariance(r, tau) needs a continuum model in d = 1");
    const double origin = 0.0;
    return pair_covariance(model, std::span<const double>(&origin, 1), std::span<const double>(&r, 1), tau);
}

// ---------------------------------------------------------------------------
// Path variance

namespace {

/// sum_j [2 dt_j Re(conj(e_j) A_j) - dt_j^2 |e_j|^2] for the single real node.
double single_mode_path_sum(const ParticlePath& path, const SingleModeModel& sm) {
    const TimeGrid& grid = path.grid();
    const std::size_t n = grid.steps();
    double acc = 0.0;
    double total = 0.0;
    double last_dt = -1.0;
    double decay = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double dt = grid.step(j);
        const double a = sm.coupling(path.position(j)) * dt;
        if (j > 0) {
            const double gap = grid[j] - grid[j - 1];
            if (gap != last_dt) {
                last_dt = gap;
                decay = std::exp(-sm.omega0 * gap);
            }
            acc = decay * acc + a;
        } else {
            acc = a;
        }
        total += a * (2.0 * acc - a);
    }
    return 0.5 * total;
}

double continuum_1d_path_sum(const ParticlePath& path, const FieldModel& model,
                             const std::vector<double>& omega) {
    const MomentumQuadrature& q = model.quadrature();
    const TimeGrid& grid = path.grid();
    const std::size_t n = grid.steps();
    const std::size_t nk = q.nodes.size();
    std::vector<double> coef(nk), acc_re(nk, 0.0), acc_im(nk, 0.0), decay(nk, 0.0), sums(nk, 0.0);
    for (std::size_t i = 0; i < nk; ++i) {
        const double rho = model.form_factor()(q.nodes[i]);
        coef[i] = 0.5 * q.weights[i] * rho * rho / omega[i];
    }
    const double h = q.uniform && nk > 1 ? q.nodes[1] - q.nodes[0] : 0.0;
    double last_gap = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double dt = grid.step(j);
        const double x = path.position(j)[0];
        if (j > 0) {
            const double gap = grid[j] - grid[j - 1];
            if (gap != last_gap) {
                last_gap = gap;
                for (std::size_t i = 0; i < nk; ++i) decay[i] = std::exp(-omega[i] * gap);
            }
        }
        // Phases e^{i k_i x}; uniform nodes use the recurrence e^{i k_{i+1} x} = e^{i k_i x} e^{i h x}.
        double c = std::cos(q.nodes[0] * x);
        double s = std::sin(q.nodes[0] * x);
        const double step_c = std::cos(h * x);
        const double step_s = std::sin(h * x);
        for (std::size_t i = 0; i < nk; ++i) {
            if (!q.uniform && i > 0) {
                c = std::cos(q.nodes[i] * x);
                s = std::sin(q.nodes[i] * x);
            }
            const double are = (j > 0 ? decay[i] * acc_re[i] : 0.0) + c * dt;
            const double aim = (j > 0 ? decay[i] * acc_im[i] : 0.0) + s * dt;
            acc_re[i] = are;
            acc_im[i] = aim;
            sums[i] += dt * (2.0 * (c * are + s * aim) - dt);
            if (q.uniform) {
                const double nc = c * step_c - s * step_s;
                s = c * step_s + s * step_c;
                c = nc;
            }
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < nk; ++i) total += coef[i] * sums[i];
    return total;
}

double pairwise_path_sum(const ParticlePath& path, const FieldModel& model) {
    const TimeGrid& grid = path.grid();
    const std::size_t n = grid.steps();
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        total += pair_covariance(model, path.position(j), path.position(j), 0.0) * grid.step(j) * grid.step(j);
        for (std::size_t l = 0; l < j; ++l)
            total += 2.0 * pair_covariance(model, path.position(j), path.position(l), grid[j] - grid[l]) *
                     grid.step(j) * grid.step(l);
    }
    return total;
}

}  // namespace

double path_variance(const ParticlePath& path, const FieldModel& model) {
    if (!model.is_single_mode() && path.dim() != model.dim())
        throw ConfigurationError("path dimension does not match the field model");
    double sigma2 = 0.0;
    if (model.is_single_mode()) {
        sigma2 = single_mode_path_sum(path, *model.single_mode_model());
    } else if (model.dim() == 1) {
        std::vector<double> omega;
        for (double k : model.quadrature().nodes) omega.push_back(model.dispersion()(k));
        sigma2 = continuum_1d_path_sum(path, model, omega);
    } else {
        // Radial reduction (sinc kernel) does not factorise over nodes; pair sum instead.
        sigma2 = pairwise_path_sum(path, model);
    }
    const double t = path.grid().horizon();
    const double tol = 1e-8 * model.max_pair_covariance() * t * t;
    if (sigma2 < -tol)
        throw NumericalConsistencyError("path variance " + std::to_string(sigma2) +
                                        " is negative beyond tolerance");
    return std::max(0.0, sigma2);
}

// ---------------------------------------------------------------------------
// Covariance matrices

Eigen::MatrixXd slice_covariance(std::span<const SliceVector> slices, const FieldModel& model) {
    const auto m = static_cast<Eigen::Index>(slices.size());
    Eigen::MatrixXd cov(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b <= a; ++b) {
            const auto& sa = slices[static_cast<std::size_t>(a)];
            const auto& sb = slices[static_cast<std::size_t>(b)];
            cov(a, b) = cov(b, a) = 0.5 * euclid_slice_inner(sa.time, sa.vector, sb.time, sb.vector, model);
        }
    return cov;
}

void check_psd(const Eigen::MatrixXd& cov, const char* what) {
    if (cov.rows() != cov.cols()) throw NumericalConsistencyError(std::string(what) + ": not square");
    if (cov.size() == 0) return;
    const double scale = cov.cwiseAbs().maxCoeff();
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw NumericalConsistencyError(std::string(what) + ": not symmetric");
    const double trace = cov.trace();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::abs(trace))
        throw NumericalConsistencyError(std::string(what) + ": not positive semidefinite (min eigenvalue " +
                                        std::to_string(es.eigenvalues().minCoeff()) + ")");
}

Eigen::MatrixXd endpoint_covariance(const ParticlePath& path, std::span<const FieldVector> left,
                                    std::span<const FieldVector> right, const FieldModel& model) {
    const double horizon = path.grid().horizon();
    std::vector<SliceVector> slices;
    for (const auto& h : left) slices.push_back({0.0, h});
    for (const auto& h : right) slices.push_back({horizon, h});
    const auto m = static_cast<Eigen::Index>(slices.size());
    Eigen::MatrixXd cov(m + 1, m + 1);
    cov.topLeftCorner(m, m) = slice_covariance(slices, model);

    const TimeGrid& grid = path.grid();
    std::vector<FieldVector> rho;
    rho.reserve(grid.steps());
    for (std::size_t j = 0; j < grid.steps(); ++j) rho.push_back(model.form_at(path.position(j)));
    for (Eigen::Index a = 0; a < m; ++a) {
        const auto& s = slices[static_cast<std::size_t>(a)];
        double cross = 0.0;
        for (std::size_t j = 0; j < grid.steps(); ++j)
            cross += grid.step(j) * model.pairing(s.vector, rho[j], s.time - grid[j]);
        cov(a, m) = cov(m, a) = 0.5 * cross;
    }
    cov(m, m) = path_variance(path, model);
    check_psd(cov, "endpoint covariance");
    return cov;
}

// ---------------------------------------------------------------------------
// Gaussian sampling

GaussianSampler::GaussianSampler(const Eigen::MatrixXd& cov) {
    check_psd(cov, "gaussian_vector_sample");
    if (cov.size() == 0) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    root_ = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::VectorXd GaussianSampler::sample(RandomStream& rng) const {
    Eigen::VectorXd out, noise;
    sample_into(rng, out, noise);
    return out;
}

void GaussianSampler::sample_into(RandomStream& rng, Eigen::VectorXd& out, Eigen::VectorXd& noise) const {
    noise.resize(root_.rows());
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
    out.noalias() = root_ * noise;
}

Eigen::VectorXd gaussian_vector_sample(const Eigen::MatrixXd& cov, RandomStream& rng) {
    return GaussianSampler(cov).sample(rng);
}

// ---------------------------------------------------------------------------
// Moments

double gaussian_moment(const Eigen::MatrixXd& cov, std::span<const int> vars) {
    if (vars.empty()) return 1.0;
    if (vars.size() % 2 == 1) return 0.0;
    std::vector<int> rest(vars.begin() + 1, vars.end());
    double total = 0.0;
    for (std::size_t j = 0; j < rest.size(); ++j) {
        const double c = cov(vars[0], rest[j]);
        if (c == 0.0) continue;
        std::vector<int> sub;
        sub.reserve(rest.size() - 1);
        for (std::size_t l = 0; l < rest.size(); ++l)
            if (l != j) sub.push_back(rest[l]);
        total += c * gaussian_moment(cov, sub);
    }
    return total;
}

std::vector<MonomialTerm> wick_expand(const Eigen::MatrixXd& cov, std::span<const int> vars) {
    if (vars.empty()) return {{1.0, {}}};
    if (vars.size() == 1) return {{1.0, {vars[0]}}};
    // :X_1 X_2...X_n: = X_1 :X_2...X_n: - sum_{j>=2} Cov(X_1, X_j) :prod_{l != 1, j} X_l:
    std::vector<int> tail(vars.begin() + 1, vars.end());
    std::vector<MonomialTerm> out;
    for (auto term : wick_expand(cov, tail)) {
        term.vars.insert(term.vars.begin(), vars[0]);
        out.push_back(std::move(term));
    }
    for (std::size_t j = 0; j < tail.size(); ++j) {
        const double c = cov(vars[0], tail[j]);
        if (c == 0.0) continue;
        std::vector<int> sub;
        for (std::size_t l = 0; l < tail.size(); ++l)
            if (l != j) sub.push_back(tail[l]);
        for (auto term : wick_expand(cov, sub)) {
            term.coefficient *= -c;
            out.push_back(std::move(term));
        }
    }
    return out;
}

std::vector<int> monomial_variables(std::span<const std::pair<int, int>> degrees) {
    std::vector<int> vars;
    for (const auto& [var, deg] : degrees) {
        if (deg < 0) throw DomainError("monomial degree must be non-negative");
        vars.insert(vars.end(), static_cast<std::size_t>(deg), var);
    }
    return vars;
}

double wick_moment(const Eigen::MatrixXd& cov, std::span<const int> left, std::span<const int> right) {
    const auto lhs = wick_expand(cov, left);
    const auto rhs = wick_expand(cov, right);
    double total = 0.0;
    for (const auto& a : lhs)
        for (const auto& b : rhs) {
            std::vector<int> vars = a.vars;
            vars.insert(vars.end(), b.vars.begin(), b.vars.end());
            total += a.coefficient * b.coefficient * gaussian_moment(cov, vars);
        }
    return total;
}

}  // namespace fkpath
