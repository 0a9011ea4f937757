#include "fkpath/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fkpath/errors.hpp"

namespace fkpath {
namespace {

std::size_t infer_dim(const StateSpec& phi, const StateSpec& psi, const Potential& V, const FieldModel& model) {
    std::size_t d = 0;
    for (std::size_t cand : {phi.particle.dim(), psi.particle.dim(), V.dim(), model.dim()}) {
        if (cand == 0) continue;
        if (d != 0 && cand != d)
            throw ConfigurationError("particle states, potential and field model disagree on the dimension");
        d = cand;
    }
    if (d == 0) throw ConfigurationError("cannot infer the particle dimension from the inputs");
    return d;
}

void validate_field_state(const FieldState& s, const FieldModel& model, int max_degree, const char* side) {
    if (s.polynomial.variables() > s.vectors.size())
        throw ConfigurationError(std::string(side) + " field polynomial uses more variables than test functions");
    if (s.polynomial.degree() > max_degree)
        throw ConfigurationError(std::string(side) + " field polynomial degree " +
                                 std::to_string(s.polynomial.degree()) + " exceeds the cap " +
                                 std::to_string(max_degree));
    for (const auto& h : s.vectors) (void)bos_inner(h, h, model);  // validates shape and profile
}

StartProposal make_proposal(const SpatialFunction& f, std::size_t d, const SamplingParams& params) {
    if (params.proposal_box) return StartProposal(f, d, params.proposal_box->first, params.proposal_box->second);
    return StartProposal(f, d);
}

/// Mean of exp(-kappa sum_j dt_j P(phi_j)) over `draws` samples of the field values
/// phi_j = phi(delta_{t_j} (x) rho_{X_j}) at the left endpoints of the grid.
double pointwise_weight(const ParticlePath& path, const FieldModel& model, const PolynomialInteraction& p,
                        std::size_t draws, RandomStream& rng) {
    const TimeGrid& grid = path.grid();
    const std::size_t n = grid.steps();
    double total = 0.0;
    if (const auto& sm = model.single_mode_model()) {
        // phi_j = c(X_j) q_j with q a stationary Ornstein-Uhlenbeck chain of variance 1/2.
        std::vector<double> c(n), rho(n), kick(n);
        for (std::size_t j = 0; j < n; ++j) {
            c[j] = sm->coupling(path.position(j));
            if (j > 0) {
                rho[j] = std::exp(-sm->omega0 * (grid[j] - grid[j - 1]));
                kick[j] = std::sqrt(0.5 * (1.0 - rho[j] * rho[j]));
            }
        }
        for (std::size_t k = 0; k < draws; ++k) {
            double q = std::sqrt(0.5) * rng.normal();
            double action = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j > 0) q = rho[j] * q + kick[j] * rng.normal();
                action += grid.step(j) * p(c[j] * q);
            }
            total += std::exp(-p.kappa * action);
        }
    } else {
        std::vector<SliceVector> slices;
        for (std::size_t j = 0; j < n; ++j) slices.push_back({grid[j], model.form_at(path.position(j))});
        const GaussianSampler sampler(slice_covariance(slices, model));
        Eigen::VectorXd y, noise;
        for (std::size_t k = 0; k < draws; ++k) {
            sampler.sample_into(rng, y, noise);
            double action = 0.0;
            for (std::size_t j = 0; j < n; ++j) action += grid.step(j) * p(y[static_cast<Eigen::Index>(j)]);
            total += std::exp(-p.kappa * action);
        }
    }
    return total / static_cast<double>(draws);
}

EstimateResult exact_zero(const BatchLayout& layout) {
    EstimateResult r;
    r.mean = 0.0;
    r.stderr = 0.0;
    r.n_samples = layout.n_samples;
    r.seed = layout.seed;
    r.n_batches = layout.n_batches;
    return r;
}

std::vector<EstimateResult> matrix_element_impl(const StateSpec& phi, const StateSpec& psi,
                                                const FieldModel& model, const PolynomialInteraction& p,
                                                const Potential& V, double t, const SubordinatorSpec& kinetic,
                                                const EstimatorOptions& options,
                                                std::span<const std::size_t> steps, std::size_t fine_steps) {
    p.validate();
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("horizon t must be positive");
    const std::size_t d = infer_dim(phi, psi, V, model);
    if (!model.is_single_mode() && model.dim() != d)
        throw ConfigurationError("field model dimension does not match the particle");
    validate_field_state(phi.field, model, options.max_field_degree, "left");
    validate_field_state(psi.field, model, options.max_field_degree, "right");
    if (p.kappa < 0.0 && !options.weight.allow_formal)
        (void)conditional_weight_vacuum(0.0, p, options.weight);  // raises the integrability error
    const bool pointwise = options.weight_form == WeightForm::pointwise;
    if (pointwise && !(phi.field.is_vacuum() && psi.field.is_vacuum()))
        throw ConfigurationError("the pointwise weight form supports vacuum field states only");
    if (pointwise && p.kappa < 0.0)
        throw IntegrabilityError("the pointwise weight form needs kappa >= 0");

    if (phi.particle.is_zero() || psi.particle.is_zero() || phi.field.polynomial.is_zero() ||
        psi.field.polynomial.is_zero())
        return std::vector<EstimateResult>(steps.size(), exact_zero(options.sampling.layout));

    const StartProposal proposal = make_proposal(phi.particle, d, options.sampling);
    const TimeGrid fine = TimeGrid::uniform(t, fine_steps);
    std::vector<TimeGrid> grids;
    std::vector<std::size_t> factors;
    for (std::size_t n : steps) {
        if (n == 0 || fine_steps % n != 0)
            throw ConfigurationError("grid size " + std::to_string(n) + " does not divide the sampling grid");
        grids.push_back(TimeGrid::uniform(t, n));
        factors.push_back(fine_steps / n);
    }
    const bool vacuum = phi.field.is_vacuum() && psi.field.is_vacuum();
    const bool trivial_field = vacuum && p.kappa == 0.0;
    const std::size_t n_left = phi.field.vectors.size();

    return run_batches(options.sampling.layout, steps.size(),
                       [&](std::size_t, std::size_t count, RandomStream& rng, BatchAccumulator& acc) {
                           ParticlePath fine_path(fine, d);
                           std::vector<ParticlePath> paths;
                           for (const auto& g : grids) paths.emplace_back(g, d);
                           Point x0(d);
                           for (std::size_t i = 0; i < count; ++i) {
                               const double w0 = proposal.sample(rng, x0);
                               sample_path_into(fine_path, x0, kinetic, rng);
                               const double end_value = psi.particle(fine_path.position(fine_steps));
                               for (std::size_t r = 0; r < paths.size(); ++r) {
                                   ParticlePath& path = paths[r];
                                   fine_path.subsample_into(factors[r], path);
                                   double weight = std::exp(-action_integral(path, V));
                                   if (pointwise && !trivial_field) {
                                       weight *= pointwise_weight(path, model, p,
                                                                  std::max<std::size_t>(1, options.n_inner), rng);
                                   } else if (!trivial_field) {
                                       ConditionalWeight cw;
                                       if (vacuum) {
                                           cw = conditional_weight_vacuum(path_variance(path, model), p,
                                                                          options.weight);
                                       } else {
                                           const Eigen::MatrixXd cov = endpoint_covariance(
                                               path, phi.field.vectors, psi.field.vectors, model);
                                           cw = conditional_weight_with_observables(
                                               cov, n_left, phi.field.polynomial, psi.field.polynomial, p,
                                               options.n_inner, &rng, options.weight);
                                       }
                                       if (!cw.converged) acc.flag_quadrature_warning();
                                       if (cw.formal) acc.flag_formal();
                                       weight *= cw.value;
                                   }
                                   acc.observe_path_weight(weight);
                                   acc.add(r, w0 * weight * end_value);
                               }
                           }
                       });
}

}  // namespace

EstimateResult matrix_element(const StateSpec& phi, const StateSpec& psi, const FieldModel& model,
                              const PolynomialInteraction& p, const Potential& V, double t,
                              const SubordinatorSpec& kinetic, const EstimatorOptions& options) {
    if (!(t > 0.0)) throw DomainError("horizon t must be positive");
    const std::size_t n = options.sampling.grid_steps(t);
    const std::size_t refine = std::max<std::size_t>(1, options.sampling.sample_refinement);
    const std::size_t steps[] = {n};
    return matrix_element_impl(phi, psi, model, p, V, t, kinetic, options, steps, n * refine).front();
}

std::vector<EstimateResult> matrix_element_refinement(const StateSpec& phi, const StateSpec& psi,
                                                      const FieldModel& model,
                                                      const PolynomialInteraction& p,
                                                      const Potential& V, double t,
                                                      const SubordinatorSpec& kinetic,
                                                      const EstimatorOptions& options,
                                                      std::span<const std::size_t> steps) {
    if (steps.empty()) throw ConfigurationError("refinement needs at least one grid size");
    const std::size_t refine = std::max<std::size_t>(1, options.sampling.sample_refinement);
    const std::size_t finest = *std::max_element(steps.begin(), steps.end());
    return matrix_element_impl(phi, psi, model, p, V, t, kinetic, options, steps, finest * refine);
}

// ---------------------------------------------------------------------------

EstimateResult n_point_insertions(const StateSpec& phi, const StateSpec& psi, const FieldModel& model,
                                  const Potential& V, std::span<const FieldInsertion> insertions,
                                  double t, const SubordinatorSpec& kinetic,
                                  const EstimatorOptions& options) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("horizon t must be positive");
    const std::size_t d = infer_dim(phi, psi, V, model);
    if (!model.is_single_mode() && model.dim() != d)
        throw ConfigurationError("field model dimension does not match the particle");
    validate_field_state(phi.field, model, options.max_field_degree, "left");
    validate_field_state(psi.field, model, options.max_field_degree, "right");
    std::vector<double> times;
    bool all_polynomial = true;
    for (const auto& ins : insertions) {
        times.push_back(ins.time);
        all_polynomial = all_polynomial && ins.function.is_polynomial();
    }
    validate_insertion_times(times, t);

    if (phi.particle.is_zero() || psi.particle.is_zero() || phi.field.polynomial.is_zero() ||
        psi.field.polynomial.is_zero())
        return exact_zero(options.sampling.layout);

    const std::size_t n_left = phi.field.vectors.size();
    const std::size_t n_ins = insertions.size();
    const bool exact = all_polynomial && options.n_inner == 0;

    // Joint polynomial in (left, insertions, right) for the exact evaluation.
    CylinderPolynomial total = phi.field.polynomial;
    if (exact) {
        for (std::size_t j = 0; j < n_ins; ++j) {
            const auto& a = std::get<PolynomialFunction>(insertions[j].function.variant()).coefficients;
            CylinderPolynomial g = CylinderPolynomial::zero();
            for (std::size_t k = 0; k < a.size(); ++k) {
                if (a[k] == 0.0) continue;
                std::vector<int> e(n_left + j + 1, 0);
                e[n_left + j] = static_cast<int>(k);
                g.terms.push_back({a[k], e});
            }
            total = total * g;
        }
        total = total * psi.field.polynomial.shifted(n_left + n_ins);
    }

    const StartProposal proposal = make_proposal(phi.particle, d, options.sampling);
    const TimeGrid grid = TimeGrid::uniform_with(t, options.sampling.grid_steps(t), times);
    std::vector<std::size_t> index;
    for (double s : times) index.push_back(grid.index_of(s));
    const std::size_t refine = std::max<std::size_t>(1, options.sampling.sample_refinement);
    const TimeGrid fine = grid.refine(refine);
    const std::size_t n_draws = std::max<std::size_t>(1, options.n_inner);

    auto results = run_batches(
        options.sampling.layout, 1, [&](std::size_t, std::size_t count, RandomStream& rng, BatchAccumulator& acc) {
            ParticlePath fine_path(fine, d);
            ParticlePath path(grid, d);
            Point x0(d);
            std::vector<SliceVector> slices;
            Eigen::VectorXd y, noise;
            for (std::size_t i = 0; i < count; ++i) {
                const double w0 = proposal.sample(rng, x0);
                sample_path_into(fine_path, x0, kinetic, rng);
                fine_path.subsample_into(refine, path);
                const double weight = std::exp(-action_integral(path, V));
                acc.observe_path_weight(weight);

                slices.clear();
                for (const auto& h : phi.field.vectors) slices.push_back({0.0, h});
                for (std::size_t j = 0; j < n_ins; ++j)
                    slices.push_back({times[j], model.form_at(path.position(index[j]))});
                for (const auto& h : psi.field.vectors) slices.push_back({t, h});
                const Eigen::MatrixXd cov = slice_covariance(slices, model);

                double field = 0.0;
                if (exact) {
                    field = gaussian_polynomial_moment(cov, total);
                } else {
                    const GaussianSampler sampler(cov);
                    for (std::size_t k = 0; k < n_draws; ++k) {
                        sampler.sample_into(rng, y, noise);
                        double v = phi.field.polynomial(std::span<const double>(y.data(), n_left));
                        for (std::size_t j = 0; j < n_ins; ++j)
                            v *= insertions[j].function(y[static_cast<Eigen::Index>(n_left + j)]);
                        v *= psi.field.polynomial(std::span<const double>(y.data() + n_left + n_ins,
                                                                          psi.field.vectors.size()));
                        field += v;
                    }
                    field /= static_cast<double>(n_draws);
                }
                acc.add(w0 * weight * field * psi.particle(path.position(path.steps())));
            }
        });
    return results.front();
}

// ---------------------------------------------------------------------------

EstimateResult field_only_estimate(const FieldVector& f, const ScalarFunction& V_bos, double t,
                                   const FieldModel& model, const SamplingParams& params) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("horizon t must be non-negative");
    if (!V_bos.is_bounded_below())
        throw ModelValidityError("field potential must be bounded below (even degree, positive leading coefficient)");
    (void)bos_inner(f, f, model);
    if (t == 0.0) {
        EstimateResult r = exact_zero(params.layout);
        r.mean = 1.0;
        return r;
    }
    const std::size_t n = params.grid_steps(t);
    const double dt = t / static_cast<double>(n);
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd cov(ni, ni);
    for (Eigen::Index j = 0; j < ni; ++j)
        for (Eigen::Index l = 0; l <= j; ++l)
            cov(j, l) = cov(l, j) = 0.5 * model.pairing(f, f, static_cast<double>(j - l) * dt);
    const GaussianSampler sampler(cov);

    auto results = run_batches(params.layout, 1,
                               [&](std::size_t, std::size_t count, RandomStream& rng, BatchAccumulator& acc) {
                                   Eigen::VectorXd y, noise;
                                   for (std::size_t i = 0; i < count; ++i) {
                                       sampler.sample_into(rng, y, noise);
                                       double action = 0.0;
                                       for (Eigen::Index j = 0; j < ni; ++j) action += dt * V_bos(y[j]);
                                       const double w = std::exp(-action);
                                       acc.observe_path_weight(w);
                                       acc.add(w);
                                   }
                               });
    return results.front();
}

// ---------------------------------------------------------------------------

GroundEnergyFit fit_ground_energy(std::span<const double> horizons, std::span<const double> values,
                                  std::span<const double> stderrs) {
    GroundEnergyFit fit;
    fit.horizons.assign(horizons.begin(), horizons.end());
    fit.values.assign(values.begin(), values.end());
    fit.stderrs.assign(stderrs.begin(), stderrs.end());
    const std::size_t m = horizons.size();
    if (values.size() != m || stderrs.size() != m) throw ConfigurationError("fit inputs differ in length");
    if (m < 3) {
        fit.diagnostic = "need at least three horizons";
        return fit;
    }
    for (std::size_t i = 1; i < m; ++i)
        if (!(horizons[i] > horizons[i - 1])) throw ConfigurationError("horizons must be strictly increasing");
    const std::size_t k = std::max<std::size_t>(3, (m + 1) / 2);
    const std::size_t first = m - k;
    for (std::size_t i = first; i < m; ++i)
        if (!(values[i] > 0.0)) {
            fit.diagnostic = "non-positive matrix element at t = " + std::to_string(horizons[i]) +
                             "; cannot take the logarithm";
            return fit;
        }

    bool weighted = true;
    for (std::size_t i = first; i < m; ++i) weighted = weighted && stderrs[i] > 0.0;
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = first; i < m; ++i) {
        const double y = -std::log(values[i]);
        const double sy_i = weighted ? stderrs[i] / values[i] : 1.0;
        const double w = 1.0 / (sy_i * sy_i);
        sw += w;
        sx += w * horizons[i];
        sy += w * y;
        sxx += w * horizons[i] * horizons[i];
        sxy += w * horizons[i] * y;
    }
    const double delta = sw * sxx - sx * sx;
    fit.energy = (sw * sxy - sx * sy) / delta;
    fit.intercept = (sxx * sy - sx * sxy) / delta;
    fit.points_used = k;
    double rss = 0.0;
    for (std::size_t i = first; i < m; ++i) {
        const double r = -std::log(values[i]) - (fit.intercept + fit.energy * horizons[i]);
        fit.residuals.push_back(r);
        rss += r * r;
    }
    fit.energy_stderr = weighted ? std::sqrt(sw / delta)
                                 : (k > 2 ? std::sqrt(rss / static_cast<double>(k - 2) * sw / delta) : 0.0);
    fit.valid = std::isfinite(fit.energy);
    fit.diagnostic = fit.valid ? "ok" : "degenerate fit";
    return fit;
}

GroundEnergyResult ground_energy_estimate(const StateSpec& phi, const StateSpec& psi,
                                          const FieldModel& model, const PolynomialInteraction& p,
                                          const Potential& V, std::span<const double> horizons,
                                          const SubordinatorSpec& kinetic,
                                          const EstimatorOptions& options) {
    if (horizons.size() < 3) throw ConfigurationError("ground energy needs at least three horizons");
    GroundEnergyResult out;
    std::vector<double> values, errs;
    for (double t : horizons) {
        out.estimates.push_back(matrix_element(phi, psi, model, p, V, t, kinetic, options));
        values.push_back(out.estimates.back().mean);
        errs.push_back(out.estimates.back().stderr);
    }
    out.fit = fit_ground_energy(horizons, values, errs);
    return out;
}

}  // namespace fkpath
