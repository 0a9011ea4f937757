#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fkpath/estimate.hpp"
#include "fkpath/field.hpp"
#include "fkpath/interaction.hpp"
#include "fkpath/particle.hpp"
#include "fkpath/spatial.hpp"
#include "fkpath/subordinator.hpp"

namespace fkpath {

/// Particle wave function times a cylinder polynomial of the field.
struct StateSpec {
    SpatialFunction particle;
    FieldState field;
};

/// integrated: exp(-kappa P(phi(int_0^t delta_s (x) rho_{X_s} ds))), one Gaussian per path
/// integrated exactly against the weight.
/// pointwise: exp(-kappa int_0^t P(phi(delta_s (x) rho_{X_s})) ds), which needs the field
/// along the whole path and is sampled (n_inner draws per path, at least one).
enum class WeightForm { integrated, pointwise };

struct EstimatorOptions {
    SamplingParams sampling;
    WeightOptions weight;
    /// Inner Gaussian draws per path for non-vacuum field parts; 0 evaluates the
    /// conditional field expectation exactly.
    std::size_t n_inner = 0;
    /// Largest total degree accepted for field polynomials.
    int max_field_degree = 8;
    WeightForm weight_form = WeightForm::integrated;
};

/// (Phi, exp(-t H) Psi) through the path integral: per path, exp(-int V) times the
/// conditional field expectation of the endpoint polynomials and exp(-kappa P(...)).
EstimateResult matrix_element(const StateSpec& phi, const StateSpec& psi, const FieldModel& model,
                              const PolynomialInteraction& p, const Potential& V, double t,
                              const SubordinatorSpec& kinetic, const EstimatorOptions& options);

/// matrix_element at several grid sizes from the same paths: each path is drawn once on
/// the finest grid (times sample_refinement) and subsampled, so the estimates share
/// their random numbers. Every entry of `steps` must divide the finest grid.
std::vector<EstimateResult> matrix_element_refinement(const StateSpec& phi, const StateSpec& psi,
                                                      const FieldModel& model,
                                                      const PolynomialInteraction& p,
                                                      const Potential& V, double t,
                                                      const SubordinatorSpec& kinetic,
                                                      const EstimatorOptions& options,
                                                      std::span<const std::size_t> steps);

struct FieldInsertion {
    double time;
    ScalarFunction function;
};

/// Free-field multi-time element: the path weight carries
/// prod_j G_j(phi(delta_{t_j} (x) rho_{X_{t_j}})). Polynomial insertions are integrated
/// exactly against the joint slice covariance; other insertions use n_inner joint draws
/// per path (at least one).
EstimateResult n_point_insertions(const StateSpec& phi, const StateSpec& psi, const FieldModel& model,
                                  const Potential& V, std::span<const FieldInsertion> insertions,
                                  double t, const SubordinatorSpec& kinetic,
                                  const EstimatorOptions& options);

/// E[exp(-int_0^t V_bos(phi(delta_s (x) f)) ds)] for the stationary Gaussian process
/// s -> phi(delta_s (x) f), sampled on the left-endpoint grid of `params`.
EstimateResult field_only_estimate(const FieldVector& f, const ScalarFunction& V_bos, double t,
                                   const FieldModel& model, const SamplingParams& params);

struct GroundEnergyFit {
    bool valid = false;
    std::string diagnostic;
    double energy = 0.0;
    double energy_stderr = 0.0;
    double intercept = 0.0;
    std::size_t points_used = 0;
    std::vector<double> horizons;
    std::vector<double> values;
    std::vector<double> stderrs;
    /// -log(value) minus the fitted line, over the points used.
    std::vector<double> residuals;
};

/// Weighted linear fit of -log(value) against t over the largest horizons
/// (the top half, at least three).
GroundEnergyFit fit_ground_energy(std::span<const double> horizons, std::span<const double> values,
                                  std::span<const double> stderrs);

struct GroundEnergyResult {
    GroundEnergyFit fit;
    std::vector<EstimateResult> estimates;
};

/// Matrix elements at each horizon (same seed, so common random numbers) and the fit.
GroundEnergyResult ground_energy_estimate(const StateSpec& phi, const StateSpec& psi,
                                          const FieldModel& model, const PolynomialInteraction& p,
                                          const Potential& V, std::span<const double> horizons,
                                          const SubordinatorSpec& kinetic,
                                          const EstimatorOptions& options);

}  // namespace fkpath
