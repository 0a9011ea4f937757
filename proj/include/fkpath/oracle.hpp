#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fkpath/estimator.hpp"
#include "fkpath/field.hpp"
#include "fkpath/interaction.hpp"
#include "fkpath/particle.hpp"
#include "fkpath/spatial.hpp"
#include "fkpath/subordinator.hpp"

namespace fkpath {

/// Periodic grid x_i = -L + i * 2L / N, i = 0..N-1, with imaginary-time step dtau.
struct GridSpec {
    double half_length = 20.0;
    std::size_t points = 256;
    double dtau = 1e-3;
    /// Largest tolerated fraction of |u|^2 in the outer tenth of the box on either side.
    double boundary_tolerance = 1e-8;

    [[nodiscard]] double spacing() const { return 2.0 * half_length / static_cast<double>(points); }
    [[nodiscard]] double x(std::size_t i) const { return -half_length + spacing() * static_cast<double>(i); }
    /// Throws ConfigurationError for a malformed grid and ResolutionError when the spacing
    /// exceeds a quarter of `min_length`.
    void validate(double min_length) const;
};

struct GridDiagnostics {
    std::size_t steps = 0;
    double dtau = 0.0;
    /// Largest fraction of spectral mass on a Nyquist mode seen at the checks.
    double nyquist_mass = 0.0;
    /// Largest fraction of |u|^2 near the box edges seen at the checks.
    double boundary_mass = 0.0;
};

std::vector<double> sample_on_grid(const SpatialFunction& f, const GridSpec& grid);

struct GridPropagation {
    std::vector<double> values;
    GridDiagnostics diagnostics;
};

/// exp(-t (h(-Delta) + V)) f by Strang splitting (one exact step when V = 0).
GridPropagation particle_semigroup_grid(std::span<const double> f, const Potential& V, double t,
                                        const SubordinatorSpec& kinetic, const GridSpec& grid);

struct GridValue {
    double value = 0.0;
    GridDiagnostics diagnostics;
};

/// (f, exp(-t1 H) g1 exp(-(t2 - t1) H) ... g) on the grid, d = 1. Matches
/// fk_with_insertions (and fk_particle_estimate with no insertions).
GridValue particle_matrix_element_grid(const SpatialFunction& f, const SpatialFunction& g, const Potential& V,
                                       std::span<const ParticleInsertion> insertions, double t,
                                       const SubordinatorSpec& kinetic, const GridSpec& grid);

/// Grid for the (x, q) plane of the particle coupled to one field mode.
struct Grid2DSpec {
    GridSpec x{20.0, 256, 1e-3};
    GridSpec q{8.0, 64, 1e-3};
};

struct CoupledOracleResult {
    GridValue element;
    std::optional<GroundEnergyFit> ground_energy;
    std::vector<double> horizons;
    std::vector<double> values;
};

/// (f (x) Omega, exp(-t H) g (x) Omega) for
/// H = h(k_x^2) + (omega0/2) k_q^2 + V(x) + (omega0/2)(q^2 - 1) + kappa P(c(x) q),
/// Omega(q) = pi^{-1/4} exp(-q^2/2). Time step: grid.x.dtau. Optional horizons add the
/// matrix elements at those times and the long-time log-slope fit.
CoupledOracleResult coupled_single_mode_grid(const SpatialFunction& f, const SpatialFunction& g,
                                             const SingleModeModel& model, const Potential& V,
                                             const PolynomialInteraction& p, double t,
                                             const SubordinatorSpec& kinetic, const Grid2DSpec& grid,
                                             std::span<const double> horizons = {});

/// (Omega, exp(-t ((omega0/2)(k^2 + q^2 - 1) + V_bos(a q))) Omega); the field value of a
/// single-mode vector with amplitude a is a q.
GridValue oscillator_1d_grid(const ScalarFunction& V_bos, double amplitude, double omega0, double t,
                             const GridSpec& grid);

}  // namespace fkpath
