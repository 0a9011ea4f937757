#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "fkpath/estimate.hpp"
#include "fkpath/random.hpp"
#include "fkpath/spatial.hpp"
#include "fkpath/subordinator.hpp"

namespace fkpath {

/// Strictly increasing operator times 0 = t_0 < ... < t_n = horizon.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> points);

    static TimeGrid uniform(double horizon, std::size_t steps);
    /// Uniform grid with `extra` times merged in (times closer than 1e-12 * horizon to a
    /// grid point are snapped onto it).
    static TimeGrid uniform_with(double horizon, std::size_t steps, std::span<const double> extra);

    [[nodiscard]] std::size_t steps() const { return points_.size() - 1; }
    [[nodiscard]] double horizon() const { return points_.back(); }
    [[nodiscard]] double operator[](std::size_t j) const { return points_[j]; }
    [[nodiscard]] double step(std::size_t j) const { return points_[j + 1] - points_[j]; }
    [[nodiscard]] std::span<const double> points() const { return points_; }
    /// Index of a grid point equal to `time` (to 1e-12 * horizon); throws if absent.
    [[nodiscard]] std::size_t index_of(double time) const;
    /// Splits every interval into `factor` equal parts; point j of *this is point
    /// factor * j of the result.
    [[nodiscard]] TimeGrid refine(std::size_t factor) const;

private:
    std::vector<double> points_;
};

/// Sampled trajectory X_t = B_{T_t} at the grid times.
class ParticlePath {
public:
    ParticlePath(TimeGrid grid, std::size_t dim);

    [[nodiscard]] const TimeGrid& grid() const { return grid_; }
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] std::size_t steps() const { return grid_.steps(); }
    [[nodiscard]] std::span<const double> position(std::size_t j) const {
        return {positions_.data() + j * dim_, dim_};
    }
    std::span<double> position(std::size_t j) { return {positions_.data() + j * dim_, dim_}; }
    [[nodiscard]] double subordinated_time(std::size_t j) const { return subordinated_[j]; }
    std::vector<double>& subordinated_times() { return subordinated_; }
    [[nodiscard]] const std::vector<double>& subordinated_times() const { return subordinated_; }

    /// Keeps every `factor`-th point; the coarse grid is grid().refine-inverse.
    [[nodiscard]] ParticlePath subsample(std::size_t factor) const;
    /// In-place version of subsample for hot loops (`out` keeps its allocation).
    void subsample_into(std::size_t factor, ParticlePath& out) const;

private:
    TimeGrid grid_;
    std::size_t dim_;
    std::vector<double> subordinated_;
    std::vector<double> positions_;
};

struct ZeroPotential {};
struct ConstantPotential {
    double value = 0.0;
};
/// -depth * exp(-|x - center|^2 / (2 width^2))
struct GaussianWell {
    double depth = 1.0;
    double width = 1.0;
    Point center;
};
/// -depth on the ball |x - center| <= half_width.
struct SquareWell {
    double depth = 1.0;
    double half_width = 1.0;
    Point center;
};
/// Values on the uniform 1-D grid x_min + i * spacing, linearly interpolated and held
/// constant outside.
struct TabulatedPotential {
    double x_min = 0.0;
    double spacing = 1.0;
    std::vector<double> values;
};

/// Bounded external potential V of the particle.
class Potential {
public:
    using Variant =
        std::variant<ZeroPotential, ConstantPotential, GaussianWell, SquareWell, TabulatedPotential>;

    Potential() : v_(ZeroPotential{}) {}
    Potential(Variant v);  // NOLINT(google-explicit-constructor)
    template <class T>
        requires(!std::is_same_v<std::decay_t<T>, Potential> && !std::is_same_v<std::decay_t<T>, Variant> &&
                 std::is_constructible_v<Variant, T>)
    Potential(T&& v) : Potential(Variant(std::forward<T>(v))) {}  // NOLINT(google-explicit-constructor)

    double operator()(std::span<const double> x) const;
    double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }
    [[nodiscard]] double sup_norm() const;
    [[nodiscard]] bool is_zero() const { return std::holds_alternative<ZeroPotential>(v_); }
    /// 0 when the potential does not fix a dimension.
    [[nodiscard]] std::size_t dim() const;
    [[nodiscard]] const Variant& variant() const { return v_; }

private:
    Variant v_;
};

/// Draws the path started at `start`: per step an inverse-Gaussian increment dT of the
/// subordinator, then a centred Gaussian spatial increment with per-coordinate variance
/// 2 dT, so that E[exp(ik.(X_t - X_0))] = exp(-t h(|k|^2)).
ParticlePath sample_path(std::span<const double> start, const TimeGrid& grid,
                         const SubordinatorSpec& spec, RandomStream& rng);
/// Same, reusing the storage (and grid) of `path`.
void sample_path_into(ParticlePath& path, std::span<const double> start,
                      const SubordinatorSpec& spec, RandomStream& rng);

/// Left-endpoint Riemann sum of V along the path.
double action_integral(const ParticlePath& path, const Potential& V);

struct SamplingParams {
    BatchLayout layout;
    double steps_per_unit = 200.0;
    /// Explicit quadrature grid size; 0 means round(steps_per_unit * t).
    std::size_t steps = 0;
    /// Paths are drawn on a grid `sample_refinement` times finer and subsampled. Runs at
    /// different `steps` with equal steps * sample_refinement share their random numbers.
    std::size_t sample_refinement = 1;
    /// Optional uniform start proposal box replacing the default |f|-matched proposal.
    std::optional<std::pair<Point, Point>> proposal_box;

    [[nodiscard]] std::size_t grid_steps(double horizon) const;
};

/// Estimates (f, exp(-t H_par) g) = int dx f(x) E^x[g(X_t) exp(-int_0^t V(X_s) ds)].
EstimateResult fk_particle_estimate(const SpatialFunction& f, const SpatialFunction& g,
                                    const Potential& V, double t, const SubordinatorSpec& kinetic,
                                    const SamplingParams& params);

struct ParticleInsertion {
    double time;
    SpatialFunction weight;
};

/// Multi-time matrix element with the product weight prod_j g_j(X_{t_j}).
EstimateResult fk_with_insertions(const SpatialFunction& f, const SpatialFunction& g,
                                  const Potential& V, std::span<const ParticleInsertion> insertions,
                                  double t, const SubordinatorSpec& kinetic,
                                  const SamplingParams& params);

/// Checks 0 < t_1 < ... < t_k < t; throws ConfigurationError otherwise.
void validate_insertion_times(std::span<const double> times, double horizon);

}  // namespace fkpath
