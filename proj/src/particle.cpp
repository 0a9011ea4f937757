#include "fkpath/particle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fkpath/errors.hpp"

namespace fkpath {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw DomainError("time grid needs at least one step");
    if (points_.front() != 0.0) throw DomainError("time grid must start at 0");
    for (std::size_t j = 1; j < points_.size(); ++j)
        if (!(points_[j] > points_[j - 1]) || !std::isfinite(points_[j]))
            throw DomainError("time grid must be strictly increasing and finite");
}

TimeGrid TimeGrid::uniform(double horizon, std::size_t steps) {
    if (!(horizon > 0.0)) throw DomainError("time grid horizon must be positive");
    if (steps == 0) throw DomainError("time grid needs at least one step");
    std::vector<double> pts(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j)
        pts[j] = horizon * static_cast<double>(j) / static_cast<double>(steps);
    pts.back() = horizon;
    return TimeGrid(std::move(pts));
}

TimeGrid TimeGrid::uniform_with(double horizon, std::size_t steps, std::span<const double> extra) {
    TimeGrid base = uniform(horizon, steps);
    std::vector<double> pts = base.points_;
    const double tol = 1e-12 * horizon;
    for (double e : extra) {
        if (!(e > 0.0 && e < horizon)) throw ConfigurationError("extra grid time outside (0, t)");
        auto it = std::lower_bound(pts.begin(), pts.end(), e);
        const bool near_next = it != pts.end() && std::abs(*it - e) <= tol;
        const bool near_prev = it != pts.begin() && std::abs(*(it - 1) - e) <= tol;
        if (!near_next && !near_prev) pts.insert(it, e);
    }
    return TimeGrid(std::move(pts));
}

std::size_t TimeGrid::index_of(double time) const {
    const double tol = 1e-12 * horizon();
    auto it = std::lower_bound(points_.begin(), points_.end(), time - tol);
    if (it == points_.end() || std::abs(*it - time) > tol)
        throw ConfigurationError("time " + std::to_string(time) + " is not a grid point");
    return static_cast<std::size_t>(it - points_.begin());
}

TimeGrid TimeGrid::refine(std::size_t factor) const {
    if (factor == 0) throw DomainError("refinement factor must be positive");
    if (factor == 1) return *this;
    std::vector<double> pts;
    pts.reserve(steps() * factor + 1);
    for (std::size_t j = 0; j < steps(); ++j) {
        const double a = points_[j];
        const double h = step(j);
        pts.push_back(a);
        for (std::size_t r = 1; r < factor; ++r)
            pts.push_back(a + h * static_cast<double>(r) / static_cast<double>(factor));
    }
    pts.push_back(points_.back());
    return TimeGrid(std::move(pts));
}

// ---------------------------------------------------------------------------
// ParticlePath

ParticlePath::ParticlePath(TimeGrid grid, std::size_t dim)
    : grid_(std::move(grid)),
      dim_(dim),
      subordinated_(grid_.steps() + 1, 0.0),
      positions_((grid_.steps() + 1) * dim, 0.0) {
    if (dim == 0) throw DomainError("particle dimension must be >= 1");
}

ParticlePath ParticlePath::subsample(std::size_t factor) const {
    if (factor == 0 || steps() % factor != 0)
        throw ConfigurationError("subsample factor must divide the number of steps");
    std::vector<double> pts;
    for (std::size_t j = 0; j <= steps(); j += factor) pts.push_back(grid_[j]);
    ParticlePath out(TimeGrid(std::move(pts)), dim_);
    subsample_into(factor, out);
    return out;
}

void ParticlePath::subsample_into(std::size_t factor, ParticlePath& out) const {
    const std::size_t n = out.steps();
    if (n * factor != steps() || out.dim_ != dim_)
        throw ConfigurationError("subsample_into: incompatible target path");
    for (std::size_t j = 0; j <= n; ++j) {
        out.subordinated_[j] = subordinated_[j * factor];
        std::copy_n(positions_.data() + j * factor * dim_, dim_, out.positions_.data() + j * dim_);
    }
}

// ---------------------------------------------------------------------------
// Potential

Potential::Potential(Variant v) : v_(std::move(v)) {
    std::visit(overloaded{[](const ZeroPotential&) {},
                          [](const ConstantPotential& c) {
                              if (!std::isfinite(c.value))
                                  throw DomainError("constant potential must be finite");
                          },
                          [](const GaussianWell& g) {
                              if (!std::isfinite(g.depth) || !(g.width > 0.0) || g.center.empty())
                                  throw DomainError("gaussian well needs finite depth, width > 0, center");
                          },
                          [](const SquareWell& s) {
                              if (!std::isfinite(s.depth) || !(s.half_width > 0.0) || s.center.empty())
                                  throw DomainError("square well needs finite depth, half_width > 0, center");
                          },
                          [](const TabulatedPotential& t) {
                              if (t.values.size() < 2 || !(t.spacing > 0.0))
                                  throw DomainError("tabulated potential needs >= 2 values and spacing > 0");
                              for (double v : t.values)
                                  if (!std::isfinite(v))
                                      throw DomainError("tabulated potential values must be finite");
                          }},
               v_);
}

double Potential::operator()(std::span<const double> x) const {
    return std::visit(
        overloaded{[](const ZeroPotential&) { return 0.0; },
                   [](const ConstantPotential& c) { return c.value; },
                   [&](const GaussianWell& g) {
                       double r2 = 0.0;
                       for (std::size_t i = 0; i < g.center.size(); ++i)
                           r2 += (x[i] - g.center[i]) * (x[i] - g.center[i]);
                       return -g.depth * std::exp(-r2 / (2.0 * g.width * g.width));
                   },
                   [&](const SquareWell& s) {
                       double r2 = 0.0;
                       for (std::size_t i = 0; i < s.center.size(); ++i)
                           r2 += (x[i] - s.center[i]) * (x[i] - s.center[i]);
                       return r2 <= s.half_width * s.half_width ? -s.depth : 0.0;
                   },
                   [&](const TabulatedPotential& t) {
                       const double u = (x[0] - t.x_min) / t.spacing;
                       const auto last = static_cast<double>(t.values.size() - 1);
                       if (!(u > 0.0)) return t.values.front();
                       if (u >= last) return t.values.back();
                       const auto i = static_cast<std::size_t>(u);
                       const double frac = u - static_cast<double>(i);
                       return (1.0 - frac) * t.values[i] + frac * t.values[i + 1];
                   }},
        v_);
}

double Potential::sup_norm() const {
    return std::visit(overloaded{[](const ZeroPotential&) { return 0.0; },
                                 [](const ConstantPotential& c) { return std::abs(c.value); },
                                 [](const GaussianWell& g) { return std::abs(g.depth); },
                                 [](const SquareWell& s) { return std::abs(s.depth); },
                                 [](const TabulatedPotential& t) {
                                     double m = 0.0;
                                     for (double v : t.values) m = std::max(m, std::abs(v));
                                     return m;
                                 }},
                      v_);
}

std::size_t Potential::dim() const {
    return std::visit(overloaded{[](const ZeroPotential&) -> std::size_t { return 0; },
                                 [](const ConstantPotential&) -> std::size_t { return 0; },
                                 [](const GaussianWell& g) { return g.center.size(); },
                                 [](const SquareWell& s) { return s.center.size(); },
                                 [](const TabulatedPotential&) -> std::size_t { return 1; }},
                      v_);
}

// ---------------------------------------------------------------------------
// Sampling

void sample_path_into(ParticlePath& path, std::span<const double> start,
                      const SubordinatorSpec& spec, RandomStream& rng) {
    const std::size_t d = path.dim();
    if (start.size() != d) throw DomainError("start point dimension mismatch");
    auto& sub = path.subordinated_times();
    std::copy(start.begin(), start.end(), path.position(0).begin());
    sub[0] = 0.0;
    const TimeGrid& grid = path.grid();
    for (std::size_t j = 0; j < grid.steps(); ++j) {
        const double dT = sample_inverse_gaussian(increment_law(grid.step(j), spec), rng);
        sub[j + 1] = sub[j] + dT;
        const double sd = std::sqrt(2.0 * dT);
        auto prev = path.position(j);
        auto next = path.position(j + 1);
        for (std::size_t i = 0; i < d; ++i) next[i] = prev[i] + sd * rng.normal();
    }
}

ParticlePath sample_path(std::span<const double> start, const TimeGrid& grid,
                         const SubordinatorSpec& spec, RandomStream& rng) {
    ParticlePath path(grid, start.size());
    sample_path_into(path, start, spec, rng);
    return path;
}

double action_integral(const ParticlePath& path, const Potential& V) {
    if (V.is_zero()) return 0.0;
    if (const auto* c = std::get_if<ConstantPotential>(&V.variant()))
        return c->value * path.grid().horizon();
    double s = 0.0;
    for (std::size_t j = 0; j < path.steps(); ++j) s += V(path.position(j)) * path.grid().step(j);
    return s;
}

std::size_t SamplingParams::grid_steps(double horizon) const {
    if (steps > 0) return steps;
    if (!(steps_per_unit > 0.0)) throw ConfigurationError("steps_per_unit must be positive");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(steps_per_unit * horizon)));
}

void validate_insertion_times(std::span<const double> times, double horizon) {
    double prev = 0.0;
    for (double t : times) {
        if (!(t > prev)) throw ConfigurationError("insertion times must be strictly increasing and > 0");
        prev = t;
    }
    if (!times.empty() && !(times.back() < horizon))
        throw ConfigurationError("insertion times must lie strictly inside (0, t)");
}

namespace {

StartProposal make_proposal(const SpatialFunction& f, std::size_t dim, const SamplingParams& params) {
    if (params.proposal_box)
        return StartProposal(f, dim, params.proposal_box->first, params.proposal_box->second);
    return StartProposal(f, dim);
}

std::size_t particle_dim(const SpatialFunction& f, const SpatialFunction& g, const Potential& V) {
    std::size_t d = f.dim() ? f.dim() : g.dim();
    if (d == 0) d = V.dim();
    if (d == 0) throw ConfigurationError("cannot infer the particle dimension from the inputs");
    if ((f.dim() && f.dim() != d) || (g.dim() && g.dim() != d) || (V.dim() && V.dim() != d))
        throw ConfigurationError("state functions and potential disagree on the dimension");
    return d;
}

}  // namespace

EstimateResult fk_with_insertions(const SpatialFunction& f, const SpatialFunction& g,
                                  const Potential& V, std::span<const ParticleInsertion> insertions,
                                  double t, const SubordinatorSpec& kinetic,
                                  const SamplingParams& params) {
    if (!(t >= 0.0)) throw DomainError("horizon t must be non-negative");
    const std::size_t d = particle_dim(f, g, V);
    const StartProposal proposal = make_proposal(f, d, params);
    for (const auto& ins : insertions)
        if (ins.weight.dim() != 0 && ins.weight.dim() != d)
            throw ConfigurationError("insertion function dimension mismatch");

    if (t == 0.0) {
        if (!insertions.empty()) throw ConfigurationError("insertions need a positive horizon");
        auto results = run_batches(params.layout, 1,
                                   [&](std::size_t, std::size_t count, RandomStream& rng,
                                       BatchAccumulator& acc) {
                                       Point x(d);
                                       for (std::size_t i = 0; i < count; ++i) {
                                           const double w = proposal.sample(rng, x);
                                           acc.observe_path_weight(1.0);
                                           acc.add(w * g(x));
                                       }
                                   });
        return results.front();
    }

    std::vector<double> times;
    for (const auto& ins : insertions) times.push_back(ins.time);
    validate_insertion_times(times, t);
    const TimeGrid grid = TimeGrid::uniform_with(t, params.grid_steps(t), times);
    std::vector<std::size_t> insertion_index;
    for (double s : times) insertion_index.push_back(grid.index_of(s));
    const std::size_t refine = std::max<std::size_t>(1, params.sample_refinement);
    const TimeGrid fine = grid.refine(refine);

    auto results = run_batches(
        params.layout, 1,
        [&](std::size_t, std::size_t count, RandomStream& rng, BatchAccumulator& acc) {
            ParticlePath fine_path(fine, d);
            ParticlePath path(grid, d);
            Point x0(d);
            for (std::size_t i = 0; i < count; ++i) {
                const double w0 = proposal.sample(rng, x0);
                sample_path_into(fine_path, x0, kinetic, rng);
                fine_path.subsample_into(refine, path);
                double w = std::exp(-action_integral(path, V));
                acc.observe_path_weight(w);
                for (std::size_t k = 0; k < insertions.size(); ++k)
                    w *= insertions[k].weight(path.position(insertion_index[k]));
                acc.add(w0 * w * g(path.position(path.steps())));
            }
        });
    return results.front();
}

EstimateResult fk_particle_estimate(const SpatialFunction& f, const SpatialFunction& g,
                                    const Potential& V, double t, const SubordinatorSpec& kinetic,
                                    const SamplingParams& params) {
    return fk_with_insertions(f, g, V, {}, t, kinetic, params);
}

}  // namespace fkpath
