#include "fkpath/spatial.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fkpath/errors.hpp"

namespace fkpath {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

double squared_distance(std::span<const double> x, const Point& c) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double d = x[i] - c[i];
        r2 += d * d;
    }
    return r2;
}

}  // namespace

SpatialFunction::SpatialFunction(ConstantFunction f) : f_(f) {
    if (!std::isfinite(f.value)) throw DomainError("constant function must be finite");
}

SpatialFunction::SpatialFunction(GaussianBump f) : f_(std::move(f)) {
    const auto& b = std::get<GaussianBump>(f_);
    if (b.center.empty()) throw DomainError("gaussian bump needs a center of dimension >= 1");
    if (!(b.width > 0.0)) throw DomainError("gaussian bump width must be positive");
    if (!std::isfinite(b.amplitude)) throw DomainError("gaussian bump amplitude must be finite");
}

SpatialFunction::SpatialFunction(BoxIndicator f) : f_(std::move(f)) {
    const auto& b = std::get<BoxIndicator>(f_);
    if (b.lower.empty() || b.lower.size() != b.upper.size())
        throw DomainError("box indicator bounds must have equal, positive dimension");
    for (std::size_t i = 0; i < b.lower.size(); ++i)
        if (!(b.upper[i] > b.lower[i])) throw DomainError("box indicator needs lower < upper");
}

SpatialFunction SpatialFunction::normalized_bump(Point center, double width) {
    const double d = static_cast<double>(center.size());
    const double amp = std::pow(std::numbers::pi * width * width, -d / 4.0);
    return GaussianBump{std::move(center), width, amp};
}

double SpatialFunction::operator()(std::span<const double> x) const {
    return std::visit(
        overloaded{[](const ConstantFunction& c) { return c.value; },
                   [&](const GaussianBump& b) {
                       return b.amplitude *
                              std::exp(-squared_distance(x, b.center) / (2.0 * b.width * b.width));
                   },
                   [&](const BoxIndicator& b) {
                       for (std::size_t i = 0; i < b.lower.size(); ++i)
                           if (x[i] < b.lower[i] || x[i] > b.upper[i]) return 0.0;
                       return b.value;
                   }},
        f_);
}

std::size_t SpatialFunction::dim() const {
    return std::visit(overloaded{[](const ConstantFunction&) -> std::size_t { return 0; },
                                 [](const GaussianBump& b) { return b.center.size(); },
                                 [](const BoxIndicator& b) { return b.lower.size(); }},
                      f_);
}

bool SpatialFunction::is_zero() const {
    return std::visit(overloaded{[](const ConstantFunction& c) { return c.value == 0.0; },
                                 [](const GaussianBump& b) { return b.amplitude == 0.0; },
                                 [](const BoxIndicator& b) { return b.value == 0.0; }},
                      f_);
}

bool SpatialFunction::has_compact_support() const {
    // Gaussian bumps count as effectively compact.
    if (const auto* c = std::get_if<ConstantFunction>(&f_)) return c->value == 0.0;
    return true;
}

double SpatialFunction::sup_norm() const {
    return std::visit(overloaded{[](const ConstantFunction& c) { return std::abs(c.value); },
                                 [](const GaussianBump& b) { return std::abs(b.amplitude); },
                                 [](const BoxIndicator& b) { return std::abs(b.value); }},
                      f_);
}

double SpatialFunction::integral_abs() const {
    return std::visit(
        overloaded{[](const ConstantFunction& c) {
                       return c.value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
                   },
                   [](const GaussianBump& b) {
                       const double d = static_cast<double>(b.center.size());
                       return std::abs(b.amplitude) *
                              std::pow(2.0 * std::numbers::pi * b.width * b.width, d / 2.0);
                   },
                   [](const BoxIndicator& b) {
                       double vol = 1.0;
                       for (std::size_t i = 0; i < b.lower.size(); ++i) vol *= b.upper[i] - b.lower[i];
                       return std::abs(b.value) * vol;
                   }},
        f_);
}

void SpatialFunction::bounding_box(Point& lower, Point& upper) const {
    std::visit(overloaded{[&](const ConstantFunction&) {
                              lower.clear();
                              upper.clear();
                          },
                          [&](const GaussianBump& b) {
                              lower = b.center;
                              upper = b.center;
                              for (std::size_t i = 0; i < lower.size(); ++i) {
                                  lower[i] -= 12.0 * b.width;
                                  upper[i] += 12.0 * b.width;
                              }
                          },
                          [&](const BoxIndicator& b) {
                              lower = b.lower;
                              upper = b.upper;
                          }},
               f_);
}

StartProposal::StartProposal(const SpatialFunction& f, std::size_t dim) : f_(f), dim_(dim) {
    if (dim == 0) throw DomainError("start proposal needs dimension >= 1");
    if (f.dim() != 0 && f.dim() != dim)
        throw ConfigurationError("state function dimension " + std::to_string(f.dim()) +
                                 " does not match particle dimension " + std::to_string(dim));
    if (f.is_zero()) {
        kind_ = Kind::null;
        return;
    }
    if (!f.has_compact_support())
        throw ConfigurationError("state functions must have (effectively) compact support");
    if (const auto* b = std::get_if<GaussianBump>(&f.variant())) {
        kind_ = Kind::gaussian;
        center_ = b->center;
        width_ = b->width;
        constant_weight_ = (b->amplitude > 0.0 ? 1.0 : -1.0) * f.integral_abs();
    } else {
        const auto& box = std::get<BoxIndicator>(f.variant());
        kind_ = Kind::box;
        lower_ = box.lower;
        upper_ = box.upper;
        double vol = 1.0;
        for (std::size_t i = 0; i < dim; ++i) vol *= upper_[i] - lower_[i];
        constant_weight_ = vol;
    }
}

StartProposal::StartProposal(const SpatialFunction& f, std::size_t dim, Point lower, Point upper)
    : StartProposal(f, dim) {
    if (lower.size() != dim || upper.size() != dim)
        throw ConfigurationError("proposal box dimension does not match the particle dimension");
    double vol = 1.0;
    for (std::size_t i = 0; i < dim; ++i) {
        if (!(upper[i] > lower[i])) throw ConfigurationError("proposal box needs lower < upper");
        vol *= upper[i] - lower[i];
    }
    if (kind_ != Kind::null) {
        Point flo, fhi;
        f.bounding_box(flo, fhi);
        for (std::size_t i = 0; i < dim; ++i)
            if (upper[i] <= flo[i] || lower[i] >= fhi[i])
                throw ConfigurationError(
                    "proposal box has zero overlap with the support of the state function");
        kind_ = Kind::box;
    }
    lower_ = std::move(lower);
    upper_ = std::move(upper);
    constant_weight_ = vol;
}

double StartProposal::sample(RandomStream& rng, std::span<double> x) const {
    switch (kind_) {
        case Kind::null:
            for (auto& xi : x) xi = 0.0;
            return 0.0;
        case Kind::gaussian:
            for (std::size_t i = 0; i < dim_; ++i) x[i] = center_[i] + width_ * rng.normal();
            return constant_weight_;
        case Kind::box:
            for (std::size_t i = 0; i < dim_; ++i)
                x[i] = lower_[i] + (upper_[i] - lower_[i]) * rng.uniform();
            // f(x) / q(x) = f(x) * volume
            return constant_weight_ * f_(x);
    }
    return 0.0;
}

}  // namespace fkpath
