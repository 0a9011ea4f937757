#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "fkpath/random.hpp"

namespace fkpath {

using Point = std::vector<double>;

/// Bounded functions on R^d used as particle wave functions, insertion weights and
/// single-mode couplings.
struct ConstantFunction {
    double value = 0.0;
};

/// amplitude * exp(-|x - center|^2 / (2 width^2))
struct GaussianBump {
    Point center;
    double width = 1.0;
    double amplitude = 1.0;
};

/// value on the closed box [lower, upper], zero elsewhere.
struct BoxIndicator {
    Point lower;
    Point upper;
    double value = 1.0;
};

class SpatialFunction {
public:
    using Variant = std::variant<ConstantFunction, GaussianBump, BoxIndicator>;

    SpatialFunction() : SpatialFunction(ConstantFunction{0.0}) {}
    SpatialFunction(ConstantFunction f);  // NOLINT(google-explicit-constructor)
    SpatialFunction(GaussianBump f);      // NOLINT(google-explicit-constructor)
    SpatialFunction(BoxIndicator f);      // NOLINT(google-explicit-constructor)

    static SpatialFunction zero() { return ConstantFunction{0.0}; }
    static SpatialFunction constant(double c) { return ConstantFunction{c}; }
    /// Gaussian bump with unit L2 norm on R^d.
    static SpatialFunction normalized_bump(Point center, double width);

    double operator()(std::span<const double> x) const;
    double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

    /// Dimension fixed by the function's geometry; 0 for constants.
    [[nodiscard]] std::size_t dim() const;
    [[nodiscard]] bool is_zero() const;
    [[nodiscard]] bool has_compact_support() const;
    [[nodiscard]] double sup_norm() const;
    [[nodiscard]] double integral_abs() const;
    /// Axis-aligned box outside which the function is negligible (Gaussian: 12 widths).
    void bounding_box(Point& lower, Point& upper) const;

    [[nodiscard]] const Variant& variant() const { return f_; }

private:
    Variant f_;
};

/// Normalized proposal density q for the starting point of a path and the importance
/// weight f(x) / q(x). Gaussian bumps are sampled from |f| itself; boxes uniformly.
class StartProposal {
public:
    /// Proposal matched to f (|f| normalized where possible, f's bounding box otherwise).
    StartProposal(const SpatialFunction& f, std::size_t dim);
    /// Uniform proposal on an explicit box; throws ConfigurationError if it misses f's support.
    StartProposal(const SpatialFunction& f, std::size_t dim, Point lower, Point upper);

    /// Draws a start point into `x` and returns f(x)/q(x).
    double sample(RandomStream& rng, std::span<double> x) const;
    [[nodiscard]] std::size_t dim() const { return dim_; }

private:
    enum class Kind { gaussian, box, null };
    SpatialFunction f_;
    Kind kind_;
    std::size_t dim_;
    Point center_;
    double width_ = 1.0;
    Point lower_;
    Point upper_;
    double constant_weight_ = 0.0;
};

}  // namespace fkpath
