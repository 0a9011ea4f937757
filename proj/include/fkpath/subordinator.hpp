#pragma once

#include <cstddef>

#include "fkpath/random.hpp"

namespace fkpath {

/// Relativistic subordinator: the Lévy process T_t with E[exp(-s T_t)] = exp(-t h(s)),
/// where h(s) = sqrt(s + M^2) - M is the Bernstein function induced by the rest mass M.
class SubordinatorSpec {
public:
    explicit SubordinatorSpec(double mass);

    [[nodiscard]] double mass() const { return mass_; }

    /// h(s) = sqrt(s + M^2) - M, evaluated without cancellation for small s.
    [[nodiscard]] double laplace_exponent(double s) const;

private:
    double mass_;
};

double laplace_exponent(double s, const SubordinatorSpec& spec);

struct SubordinatorIncrement {
    double duration;
    double value;
};

/// Inverse-Gaussian law of a subordinator increment over `duration`.
/// Matching exp((shape/mean)(1 - sqrt(1 + 2 mean^2 s / shape))) to exp(-t h(s))
/// gives mean = t / (2M), shape = t^2 / 2.
struct InverseGaussianLaw {
    double mean;
    double shape;
};

InverseGaussianLaw increment_law(double duration, const SubordinatorSpec& spec);

/// Draws one inverse-Gaussian variate (one normal, one uniform).
double sample_inverse_gaussian(const InverseGaussianLaw& law, RandomStream& rng);

SubordinatorIncrement sample_increment(double duration, const SubordinatorSpec& spec,
                                       RandomStream& rng);

/// Half the first passage time of the drifted Brownian motion B_s + M s (unit variance
/// rate) through level t, simulated on a grid of width `step` with linear interpolation
/// of the crossing. Equal in law to T_t up to O(sqrt(step)) discretisation bias; kept only
/// as an independent oracle for sample_increment.
double hitting_time_reference(double t, const SubordinatorSpec& spec, double step,
                              RandomStream& rng);

struct LaplaceCheck {
    double mean;
    double stderr;
};

/// Sample mean and standard error of exp(-s T_t) over n_samples exact draws.
LaplaceCheck empirical_laplace_check(double t, double s, const SubordinatorSpec& spec,
                                     std::size_t n_samples, RandomStream& rng);

}  // namespace fkpath
