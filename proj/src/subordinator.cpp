#include "fkpath/subordinator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fkpath/errors.hpp"

namespace fkpath {

SubordinatorSpec::SubordinatorSpec(double mass) : mass_(mass) {
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw DomainError("subordinator mass must be positive and finite, got " + std::to_string(mass));
}

double SubordinatorSpec::laplace_exponent(double s) const {
    if (!(s >= 0.0)) throw DomainError("laplace_exponent: s must be non-negative");
    // sqrt(s + M^2) - M == s / (sqrt(s + M^2) + M)
    return s / (std::sqrt(s + mass_ * mass_) + mass_);
}

double laplace_exponent(double s, const SubordinatorSpec& spec) { return spec.laplace_exponent(s); }

InverseGaussianLaw increment_law(double duration, const SubordinatorSpec& spec) {
    if (!(duration > 0.0)) throw DomainError("subordinator increment duration must be positive");
    return {duration / (2.0 * spec.mass()), 0.5 * duration * duration};
}

double sample_inverse_gaussian(const InverseGaussianLaw& law, RandomStream& rng) {
    const double nu = rng.normal();
    const double a = law.mean * nu * nu / (2.0 * law.shape);
    // Smaller root of the quadratic, written as mean / (1 + a + sqrt(a^2 + 2a)) to avoid
    // cancellation when a is large.
    const double x = law.mean / (1.0 + a + std::sqrt(a * (a + 2.0)));
    const double u = rng.uniform();
    return (u * (law.mean + x) <= law.mean) ? x : law.mean * law.mean / x;
}

SubordinatorIncrement sample_increment(double duration, const SubordinatorSpec& spec,
                                       RandomStream& rng) {
    return {duration, sample_inverse_gaussian(increment_law(duration, spec), rng)};
}

double hitting_time_reference(double t, const SubordinatorSpec& spec, double step,
                              RandomStream& rng) {
    if (!(t > 0.0)) throw DomainError("hitting_time_reference: t must be positive");
    if (!(step > 0.0)) throw DomainError("hitting_time_reference: step must be positive");
    if (step >= t / spec.mass())
        throw ConfigurationError("hitting_time_reference: step " + std::to_string(step) +
                                 " cannot resolve the crossing of level t (need step < t/M)");
    const double drift = spec.mass() * step;
    const double noise = std::sqrt(step);
    double s = 0.0;
    double y = 0.0;
    for (;;) {
        const double next = y + drift + noise * rng.normal();
        if (next >= t) {
            const double frac = (t - y) / (next - y);
            return 0.5 * (s + frac * step);
        }
        y = next;
        s += step;
    }
}

LaplaceCheck empirical_laplace_check(double t, double s, const SubordinatorSpec& spec,
                                     std::size_t n_samples, RandomStream& rng) {
    if (!(t > 0.0)) throw DomainError("empirical_laplace_check: t must be positive");
    if (!(s >= 0.0)) throw DomainError("empirical_laplace_check: s must be non-negative");
    if (n_samples < 100) throw DomainError("empirical_laplace_check: need at least 100 samples");
    const InverseGaussianLaw law = increment_law(t, spec);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double v = std::exp(-s * sample_inverse_gaussian(law, rng));
        sum += v;
        sum_sq += v * v;
    }
    const double n = static_cast<double>(n_samples);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
}

}  // namespace fkpath
