#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fkpath/errors.hpp"
#include "fkpath/oracle.hpp"

using namespace fkpath;

namespace {

const SubordinatorSpec kin(1.0);
const SpatialFunction bump = SpatialFunction::normalized_bump({0.0}, 1.0);
const Potential well = GaussianWell{1.0, 1.0, {0.0}};

/// exp(-t h(-Delta)) f by a direct O(N^2) discrete Fourier sum, independent of the FFT plumbing.
std::vector<double> direct_multiplier(const std::vector<double>& f, double t, const GridSpec& g) {
    const std::size_t n = g.points;
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> re(n), im(n), out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            re[k] += f[i] * std::cos(two_pi * double(k * i) / double(n));
            im[k] -= f[i] * std::sin(two_pi * double(k * i) / double(n));
        }
    for (std::size_t k = 0; k < n; ++k) {
        const double m = k <= n / 2 ? double(k) : double(k) - double(n);
        const double kk = two_pi * m / (2.0 * g.half_length);
        const double damp = std::exp(-t * kin.laplace_exponent(kk * kk));
        re[k] *= damp;
        im[k] *= damp;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double a = two_pi * double(k * i) / double(n);
            out[i] += re[k] * std::cos(a) - im[k] * std::sin(a);
        }
        out[i] /= double(n);
    }
    return out;
}

}  // namespace

TEST_CASE("free propagation is the exact Fourier multiplier") {
    const GridSpec g{20.0, 256, 1e-3};
    const std::vector<double> f = sample_on_grid(bump, g);
    const GridPropagation p = particle_semigroup_grid(f, Potential{}, 1.0, kin, g);
    const std::vector<double> ref = direct_multiplier(f, 1.0, g);
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(p.values[i] - ref[i]));
    CHECK(err <= 1e-12);
    CHECK(p.diagnostics.steps == 1);
}

TEST_CASE("t = 0 leaves the function unchanged") {
    const GridSpec g{};
    const std::vector<double> f = sample_on_grid(bump, g);
    const GridPropagation p = particle_semigroup_grid(f, well, 0.0, kin, g);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(p.values[i] == f[i]);
}

TEST_CASE("Strang splitting converges at second order") {
    std::vector<double> vals;
    for (double dtau : {0.1, 0.05, 0.025, 0.0125})
        vals.push_back(particle_matrix_element_grid(bump, bump, well, {}, 1.0, kin, GridSpec{20.0, 256, dtau}).value);
    for (std::size_t i = 0; i + 2 < vals.size(); ++i) {
        const double ratio = (vals[i] - vals[i + 1]) / (vals[i + 1] - vals[i + 2]);
        CHECK(ratio == doctest::Approx(4.0).epsilon(0.1));
    }
}

TEST_CASE("propagation preserves positivity") {
    const GridSpec g{};
    const std::vector<double> f = sample_on_grid(GaussianBump{{2.0}, 0.5, 1.0}, g);
    const GridPropagation p = particle_semigroup_grid(f, GaussianWell{3.0, 0.8, {0.0}}, 3.0, kin, g);
    double mx = 0.0;
    for (double v : p.values) mx = std::max(mx, v);
    for (double v : p.values) CHECK(v >= -1e-12 * mx);
}

TEST_CASE("grid elements are Hermitian") {
    const SpatialFunction g = GaussianBump{{0.8}, 0.7, 1.0};
    const Potential V = GaussianWell{1.0, 1.0, {0.3}};
    const double a = particle_matrix_element_grid(bump, g, V, {}, 1.0, kin, GridSpec{}).value;
    const double b = particle_matrix_element_grid(g, bump, V, {}, 1.0, kin, GridSpec{}).value;
    CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));

    const SingleModeModel sm{1.0, GaussianBump{{0.0}, std::sqrt(0.5), 0.5}};
    const PolynomialInteraction p{{0, 0, 0, 1}, 0.1};
    const Grid2DSpec coarse{GridSpec{20.0, 256, 1e-2}, GridSpec{8.0, 64, 1e-2}};
    const double c = coupled_single_mode_grid(bump, g, sm, V, p, 1.0, kin, coarse).element.value;
    const double d = coupled_single_mode_grid(g, bump, sm, V, p, 1.0, kin, coarse).element.value;
    CHECK(std::abs(c - d) <= 1e-10 * std::abs(c));
}

TEST_CASE("coupled grid factorises without coupling") {
    const Grid2DSpec grid{GridSpec{20.0, 256, 2.5e-4}, GridSpec{8.0, 64, 2.5e-4}};
    const double particle = particle_matrix_element_grid(bump, bump, well, {}, 1.0, kin, GridSpec{20.0, 256, 2.5e-4}).value;

    SUBCASE("kappa = 0") {
        const SingleModeModel sm{1.0, GaussianBump{{0.0}, std::sqrt(0.5), 0.5}};
        const double v = coupled_single_mode_grid(bump, bump, sm, well, PolynomialInteraction{{0, 0, 0, 1}, 0.0}, 1.0,
                                                  kin, grid)
                             .element.value;
        CHECK(std::abs(v - particle) <= 1e-8);
    }
    SUBCASE("zero coupling function") {
        const SingleModeModel sm{1.0, SpatialFunction::zero()};
        const double v = coupled_single_mode_grid(bump, bump, sm, well, PolynomialInteraction{{0, 0, 0, 1}, 0.5}, 1.0,
                                                  kin, grid)
                             .element.value;
        CHECK(std::abs(v - particle) <= 1e-8);
    }
}

TEST_CASE("oscillator grid") {
    const GridSpec g{8.0, 128, 1e-3};
    // The harmonic part is split too, so the vacuum is reproduced up to the O(dtau^2) splitting error.
    const double e1 = oscillator_1d_grid(ScalarFunction::constant(0.0), 1.0, 1.0, 1.0, g).value - 1.0;
    const double e2 = oscillator_1d_grid(ScalarFunction::constant(0.0), 1.0, 1.0, 1.0, GridSpec{8.0, 128, 5e-4}).value - 1.0;
    CHECK(std::abs(e1) <= 1e-7);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.01));
    CHECK(oscillator_1d_grid(ScalarFunction::constant(0.3), 1.0, 1.0, 2.0, g).value ==
          doctest::Approx(std::exp(-0.6)).epsilon(1e-7));

    SUBCASE("small-t series") {
        // <Omega, e^{-t(H0 + q^2)} Omega> = 1 - t E[q^2] + t^2 E[q^4] / 2 + O(t^3), E[q^2] = 1/2, E[q^4] = 3/4.
        const double t = 1e-2;
        const double v = oscillator_1d_grid(PolynomialFunction{{0.0, 0.0, 1.0}}, 1.0, 1.0, t, GridSpec{8.0, 128, 1e-4}).value;
        CHECK(std::abs(v - (1.0 - t / 2.0)) <= 1e-4);
        CHECK(std::abs(v - (1.0 - t / 2.0 + 0.375 * t * t)) <= 1e-6);
    }
    SUBCASE("self-convergence under refinement") {
        const ScalarFunction sq = PolynomialFunction{{0.0, 0.0, 1.0}};
        const double a = oscillator_1d_grid(sq, 1.0, 1.0, 1.0, g).value;
        const double b = oscillator_1d_grid(sq, 1.0, 1.0, 1.0, GridSpec{8.0, 256, 5e-4}).value;
        CHECK(std::abs(a - b) <= 1e-6);
    }
}

TEST_CASE("particle grid self-convergence at the default resolution") {
    const double a = particle_matrix_element_grid(bump, bump, well, {}, 1.0, kin, GridSpec{}).value;
    const double b = particle_matrix_element_grid(bump, bump, well, {}, 1.0, kin, GridSpec{20.0, 512, 5e-4}).value;
    CHECK(std::abs(a - b) <= 1e-6);
}

TEST_CASE("resolution and configuration errors") {
    const GridSpec coarse{20.0, 16, 1e-3};
    CHECK_THROWS_AS(particle_matrix_element_grid(bump, bump, well, {}, 1.0, kin, coarse), ResolutionError);
    const SpatialFunction edge = GaussianBump{{18.0}, 1.0, 1.0};
    CHECK_THROWS_AS(particle_matrix_element_grid(edge, edge, Potential{}, {}, 1.0, kin, GridSpec{}), ResolutionError);
    CHECK_THROWS_AS(particle_matrix_element_grid(bump, bump, well, {}, 1.0, kin, GridSpec{20.0, 100, 1e-3}),
                    ConfigurationError);
    const SingleModeModel sm{1.0, SpatialFunction::constant(1.0)};
    CHECK_THROWS_AS(coupled_single_mode_grid(bump, bump, sm, well, PolynomialInteraction{{0, 0, 0, 1}, -0.1}, 1.0, kin,
                                             Grid2DSpec{}),
                    IntegrabilityError);
}
