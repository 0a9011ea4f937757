#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fkpath/errors.hpp"
#include "fkpath/estimator.hpp"
#include "fkpath/oracle.hpp"
#include "support.hpp"

using namespace fkpath;

namespace {

EstimatorOptions options(std::size_t n, std::uint64_t seed, std::size_t steps) {
    EstimatorOptions o;
    o.sampling.layout.n_samples = n;
    o.sampling.layout.n_batches = 50;
    o.sampling.layout.seed = seed;
    o.sampling.steps = steps;
    return o;
}

const SubordinatorSpec kin(1.0);
const SpatialFunction bump = SpatialFunction::normalized_bump({0.0}, 1.0);

StateSpec vacuum_state(SpatialFunction f) { return StateSpec{std::move(f), FieldState{}}; }

FieldModel coupled_mode() {
    return FieldModel::single_mode(SingleModeModel{1.0, GaussianBump{{0.0}, std::sqrt(0.5), 0.5}});
}

FieldModel constant_mode(double c) {
    return FieldModel::single_mode(SingleModeModel{1.0, SpatialFunction::constant(c)});
}

const PolynomialInteraction quartic{{0, 0, 0, 1}, 0.1};

}  // namespace

TEST_CASE("kappa = 0 with vacuum states is the particle estimate") {
    const Potential V = GaussianWell{1.0, 1.0, {0.0}};
    const PolynomialInteraction free{{0, 0, 0, 1}, 0.0};
    const EstimateResult a =
        matrix_element(vacuum_state(bump), vacuum_state(bump), coupled_mode(), free, V, 1.0, kin, options(50000, 1, 100));
    const EstimateResult b = fk_particle_estimate(bump, bump, V, 1.0, kin, options(50000, 2, 100).sampling);
    CHECK(testing::within_sigma(a.mean, a.stderr, b.mean, b.stderr));
    CHECK(a.n_samples == 50000);
    CHECK(a.seed == 1);
}

TEST_CASE("zero right particle state gives exactly zero") {
    const EstimateResult r = matrix_element(vacuum_state(bump), vacuum_state(SpatialFunction::zero()), coupled_mode(),
                                            quartic, Potential{}, 1.0, kin, options(1000, 3, 20));
    CHECK(r.mean == 0.0);
    CHECK(r.stderr == 0.0);
}

TEST_CASE("per-path weights are positive and the element is positive beyond 10 sigma") {
    const EstimateResult r = matrix_element(vacuum_state(bump), vacuum_state(bump), coupled_mode(), quartic,
                                            Potential{}, 1.0, kin, options(20000, 4, 100));
    CHECK(r.min_path_weight > 0.0);
    // P >= 0 bounds the weight by 1 up to quadrature rounding (a few ulp).
    CHECK(r.max_path_weight <= 1.0 + 1e-14);
    CHECK(r.mean > 10.0 * r.stderr);
    CHECK(r.quadrature_warnings == 0);
    CHECK_FALSE(r.formal);
}

TEST_CASE("single-mode element agrees with the coupled grid") {
    const EstimateResult r = matrix_element(vacuum_state(bump), vacuum_state(bump), coupled_mode(), quartic,
                                            Potential{}, 1.0, kin, options(40000, 5, 200));
    const SingleModeModel sm{1.0, GaussianBump{{0.0}, std::sqrt(0.5), 0.5}};
    const double oracle = coupled_single_mode_grid(bump, bump, sm, Potential{}, quartic, 1.0, kin, Grid2DSpec{}).element.value;
    CHECK(std::abs(r.mean - oracle) <= 3.0 * r.stderr + 1e-6);
}

TEST_CASE("continuity in kappa at matched seeds") {
    const PolynomialInteraction zero{{0, 0, 0, 1}, 0.0}, small{{0, 0, 0, 1}, 1e-3};
    const Potential V = GaussianWell{1.0, 1.0, {0.0}};
    const EstimateResult a =
        matrix_element(vacuum_state(bump), vacuum_state(bump), coupled_mode(), zero, V, 1.0, kin, options(20000, 6, 100));
    const EstimateResult b =
        matrix_element(vacuum_state(bump), vacuum_state(bump), coupled_mode(), small, V, 1.0, kin, options(20000, 6, 100));
    CHECK(std::abs(a.mean - b.mean) <= 5.0 * a.stderr);
    CHECK(b.mean < a.mean);
}

TEST_CASE("symmetry in the two states") {
    const SpatialFunction other = GaussianBump{{0.8}, 0.7, 1.0};
    const Potential V = GaussianWell{1.0, 1.0, {0.2}};
    const EstimateResult a = matrix_element(vacuum_state(bump), vacuum_state(other), coupled_mode(), quartic, V, 1.0,
                                            kin, options(40000, 7, 100));
    const EstimateResult b = matrix_element(vacuum_state(other), vacuum_state(bump), coupled_mode(), quartic, V, 1.0,
                                            kin, options(40000, 8, 100));
    CHECK(testing::within_sigma(a.mean, a.stderr, b.mean, b.stderr));
}

TEST_CASE("one-particle field states at kappa = 0 give the propagated mode covariance") {
    // <phi(a e) | e^{-tH} phi(a e)> with constant coupling: the particle and field factorise,
    // and the field factor is Cov(phi_0(a e), phi_t(a e)) = (a^2 / 2) e^{-omega0 t}.
    const double a = 0.8, t = 1.0;
    const FieldModel model = constant_mode(0.5);
    FieldState one;
    one.vectors.push_back(FieldVector{a, {}, {}});
    one.polynomial = CylinderPolynomial{{CylinderTerm{1.0, {1}}}};
    const PolynomialInteraction free{{0, 0, 0, 1}, 0.0};
    const EstimateResult r =
        matrix_element(StateSpec{bump, one}, StateSpec{bump, one}, model, free, Potential{}, t, kin, options(20000, 9, 50));
    const EstimateResult p = fk_particle_estimate(bump, bump, Potential{}, t, kin, options(20000, 9, 50).sampling);
    const double factor = 0.5 * a * a * std::exp(-t);
    CHECK(std::abs(r.mean - factor * p.mean) <= 3.0 * std::hypot(r.stderr, factor * p.stderr));

    SUBCASE("inner draws agree with exact conditional evaluation") {
        EstimatorOptions o = options(20000, 10, 50);
        const EstimateResult exact = matrix_element(StateSpec{bump, one}, StateSpec{bump, one}, model, quartic,
                                                    Potential{}, t, kin, o);
        o.n_inner = 4;
        o.sampling.layout.seed = 11;
        const EstimateResult drawn = matrix_element(StateSpec{bump, one}, StateSpec{bump, one}, model, quartic,
                                                    Potential{}, t, kin, o);
        CHECK(testing::within_sigma(exact.mean, exact.stderr, drawn.mean, drawn.stderr));
    }
}

TEST_CASE("field state validation") {
    FieldState big;
    big.vectors.push_back(FieldVector{1.0, {}, {}});
    big.polynomial = CylinderPolynomial{{CylinderTerm{1.0, {9}}}};
    CHECK_THROWS_AS(matrix_element(StateSpec{bump, big}, vacuum_state(bump), coupled_mode(), quartic, Potential{}, 1.0,
                                   kin, options(100, 1, 10)),
                    ConfigurationError);
    FieldState dangling;
    dangling.polynomial = CylinderPolynomial{{CylinderTerm{1.0, {1}}}};
    CHECK_THROWS_AS(matrix_element(StateSpec{bump, dangling}, vacuum_state(bump), coupled_mode(), quartic, Potential{},
                                   1.0, kin, options(100, 1, 10)),
                    ConfigurationError);
    const PolynomialInteraction negative{{0, 0, 0, 1}, -0.1};
    CHECK_THROWS_AS(matrix_element(vacuum_state(bump), vacuum_state(bump), coupled_mode(), negative, Potential{}, 1.0,
                                   kin, options(100, 1, 10)),
                    IntegrabilityError);
    CHECK_THROWS_AS(matrix_element(vacuum_state(bump), vacuum_state(bump), coupled_mode(), quartic, Potential{}, 0.0,
                                   kin, options(100, 1, 10)),
                    DomainError);
}

TEST_CASE("grid refinement with common random numbers is a Cauchy sequence") {
    EstimatorOptions o = options(20000, 12, 0);
    o.sampling.sample_refinement = 1;
    const std::size_t steps[] = {50, 100, 200, 400};
    const std::vector<EstimateResult> r = matrix_element_refinement(vacuum_state(bump), vacuum_state(bump),
                                                                    coupled_mode(), quartic, Potential{}, 1.0, kin, o, steps);
    REQUIRE(r.size() == 4);
    double prev = INFINITY;
    for (std::size_t i = 1; i < r.size(); ++i) {
        const double gap = std::abs(r[i].mean - r[i - 1].mean);
        CHECK(gap < prev);
        prev = gap;
    }
    const std::size_t bad[] = {40, 300};
    CHECK_THROWS_AS(matrix_element_refinement(vacuum_state(bump), vacuum_state(bump), coupled_mode(), quartic,
                                              Potential{}, 1.0, kin, o, bad),
                    ConfigurationError);
}

TEST_CASE("n-point insertions") {
    const double c = 0.6;
    const FieldModel model = constant_mode(c);
    const double w00 = model.max_pair_covariance();
    CHECK(w00 == doctest::Approx(0.5 * c * c));
    const EstimateResult free = fk_particle_estimate(bump, bump, Potential{}, 1.0, kin, options(20000, 13, 50).sampling);

    SUBCASE("unit insertions reduce to the free element") {
        const FieldInsertion ins[] = {{0.3, ScalarFunction::constant(1.0)}, {0.6, ScalarFunction::constant(1.0)}};
        const EstimateResult r = n_point_insertions(vacuum_state(bump), vacuum_state(bump), model, Potential{}, ins,
                                                    1.0, kin, options(20000, 14, 50));
        CHECK(testing::within_sigma(r.mean, r.stderr, free.mean, free.stderr));
    }
    SUBCASE("a square insertion carries the slice variance") {
        const FieldInsertion ins[] = {{0.5, PolynomialFunction{{0.0, 0.0, 1.0}}}};
        const EstimateResult r = n_point_insertions(vacuum_state(bump), vacuum_state(bump), model, Potential{}, ins,
                                                    1.0, kin, options(20000, 15, 50));
        CHECK(std::abs(r.mean - w00 * free.mean) <= 3.0 * std::hypot(r.stderr, w00 * free.stderr));
    }
    SUBCASE("paired linear insertions carry the slice covariance") {
        const FieldInsertion ins[] = {{0.2, PolynomialFunction{{0.0, 1.0}}}, {0.7, PolynomialFunction{{0.0, 1.0}}}};
        const EstimateResult r = n_point_insertions(vacuum_state(bump), vacuum_state(bump), model, Potential{}, ins,
                                                    1.0, kin, options(20000, 16, 50));
        const double cov = w00 * std::exp(-0.5);
        CHECK(std::abs(r.mean - cov * free.mean) <= 3.0 * std::hypot(r.stderr, cov * free.stderr));
    }
    SUBCASE("sampled bounded insertions agree with their Gaussian expectation") {
        // E[exp(-y^2)] for y ~ N(0, w00) is (1 + 2 w00)^{-1/2}.
        EstimatorOptions o = options(20000, 17, 50);
        o.n_inner = 8;
        const FieldInsertion ins[] = {{0.5, GaussianDamping{1.0, 1.0}}};
        const EstimateResult r = n_point_insertions(vacuum_state(bump), vacuum_state(bump), model, Potential{}, ins,
                                                    1.0, kin, o);
        const double e = 1.0 / std::sqrt(1.0 + 2.0 * w00);
        CHECK(std::abs(r.mean - e * free.mean) <= 3.0 * std::hypot(r.stderr, e * free.stderr));
    }
}

TEST_CASE("slice covariance matches the Euclidean pairing pathwise") {
    const FieldModel model = FieldModel::continuum(1, Dispersion{1.0}, FormFactor{});
    RandomStream rng(18, 0);
    const double zero[] = {0.0};
    const ParticlePath path = sample_path(zero, TimeGrid::uniform(1.0, 10), kin, rng);
    const std::size_t js[] = {2, 7};
    std::vector<SliceVector> slices;
    for (std::size_t j : js) slices.push_back({path.grid()[j], model.form_at(path.position(j))});
    const Eigen::MatrixXd cov = slice_covariance(slices, model);
    const double expect = 0.5 * euclid_slice_inner(slices[0].time, slices[0].vector, slices[1].time, slices[1].vector, model);
    CHECK(cov(0, 1) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(cov(0, 0) == doctest::Approx(model.max_pair_covariance()).epsilon(1e-12));
}

TEST_CASE("field-only estimates") {
    const FieldModel model = FieldModel::single_mode(SingleModeModel{});
    const FieldVector f{1.0, {}, {}};
    SamplingParams p;
    p.layout.n_samples = 2000;
    p.layout.n_batches = 20;
    p.layout.seed = 19;
    p.steps = 50;
    CHECK(field_only_estimate(f, ScalarFunction::constant(0.0), 1.0, model, p).mean == 1.0);
    const EstimateResult c = field_only_estimate(f, ScalarFunction::constant(0.7), 1.3, model, p);
    CHECK(c.mean == doctest::Approx(std::exp(-0.7 * 1.3)).epsilon(1e-13));
    CHECK(c.stderr <= 1e-13);
    CHECK_THROWS_AS(field_only_estimate(f, PolynomialFunction{{0.0, 1.0}}, 1.0, model, p), ModelValidityError);

    SUBCASE("square potential matches the oscillator grid") {
        p.layout.n_samples = 40000;
        p.steps = 200;
        const ScalarFunction sq = PolynomialFunction{{0.0, 0.0, 1.0}};
        const EstimateResult r = field_only_estimate(f, sq, 1.0, model, p);
        const double oracle = oscillator_1d_grid(sq, 1.0, 1.0, 1.0, GridSpec{8.0, 128, 1e-3}).value;
        CHECK(std::abs(r.mean - oracle) <= 3.0 * r.stderr + 1e-6);
    }
}

TEST_CASE("ground energy") {
    SUBCASE("a constant potential shifts the energy by exactly that constant") {
        const double horizons[] = {1.0, 2.0, 3.0, 4.0};
        EstimatorOptions o = options(4000, 20, 0);
        o.sampling.steps_per_unit = 20;
        const GroundEnergyResult a = ground_energy_estimate(vacuum_state(bump), vacuum_state(bump), coupled_mode(),
                                                            quartic, Potential{}, horizons, kin, o);
        REQUIRE(a.fit.valid);
        const GroundEnergyResult b = ground_energy_estimate(vacuum_state(bump), vacuum_state(bump), coupled_mode(),
                                                            quartic, ConstantPotential{0.4}, horizons, kin, o);
        REQUIRE(b.fit.valid);
        CHECK(b.fit.energy - a.fit.energy == doctest::Approx(0.4).epsilon(1e-9));
    }
    SUBCASE("free particle with a wide state has bottom near zero") {
        const double horizons[] = {2.0, 4.0, 6.0, 8.0};
        EstimatorOptions o = options(20000, 21, 0);
        o.sampling.steps_per_unit = 5;
        const SpatialFunction wide = SpatialFunction::normalized_bump({0.0}, 5.0);
        const PolynomialInteraction free{{0, 0, 0, 1}, 0.0};
        const GroundEnergyResult r = ground_energy_estimate(vacuum_state(wide), vacuum_state(wide), coupled_mode(), free,
                                                            Potential{}, horizons, kin, o);
        REQUIRE(r.fit.valid);
        CHECK(std::abs(r.fit.energy) <= 0.02);
        CHECK(r.fit.energy >= -3.0 * r.fit.energy_stderr);
    }
    SUBCASE("non-positive values cannot be fitted") {
        const double h[] = {1.0, 2.0, 3.0}, v[] = {0.5, -0.1, 0.2}, s[] = {0.01, 0.01, 0.01};
        const GroundEnergyFit fit = fit_ground_energy(h, v, s);
        CHECK_FALSE(fit.valid);
        CHECK_FALSE(fit.diagnostic.empty());
    }
    SUBCASE("exact exponentials are fitted exactly") {
        const double h[] = {1.0, 2.0, 3.0, 4.0};
        double v[4], s[4];
        for (int i = 0; i < 4; ++i) {
            v[i] = 0.8 * std::exp(-0.3 * h[i]);
            s[i] = 0.01 * v[i];
        }
        const GroundEnergyFit fit = fit_ground_energy(h, v, s);
        CHECK(fit.valid);
        CHECK(fit.energy == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(fit.intercept == doctest::Approx(-std::log(0.8)).epsilon(1e-12));
    }
}
