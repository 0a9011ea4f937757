#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fkpath/errors.hpp"
#include "fkpath/subordinator.hpp"
#include "support.hpp"

using namespace fkpath;

TEST_CASE("laplace exponent values") {
    const SubordinatorSpec m1(1.0);
    CHECK(m1.laplace_exponent(0.0) == 0.0);
    CHECK(m1.laplace_exponent(3.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m1.laplace_exponent(1.0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-15));
    CHECK(laplace_exponent(1.0, m1) == m1.laplace_exponent(1.0));
    // No cancellation for tiny s: h(s) ~ s / (2M).
    CHECK(m1.laplace_exponent(1e-14) == doctest::Approx(0.5e-14).epsilon(1e-12));
}

TEST_CASE("laplace exponent is non-negative, increasing and concave") {
    for (double m : {0.1, 1.0, 5.0}) {
        const SubordinatorSpec spec(m);
        double prev = spec.laplace_exponent(0.0), prev_slope = INFINITY;
        for (int i = 1; i <= 200; ++i) {
            const double s = 0.05 * i;
            const double h = spec.laplace_exponent(s);
            CHECK(h >= 0.0);
            CHECK(h > prev);
            const double slope = (h - prev) / 0.05;
            CHECK(slope <= prev_slope);
            prev = h;
            prev_slope = slope;
        }
    }
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(SubordinatorSpec(0.0), DomainError);
    CHECK_THROWS_AS(SubordinatorSpec(-1.0), DomainError);
    const SubordinatorSpec spec(1.0);
    RandomStream rng(1, 0);
    CHECK_THROWS_AS((void)spec.laplace_exponent(-0.1), DomainError);
    CHECK_THROWS_AS(sample_increment(0.0, spec, rng), DomainError);
    CHECK_THROWS_AS(sample_increment(-1.0, spec, rng), DomainError);
    CHECK_THROWS_AS(hitting_time_reference(1.0, spec, 2.0, rng), ConfigurationError);
    CHECK_THROWS_AS(empirical_laplace_check(1.0, 1.0, spec, 10, rng), DomainError);
}

TEST_CASE("inverse-Gaussian parameters from Laplace matching") {
    const InverseGaussianLaw law = increment_law(1.0, SubordinatorSpec(1.0));
    CHECK(law.mean == doctest::Approx(0.5));
    CHECK(law.shape == doctest::Approx(0.5));
    // Symbolic match: (shape/mean)(1 - sqrt(1 + 2 mean^2 s / shape)) = -t h(s).
    for (double m : {0.5, 2.0})
        for (double t : {0.3, 1.7})
            for (double s : {0.1, 1.0, 7.0}) {
                const SubordinatorSpec spec(m);
                const InverseGaussianLaw l = increment_law(t, spec);
                const double lhs = (l.shape / l.mean) * (1.0 - std::sqrt(1.0 + 2.0 * l.mean * l.mean * s / l.shape));
                CHECK(lhs == doctest::Approx(-t * spec.laplace_exponent(s)).epsilon(1e-12));
            }
}

TEST_CASE("increments are non-negative over a million draws") {
    const SubordinatorSpec spec(1.0);
    RandomStream rng(7, 0);
    std::size_t bad = 0;
    for (int i = 0; i < 1000000; ++i) {
        const SubordinatorIncrement inc = sample_increment(1e-3 + 1e-6 * (i % 2000), spec, rng);
        if (!(inc.value >= 0.0) || !std::isfinite(inc.value)) ++bad;
    }
    CHECK(bad == 0);
}

TEST_CASE("empirical laplace check examples") {
    RandomStream rng(11, 0);
    const LaplaceCheck zero = empirical_laplace_check(1.0, 0.0, SubordinatorSpec(1.0), 1000, rng);
    CHECK(zero.mean == 1.0);
    CHECK(zero.stderr == 0.0);

    const LaplaceCheck one = empirical_laplace_check(1.0, 1.0, SubordinatorSpec(1.0), 100000, rng);
    const double exact = std::exp(-(std::sqrt(2.0) - 1.0));
    CHECK(exact == doctest::Approx(0.66086).epsilon(1e-5));
    CHECK(std::abs(one.mean - exact) <= 3.0 * one.stderr);

    const LaplaceCheck half = empirical_laplace_check(2.0, 0.5, SubordinatorSpec(0.5), 100000, rng);
    CHECK(std::abs(half.mean - std::exp(-2.0 * (std::sqrt(0.75) - 0.5))) <= 3.0 * half.stderr);
}

TEST_CASE("increment mean vanishes with the duration") {
    const SubordinatorSpec spec(1.0);
    RandomStream rng(3, 0);
    for (double d : {1e-2, 1e-4}) {
        double sum = 0.0;
        for (int i = 0; i < 20000; ++i) sum += sample_increment(d, spec, rng).value;
        CHECK(sum / 20000.0 == doctest::Approx(d / 2.0).epsilon(0.05));
    }
}

TEST_CASE("additivity in law") {
    const SubordinatorSpec spec(1.0);
    RandomStream ra(5, 0), rb(5, 1);
    const int n = 100000;
    for (double s : {0.5, 1.0, 2.0}) {
        double sa = 0, sa2 = 0, sb = 0, sb2 = 0;
        for (int i = 0; i < n; ++i) {
            const double two = sample_increment(0.4, spec, ra).value + sample_increment(0.6, spec, ra).value;
            const double one = sample_increment(1.0, spec, rb).value;
            const double ea = std::exp(-s * two), eb = std::exp(-s * one);
            sa += ea;
            sa2 += ea * ea;
            sb += eb;
            sb2 += eb * eb;
        }
        const double ma = sa / n, mb = sb / n;
        const double va = (sa2 / n - ma * ma) / (n - 1), vb = (sb2 / n - mb * mb) / (n - 1);
        CHECK(testing::within_sigma(ma, std::sqrt(va), mb, std::sqrt(vb)));
    }
}

TEST_CASE("hitting-time reference agrees in law with exact sampling") {
    const SubordinatorSpec spec(1.0);
    RandomStream ra(21, 0), rb(21, 1);
    const std::size_t n = 3000;
    std::vector<double> exact(n), hit(n);
    double mean_e = 0.0, mean_h = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        exact[i] = sample_increment(1.0, spec, ra).value;
        hit[i] = hitting_time_reference(1.0, spec, 1e-3, rb);
        mean_e += exact[i] / n;
        mean_h += hit[i] / n;
    }
    CHECK(testing::ks_statistic(exact, hit) <= testing::ks_critical(n, n));
    // Var T_1 = mean^3 / shape = 0.25.
    CHECK(testing::within_sigma(mean_e, 0.5 / std::sqrt(n), mean_h, 0.5 / std::sqrt(n)));
}

TEST_CASE("large mass concentrates T_t at t / (2M)") {
    const SubordinatorSpec spec(200.0);
    RandomStream rng(4, 0);
    for (int i = 0; i < 1000; ++i) CHECK(std::abs(sample_increment(1.0, spec, rng).value - 1.0 / 400.0) < 1e-3);
}

TEST_CASE("streams are reproducible and distinct") {
    RandomStream a(9, 3), b(9, 3), c(9, 4);
    const SubordinatorSpec spec(1.0);
    const double xa = sample_increment(1.0, spec, a).value;
    CHECK(xa == sample_increment(1.0, spec, b).value);
    CHECK(xa != sample_increment(1.0, spec, c).value);
}
