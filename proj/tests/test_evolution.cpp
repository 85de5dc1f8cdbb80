#include <catch2/catch_amalgamated.hpp>

#include "agediff/evolution.hpp"
#include "agediff/linalg.hpp"

#include <cmath>
#include <random>

using namespace agediff;

namespace {

Coefficients scalar_coeffs(double mu, double beta = 0.0) {
    Coefficients c;
    c.diffusion = constant_field(0.0);
    c.diffusion_enabled = false;
    c.mortality = constant_field(mu);
    c.birth = constant_field(beta);
    return c;
}

Coefficients diffusion_coeffs(double d, double mu, double beta = 0.0) {
    Coefficients c;
    c.diffusion = constant_field(d);
    c.mortality = constant_field(mu);
    c.birth = constant_field(beta);
    return c;
}

}  // namespace

TEST_CASE("A == 0 gives identity steps exactly") {
    AgeGrid ag(1.0, 8);
    SpaceGrid sg(1.0, 3, {BcKind::dirichlet, 0.0});
    EvolutionCache cache(scalar_coeffs(0.0), ag, sg, 4);
    for (int i = 0; i < ag.n_age; ++i)
        REQUIRE((cache.step(i) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant reaction steps match the scalar exponential") {
    const double c = 1.7;
    AgeGrid ag(2.0, 10);
    SpaceGrid sg(1.0, 1, {BcKind::dirichlet, 0.0});
    for (int substeps : {1, 4}) {
        EvolutionCache cache(scalar_coeffs(c), ag, sg, substeps);
        const double exact = std::exp(-c * ag.spacing());
        for (int i = 0; i < ag.n_age; ++i)
            REQUIRE(cache.step(i)(0, 0) == Catch::Approx(exact).epsilon(1e-13));
    }
}

TEST_CASE("age-independent generator: equal lags give equal propagators") {
    AgeGrid ag(1.0, 12);
    SpaceGrid sg(1.0, 5, {BcKind::neumann, 0.0});
    EvolutionCache cache(diffusion_coeffs(0.4, 0.3), ag, sg, 3);
    for (int lag : {1, 3, 5}) {
        Matrix ref = cache.pi_matrix(lag, 0);
        for (int j = 1; j + lag <= ag.n_age; ++j) {
            Matrix m = cache.pi_matrix(j + lag, j);
            REQUIRE((m - ref).cwiseAbs().maxCoeff() <
                    1e-13 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("apply_pi identity, composition and causality") {
    AgeGrid ag(1.5, 9);
    SpaceGrid sg(1.0, 4, {BcKind::dirichlet, 0.0});
    EvolutionCache cache(diffusion_coeffs(0.2, 0.1), ag, sg, 2);
    Vector v(4);
    v << 1.0, -0.5, 2.0, 0.25;

    REQUIRE((cache.apply_pi(4, 4, v) - v).cwiseAbs().maxCoeff() == 0.0);

    Vector two_leg = cache.apply_pi(8, 5, cache.apply_pi(5, 2, v));
    Vector one_leg = cache.apply_pi(8, 2, v);
    REQUIRE((two_leg - one_leg).cwiseAbs().maxCoeff() < 1e-13 * one_leg.cwiseAbs().maxCoeff());

    REQUIRE_THROWS_AS(cache.apply_pi(2, 5, v), CausalityError);
}

TEST_CASE("evolution property holds as exact matrix products") {
    AgeGrid ag(2.0, 16);
    SpaceGrid sg(1.0, 6, {BcKind::dirichlet, 0.0});
    Coefficients c = diffusion_coeffs(0.15, 0.0);
    c.mortality = gaussian_bump_field(0.1, 0.8, 1.0, 0.5, 0.5, 0.4);
    EvolutionCache cache(c, ag, sg, 2);
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        int i = rng() % (ag.n_age + 1);
        int j = rng() % (i + 1);
        int k = rng() % (j + 1);
        Matrix lhs = cache.pi_matrix(i, j) * cache.pi_matrix(j, k);
        Matrix rhs = cache.pi_matrix(i, k);
        const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
        REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13 * scale);
    }
}

TEST_CASE("positivity of steps at a safe substep count") {
    AgeGrid ag(2.0, 32);
    SpaceGrid sg(1.0, 8, {BcKind::dirichlet, 0.0});
    EvolutionCache cache(diffusion_coeffs(0.05, 0.2), ag, sg, 4);
    // Brute-force entrywise inspection of every step matrix.
    for (int i = 0; i < ag.n_age; ++i) REQUIRE(cache.step(i).minCoeff() >= -1e-14);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector v(8);
    for (int k = 0; k < 8; ++k) v(k) = unif(rng);
    Vector w = cache.apply_pi(20, 2, v);
    REQUIRE(w.minCoeff() >= -1e-14);
}

TEST_CASE("shifted application: scalar factor semantics") {
    AgeGrid ag(2.0, 8);
    SpaceGrid sg(1.0, 3, {BcKind::neumann, 0.0});
    EvolutionCache cache(diffusion_coeffs(0.3, 0.25), ag, sg, 2);
    Vector v(3);
    v << 1.0, 2.0, 3.0;

    REQUIRE((cache.apply_pi_shifted(0.0, 6, 2, v) - cache.apply_pi(6, 2, v)).cwiseAbs().maxCoeff() ==
            0.0);
    REQUIRE((cache.apply_pi_shifted(3.7, 4, 4, v) - v).cwiseAbs().maxCoeff() == 0.0);

    // Pure scalar decay with A == 0: one unit of age at lambda = 1.
    AgeGrid ag1(1.0, 4);
    EvolutionCache trivial(scalar_coeffs(0.0), ag1, SpaceGrid(1.0, 1, {BcKind::dirichlet, 0.0}), 4);
    Vector one = Vector::Ones(1);
    REQUIRE(trivial.apply_pi_shifted(1.0, 4, 0, one)(0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("lambda-shift reproduction: cache built with mu + lambda") {
    const double lambda = 0.37;
    AgeGrid ag(1.5, 10);
    SpaceGrid sg(1.2, 5, {BcKind::dirichlet, 0.0});
    Coefficients base = diffusion_coeffs(0.2, 0.0);
    base.mortality = gaussian_bump_field(0.3, 0.6, 0.7, 0.4, 0.6, 0.5);
    Coefficients shifted = base;
    const Field mu0 = base.mortality;
    shifted.mortality = [mu0, lambda](double a, double x) { return mu0(a, x) + lambda; };

    EvolutionCache cache(base, ag, sg, 3);
    EvolutionCache cache_shifted(shifted, ag, sg, 3);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        int i = rng() % (ag.n_age + 1);
        int j = rng() % (i + 1);
        Vector v(5);
        for (int k = 0; k < 5; ++k) v(k) = unif(rng);
        Vector a = cache_shifted.apply_pi(i, j, v);
        Vector b = cache.apply_pi_shifted(lambda, i, j, v);
        REQUIRE((a - b).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("estimate fit: pure decay and the trivial case") {
    SpaceGrid sg(1.0, 1, {BcKind::dirichlet, 0.0});
    const double c = 0.9;
    EvolutionCache decay(scalar_coeffs(c), AgeGrid(2.0, 24), sg, 2);
    EstimateFit fit = fit_estimate(decay);
    REQUIRE(fit.varpi == Catch::Approx(-c).epsilon(0.02));
    REQUIRE(fit.m0 >= 1.0);
    REQUIRE(fit.m0 == Catch::Approx(1.0).epsilon(1e-6));

    EvolutionCache free(scalar_coeffs(0.0), AgeGrid(2.0, 24), sg, 2);
    EstimateFit fit0 = fit_estimate(free);
    REQUIRE(fit0.m0 == 1.0);
    REQUIRE(fit0.varpi == 0.0);
}

TEST_CASE("estimate fit: dissipative case has nonpositive growth bound") {
    AgeGrid ag(1.0, 16);
    SpaceGrid sg(1.0, 6, {BcKind::dirichlet, 0.0});
    Coefficients c = diffusion_coeffs(0.4, 0.0);
    c.mortality = separable_field(0.2, 0.1, 0.0, 1.0, 0.0, 0.0);
    EvolutionCache cache(c, ag, sg, 2);
    EstimateFit fit = fit_estimate(cache);
    REQUIRE(fit.varpi <= 0.0);
    // Independent oracle: the rightmost eigenvalue of every frozen spatial
    // operator is <= 0.
    for (int i = 0; i <= ag.n_age; ++i) {
        auto op = assemble_spatial_operator(c, sg, ag.nodes[i]);
        for (const auto& ev : eigenvalues_dense(op.matrix)) REQUIRE(ev.real() <= 1e-12);
    }
}

TEST_CASE("estimate fit envelope holds on fresh pairs") {
    AgeGrid ag(1.0, 120);  // large enough that fitting samples a strided subset
    SpaceGrid sg(1.0, 3, {BcKind::neumann, 0.0});
    Coefficients c = diffusion_coeffs(0.25, 0.0);
    c.mortality = gaussian_bump_field(0.05, 0.4, 0.5, 0.3, 0.5, -1.0);
    EvolutionCache cache(c, ag, sg, 1);
    EstimateFit fit = fit_estimate(cache);
    std::mt19937 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        int i = rng() % (ag.n_age + 1);
        int j = rng() % (i + 1);
        const double norm = cache.norms().operator_norm(cache.pi_matrix(i, j), sg);
        REQUIRE(fit.envelope_holds(ag.nodes[i], ag.nodes[j], norm, 1e-6));
    }
}

TEST_CASE("singular Crank-Nicolson system is diagnosed") {
    AgeGrid ag(1.0, 2);
    SpaceGrid sg(1.0, 2, {BcKind::dirichlet, 0.0});
    Coefficients c;
    c.diffusion_enabled = false;
    c.diffusion = constant_field(0.0);
    c.birth = constant_field(0.0);
    // With substeps = 1 the substep is da; mortality +-K with K = 2/da makes
    // (I - da/2 A0) exactly singular.
    const double k = 2.0 / ag.spacing();
    c.mortality = [k](double, double x) { return x < 0.5 ? k : -k; };
    REQUIRE_THROWS_AS(EvolutionCache(c, ag, sg, 1), StepConstructionError);
}
