#include <catch2/catch_amalgamated.hpp>

#include "agediff/coefficients.hpp"
#include "agediff/grid.hpp"
#include "agediff/norms.hpp"
#include "agediff/profile.hpp"
#include "agediff/spatial_operator.hpp"

#include <cmath>
#include <random>

using namespace agediff;

namespace {

Coefficients simple_coeffs(double d, double mu, double beta = 0.0) {
    Coefficients c;
    c.diffusion = constant_field(d);
    c.mortality = constant_field(mu);
    c.birth = constant_field(beta);
    return c;
}

}  // namespace

TEST_CASE("age grid nodes and weights") {
    AgeGrid g(2.0, 128);
    REQUIRE(g.nodes.front() == 0.0);
    REQUIRE(g.nodes.back() == Catch::Approx(2.0).margin(0));
    for (int i = 1; i <= g.n_age; ++i)
        REQUIRE(g.nodes[i] - g.nodes[i - 1] == Catch::Approx(g.spacing()).epsilon(1e-14));
    double wsum = 0.0;
    for (double w : g.weights) wsum += w;
    REQUIRE(wsum == Catch::Approx(2.0).epsilon(1e-12));

    REQUIRE_THROWS_AS(AgeGrid(1.0, 0), ValidationError);
    REQUIRE_THROWS_AS(AgeGrid(-1.0, 4), ValidationError);
}

TEST_CASE("dirichlet laplacian stencil on the unit-spacing grid") {
    SpaceGrid sg(4.0, 3, {BcKind::dirichlet, 0.0});
    REQUIRE(sg.spacing == Catch::Approx(1.0));
    auto op = assemble_spatial_operator(simple_coeffs(1.0, 0.0), sg, 0.0);
    Matrix expect(3, 3);
    expect << -2, 1, 0, 1, -2, 1, 0, 1, -2;
    REQUIRE((op.matrix - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("mortality is a diagonal shift, exactly") {
    SpaceGrid sg(1.0, 7, {BcKind::dirichlet, 0.0});
    for (double c : {5.0, -1.25, 0.3}) {
        auto base = assemble_spatial_operator(simple_coeffs(1.0, 0.4), sg, 0.7);
        auto shifted = assemble_spatial_operator(simple_coeffs(1.0, 0.4 + c), sg, 0.7);
        Matrix diff = shifted.matrix - (base.matrix - c * Matrix::Identity(7, 7));
        // Exact up to the association of the two float subtractions.
        REQUIRE(diff.cwiseAbs().maxCoeff() < 1e-13 * base.matrix.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("neumann no-flux rows sum to zero") {
    SpaceGrid sg(3.0, 11, {BcKind::neumann, 0.0});
    Coefficients c = simple_coeffs(1.0, 0.0);
    c.diffusion = gaussian_bump_field(0.5, 1.0, 0.0, -1.0, 1.5, 0.8);
    auto op = assemble_spatial_operator(c, sg, 0.0);
    Vector rowsums = op.matrix.rowwise().sum();
    REQUIRE(rowsums.cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("robin keeps the positivity structure and damps the boundary") {
    SpaceGrid sg(1.0, 6, {BcKind::robin, 0.7});
    auto op = assemble_spatial_operator(simple_coeffs(0.3, 0.0), sg, 0.0);
    auto neumann = assemble_spatial_operator(simple_coeffs(0.3, 0.0),
                                             SpaceGrid(1.0, 6, {BcKind::neumann, 0.0}), 0.0);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            if (i != j) REQUIRE(op.matrix(i, j) >= 0.0);
    REQUIRE(op.matrix(0, 0) == Catch::Approx(neumann.matrix(0, 0) - 0.7 / sg.spacing));
    REQUIRE(op.matrix(5, 5) == Catch::Approx(neumann.matrix(5, 5) - 0.7 / sg.spacing));
}

TEST_CASE("off-diagonal positivity structure on random positive presets") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> unif(0.1, 2.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int ns = 2 + static_cast<int>(rng() % 10);
        const BcKind kind = (trial % 3 == 0)   ? BcKind::dirichlet
                            : (trial % 3 == 1) ? BcKind::neumann
                                               : BcKind::robin;
        SpaceGrid sg(unif(rng) + 0.5, ns, {kind, unif(rng)});
        Coefficients c;
        c.diffusion = gaussian_bump_field(unif(rng), unif(rng), unif(rng), unif(rng), unif(rng),
                                          unif(rng));
        c.mortality = separable_field(unif(rng), unif(rng), 0.0, unif(rng), 0.0, 0.0);
        c.birth = constant_field(0.0);
        auto op = assemble_spatial_operator(c, sg, unif(rng));
        for (int i = 0; i < ns; ++i)
            for (int j = 0; j < ns; ++j)
                if (i != j) REQUIRE(op.matrix(i, j) >= 0.0);
    }
}

TEST_CASE("dirichlet operator is symmetric with midpoint diffusion") {
    SpaceGrid sg(2.0, 9, {BcKind::dirichlet, 0.0});
    Coefficients c = simple_coeffs(1.0, 0.2);
    c.diffusion = gaussian_bump_field(0.4, 0.9, 0.0, -1.0, 1.0, 0.5);
    auto op = assemble_spatial_operator(c, sg, 0.3);
    REQUIRE((op.matrix - op.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("stencil consistency: observed order >= 1.9 on sin(pi x / L)") {
    const double length = 1.3;
    std::vector<double> errs;
    for (int ns : {16, 32, 64}) {
        SpaceGrid sg(length, ns, {BcKind::dirichlet, 0.0});
        auto op = assemble_spatial_operator(simple_coeffs(1.0, 0.0), sg, 0.0);
        Vector u(ns), target(ns);
        const double kpi = M_PI / length;
        for (int k = 0; k < ns; ++k) {
            u(k) = std::sin(kpi * sg.nodes[k]);
            target(k) = -kpi * kpi * u(k);
        }
        errs.push_back((op.matrix * u - target).cwiseAbs().maxCoeff());
    }
    REQUIRE(std::log2(errs[0] / errs[1]) > 1.9);
    REQUIRE(std::log2(errs[1] / errs[2]) > 1.9);
}

TEST_CASE("invalid coefficients are reported with the grid point") {
    SpaceGrid sg(1.0, 4, {BcKind::dirichlet, 0.0});
    Coefficients c = simple_coeffs(1.0, 0.0);
    c.mortality = [](double a, double x) {
        return (x > 0.5) ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    };
    REQUIRE_THROWS_AS(assemble_spatial_operator(c, sg, 0.0), InvalidCoefficientError);
    try {
        assemble_spatial_operator(c, sg, 0.25);
    } catch (const InvalidCoefficientError& e) {
        REQUIRE(std::string(e.what()).find("mortality") != std::string::npos);
        REQUIRE(std::string(e.what()).find("x=") != std::string::npos);
    }
    Coefficients low = simple_coeffs(0.0, 0.0);
    REQUIRE_THROWS_AS(assemble_spatial_operator(low, sg, 0.0), InvalidCoefficientError);
}

TEST_CASE("profile norm: zero, constant and single-atom cases") {
    AgeGrid ag(2.5, 10);
    SpaceGrid sg(1.0, 4, {BcKind::dirichlet, 0.0});
    NormSpec norms;

    AgeProfile zero(ag.n_age, sg.n_space);
    REQUIRE(profile_norm(zero, ag, sg, norms) == 0.0);

    Vector v(4);
    v << 1.0, -2.0, 0.5, 3.0;
    AgeProfile constp = AgeProfile::constant(ag, v);
    REQUIRE(profile_norm(constp, ag, sg, norms) ==
            Catch::Approx(2.5 * norms.norm(v, sg)).epsilon(1e-12));

    AgeProfile atom(ag.n_age, sg.n_space);
    atom[3] = v;
    REQUIRE(profile_norm(atom, ag, sg, norms) ==
            Catch::Approx(ag.weights[3] * norms.norm(v, sg)).epsilon(1e-12));

    AgeProfile wrong(ag.n_age - 1, sg.n_space);
    REQUIRE_THROWS_AS(profile_norm(wrong, ag, sg, norms), ValidationError);

    NormSpec sup;
    sup.space_norm = SpaceNorm::sup;
    REQUIRE(sup.norm(v, sg) == 3.0);
}

TEST_CASE("cone check with tolerance band") {
    AgeGrid ag(1.0, 3);
    SpaceGrid sg(1.0, 2, {BcKind::dirichlet, 0.0});
    AgeProfile p(ag.n_age, sg.n_space);
    REQUIRE(cone_check(p));
    p[1](0) = -1.0;
    REQUIRE_FALSE(cone_check(p));
    p[1](0) = -1e-12;
    REQUIRE(cone_check(p, 1e-10));
    p[1](0) = -1e-9;
    REQUIRE_FALSE(cone_check(p, 1e-10));
}
