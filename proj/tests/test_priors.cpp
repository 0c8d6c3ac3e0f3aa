#include <cmath>
#include <vector>

#include "doctest.h"
#include "generators.hpp"
#include "oracles.hpp"
#include "proxmmse/error.hpp"
#include "proxmmse/priors.hpp"

using namespace proxmmse;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

std::vector<std::vector<double>> rows_of(const Prior& p) {
    std::vector<std::vector<double>> rows;
    for (const auto& a : p.atoms()) rows.emplace_back(a.point.data(), a.point.data() + a.point.size());
    return rows;
}

}  // namespace

TEST_CASE("discrete prior is always admissible") {
    const auto p = Prior::discrete({{scalar_vector(-1), 0.5}, {scalar_vector(1), 0.5}});
    for (const auto& m : {NoiseModel::gaussian_white(1.0), NoiseModel::generalized_gaussian(0.5)})
        CHECK(check_admissible(p, m, scalar_vector(0.3)).verdict == Admissibility::Admissible);
}

TEST_CASE("log-concave additive noise is admissible for any prior") {
    const auto r = check_admissible(Prior::analytic_laplacian(0.9),
                                    NoiseModel::additive_scalar(Potential::absolute()), scalar_vector(0.0));
    CHECK(r.verdict == Admissibility::Admissible);
    CHECK(r.reason == "log-concave bound");
}

TEST_CASE("non-log-concave noise uses tail quadrature") {
    const auto prior = Prior::analytic_gaussian(0.0, 1.0);
    const auto model = NoiseModel::generalized_gaussian(0.5, 1.0);
    const auto r = check_admissible(prior, model, scalar_vector(0.0));
    CHECK(r.verdict == Admissibility::Admissible);
    const double ref = oracle::integrate_line(
        [](double x) {
            return (1 + std::fabs(x)) * std::exp(-std::sqrt(std::fabs(x))) * std::exp(-0.5 * x * x) /
                   std::sqrt(2 * M_PI);
        },
        {0.0});
    CHECK(r.bound == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("grid priors report the computed bound") {
    TensorGrid g{scalar_vector(-1), scalar_vector(1), {5}};
    const auto r = check_admissible(Prior::grid_density(g), NoiseModel::gaussian_white(1.0), scalar_vector(0.5));
    CHECK(r.verdict == Admissibility::Admissible);
    CHECK(std::isfinite(r.bound));
    CHECK(r.bound > 0.0);
}

TEST_CASE("nondegenerate examples") {
    const double t = 1.0 / 3.0;
    CHECK(nondegenerate(Prior::discrete({{v2(0, 0), t}, {v2(1, 0), t}, {v2(0, 1), t}})));
    CHECK_FALSE(nondegenerate(Prior::discrete({{v2(0, 0), 0.5}, {v2(1, 1), 0.5}})));
    const auto grid = Prior::grid_density(TensorGrid{v2(-1, -1), v2(1, 1), {3, 3}});
    CHECK(nondegenerate(grid));
    CHECK(oracle::affine_rank(rows_of(grid)) == 2);
    CHECK(nondegenerate(Prior::analytic_laplacian(1.5)));
}

TEST_CASE("dimension mismatch and atoms outside X are rejected") {
    const auto p2 = Prior::discrete({{v2(1, 1), 1.0}});
    CHECK_THROWS_AS(p2.require_compatible(NoiseModel::gaussian_white(1.0)), InvalidArgument);
    const auto neg = Prior::discrete({{scalar_vector(-1.0), 1.0}});
    CHECK_THROWS_AS(neg.require_compatible(NoiseModel::poisson_scalar()), DomainError);
    CHECK_THROWS_AS(Prior::analytic_gaussian(0, 1).require_compatible(NoiseModel::poisson_scalar()), DomainError);
}

TEST_CASE("property: normalization within 1e-12") {
    gen::Gen g(201);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = g.discrete(g.integer(1, 12), g.integer(1, 4), -5, 5);
        CHECK(std::fabs(p.total_weight() - 1.0) <= 1e-12);
    }
    for (int trial = 0; trial < 20; ++trial) {
        TensorGrid grid{g.vector(2, -3, -1), g.vector(2, 1, 3), {g.integer(2, 9), g.integer(2, 9)}};
        std::vector<double> w(grid.size());
        for (double& x : w) x = g.uniform(0, 5);
        CHECK(std::fabs(Prior::grid_density(grid, w).total_weight() - 1.0) <= 1e-12);
    }
}

TEST_CASE("property: non-degeneracy agrees with the rank oracle") {
    gen::Gen g(202);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = g.integer(1, 4), k = g.integer(1, 6);
        auto atoms = g.atoms(k, n, -2, 2);
        if (trial % 3 == 0 && n > 1)  // force a hyperplane x_0 = 0.5
            for (auto& a : atoms) a.point[0] = 0.5;
        const auto p = Prior::discrete(atoms);
        CHECK(nondegenerate(p) == (oracle::affine_rank(rows_of(p)) == n));
    }
}

TEST_CASE("property: admissibility is monotone under pointwise-smaller q") {
    const auto prior = Prior::analytic_gaussian(0.0, 2.0);
    const auto base = NoiseModel::generalized_gaussian(0.5);
    for (double y : {-2.0, 0.0, 1.5})
        for (double s : {1.0, 0.5, 1e-3}) {
            const auto r = check_admissible(prior, base.scaled(s), scalar_vector(y));
            CHECK(r.verdict == Admissibility::Admissible);
        }
}
