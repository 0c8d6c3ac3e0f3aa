#include <cmath>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "doctest.h"
#include "generators.hpp"
#include "oracles.hpp"
#include "proxmmse/error.hpp"
#include "proxmmse/noise_models.hpp"

using namespace proxmmse;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

/// Central difference of log q in x (wrt_x) or y.
Vector fd_log_q(const NoiseModel& m, const Vector& y, const Vector& x, bool wrt_x, double h = 1e-6) {
    Vector g(x.size());
    for (Eigen::Index k = 0; k < g.size(); ++k) {
        Vector up = wrt_x ? x : y, dn = up;
        up[k] += h;
        dn[k] -= h;
        g[k] = wrt_x ? (m.log_q(y, up) - m.log_q(y, dn)) / (2 * h) : (m.log_q(up, x) - m.log_q(dn, x)) / (2 * h);
    }
    return g;
}

}  // namespace

TEST_CASE("eval_q examples") {
    CHECK(NoiseModel::gaussian_white(1.0).eval_q(0.7, 0.7) == 1.0);
    CHECK(NoiseModel::poisson_scalar().eval_q(0.0, 1.0) == doctest::Approx(0.3678794).epsilon(1e-7));
    const auto lap = NoiseModel::laplacian(2);
    CHECK(lap.eval_q(v2(1, 2), v2(0, 0)) == doctest::Approx(std::exp(-1.0) * std::exp(-2.0)).epsilon(1e-15));
}

TEST_CASE("domain violations name the coordinate") {
    const auto p = NoiseModel::poisson(2);
    try {
        p.eval_q(v2(1, 1), v2(1, -2));
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(e.coordinate() == 1);
    }
    try {
        p.eval_q(v2(-1, 1), v2(1, 2));
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(e.coordinate() == 0);
    }
}

TEST_CASE("grad_x_log_q examples") {
    const auto g = NoiseModel::poisson(2).grad_x_log_q(v2(3, 4), v2(1, 2));
    CHECK(g[0] == doctest::Approx(2.0));
    CHECK(g[1] == doctest::Approx(1.0));
    CHECK(NoiseModel::gaussian_white(1.0, 2).grad_x_log_q(v2(0.3, 0.4), v2(0.3, 0.4)).norm() == 0.0);
    const auto lap = NoiseModel::laplacian(2);
    const auto gl = lap.grad_x_log_q(v2(1, 2), v2(0, 0));
    CHECK(gl[0] == 1.0);
    CHECK(gl[1] == 1.0);
    const auto fd = fd_log_q(lap, v2(1, 2), v2(0, 0), true);
    CHECK((gl - fd).norm() < 1e-8);
}

TEST_CASE("Laplacian gradient at a tie raises a kink error") {
    CHECK_THROWS_AS(NoiseModel::laplacian(2).grad_x_log_q(v2(1, 0), v2(0, 0)), KinkError);
    CHECK_THROWS_AS(NoiseModel::laplacian(2).grad_y_log_q(v2(0, 2), v2(0, 0)), KinkError);
}

TEST_CASE("grad_y_log_q examples") {
    auto t = ExponentialFamilyTerms::gaussian(2, 1.0);
    t.a = [](const Vector&) { return 0.0; };
    t.b = [](const Vector&) { return 0.0; };
    t.grad_a = [](const Vector& x) { return Vector::Zero(x.size()).eval(); };
    t.grad_b = [](const Vector& y) { return Vector::Zero(y.size()).eval(); };
    const auto ef = NoiseModel::exponential_family(t);
    const auto g = ef.grad_y_log_q(v2(3.3, -1.2), v2(1, 0));
    CHECK(g[0] == 1.0);
    CHECK(g[1] == 0.0);

    const auto gg = NoiseModel::gaussian_white(2.0, 2).grad_y_log_q(v2(4, 0), v2(0, 0));
    CHECK(gg[0] == doctest::Approx(-1.0));
    CHECK(gg[1] == 0.0);

    const double gp = NoiseModel::poisson_scalar().grad_y_log_q(scalar_vector(0.0), scalar_vector(1.0))[0];
    CHECK(gp == doctest::Approx(-oracle::digamma(1.0)).epsilon(1e-12));
    CHECK(gp == doctest::Approx(0.5772157).epsilon(1e-7));
    // Finite difference of lgamma as a second route.
    const double h = 1e-6;
    const double fd = -(std::lgamma(1.0 + h) - std::lgamma(1.0 - h)) / (2 * h);
    CHECK(std::fabs(gp - fd) < 1e-8);
}

TEST_CASE("digamma oracle matches Boost at sample points") {
    for (double x : {0.3, 1.0, 2.5, 7.0, 31.0}) CHECK(oracle::digamma(x) == doctest::Approx(boost::math::digamma(x)).epsilon(1e-13));
}

TEST_CASE("is_log_concave_additive examples") {
    auto sample = [](double gamma, int n) {
        std::vector<double> z(n), f(n);
        for (int i = 0; i < n; ++i) {
            z[i] = -5.0 + 10.0 * i / (n - 1);
            f[i] = gamma == 2.0 ? z[i] * z[i] : std::pow(std::fabs(z[i]), gamma);
        }
        return std::pair{z, f};
    };
    auto [zq, fq] = sample(2.0, 101);
    CHECK(is_log_concave_additive(zq, fq).log_concave);
    auto [za, fa] = sample(1.0, 101);
    CHECK(is_log_concave_additive(za, fa).log_concave);
    auto [zh, fh] = sample(0.5, 1001);
    const auto r = is_log_concave_additive(zh, fh);
    CHECK_FALSE(r.log_concave);
    REQUIRE(r.witness.has_value());
    CHECK(std::fabs((*r.witness)[1]) < 0.1);
    const std::vector<double> two{0.0, 1.0};
    CHECK_THROWS_AS(is_log_concave_additive(two, two), InvalidArgument);
}

TEST_CASE("additive potentials: q = exp(-F(y - x)) exactly") {
    const auto abs_model = NoiseModel::additive_scalar(Potential::absolute());
    CHECK(abs_model.log_q(1.25, -0.5) == -1.75);
    const auto quad = NoiseModel::additive_scalar(Potential::quadratic());
    CHECK(quad.log_q(2.0, 0.0) == -2.0);
    const auto table = NoiseModel::additive_scalar(Potential::table({-1, 0, 1}, {1, 0, 1}));
    CHECK(table.log_q(0.5, 0.0) == doctest::Approx(-0.5));
    CHECK(table.log_q(3.0, 0.0) == doctest::Approx(-3.0));
}

TEST_CASE("property: analytic gradients match finite differences") {
    gen::Gen g(101);
    struct Case {
        NoiseModel model;
        double lo, hi;
    };
    std::vector<Case> cases = {
        {NoiseModel::gaussian_white(0.7, 3), -2, 2},
        {NoiseModel::generalized_gaussian(1.5, 1.3), -2, 2},
        {NoiseModel::generalized_gaussian(3.0), -2, 2},
        {NoiseModel::laplacian(2), -2, 2},
        {NoiseModel::poisson(2), 0.3, 6},
        {NoiseModel::poisson_scalar(), 0.3, 6},
        {NoiseModel::log_poisson(3), 0.1, 3},
    };
    for (const auto& c : cases) {
        CAPTURE(c.model.describe());
        for (int trial = 0; trial < 100; ++trial) {
            const Vector x = g.vector(c.model.dim(), c.lo, c.hi);
            const Vector y = g.vector(c.model.dim(), c.lo, c.hi);
            const Vector gx = c.model.grad_x_log_q(y, x), gy = c.model.grad_y_log_q(y, x);
            const Vector fx = fd_log_q(c.model, y, x, true), fy = fd_log_q(c.model, y, x, false);
            CHECK((gx - fx).norm() <= 1e-5 * (1 + gx.norm()));
            CHECK((gy - fy).norm() <= 1e-5 * (1 + gy.norm()));
        }
    }
}

TEST_CASE("property: exponential-family Gaussian equals white Gaussian up to a constant") {
    gen::Gen g(102);
    const double c = 2.5;
    const auto ef = NoiseModel::exponential_family(ExponentialFamilyTerms::gaussian(2, c));
    const auto gw = NoiseModel::gaussian_white(1.0 / std::sqrt(c), 2);
    double first = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Vector x = g.vector(2, -3, 3), y = g.vector(2, -3, 3);
        const double diff = ef.log_q(y, x) - gw.log_q(y, x);
        if (trial == 0) first = diff;
        CHECK(std::fabs(diff - first) < 1e-12);
    }
}

TEST_CASE("property: log-Poisson equals its exponential-family form") {
    gen::Gen g(103);
    const auto lp = NoiseModel::log_poisson(3);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector z = g.vector(3, -2, 2), y = g.counts(3, 0, 8);
        double ref = 0.0;
        for (int k = 0; k < 3; ++k) ref += z[k] * y[k] - std::exp(z[k]) - boost::math::lgamma(y[k] + 1.0);
        CHECK(std::fabs(lp.log_q(y, z) - ref) < 1e-12 * (1 + std::fabs(ref)));
    }
}

TEST_CASE("property: q is nonnegative, and positive for Gaussian and Poisson kinds") {
    gen::Gen g(104);
    for (int trial = 0; trial < 200; ++trial) {
        CHECK(NoiseModel::gaussian_white(1.0, 2).eval_q(g.vector(2, -5, 5), g.vector(2, -5, 5)) > 0.0);
        CHECK(NoiseModel::poisson(2).eval_q(g.counts(2, 0, 20), g.vector(2, 0.01, 10)) > 0.0);
        CHECK(NoiseModel::laplacian(2).eval_q(g.vector(2, -5, 5), g.vector(2, -5, 5)) >= 0.0);
    }
}
