#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "generators.hpp"
#include "oracles.hpp"
#include "proxmmse/error.hpp"
#include "proxmmse/estimator.hpp"
#include "proxmmse/worked_examples.hpp"

using namespace proxmmse;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

const Prior& sym_two_point() {
    static const Prior p = Prior::discrete({{scalar_vector(-1), 0.5}, {scalar_vector(1), 0.5}});
    return p;
}

/// f_P by brute-force linear-space summation.
Vector brute_force(const Prior& p, const NoiseModel& m, const Vector& y) {
    std::vector<std::vector<double>> atoms;
    std::vector<double> w;
    for (const auto& a : p.atoms()) {
        atoms.emplace_back(a.point.data(), a.point.data() + a.point.size());
        w.push_back(a.weight);
    }
    auto q = [&](const std::vector<double>& x) {
        return m.eval_q(y, Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())));
    };
    Vector out(m.dim());
    for (int k = 0; k < m.dim(); ++k) out[k] = oracle::brute_mean(atoms, w, q, k);
    return out;
}

}  // namespace

TEST_CASE("marginal examples") {
    const auto g = NoiseModel::gaussian_white(1.0);
    CHECK(marginal(sym_two_point(), g, scalar_vector(0.0)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    const double direct = 0.5 * std::exp(-0.5) + 0.5 * std::exp(-0.5);
    CHECK(marginal(sym_two_point(), g, scalar_vector(0.0)) == doctest::Approx(direct).epsilon(1e-15));

    const auto single = Prior::discrete({{scalar_vector(0.4), 1.0}});
    CHECK(marginal(single, g, scalar_vector(1.9)) == doctest::Approx(g.eval_q(1.9, 0.4)).epsilon(1e-15));

    const LaplaceLaplaceCase ll(0.9);
    const double quad = marginal(Prior::analytic_laplacian(0.9), NoiseModel::additive_scalar(Potential::absolute()),
                                 scalar_vector(1.0));
    CHECK(quad == doctest::Approx(ll_marginal(ll, 1.0)).epsilon(1e-6));
}

TEST_CASE("conditional_mean examples") {
    const auto g = NoiseModel::gaussian_white(1.0);
    CHECK(conditional_mean(sym_two_point(), g, 1.0) == doctest::Approx(0.76159416).epsilon(1e-8));
    CHECK(conditional_mean(sym_two_point(), g, 0.0) == 0.0);
    const auto pois = Prior::discrete({{scalar_vector(1), 0.5}, {scalar_vector(2), 0.5}});
    const double expect = (std::exp(-1.0) + 2 * std::exp(-2.0)) / (std::exp(-1.0) + std::exp(-2.0));
    CHECK(conditional_mean(pois, NoiseModel::poisson_scalar(), 0.0) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(expect == doctest::Approx(1.26894).epsilon(1e-5));
}

TEST_CASE("outside the support raises") {
    // exp(-|y - x|^2 / 2) underflows below 1e-300 for |y - x| > 37.
    const auto p = Prior::discrete({{scalar_vector(0), 1.0}});
    CHECK_THROWS_AS(conditional_mean(p, NoiseModel::gaussian_white(1.0), 60.0), OutsideSupportError);
    const auto pe = estimate_point(p, NoiseModel::gaussian_white(1.0), scalar_vector(60.0));
    CHECK_FALSE(pe.in_support);
}

TEST_CASE("two_point_mean examples") {
    const auto g = NoiseModel::gaussian_white(1.0);
    CHECK(two_point_mean(scalar_vector(3), scalar_vector(-2), 1.0, g, scalar_vector(7))[0] == 3.0);
    CHECK(two_point_mean(scalar_vector(-1), scalar_vector(1), 0.5, g, scalar_vector(2))[0] ==
          doctest::Approx(0.96402758).epsilon(1e-8));
    const auto lap = NoiseModel::laplacian(2);
    const Vector f = two_point_mean(v2(0, 0), v2(1, 1), 0.5, lap, v2(2, 2));
    const double e = std::exp(-2.0) / (std::exp(-4.0) + std::exp(-2.0));
    CHECK(f[0] == doctest::Approx(e).epsilon(1e-14));
    CHECK(f[1] == doctest::Approx(0.880797).epsilon(1e-6));
    const auto same = Prior::discrete({{v2(0, 0), 0.5}, {v2(1, 1), 0.5}});
    CHECK((conditional_mean(same, lap, v2(2, 2)) - f).norm() < 1e-14);
}

TEST_CASE("jacobian_closed_form examples") {
    const auto g = NoiseModel::gaussian_white(1.0);
    CHECK(jacobian_closed_form(Prior::discrete({{scalar_vector(2), 1.0}}), g, scalar_vector(0.3)).norm() == 0.0);
    CHECK(jacobian_closed_form(sym_two_point(), g, scalar_vector(0.0))(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

    const auto g2 = NoiseModel::gaussian_white(1.0, 2);
    const auto p = Prior::discrete({{v2(0, 0), 0.2}, {v2(1, 0), 0.5}, {v2(0, 1), 0.3}});
    const Vector y = v2(0.3, -0.2);
    const Matrix J = jacobian_closed_form(p, g2, y);
    const double h = 1e-5;
    Matrix F(2, 2);
    for (int k = 0; k < 2; ++k) {
        Vector up = y, dn = y;
        up[k] += h;
        dn[k] -= h;
        F.col(k) = (brute_force(p, g2, up) - brute_force(p, g2, dn)) / (2 * h);
    }
    CHECK((J - F).norm() <= 1e-4 * J.norm());
}

TEST_CASE("Poisson estimator at integer counts is the posterior mean") {
    gen::Gen g(301);
    const auto m = NoiseModel::poisson_scalar();
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = g.discrete(g.integer(1, 6), 1, 0.1, 10);
        for (int n = 0; n <= 30; ++n)
            CHECK(conditional_mean(p, m, double(n)) == doctest::Approx(brute_force(p, m, scalar_vector(n))[0]).epsilon(1e-12));
    }
}

TEST_CASE("Gauss-Gauss conjugacy, quadrature vs shrinkage and a fine-grid sum") {
    for (auto [tau, sigma] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
        const auto prior = Prior::analytic_gaussian(0.0, tau * tau);
        const auto model = NoiseModel::gaussian_white(sigma);
        for (double y : {-6.0, -1.3, 0.7, 4.0}) {
            const double shrink = tau * tau / (tau * tau + sigma * sigma) * y;
            CHECK(conditional_mean(prior, model, y) == doctest::Approx(shrink).epsilon(1e-8));
            // Riemann sum of x q p on a fine grid (spectrally accurate for Gaussians).
            double num = 0, den = 0;
            for (int i = -40000; i <= 40000; ++i) {
                const double x = i * 5e-4;
                const double w = std::exp(-0.5 * x * x / (tau * tau) - 0.5 * (y - x) * (y - x) / (sigma * sigma));
                num += x * w;
                den += w;
            }
            CHECK(num / den == doctest::Approx(shrink).epsilon(1e-10));
        }
    }
}

TEST_CASE("closed-form backend is selected on request and agrees with quadrature") {
    const auto prior = Prior::analytic_laplacian(0.9);
    const auto model = NoiseModel::laplacian(1);
    EstimatorOptions cf;
    cf.prefer_closed_form = true;
    CHECK(select_backend(prior, model, cf) == Backend::ClosedForm);
    CHECK(select_backend(prior, model) == Backend::Quadrature);
    for (double y = -5; y <= 5; y += 1.0) {
        const double a = conditional_mean(prior, model, y, cf), b = conditional_mean(prior, model, y);
        CHECK(std::fabs(a - b) <= 1e-6 * std::max(1e-12, std::fabs(a)) + 1e-12);
    }
}

TEST_CASE("batch estimate and CSV layout") {
    const auto p = Prior::discrete({{v2(0, 0), 0.5}, {v2(1, 1), 0.5}});
    const std::vector<Vector> ys = {v2(0, 0), v2(0.5, 2), v2(100, -100)};
    const auto r = estimate(p, NoiseModel::gaussian_white(1.0, 2), ys);
    CHECK(r.backend == Backend::FiniteSum);
    CHECK(r.support_mask == std::vector<bool>{true, true, false});
    CHECK(std::isnan(r.mean[2][0]));
    std::ostringstream os;
    write_csv(os, r);
    const auto s = os.str();
    CHECK(s.rfind("y_1,y_2,qP,f_1,f_2,in_support\n", 0) == 0);
    CHECK(s.find(",nan,nan,0\n") != std::string::npos);
    CHECK(s.find("0.5,2,") != std::string::npos);
}

TEST_CASE("property: f_P lies in the convex hull of the atoms") {
    gen::Gen g(302);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = g.integer(1, 3);
        const auto p = g.discrete(g.integer(1, 6), n, -3, 3);
        const auto m = trial % 2 ? NoiseModel::gaussian_white(0.8, n) : NoiseModel::laplacian(n);
        Vector lo = Vector::Constant(n, INFINITY), hi = Vector::Constant(n, -INFINITY);
        for (const auto& a : p.atoms()) {
            lo = lo.cwiseMin(a.point);
            hi = hi.cwiseMax(a.point);
        }
        for (int k = 0; k < 50; ++k) {
            const Vector f = conditional_mean(p, m, g.vector(n, -8, 8));
            CHECK(((f - lo).array() >= -1e-12).all());
            CHECK(((hi - f).array() >= -1e-12).all());
        }
    }
}

TEST_CASE("property: separable priors and models compose coordinatewise") {
    gen::Gen g(303);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p1 = g.discrete(g.integer(1, 4), 1, -2, 2), p2 = g.discrete(g.integer(1, 4), 1, -2, 2);
        const auto prod = product_prior({p1, p2});
        for (const auto& [m2, m1] : {std::pair{NoiseModel::gaussian_white(1.0, 2), NoiseModel::gaussian_white(1.0)},
                                     std::pair{NoiseModel::laplacian(2), NoiseModel::laplacian(1)}}) {
            const Vector y = g.vector(2, -4, 4);
            const Vector f = conditional_mean(prod, m2, y);
            CHECK(std::fabs(f[0] - conditional_mean(p1, m1, y[0])) <= 1e-12);
            CHECK(std::fabs(f[1] - conditional_mean(p2, m1, y[1])) <= 1e-12);
        }
    }
}

TEST_CASE("property: closed-form Jacobian matches finite differences (Gaussian and log-Poisson)") {
    gen::Gen g(304);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = g.integer(1, 3);
        const bool lp = trial % 2;
        const auto m = lp ? NoiseModel::log_poisson(n) : NoiseModel::gaussian_white(g.uniform(0.5, 2), n);
        const auto p = g.discrete(g.integer(2, 6), n, lp ? -1.0 : -2.0, lp ? 1.5 : 2.0);
        const Vector y = lp ? Vector(g.vector(n, 0.0, 4.0)) : g.vector(n, -2, 2);
        const Matrix J = jacobian_closed_form(p, m, y);
        const double h = 1e-5;
        Matrix F(n, n);
        for (int k = 0; k < n; ++k) {
            Vector up = y, dn = y;
            up[k] += h;
            dn[k] -= h;
            F.col(k) = (brute_force(p, m, up) - brute_force(p, m, dn)) / (2 * h);
        }
        CAPTURE(trial);
        CHECK((J - F).norm() <= 1e-4 * std::max(J.norm(), 1e-8));
    }
}

TEST_CASE("property: batch results do not depend on thread count") {
    gen::Gen g(305);
    const auto p = g.discrete(5, 2, -2, 2);
    std::vector<Vector> ys;
    for (int i = 0; i < 300; ++i) ys.push_back(g.vector(2, -4, 4));
    const auto a = estimate(p, NoiseModel::laplacian(2), ys);
    setenv("PROXMMSE_THREADS", "1", 1);
    const auto b = estimate(p, NoiseModel::laplacian(2), ys);
    unsetenv("PROXMMSE_THREADS");
    for (std::size_t i = 0; i < ys.size(); ++i) {
        CHECK(a.marginal[i] == b.marginal[i]);
        CHECK(a.mean[i] == b.mean[i]);
    }
}
