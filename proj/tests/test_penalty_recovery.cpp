#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "generators.hpp"
#include "proxmmse/error.hpp"
#include "proxmmse/estimator.hpp"
#include "proxmmse/penalty_recovery.hpp"
#include "proxmmse/worked_examples.hpp"

using namespace proxmmse;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

template <class F>
std::vector<double> map(const std::vector<double>& y, F f) {
    std::vector<double> out;
    for (double v : y) out.push_back(f(v));
    return out;
}

double soft(double y) { return std::copysign(std::max(std::fabs(y) - 1.0, 0.0), y); }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

/// Max over probes of the prox deviation in units of the local cell size.
double worst_cells(const PenaltyTable& t, const std::vector<double>& y, const std::vector<double>& f) {
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < y.size(); ++k)
        worst = std::max(worst, verify_prox(f[k], y[k], t) / cell_size(t, scalar_vector(f[k])));
    return worst;
}

}  // namespace

TEST_CASE("scalar potential examples") {
    const auto y = linspace(-1, 1, 201);
    CHECK(max_abs_diff(potential_scalar(y, y), map(y, [](double v) { return v * v / 2; })) <= 1e-6);
    const auto y2 = linspace(-2, 2, 201);
    CHECK(max_abs_diff(potential_scalar(y2, map(y2, [](double v) { return v / 2; })),
                       map(y2, [](double v) { return v * v / 4; })) <= 1e-6);
    const auto y3 = linspace(-5, 5, 1001);
    CHECK(max_abs_diff(potential_scalar(y3, map(y3, [](double v) { return std::tanh(v); })),
                       map(y3, [](double v) { return std::log(std::cosh(v)); })) <= 1e-5);
}

TEST_CASE("scalar potential rejects uncertified samples") {
    const auto y = linspace(-1, 1, 11);
    CHECK_THROWS_AS(potential_scalar(y, map(y, [](double v) { return -v; })), InvalidArgument);
    CHECK_THROWS_AS(recover_scalar(y, map(y, [](double v) { return std::sin(8 * v); })), InvalidArgument);
}

TEST_CASE("vector potential examples") {
    const auto pass = check_symmetric_psd(Matrix::Identity(2, 2));
    const VectorMap id = [](const Vector& y) { return y; };
    const std::vector<Vector> nodes = {v2(0, 0), v2(1, 2), v2(-3, 0.5), v2(0.25, -1)};
    const auto psi = potential_vector(id, v2(0, 0), nodes, pass);
    for (std::size_t k = 0; k < nodes.size(); ++k)
        CHECK(std::fabs(psi[k] - nodes[k].squaredNorm() / 2) <= 1e-8);

    CHECK_THROWS_AS(potential_vector(id, v2(0, 0), nodes, ProxCertificate{}), InvalidArgument);
    CHECK_THROWS_AS(potential_vector(id, v2(0, 0), nodes, check_symmetric_psd((Matrix(2, 2) << 0, 1, -1, 0).finished())),
                    InvalidArgument);
}

TEST_CASE("line integrals along two different polylines agree") {
    struct Case {
        Prior prior;
        NoiseModel model;
        Vector from, to;
    };
    const std::vector<Case> cases = {
        {Prior::discrete({{v2(-1, 0), 0.5}, {v2(1, 0), 0.5}}), NoiseModel::gaussian_white(1.0, 2), v2(-2, -1),
         v2(1.5, 2)},
        {Prior::discrete({{v2(0, 0), 0.3}, {v2(1, 0), 0.3}, {v2(0, 1), 0.4}}), NoiseModel::log_poisson(2), v2(0, 0),
         v2(4, 3)},
    };
    for (const auto& c : cases) {
        const VectorMap f = [&](const Vector& y) { return conditional_mean(c.prior, c.model, y); };
        const std::vector<Vector> p1 = {c.from, v2(c.to[0], c.from[1]), c.to};
        const std::vector<Vector> p2 = {c.from, v2(c.from[0], c.to[1]), c.to};
        const std::vector<Vector> p3 = {c.from, c.to};
        const double a = line_integral(f, p1), b = line_integral(f, p2), d = line_integral(f, p3);
        CHECK(std::fabs(a - b) <= 1e-6);
        CHECK(std::fabs(a - d) <= 1e-6);
    }
}

TEST_CASE("penalty examples") {
    const auto y = linspace(-2, 2, 401);
    const auto half = map(y, [](double v) { return v / 2; });
    const auto t = recover_scalar(y, half);
    // The node y = 2 maps to x = 1 with phi = 2 - 1/2 - 1.
    CHECK(t.phi_values.back() == doctest::Approx(0.5).epsilon(1e-9));
    for (const auto& [x, phi] : t.phi_pairs) CHECK(std::fabs(phi - x[0] * x[0] / 2) <= 1e-6);

    const auto ident = recover_scalar(y, y);
    for (const auto& [x, phi] : ident.phi_pairs) CHECK(std::fabs(phi) <= 1e-12);

    const auto ys = linspace(-4, 4, 8001);
    const auto st = recover_scalar(ys, map(ys, soft));
    for (const auto& [x, phi] : st.phi_pairs) CHECK(std::fabs(phi - std::fabs(x[0])) <= 1e-4);
    // The dead zone collapses onto a single pair at x = 0.
    CHECK(std::count_if(st.phi_pairs.begin(), st.phi_pairs.end(), [](const auto& p) { return p.first[0] == 0.0; }) == 1);
}

TEST_CASE("construction identity holds at every node") {
    const auto y = linspace(-3, 3, 301);
    const auto f = map(y, [](double v) { return std::tanh(2 * v) + 0.1 * v; });
    const auto t = recover_scalar(y, f);
    for (std::size_t k = 0; k < y.size(); ++k)
        CHECK(std::fabs(t.phi_values[k] - (y[k] * f[k] - f[k] * f[k] / 2 - t.psi_values[k] + t.K)) <= 1e-12);
    CHECK(*std::min_element(t.psi_values.begin(), t.psi_values.end()) == 0.0);
    CHECK(std::is_sorted(t.phi_pairs.begin(), t.phi_pairs.end(),
                         [](const auto& a, const auto& b) { return a.first[0] < b.first[0]; }));
}

TEST_CASE("verify_prox examples") {
    const auto y = linspace(-3, 3, 61);
    const auto zero = recover_scalar(y, y);
    for (double q : {-2.93, -0.5, 0.04, 1.77}) CHECK(verify_prox(q, q, zero) <= cell_size(zero, scalar_vector(q)));

    const auto ys = linspace(-4, 4, 8001);
    const auto st = recover_scalar(ys, map(ys, soft));
    CHECK(verify_prox(2.0, 3.0, st) <= 1e-3);

    const LaplaceLaplaceCase ll(0.9);
    const auto grid = linspace(-10, 10, 2001);
    const auto fig = figure_l1l1(ll, grid);
    for (int k = 1; k <= 21; ++k) {
        const double probe = -10 + 20.0 * k / 22;
        const double fp = ll_mean(ll, probe);
        CHECK(verify_prox(fp, probe, fig.table) <= cell_size(fig.table, scalar_vector(fp)));
    }
}

TEST_CASE("verify_prox refuses to extrapolate") {
    const auto y = linspace(-1, 1, 21);
    const auto t = recover_scalar(y, map(y, [](double v) { return v / 2; }));
    CHECK_THROWS_AS(verify_prox(0.9, 1.8, t), ExtrapolationError);
    CHECK_THROWS_WITH_AS(verify_prox(-0.7, 0.0, t), doctest::Contains("extrapolation"), ExtrapolationError);
}

TEST_CASE("penalty CSV and SVG layout") {
    const auto y = linspace(-1, 1, 5);
    const auto t = recover_scalar(y, y);
    std::ostringstream csv, svg;
    write_penalty_csv(csv, t);
    CHECK(csv.str().rfind("y_1,f_1,psi,x_1,phi\n-1,-1,0.5,-1,0\n", 0) == 0);
    write_penalty_svg(svg, t, "identity");
    CHECK(svg.str().rfind("<svg", 0) == 0);
    CHECK(svg.str().find("height=\"1800\"") != std::string::npos);
    CHECK(std::count(svg.str().begin(), svg.str().end(), '\n') > 10);
}

TEST_CASE("property: round trip over the scalar battery") {
    gen::Gen g(501);
    const std::vector<NoiseModel> models = {NoiseModel::gaussian_white(1.0), NoiseModel::laplacian(1),
                                            NoiseModel::generalized_gaussian(1.5),
                                            NoiseModel::generalized_gaussian(3.0)};
    const auto y = linspace(-8, 8, 501);
    for (const auto& m : models)
        for (int p = 0; p < 3; ++p) {
            const Prior prior = p == 0   ? Prior::discrete({{scalar_vector(-1), 0.5}, {scalar_vector(1), 0.5}})
                                : p == 1 ? g.discrete(5, 1, -3, 3)
                                         : Prior::analytic_gaussian(0, 1);
            CAPTURE(m.describe());
            CAPTURE(prior.describe());
            const auto f = map(y, [&](double v) { return conditional_mean(prior, m, v); });
            const auto t = recover_scalar(y, f);
            CHECK(worst_cells(t, y, f) <= 1.0);
            for (std::size_t k = 1; k + 1 < y.size(); ++k)
                CHECK(t.psi_values[k + 1] - 2 * t.psi_values[k] + t.psi_values[k - 1] >= -1e-8);
        }
}

TEST_CASE("property: K shifts move phi and leave the argmin alone") {
    const auto y = linspace(-4, 4, 401);
    const auto f = map(y, [](double v) { return std::tanh(v); });
    const auto base = recover_scalar(y, f);
    std::vector<Vector> ys, fs;
    for (std::size_t k = 0; k < y.size(); ++k) {
        ys.push_back(scalar_vector(y[k]));
        fs.push_back(scalar_vector(f[k]));
    }
    for (double shift : {-3.5, 0.25, 100.0}) {
        auto psi = base.psi_values;
        for (double& v : psi) v += shift;
        const auto t = penalty_from_potential(ys, fs, psi);
        for (std::size_t k = 0; k < y.size(); ++k)
            CHECK(t.phi_values[k] == doctest::Approx(base.phi_values[k] - shift).epsilon(1e-12));
        for (std::size_t k = 10; k < y.size(); k += 37)
            CHECK(verify_prox(f[k], y[k], t) == verify_prox(f[k], y[k], base));
    }
}

TEST_CASE("property: finite-difference gradient of the vector potential matches f") {
    gen::Gen g(502);
    for (int trial = 0; trial < 6; ++trial) {
        const bool lp = trial % 2;
        const auto m = lp ? NoiseModel::log_poisson(2) : NoiseModel::gaussian_white(1.0, 2);
        const auto prior = g.discrete(4, 2, -1, 1);
        const VectorMap f = [&](const Vector& y) { return conditional_mean(prior, m, y); };
        const Vector y = lp ? g.vector(2, 0.5, 4) : g.vector(2, -2, 2);
        const double h = 1e-3;
        std::vector<Vector> nodes;
        for (int k = 0; k < 2; ++k) {
            Vector e = Vector::Zero(2);
            e[k] = h;
            nodes.push_back(y + e);
            nodes.push_back(y - e);
        }
        const auto cert = check_symmetric_psd(jacobian_closed_form(prior, m, y));
        REQUIRE(cert.passed());
        const auto psi = potential_vector(f, lp ? v2(1, 1) : v2(0, 0), nodes, cert);
        const Vector fy = f(y);
        for (int k = 0; k < 2; ++k) CHECK(std::fabs((psi[2 * k] - psi[2 * k + 1]) / (2 * h) - fy[k]) <= 1e-4);
    }
}
