#include "proxmmse/worked_examples.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "proxmmse/error.hpp"
#include "proxmmse/estimator.hpp"
#include "proxmmse/numeric.hpp"

namespace proxmmse {
namespace {

/// (u - 1) e^u + 1 = sum_{k>=2} (k - 1) u^k / k!.
double shifted_exp_remainder(double u) {
    if (std::fabs(u) >= 1.0) return (u - 1.0) * std::exp(u) + 1.0;
    double term = 0.5 * u * u, sum = 0.0;
    for (int k = 2; k < 60; ++k) {
        const double add = (k - 1) * term;
        sum += add;
        if (std::fabs(add) <= 1e-18 * std::fabs(sum)) break;
        term *= u / (k + 1);
    }
    return sum;
}

/// Bracketed closed-form terms for y >= 0, divided by m = exp(-min(1, c) y).
struct Brackets {
    double scale_log;  // log m
    double marginal;
    double numerator;
};

Brackets brackets(double c, double y) {
    const double lo = std::min(1.0, c);
    const double u = (1.0 - c) * y;
    const double e1 = std::exp(-(1.0 - lo) * y);  // e^{-y} / m
    const double ec = std::exp(-(c - lo) * y);    // e^{-cy} / m
    const bool small = std::fabs(u) < 1.0;
    const double diff = small ? e1 * std::expm1(u) : ec - e1;             // (e^{-cy} - e^{-y}) / m
    const double rem = small ? e1 * shifted_exp_remainder(u) : (u - 1.0) * ec + e1;
    Brackets b;
    b.scale_log = -lo * y;
    b.marginal = (e1 + ec) / (1.0 + c) + diff / (1.0 - c);
    b.numerator = diff / ((1.0 + c) * (1.0 + c)) + y * ec / (1.0 + c) + rem / ((1.0 - c) * (1.0 - c));
    return b;
}

}  // namespace

LaplaceLaplaceCase::LaplaceLaplaceCase(double rate) : c(rate) {
    if (!(rate > 0.0)) throw InvalidArgument("Laplacian prior rate must be positive");
    if (std::fabs(rate - 1.0) <= 1e-6) throw InvalidArgument("closed form invalid at c=1");
}

double ll_marginal(const LaplaceLaplaceCase& ll, double y) {
    const auto b = brackets(ll.c, std::fabs(y));
    return 0.5 * ll.c * std::exp(b.scale_log) * b.marginal;
}

double ll_numerator(const LaplaceLaplaceCase& ll, double y) {
    if (y == 0.0) return 0.0;
    const auto b = brackets(ll.c, std::fabs(y));
    return std::copysign(0.5 * ll.c * std::exp(b.scale_log) * b.numerator, y);
}

double ll_mean(const LaplaceLaplaceCase& ll, double y) {
    if (y == 0.0) return 0.0;
    const auto b = brackets(ll.c, std::fabs(y));
    return std::copysign(b.numerator / b.marginal, y);
}

FigureL1L1 figure_l1l1(const LaplaceLaplaceCase& ll, std::span<const double> y_grid) {
    std::vector<double> f(y_grid.size());
    parallel_for(y_grid.size(), [&](std::size_t i) { f[i] = ll_mean(ll, y_grid[i]); });
    FigureL1L1 fig;
    fig.monotone = check_scalar_monotone(y_grid, f);
    fig.table = recover_scalar(y_grid, f);
    fig.table.note = "Laplacian prior rate c = " + format_shortest(ll.c) + ", unit Laplacian noise";
    return fig;
}

namespace {

CounterexampleReport finish_counterexample(const NoiseModel& model, std::optional<Counterexample> found,
                                           double tol, const char* what) {
    if (!found) throw Error(std::string("no NSC violation found for ") + what);
    CounterexampleReport r{std::move(*found), {}};
    const Vector x = r.found.x, x2 = r.found.x2;
    const VectorMap f = [&](const Vector& y) { return two_point_mean(x, x2, 0.5, model, y); };
    const std::pair<Vector, Vector> pair{r.found.y, r.found.y2};
    r.monotone = check_monotone_operator(f, std::span(&pair, 1), tol);
    r.monotone.seed = r.found.certificate.seed;
    return r;
}

}  // namespace

CounterexampleReport build_laplacian_counterexample(const SearchOptions& options) {
    const auto model = NoiseModel::laplacian(2);
    SearchOptions opts = options;
    opts.antipodal_y = true;
    opts.fixed_atom = Vector::Zero(2);
    const SearchBox atoms{Vector::Constant(2, -3.0), Vector::Constant(2, 3.0), false};
    const SearchBox ys{Vector::Constant(2, 0.3), Vector::Constant(2, 3.0), false};
    return finish_counterexample(model, search_counterexample(model, atoms, ys, opts), opts.tol,
                                 "the bivariate Laplacian model");
}

CounterexampleReport build_poisson_counterexample(const SearchOptions& options) {
    const auto model = NoiseModel::poisson(2);
    const SearchBox atoms{Vector::Constant(2, 0.5), Vector::Constant(2, 5.0), false};
    const SearchBox ys{Vector::Zero(2), Vector::Constant(2, 5.0), true};
    return finish_counterexample(model, search_counterexample(model, atoms, ys, options), options.tol,
                                 "the bivariate Poisson model");
}

}  // namespace proxmmse
