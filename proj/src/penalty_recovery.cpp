#include "proxmmse/penalty_recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "proxmmse/error.hpp"
#include "proxmmse/numeric.hpp"
#include "proxmmse/quadrature.hpp"
#include "proxmmse/svg_plot.hpp"

namespace proxmmse {
namespace {

void shift_to_min_zero(std::vector<double>& psi) {
    if (psi.empty()) return;
    const double m = *std::min_element(psi.begin(), psi.end());
    for (double& v : psi) v -= m;
}

bool lex_less(const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

/// Near-flat stretches of f put tabulated x values closer together than
/// the objective can resolve in double precision.
constexpr double kCellFloor = 1e-12;

double raw_cell_size(const std::vector<std::pair<Vector, double>>& pairs, const Vector& x) {
    if (x.size() == 1) {
        auto it = std::lower_bound(pairs.begin(), pairs.end(), x[0],
                                   [](const auto& p, double v) { return p.first[0] < v; });
        const std::size_t i = static_cast<std::size_t>(it - pairs.begin());
        double gap = 0.0;
        // Gaps of the two cells on either side of the insertion point.
        for (std::size_t j = (i >= 2 ? i - 2 : 0); j + 1 < pairs.size() && j <= i; ++j)
            gap = std::max(gap, pairs[j + 1].first[0] - pairs[j].first[0]);
        return gap;
    }
    // Diameter of the 2^n tabulated points nearest to x: the cell around x
    // when the nodes come from a tensor grid.
    const std::size_t k = std::min(pairs.size(), std::size_t{1} << std::min<Eigen::Index>(x.size(), 16));
    std::vector<std::pair<double, std::size_t>> dist(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) dist[i] = {(pairs[i].first - x).norm(), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    double diam = 0.0;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b)
            diam = std::max(diam, (pairs[dist[a].second].first - pairs[dist[b].second].first).norm());
    return diam;
}

}  // namespace

std::vector<double> potential_scalar(std::span<const double> y, std::span<const double> f,
                                     double tol) {
    const auto cert = check_scalar_monotone(y, f, tol);
    if (!cert.passed())
        throw InvalidArgument("potential recovery needs samples certified nondecreasing (got " +
                              to_string(cert.verdict) + ", dip " + format_shortest(cert.value) + ")");
    std::vector<double> psi(y.size(), 0.0);
    for (std::size_t k = 1; k < y.size(); ++k)
        psi[k] = psi[k - 1] + 0.5 * (f[k] + f[k - 1]) * (y[k] - y[k - 1]);
    shift_to_min_zero(psi);
    return psi;
}

double line_integral(const VectorMap& f, std::span<const Vector> path,
                     const LineIntegralOptions& options) {
    if (path.size() < 2) throw InvalidArgument("a path needs at least 2 points");
    quadrature::Options qo;
    qo.rel_tol = options.rel_tol;
    qo.abs_tol = options.abs_tol;
    double total = 0.0;
    for (std::size_t s = 1; s < path.size(); ++s) {
        const Vector& a = path[s - 1];
        const Vector d = path[s] - a;
        if (d.squaredNorm() == 0.0) continue;
        const auto r = quadrature::integrate([&](double t) { return f(a + t * d).dot(d); }, 0.0, 1.0, qo);
        if (!r.converged)
            throw QuadratureError("line integral did not converge on segment " + std::to_string(s),
                                  r.abs_error / std::max(std::fabs(r.value), 1e-300));
        total += r.value;
    }
    return total;
}

std::vector<double> potential_vector(const VectorMap& f, const Vector& y0,
                                     std::span<const Vector> nodes,
                                     const ProxCertificate& symmetry,
                                     const LineIntegralOptions& options) {
    if (symmetry.criterion != Criterion::JacobianSymPsd || !symmetry.passed())
        throw InvalidArgument(
            "potential recovery in several dimensions needs a passing jacobian_sym_psd certificate");
    std::vector<double> psi(nodes.size(), 0.0);
    parallel_for(nodes.size(), [&](std::size_t k) {
        if (nodes[k].size() != y0.size()) throw InvalidArgument("node dimension differs from y0");
        const Vector path[2] = {y0, nodes[k]};
        psi[k] = (nodes[k] - y0).squaredNorm() == 0.0 ? 0.0 : line_integral(f, path, options);
    });
    shift_to_min_zero(psi);
    return psi;
}

PenaltyTable penalty_from_potential(std::vector<Vector> y_grid, std::vector<Vector> f_values,
                                    std::vector<double> psi_values, double K) {
    if (y_grid.size() != f_values.size() || y_grid.size() != psi_values.size())
        throw InvalidArgument("nodes, f values and psi values differ in length");
    PenaltyTable t;
    t.y_grid = std::move(y_grid);
    t.f_values = std::move(f_values);
    t.psi_values = std::move(psi_values);
    t.K = K;
    t.phi_values.resize(t.y_grid.size());
    for (std::size_t k = 0; k < t.y_grid.size(); ++k) {
        const Vector& y = t.y_grid[k];
        const Vector& x = t.f_values[k];
        t.phi_values[k] = y.dot(x) - 0.5 * x.squaredNorm() - t.psi_values[k] + K;
    }

    std::vector<std::size_t> order(t.y_grid.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return lex_less(t.f_values[a], t.f_values[b]);
    });
    for (std::size_t k : order) {
        if (!t.phi_pairs.empty() && t.phi_pairs.back().first == t.f_values[k])
            t.phi_pairs.back().second = std::min(t.phi_pairs.back().second, t.phi_values[k]);
        else
            t.phi_pairs.emplace_back(t.f_values[k], t.phi_values[k]);
    }
    return t;
}

PenaltyTable recover_scalar(std::span<const double> y, std::span<const double> f, double tol) {
    auto psi = potential_scalar(y, f, tol);
    std::vector<Vector> ys, fs;
    for (std::size_t k = 0; k < y.size(); ++k) {
        ys.push_back(scalar_vector(y[k]));
        fs.push_back(scalar_vector(f[k]));
    }
    return penalty_from_potential(std::move(ys), std::move(fs), std::move(psi));
}

double verify_prox(const Vector& f_value, const Vector& y, const PenaltyTable& table) {
    if (table.phi_pairs.empty()) throw InvalidArgument("empty penalty table");
    const auto n = f_value.size();
    if (n != table.phi_pairs.front().first.size() || y.size() != n)
        throw InvalidArgument("query dimension differs from the table");
    for (Eigen::Index k = 0; k < n; ++k) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& [x, phi] : table.phi_pairs) {
            lo = std::min(lo, x[k]);
            hi = std::max(hi, x[k]);
        }
        const double slack = 1e-12 * (1.0 + std::max(std::fabs(lo), std::fabs(hi)));
        if (f_value[k] < lo - slack || f_value[k] > hi + slack)
            throw ExtrapolationError("extrapolation: f value " + format_shortest(f_value[k]) +
                                     " outside tabulated range [" + format_shortest(lo) + ", " +
                                     format_shortest(hi) + "]");
    }
    double best = std::numeric_limits<double>::infinity();
    const Vector* arg = nullptr;
    for (const auto& [x, phi] : table.phi_pairs) {
        const double v = 0.5 * (y - x).squaredNorm() + phi;
        if (v < best) {
            best = v;
            arg = &x;
        }
    }
    return (*arg - f_value).norm();
}

double verify_prox(double f_value, double y, const PenaltyTable& table) {
    return verify_prox(scalar_vector(f_value), scalar_vector(y), table);
}

double cell_size(const PenaltyTable& table, const Vector& x) {
    const auto& pairs = table.phi_pairs;
    if (pairs.size() < 2) throw InvalidArgument("cell size needs at least 2 tabulated points");
    return std::max(raw_cell_size(pairs, x), kCellFloor * (1.0 + x.norm()));
}

void write_penalty_csv(std::ostream& out, const PenaltyTable& table) {
    const int n = table.dim();
    for (int k = 1; k <= n; ++k) out << "y_" << k << ',';
    for (int k = 1; k <= n; ++k) out << "f_" << k << ',';
    out << "psi,";
    for (int k = 1; k <= n; ++k) out << "x_" << k << ',';
    out << "phi\n";
    for (std::size_t i = 0; i < table.y_grid.size(); ++i) {
        for (int k = 0; k < n; ++k) out << format_shortest(table.y_grid[i][k]) << ',';
        for (int k = 0; k < n; ++k) out << format_shortest(table.f_values[i][k]) << ',';
        out << format_shortest(table.psi_values[i]) << ',';
        for (int k = 0; k < n; ++k) out << format_shortest(table.f_values[i][k]) << ',';
        out << format_shortest(table.phi_values[i]) << '\n';
    }
}

void write_penalty_svg(std::ostream& out, const PenaltyTable& table, const std::string& title) {
    if (table.dim() != 1) throw InvalidArgument("penalty plots are scalar only");
    svg::Panel pf{title.empty() ? "f(y)" : title + ": f(y)", "y", "f(y)", {}, {}};
    svg::Panel ppsi{"psi(y)", "y", "psi(y)", {}, {}};
    svg::Panel pphi{"phi(x)", "x", "phi(x)", {}, {}};
    for (std::size_t i = 0; i < table.y_grid.size(); ++i) {
        pf.x.push_back(table.y_grid[i][0]);
        pf.y.push_back(table.f_values[i][0]);
        ppsi.x.push_back(table.y_grid[i][0]);
        ppsi.y.push_back(table.psi_values[i]);
    }
    for (const auto& [x, phi] : table.phi_pairs) {
        pphi.x.push_back(x[0]);
        pphi.y.push_back(phi);
    }
    svg::write_panels(out, {pf, ppsi, pphi});
}

}  // namespace proxmmse
