#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "proxmmse/prox_analysis.hpp"
#include "proxmmse/types.hpp"

namespace proxmmse {

/// Potential psi and penalty phi sampled along a set of nodes y_k, with
/// phi represented parametrically by the pairs (f(y_k), phi(f(y_k))).
struct PenaltyTable {
    std::vector<Vector> y_grid;
    std::vector<Vector> f_values;
    /// Shifted so that the minimum over the nodes is 0.
    std::vector<double> psi_values;
    /// phi(f(y_k)) per node, in node order.
    std::vector<double> phi_values;
    /// (x, phi(x)) sorted by x (lexicographic); repeated x keep the smallest phi.
    std::vector<std::pair<Vector, double>> phi_pairs;
    /// Additive constant in phi(f(y)) = <y, f(y)> - |f(y)|^2 / 2 - psi(y) + K.
    double K = 0.0;
    std::string note;

    int dim() const { return y_grid.empty() ? 0 : static_cast<int>(y_grid.front().size()); }
};

/// Cumulative trapezoid antiderivative of sampled f, shifted to min 0.
/// Rejects samples that do not pass check_scalar_monotone at `tol`.
std::vector<double> potential_scalar(std::span<const double> y, std::span<const double> f,
                                     double tol = kDefaultTolerance);

struct LineIntegralOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-13;
};

/// Integral of <f, dy> along the polyline through `path` (at least 2 points).
double line_integral(const VectorMap& f, std::span<const Vector> path,
                     const LineIntegralOptions& options = {});

/// psi(y) = int_0^1 <f(y0 + t (y - y0)), y - y0> dt per node, shifted to min 0.
/// `symmetry` must be a passing jacobian_sym_psd certificate for the region.
std::vector<double> potential_vector(const VectorMap& f, const Vector& y0,
                                     std::span<const Vector> nodes,
                                     const ProxCertificate& symmetry,
                                     const LineIntegralOptions& options = {});

/// Assembles a table from nodes, f values and psi; fills phi with constant K.
PenaltyTable penalty_from_potential(std::vector<Vector> y_grid, std::vector<Vector> f_values,
                                    std::vector<double> psi_values, double K = 0.0);

/// potential_scalar followed by penalty_from_potential.
PenaltyTable recover_scalar(std::span<const double> y, std::span<const double> f,
                            double tol = kDefaultTolerance);

/// |argmin_x {|y - x|^2 / 2 + phi(x)} - f_value| over the tabulated x. Throws
/// ExtrapolationError when f_value is outside the tabulated x range.
double verify_prox(const Vector& f_value, const Vector& y, const PenaltyTable& table);
double verify_prox(double f_value, double y, const PenaltyTable& table);

/// Size of the tabulated cell around x: the largest gap among the cells next
/// to x in the scalar case, the diameter of the 2^n nearest tabulated x
/// otherwise. Never below 1e-12 (1 + |x|).
double cell_size(const PenaltyTable& table, const Vector& x);

/// Columns y_1.., f_1.., psi, x_1.., phi (one row per node).
void write_penalty_csv(std::ostream& out, const PenaltyTable& table);

/// Three stacked panels: f(y), psi(y) and phi(x). Scalar tables only.
void write_penalty_svg(std::ostream& out, const PenaltyTable& table, const std::string& title);

}  // namespace proxmmse
