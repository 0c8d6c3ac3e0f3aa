#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace proxmmse::quadrature {

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    std::size_t max_evaluations = std::size_t{1} << 20;
};

struct Result {
    double value = 0.0;
    double abs_error = 0.0;
    /// Integral of |f|, from the same Kronrod nodes.
    double l1 = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Globally adaptive 21-point Gauss-Kronrod integration of f over [a, b].
/// Either bound may be infinite; half-lines are mapped onto [0, 1) with
/// x = a + t / (1 - t). Never throws: callers inspect `converged`.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& options = {});

/// Integrates over the whole real line split at the sorted breakpoints.
/// All pieces share one error budget, so tolerances apply to the total.
Result integrate_real_line(const std::function<double(double)>& f,
                           std::span<const double> breakpoints,
                           const Options& options = {});

}  // namespace proxmmse::quadrature
