#pragma once

#include <span>

#include "proxmmse/penalty_recovery.hpp"
#include "proxmmse/prox_analysis.hpp"

namespace proxmmse {

/// Unit-rate Laplacian noise q(y|x) = exp(-|y - x|) with Laplacian prior
/// density (c/2) exp(-c|x|).
struct LaplaceLaplaceCase {
    double c;

    /// Throws InvalidArgument unless c > 0 and |c - 1| > 1e-6.
    explicit LaplaceLaplaceCase(double rate);
};

/// q_P(y), even in y.
double ll_marginal(const LaplaceLaplaceCase& ll, double y);
/// int x q(y|x) p(x) dx, odd in y.
double ll_numerator(const LaplaceLaplaceCase& ll, double y);
/// ll_numerator / ll_marginal, computed without underflow for large |y|.
double ll_mean(const LaplaceLaplaceCase& ll, double y);

struct FigureL1L1 {
    PenaltyTable table;
    ProxCertificate monotone;
};

/// f = ll_mean on the grid, then potential and penalty recovery.
FigureL1L1 figure_l1l1(const LaplaceLaplaceCase& ll, std::span<const double> y_grid);

struct CounterexampleReport {
    Counterexample found;
    /// check_monotone_operator of the two-point conditional mean at (y, y').
    ProxCertificate monotone;
};

/// Two-point prior on Laplacian noise in R^2 with one atom at the origin,
/// y in (0, 3]^2 and y' = -y. Throws Error when the search finds nothing.
CounterexampleReport build_laplacian_counterexample(const SearchOptions& options = {});

/// Two-point prior on multivariate Poisson noise in R^2, atoms in (0, 5]^2,
/// integer counts in {0..5}^2. Throws Error when the search finds nothing.
CounterexampleReport build_poisson_counterexample(const SearchOptions& options = {});

}  // namespace proxmmse
