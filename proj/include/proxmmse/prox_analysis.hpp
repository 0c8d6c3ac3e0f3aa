#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "proxmmse/noise_models.hpp"
#include "proxmmse/priors.hpp"
#include "proxmmse/types.hpp"

namespace proxmmse {

enum class Criterion {
    ScalarMonotone,
    ConditionB,
    MonotoneOperator,
    JacobianSymPsd,
    GradientCollinearity,
    NscInequality,
};

enum class Verdict { Pass, Fail, Inconclusive };

std::string to_string(Criterion c);
std::string to_string(Verdict v);
Criterion criterion_from_string(const std::string& name);

/// Absolute tolerance for sign tests on q products and sampled maps.
inline constexpr double kDefaultTolerance = 1e-8;
/// Relative tolerance for Jacobian symmetry.
inline constexpr double kDefaultJacobianTolerance = 1e-6;

struct Witness {
    /// Named points, e.g. {"x", ...}, {"x'", ...}, {"y", ...}, {"y'", ...}.
    std::vector<std::pair<std::string, Vector>> points;
    std::optional<Matrix> matrix;
    /// Scalar c of the gradient-collinearity fit.
    std::optional<double> fitted_c;

    const Vector& point(const std::string& name) const;
};

/// Verdict of one criterion. A Fail always carries a witness from which the
/// violation can be recomputed (see `reverify`).
struct ProxCertificate {
    Criterion criterion = Criterion::ScalarMonotone;
    Verdict verdict = Verdict::Inconclusive;
    std::optional<Witness> witness;
    double tolerance_used = kDefaultTolerance;
    /// Most negative tested quantity (min eigenvalue for Jacobian checks,
    /// fit residual for gradient collinearity).
    double value = 0.0;
    std::optional<std::uint64_t> seed;
    std::string note;

    bool passed() const { return verdict == Verdict::Pass; }
    bool failed() const { return verdict == Verdict::Fail; }
};

void write_report(std::ostream& out, const ProxCertificate& cert);
void write_certificate_csv_header(std::ostream& out);
void write_certificate_csv_row(std::ostream& out, const std::string& label,
                               const ProxCertificate& cert);

using VectorMap = std::function<Vector(const Vector&)>;

/// Samples (y_k, f(y_k)) with strictly increasing y. Dips below -tol are
/// inconclusive; a dip below -100 tol is a certified failure.
ProxCertificate check_scalar_monotone(std::span<const double> y, std::span<const double> f,
                                      double tol = kDefaultTolerance);

/// Sign of the 2x2 determinant q(y'|x')q(y|x) - q(y'|x)q(y|x') over every
/// x < x', y < y' pair of the grids, compared in the log domain.
ProxCertificate check_condition_b(const NoiseModel& model, std::span<const double> x_grid,
                                  std::span<const double> y_grid, double tol = kDefaultTolerance);

/// <x' - x, y' - y> (q(y'|x')q(y|x) - q(y'|x)q(y|x')).
double nsc_value(const NoiseModel& model, const Vector& x, const Vector& x2, const Vector& y,
                 const Vector& y2);

struct NscResult {
    double value = 0.0;
    ProxCertificate certificate;
};

NscResult check_nsc(const NoiseModel& model, const Vector& x, const Vector& x2, const Vector& y,
                    const Vector& y2, double tol = kDefaultTolerance);

/// <f(y') - f(y), y' - y> >= -tol over the pairs. Pairs where f throws
/// OutsideSupportError are skipped and listed in the note.
ProxCertificate check_monotone_operator(const VectorMap& f,
                                        std::span<const std::pair<Vector, Vector>> pairs,
                                        double tol = kDefaultTolerance);

struct FdJacobian {
    Matrix jacobian;
    Matrix symmetric;
    Matrix skew;
};

/// Central differences with step h along each coordinate.
FdJacobian jacobian_fd(const VectorMap& f, const Vector& y, double h = 1e-5);

/// Passes iff |J - J^T|_F <= tol (1 + |J|_F) and the smallest eigenvalue of
/// (J + J^T)/2 is >= -eig_tol (eig_tol defaults to tol).
ProxCertificate check_symmetric_psd(const Matrix& J, double tol = kDefaultJacobianTolerance,
                                    std::optional<double> eig_tol = std::nullopt);

/// Fits g = grad_x log q(y'|x) - grad_x log q(y|x) to c (y' - y). Passing
/// at sampled points is only evidence (the condition is necessary).
ProxCertificate check_gradient_collinearity(const NoiseModel& model, const Vector& x,
                                            const Vector& y, const Vector& y2,
                                            double tol = kDefaultTolerance);

/// Recomputes the violation stored in a Fail certificate. Returns true when it
/// still exceeds the certificate's tolerance. Model-based criteria need the
/// model; map-based ones store f values in the witness.
bool reverify(const ProxCertificate& cert, const NoiseModel* model = nullptr);

struct SearchBox {
    Vector lower;
    Vector upper;
    /// Restrict coordinates to integers (count observations).
    bool integer = false;
};

struct SearchOptions {
    std::size_t budget = 100000;
    std::uint64_t seed = 20180601;
    double tol = kDefaultTolerance;
    int grid_points = 11;
    std::size_t refinements = 10000;
    /// Pair every y with y' = -y.
    bool antipodal_y = false;
    /// Pin the first atom.
    std::optional<Vector> fixed_atom;
};

struct Counterexample {
    Prior prior;
    Vector x, x2, y, y2;
    double violation = 0.0;
    ProxCertificate certificate;
};

/// Minimizes the NSC left-hand side over two-point priors and observation
/// pairs: a coarse lattice pass, then uniform refinements around the best
/// lattice cell. Returns the most negative value found if it is below -tol.
std::optional<Counterexample> search_counterexample(const NoiseModel& model,
                                                    const SearchBox& atom_box,
                                                    const SearchBox& y_box,
                                                    const SearchOptions& options = {});

}  // namespace proxmmse
