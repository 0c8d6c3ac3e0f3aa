#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "proxmmse/types.hpp"

namespace proxmmse {

/// Membership test for the signal space X or the observation space Y.
struct Domain {
    enum class Kind { Real, Positive, NonNegative };

    Kind kind = Kind::Real;
    int dim = 1;

    bool contains(const Vector& v) const { return first_violation(v) < 0; }
    /// Index of the first offending coordinate, -1 when v is in the domain
    /// (a size mismatch reports coordinate 0).
    int first_violation(const Vector& v) const;
    std::string describe() const;
};

/// Scalar potential F of an additive noise density exp(-F(y - x)).
class Potential {
public:
    /// F(z) = |z|.
    static Potential absolute();
    /// F(z) = z^2 / 2, i.e. unit Gaussian noise.
    static Potential quadratic();
    /// F(z) = |z|^gamma.
    static Potential power(double gamma);
    /// Piecewise-linear interpolation of the samples, extended linearly past
    /// both ends with the end-segment slopes.
    static Potential table(std::vector<double> z, std::vector<double> values);

    double value(double z) const;
    /// F'(z); throws KinkError where F has no derivative.
    double derivative(double z) const;
    /// True when F is convex (for tables: checked on the sample nodes).
    bool convex() const;
    /// Differentiable everywhere.
    bool smooth() const;
    std::string describe() const;

private:
    struct Power {
        double gamma;
        double scale;
    };
    struct Table {
        std::vector<double> z, f;
    };
    explicit Potential(std::variant<Power, Table> impl) : impl_(std::move(impl)) {}
    std::variant<Power, Table> impl_;
};

/// Terms of q(y|x) = exp(-a(x) - b(y) + c <x, y>).
struct ExponentialFamilyTerms {
    int dim = 1;
    double c = 1.0;
    std::function<double(const Vector&)> a;
    std::function<double(const Vector&)> b;
    std::function<Vector(const Vector&)> grad_a;
    std::function<Vector(const Vector&)> grad_b;
    Domain::Kind x_domain = Domain::Kind::Real;
    Domain::Kind y_domain = Domain::Kind::Real;
    std::string name = "custom";

    /// a(x) = c|x|^2/2, b(y) = c|y|^2/2: white Gaussian noise of variance 1/c.
    static ExponentialFamilyTerms gaussian(int dim, double c);
    /// c = 1, a(z) = sum exp(z_i), b(y) = sum log Gamma(y_i + 1).
    static ExponentialFamilyTerms log_poisson(int dim);
};

enum class NoiseKind {
    GaussianWhite,
    AdditiveScalar,
    GeneralizedGaussian,
    LaplacianAdditive,
    PoissonScalar,
    PoissonMultivariate,
    LogPoisson,
    ExponentialFamily,
};

std::string to_string(NoiseKind kind);

/// Unnormalized ("proto") conditional density q(y|x). Immutable.
///
/// Every kind is evaluated in the log domain; eval_q exponentiates. All
/// entry points validate x against X and y against Y and raise DomainError
/// naming the offending coordinate.
class NoiseModel {
public:
    static NoiseModel gaussian_white(double sigma, int dim = 1);
    static NoiseModel additive_scalar(Potential potential);
    /// q(y|x) = exp(-|(x - y)/sigma|^gamma), scalar.
    static NoiseModel generalized_gaussian(double gamma, double sigma = 1.0);
    /// q(y|x) = exp(-|x - y|_1).
    static NoiseModel laplacian(int dim);
    /// q(y|x) = x^y e^{-x} / Gamma(y + 1) with y extended to [0, inf).
    static NoiseModel poisson_scalar();
    static NoiseModel poisson(int dim);
    /// Poisson counts parameterized by z = log x.
    static NoiseModel log_poisson(int dim);
    static NoiseModel exponential_family(ExponentialFamilyTerms terms);

    NoiseKind kind() const { return kind_; }
    int dim() const { return dim_; }
    const Domain& x_domain() const { return x_domain_; }
    const Domain& y_domain() const { return y_domain_; }
    std::string describe() const;

    double sigma() const { return sigma_; }
    double gamma() const { return gamma_; }
    /// Exponential-family coupling c (0 for other kinds).
    double coupling() const { return expfam_ ? expfam_->c : 0.0; }

    double log_q(const Vector& y, const Vector& x) const;
    double eval_q(const Vector& y, const Vector& x) const;
    double log_q(double y, double x) const;
    double eval_q(double y, double x) const;

    Vector grad_x_log_q(const Vector& y, const Vector& x) const;
    Vector grad_y_log_q(const Vector& y, const Vector& x) const;

    /// Same model with q multiplied by `factor` > 0.
    NoiseModel scaled(double factor) const;

    /// Scalar additive noise whose potential is convex.
    bool log_concave_additive_scalar() const;
    /// The kink set is non-empty (Laplacian, |.|^gamma with gamma <= 1, tables).
    bool has_kinks() const;

    void require_x(const Vector& x) const;
    void require_y(const Vector& y) const;

private:
    NoiseModel(NoiseKind kind, int dim, Domain::Kind xk, Domain::Kind yk);

    double log_q_unchecked(const Vector& y, const Vector& x) const;

    NoiseKind kind_;
    int dim_;
    Domain x_domain_;
    Domain y_domain_;
    double sigma_ = 1.0;
    double gamma_ = 2.0;
    double log_scale_ = 0.0;
    std::optional<Potential> potential_;
    std::optional<ExponentialFamilyTerms> expfam_;
};

/// Outcome of the discrete second-difference test on a sampled potential.
struct LogConcavityReport {
    bool log_concave = true;
    double tolerance = 0.0;
    double worst_second_difference = 0.0;
    /// Grid triple (z_{i-1}, z_i, z_{i+1}) at the worst violation.
    std::optional<std::array<double, 3>> witness;
};

/// Checks convexity of F sampled on a uniform grid (>= 3 nodes), i.e.
/// log-concavity of exp(-F). Tolerance is 1e-9 * (1 + max|F|).
LogConcavityReport is_log_concave_additive(std::span<const double> z,
                                           std::span<const double> values);

}  // namespace proxmmse
