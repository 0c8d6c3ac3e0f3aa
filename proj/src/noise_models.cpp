#include "proxmmse/noise_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "proxmmse/error.hpp"

namespace proxmmse {
namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

std::string format_vector(const Vector& v) {
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ')';
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain

int Domain::first_violation(const Vector& v) const {
    if (v.size() != dim) return 0;
    for (int i = 0; i < dim; ++i) {
        const double c = v[i];
        if (!std::isfinite(c)) return i;
        if (kind == Kind::Positive && !(c > 0.0)) return i;
        if (kind == Kind::NonNegative && !(c >= 0.0)) return i;
    }
    return -1;
}

std::string Domain::describe() const {
    const char* base = kind == Kind::Real ? "R" : kind == Kind::Positive ? "(0,inf)" : "[0,inf)";
    return dim == 1 ? std::string(base) : std::string(base) + "^" + std::to_string(dim);
}

// ---------------------------------------------------------------------------
// Potential

Potential Potential::absolute() { return Potential(Power{1.0, 1.0}); }
Potential Potential::quadratic() { return Potential(Power{2.0, 0.5}); }

Potential Potential::power(double gamma) {
    if (!(gamma > 0.0)) throw InvalidArgument("potential exponent must be positive");
    return Potential(Power{gamma, 1.0});
}

Potential Potential::table(std::vector<double> z, std::vector<double> values) {
    if (z.size() != values.size() || z.size() < 2)
        throw InvalidArgument("potential table needs >= 2 rows of (z, F(z))");
    for (std::size_t i = 1; i < z.size(); ++i)
        if (!(z[i] > z[i - 1])) throw InvalidArgument("potential table z column must increase");
    return Potential(Table{std::move(z), std::move(values)});
}

double Potential::value(double z) const {
    if (const auto* p = std::get_if<Power>(&impl_)) return p->scale * std::pow(std::fabs(z), p->gamma);
    const auto& t = std::get<Table>(impl_);
    // Segment index, clamped so the end segments extrapolate.
    auto it = std::upper_bound(t.z.begin(), t.z.end(), z);
    std::size_t hi = std::clamp<std::size_t>(it - t.z.begin(), 1, t.z.size() - 1);
    const std::size_t lo = hi - 1;
    const double s = (t.f[hi] - t.f[lo]) / (t.z[hi] - t.z[lo]);
    return t.f[lo] + s * (z - t.z[lo]);
}

double Potential::derivative(double z) const {
    if (const auto* p = std::get_if<Power>(&impl_)) {
        if (z == 0.0) {
            if (p->gamma > 1.0) return 0.0;
            throw KinkError("potential " + describe() + " is not differentiable at 0");
        }
        return p->scale * p->gamma * std::pow(std::fabs(z), p->gamma - 1.0) * sign(z);
    }
    const auto& t = std::get<Table>(impl_);
    auto slope = [&](std::size_t hi) {
        return (t.f[hi] - t.f[hi - 1]) / (t.z[hi] - t.z[hi - 1]);
    };
    auto it = std::lower_bound(t.z.begin(), t.z.end(), z);
    const std::size_t idx = it - t.z.begin();
    if (it != t.z.end() && *it == z && idx > 0 && idx + 1 < t.z.size() &&
        slope(idx) != slope(idx + 1))
        throw KinkError("tabulated potential has a kink at z = " + std::to_string(z));
    std::size_t hi = std::clamp<std::size_t>(std::upper_bound(t.z.begin(), t.z.end(), z) - t.z.begin(),
                                             1, t.z.size() - 1);
    return slope(hi);
}

bool Potential::convex() const {
    if (const auto* p = std::get_if<Power>(&impl_)) return p->gamma >= 1.0;
    const auto& t = std::get<Table>(impl_);
    for (std::size_t i = 1; i + 1 < t.z.size(); ++i) {
        const double left = (t.f[i] - t.f[i - 1]) / (t.z[i] - t.z[i - 1]);
        const double right = (t.f[i + 1] - t.f[i]) / (t.z[i + 1] - t.z[i]);
        if (right < left - 1e-12 * (1.0 + std::fabs(left))) return false;
    }
    return true;
}

bool Potential::smooth() const {
    const auto* p = std::get_if<Power>(&impl_);
    return p != nullptr && p->gamma > 1.0;
}

std::string Potential::describe() const {
    if (const auto* p = std::get_if<Power>(&impl_)) {
        if (p->gamma == 1.0 && p->scale == 1.0) return "abs";
        if (p->gamma == 2.0 && p->scale == 0.5) return "quad";
        std::ostringstream os;
        os << "pow:" << p->gamma;
        return os.str();
    }
    return "table(" + std::to_string(std::get<Table>(impl_).z.size()) + " rows)";
}

// ---------------------------------------------------------------------------
// Exponential family presets

ExponentialFamilyTerms ExponentialFamilyTerms::gaussian(int dim, double c) {
    if (!(c > 0.0)) throw InvalidArgument("exponential family coupling c must be positive");
    ExponentialFamilyTerms t;
    t.dim = dim;
    t.c = c;
    t.a = [c](const Vector& x) { return 0.5 * c * x.squaredNorm(); };
    t.b = [c](const Vector& y) { return 0.5 * c * y.squaredNorm(); };
    t.grad_a = [c](const Vector& x) -> Vector { return c * x; };
    t.grad_b = [c](const Vector& y) -> Vector { return c * y; };
    t.name = "gaussian";
    return t;
}

ExponentialFamilyTerms ExponentialFamilyTerms::log_poisson(int dim) {
    ExponentialFamilyTerms t;
    t.dim = dim;
    t.c = 1.0;
    t.a = [](const Vector& z) { return z.array().exp().sum(); };
    t.b = [](const Vector& y) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) s += boost::math::lgamma(y[i] + 1.0);
        return s;
    };
    t.grad_a = [](const Vector& z) -> Vector { return z.array().exp().matrix(); };
    t.grad_b = [](const Vector& y) -> Vector {
        Vector g(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) g[i] = boost::math::digamma(y[i] + 1.0);
        return g;
    };
    t.y_domain = Domain::Kind::NonNegative;
    t.name = "log_poisson";
    return t;
}

// ---------------------------------------------------------------------------
// NoiseModel

std::string to_string(NoiseKind kind) {
    switch (kind) {
    case NoiseKind::GaussianWhite: return "gaussian_white";
    case NoiseKind::AdditiveScalar: return "additive_scalar";
    case NoiseKind::GeneralizedGaussian: return "generalized_gaussian";
    case NoiseKind::LaplacianAdditive: return "laplacian";
    case NoiseKind::PoissonScalar: return "poisson_scalar";
    case NoiseKind::PoissonMultivariate: return "poisson";
    case NoiseKind::LogPoisson: return "log_poisson";
    case NoiseKind::ExponentialFamily: return "exponential_family";
    }
    return "unknown";
}

NoiseModel::NoiseModel(NoiseKind kind, int dim, Domain::Kind xk, Domain::Kind yk)
    : kind_(kind), dim_(dim), x_domain_{xk, dim}, y_domain_{yk, dim} {
    if (dim < 1) throw InvalidArgument("noise model dimension must be >= 1");
}

NoiseModel NoiseModel::gaussian_white(double sigma, int dim) {
    if (!(sigma > 0.0)) throw InvalidArgument("gaussian sigma must be positive");
    NoiseModel m(NoiseKind::GaussianWhite, dim, Domain::Kind::Real, Domain::Kind::Real);
    m.sigma_ = sigma;
    return m;
}

NoiseModel NoiseModel::additive_scalar(Potential potential) {
    NoiseModel m(NoiseKind::AdditiveScalar, 1, Domain::Kind::Real, Domain::Kind::Real);
    m.potential_ = std::move(potential);
    return m;
}

NoiseModel NoiseModel::generalized_gaussian(double gamma, double sigma) {
    if (!(gamma > 0.0)) throw InvalidArgument("generalized gaussian gamma must be positive");
    if (!(sigma > 0.0)) throw InvalidArgument("generalized gaussian sigma must be positive");
    NoiseModel m(NoiseKind::GeneralizedGaussian, 1, Domain::Kind::Real, Domain::Kind::Real);
    m.gamma_ = gamma;
    m.sigma_ = sigma;
    return m;
}

NoiseModel NoiseModel::laplacian(int dim) {
    return NoiseModel(NoiseKind::LaplacianAdditive, dim, Domain::Kind::Real, Domain::Kind::Real);
}

NoiseModel NoiseModel::poisson_scalar() {
    return NoiseModel(NoiseKind::PoissonScalar, 1, Domain::Kind::Positive,
                      Domain::Kind::NonNegative);
}

NoiseModel NoiseModel::poisson(int dim) {
    return NoiseModel(NoiseKind::PoissonMultivariate, dim, Domain::Kind::Positive,
                      Domain::Kind::NonNegative);
}

NoiseModel NoiseModel::log_poisson(int dim) {
    return NoiseModel(NoiseKind::LogPoisson, dim, Domain::Kind::Real, Domain::Kind::NonNegative);
}

NoiseModel NoiseModel::exponential_family(ExponentialFamilyTerms terms) {
    if (!terms.a || !terms.b || !terms.grad_a || !terms.grad_b)
        throw InvalidArgument("exponential family needs a, b and their gradients");
    if (!(terms.c >= 0.0)) throw InvalidArgument("exponential family coupling c must be >= 0");
    NoiseModel m(NoiseKind::ExponentialFamily, terms.dim, terms.x_domain, terms.y_domain);
    m.expfam_ = std::move(terms);
    return m;
}

std::string NoiseModel::describe() const {
    std::ostringstream os;
    os << to_string(kind_);
    switch (kind_) {
    case NoiseKind::GaussianWhite: os << "(sigma=" << sigma_ << ", dim=" << dim_ << ')'; break;
    case NoiseKind::AdditiveScalar: os << "(F=" << potential_->describe() << ')'; break;
    case NoiseKind::GeneralizedGaussian: os << "(gamma=" << gamma_ << ", sigma=" << sigma_ << ')'; break;
    case NoiseKind::ExponentialFamily:
        os << '(' << expfam_->name << ", c=" << expfam_->c << ", dim=" << dim_ << ')';
        break;
    case NoiseKind::PoissonScalar: break;
    default: os << "(dim=" << dim_ << ')'; break;
    }
    if (log_scale_ != 0.0) os << " * " << std::exp(log_scale_);
    return os.str();
}

void NoiseModel::require_x(const Vector& x) const {
    if (x.size() != dim_)
        throw DomainError("x has dimension " + std::to_string(x.size()) + ", model " +
                              describe() + " expects " + std::to_string(dim_),
                          0);
    if (int i = x_domain_.first_violation(x); i >= 0)
        throw DomainError("x = " + format_vector(x) + " outside X = " + x_domain_.describe() +
                              " at coordinate " + std::to_string(i),
                          i);
}

void NoiseModel::require_y(const Vector& y) const {
    if (y.size() != dim_)
        throw DomainError("y has dimension " + std::to_string(y.size()) + ", model " +
                              describe() + " expects " + std::to_string(dim_),
                          0);
    if (int i = y_domain_.first_violation(y); i >= 0)
        throw DomainError("y = " + format_vector(y) + " outside Y = " + y_domain_.describe() +
                              " at coordinate " + std::to_string(i),
                          i);
}

double NoiseModel::log_q_unchecked(const Vector& y, const Vector& x) const {
    double lq = 0.0;
    switch (kind_) {
    case NoiseKind::GaussianWhite:
        lq = -(x - y).squaredNorm() / (2.0 * sigma_ * sigma_);
        break;
    case NoiseKind::AdditiveScalar:
        lq = -potential_->value(y[0] - x[0]);
        break;
    case NoiseKind::GeneralizedGaussian:
        lq = -std::pow(std::fabs((x[0] - y[0]) / sigma_), gamma_);
        break;
    case NoiseKind::LaplacianAdditive:
        lq = -(x - y).lpNorm<1>();
        break;
    case NoiseKind::PoissonScalar:
    case NoiseKind::PoissonMultivariate:
        for (int i = 0; i < dim_; ++i) {
            const double yi = y[i], xi = x[i];
            lq += (yi == 0.0 ? 0.0 : yi * std::log(xi)) - xi - boost::math::lgamma(yi + 1.0);
        }
        break;
    case NoiseKind::LogPoisson:
        for (int i = 0; i < dim_; ++i)
            lq += y[i] * x[i] - std::exp(x[i]) - boost::math::lgamma(y[i] + 1.0);
        break;
    case NoiseKind::ExponentialFamily:
        lq = -expfam_->a(x) - expfam_->b(y) + expfam_->c * x.dot(y);
        break;
    }
    return lq + log_scale_;
}

double NoiseModel::log_q(const Vector& y, const Vector& x) const {
    require_x(x);
    require_y(y);
    return log_q_unchecked(y, x);
}

double NoiseModel::eval_q(const Vector& y, const Vector& x) const { return std::exp(log_q(y, x)); }

double NoiseModel::log_q(double y, double x) const {
    if (dim_ != 1) throw DomainError("scalar log_q called on " + describe(), 0);
    switch (kind_) {
    case NoiseKind::GaussianWhite:
        if (!std::isfinite(x) || !std::isfinite(y)) break;
        return -(x - y) * (x - y) / (2.0 * sigma_ * sigma_) + log_scale_;
    case NoiseKind::AdditiveScalar:
        if (!std::isfinite(x) || !std::isfinite(y)) break;
        return -potential_->value(y - x) + log_scale_;
    case NoiseKind::GeneralizedGaussian:
        if (!std::isfinite(x) || !std::isfinite(y)) break;
        return -std::pow(std::fabs((x - y) / sigma_), gamma_) + log_scale_;
    case NoiseKind::LaplacianAdditive:
        if (!std::isfinite(x) || !std::isfinite(y)) break;
        return -std::fabs(x - y) + log_scale_;
    default: break;
    }
    return log_q(scalar_vector(y), scalar_vector(x));
}

double NoiseModel::eval_q(double y, double x) const { return std::exp(log_q(y, x)); }

Vector NoiseModel::grad_x_log_q(const Vector& y, const Vector& x) const {
    require_x(x);
    require_y(y);
    Vector g(dim_);
    switch (kind_) {
    case NoiseKind::GaussianWhite:
        g = (y - x) / (sigma_ * sigma_);
        break;
    case NoiseKind::AdditiveScalar:
        g[0] = potential_->derivative(y[0] - x[0]);
        break;
    case NoiseKind::GeneralizedGaussian: {
        const double u = (x[0] - y[0]) / sigma_;
        if (u == 0.0) {
            if (gamma_ <= 1.0) throw KinkError("generalized gaussian log q has a kink at x = y");
            g[0] = 0.0;
        } else {
            g[0] = -gamma_ * std::pow(std::fabs(u), gamma_ - 1.0) * sign(u) / sigma_;
        }
        break;
    }
    case NoiseKind::LaplacianAdditive:
        for (int i = 0; i < dim_; ++i) {
            if (x[i] == y[i])
                throw KinkError("laplacian log q is not differentiable: x_" + std::to_string(i) +
                                " == y_" + std::to_string(i));
            g[i] = -sign(x[i] - y[i]);
        }
        break;
    case NoiseKind::PoissonScalar:
    case NoiseKind::PoissonMultivariate:
        g = (y.array() / x.array() - 1.0).matrix();
        break;
    case NoiseKind::LogPoisson:
        g = (y.array() - x.array().exp()).matrix();
        break;
    case NoiseKind::ExponentialFamily:
        g = expfam_->c * y - expfam_->grad_a(x);
        break;
    }
    return g;
}

Vector NoiseModel::grad_y_log_q(const Vector& y, const Vector& x) const {
    require_x(x);
    require_y(y);
    Vector g(dim_);
    switch (kind_) {
    case NoiseKind::GaussianWhite:
        g = (x - y) / (sigma_ * sigma_);
        break;
    case NoiseKind::AdditiveScalar:
        g[0] = -potential_->derivative(y[0] - x[0]);
        break;
    case NoiseKind::GeneralizedGaussian: {
        const double u = (x[0] - y[0]) / sigma_;
        if (u == 0.0) {
            if (gamma_ <= 1.0) throw KinkError("generalized gaussian log q has a kink at y = x");
            g[0] = 0.0;
        } else {
            g[0] = gamma_ * std::pow(std::fabs(u), gamma_ - 1.0) * sign(u) / sigma_;
        }
        break;
    }
    case NoiseKind::LaplacianAdditive:
        for (int i = 0; i < dim_; ++i) {
            if (x[i] == y[i])
                throw KinkError("laplacian log q is not differentiable: y_" + std::to_string(i) +
                                " == x_" + std::to_string(i));
            g[i] = sign(x[i] - y[i]);
        }
        break;
    case NoiseKind::PoissonScalar:
    case NoiseKind::PoissonMultivariate:
        for (int i = 0; i < dim_; ++i) g[i] = std::log(x[i]) - boost::math::digamma(y[i] + 1.0);
        break;
    case NoiseKind::LogPoisson:
        for (int i = 0; i < dim_; ++i) g[i] = x[i] - boost::math::digamma(y[i] + 1.0);
        break;
    case NoiseKind::ExponentialFamily:
        g = expfam_->c * x - expfam_->grad_b(y);
        break;
    }
    return g;
}

NoiseModel NoiseModel::scaled(double factor) const {
    if (!(factor > 0.0) || !std::isfinite(factor))
        throw InvalidArgument("noise scaling factor must be positive and finite");
    NoiseModel m = *this;
    m.log_scale_ += std::log(factor);
    return m;
}

bool NoiseModel::log_concave_additive_scalar() const {
    if (dim_ != 1) return false;
    switch (kind_) {
    case NoiseKind::GaussianWhite:
    case NoiseKind::LaplacianAdditive: return true;
    case NoiseKind::GeneralizedGaussian: return gamma_ >= 1.0;
    case NoiseKind::AdditiveScalar: return potential_->convex();
    default: return false;
    }
}

bool NoiseModel::has_kinks() const {
    switch (kind_) {
    case NoiseKind::LaplacianAdditive: return true;
    case NoiseKind::GeneralizedGaussian: return gamma_ <= 1.0;
    case NoiseKind::AdditiveScalar: return !potential_->smooth();
    default: return false;
    }
}

// ---------------------------------------------------------------------------

LogConcavityReport is_log_concave_additive(std::span<const double> z,
                                           std::span<const double> values) {
    if (z.size() != values.size())
        throw InvalidArgument("potential grid and values differ in length");
    if (z.size() < 3) throw InvalidArgument("log-concavity check needs at least 3 grid points");
    const double h = (z.back() - z.front()) / static_cast<double>(z.size() - 1);
    if (!(h > 0.0)) throw InvalidArgument("potential grid must be increasing");
    for (std::size_t i = 1; i < z.size(); ++i)
        if (std::fabs((z[i] - z[i - 1]) - h) > 1e-9 * std::max(1.0, std::fabs(h)))
            throw InvalidArgument("potential grid must be uniform");

    double max_abs = 0.0;
    for (double v : values) max_abs = std::max(max_abs, std::fabs(v));

    LogConcavityReport report;
    report.tolerance = 1e-9 * (1.0 + max_abs);
    double worst = std::numeric_limits<double>::infinity();
    std::size_t worst_i = 1;
    for (std::size_t i = 1; i + 1 < z.size(); ++i) {
        const double d2 = values[i - 1] - 2.0 * values[i] + values[i + 1];
        if (d2 < worst) {
            worst = d2;
            worst_i = i;
        }
    }
    report.worst_second_difference = worst;
    report.log_concave = worst >= -report.tolerance;
    if (!report.log_concave)
        report.witness = std::array<double, 3>{z[worst_i - 1], z[worst_i], z[worst_i + 1]};
    return report;
}

}  // namespace proxmmse
