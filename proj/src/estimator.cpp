#include "proxmmse/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "proxmmse/error.hpp"
#include "proxmmse/numeric.hpp"
#include "proxmmse/quadrature.hpp"
#include "proxmmse/worked_examples.hpp"

namespace proxmmse {
namespace {

const double kLogSupportThreshold = std::log(kSupportThreshold);

bool laplace_laplace_pair(const Prior& prior, const NoiseModel& model) {
    if (prior.kind() != PriorKind::AnalyticLaplacian || model.dim() != 1) return false;
    if (std::fabs(prior.laplace_rate() - 1.0) <= 1e-6) return false;
    switch (model.kind()) {
    case NoiseKind::LaplacianAdditive: return true;
    case NoiseKind::GeneralizedGaussian: return model.gamma() == 1.0 && model.sigma() == 1.0;
    default: return false;
    }
}

/// Softmax weights exp(lw_i - max) over the atoms, plus the shift.
struct AtomWeights {
    std::vector<double> shifted;
    double shift = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
};

AtomWeights atom_weights(const Prior& prior, const NoiseModel& model, const Vector& y) {
    const auto& atoms = prior.atoms();
    std::vector<double> lw(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i)
        lw[i] = std::log(atoms[i].weight) + model.log_q(y, atoms[i].point);
    AtomWeights w;
    for (double v : lw) w.shift = std::max(w.shift, v);
    w.shifted.resize(lw.size(), 0.0);
    if (!std::isfinite(w.shift)) return w;
    for (std::size_t i = 0; i < lw.size(); ++i) w.shifted[i] = std::exp(lw[i] - w.shift);
    w.sum = pairwise_sum(w.shifted);
    return w;
}

PointEstimate finite_sum(const Prior& prior, const NoiseModel& model, const Vector& y) {
    const auto w = atom_weights(prior, model, y);
    PointEstimate pe;
    pe.mean = Vector::Constant(model.dim(), std::numeric_limits<double>::quiet_NaN());
    if (!std::isfinite(w.shift)) return pe;
    pe.log_marginal = w.shift + std::log(w.sum);
    pe.in_support = pe.log_marginal >= kLogSupportThreshold;
    const auto& atoms = prior.atoms();
    std::vector<double> terms(atoms.size());
    for (int k = 0; k < model.dim(); ++k) {
        for (std::size_t i = 0; i < atoms.size(); ++i) terms[i] = w.shifted[i] * atoms[i].point[k];
        pe.mean[k] = pairwise_sum(terms) / w.sum;
    }
    return pe;
}

PointEstimate scalar_quadrature(const Prior& prior, const NoiseModel& model, double y,
                                const EstimatorOptions& options) {
    const double center = prior.kind() == PriorKind::AnalyticGaussian ? prior.mean() : 0.0;
    const double spread = prior.kind() == PriorKind::AnalyticGaussian
                              ? std::sqrt(prior.variance())
                              : 1.0 / prior.laplace_rate();
    auto log_g = [&](double x) { return model.log_q(y, x) + prior.log_density(x); };

    // Scale shift: max of the log integrand over a coarse scan. It only has
    // to keep the shifted integrand away from under/overflow.
    const double lo = std::min(center, y) - 10.0 * std::max(spread, 1.0);
    const double hi = std::max(center, y) + 10.0 * std::max(spread, 1.0);
    double shift = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 400; ++i) shift = std::max(shift, log_g(lo + (hi - lo) * i / 400.0));
    shift = std::max({shift, log_g(y), log_g(center)});

    const std::vector<double> cuts = {center, y};
    quadrature::Options qo;
    qo.rel_tol = options.rel_tol;
    qo.max_evaluations = options.max_evaluations;

    auto fail = [](const char* what, const quadrature::Result& r) {
        const double achieved = r.abs_error / std::max(std::fabs(r.value), 1e-300);
        throw QuadratureError(std::string(what) + " quadrature did not converge (relative error " +
                                  std::to_string(achieved) + " after " +
                                  std::to_string(r.evaluations) + " evaluations)",
                              achieved);
    };

    const auto mass = quadrature::integrate_real_line(
        [&](double x) { return std::exp(log_g(x) - shift); }, cuts, qo);
    if (!mass.converged) fail("marginal", mass);

    const auto abs_moment = quadrature::integrate_real_line(
        [&](double x) { return std::fabs(x) * std::exp(log_g(x) - shift); }, cuts, qo);
    if (!abs_moment.converged) fail("first absolute moment", abs_moment);

    quadrature::Options qn = qo;
    qn.abs_tol = options.rel_tol * abs_moment.value;
    const auto moment = quadrature::integrate_real_line(
        [&](double x) { return x * std::exp(log_g(x) - shift); }, cuts, qn);
    if (!moment.converged) fail("first moment", moment);

    PointEstimate pe;
    pe.mean = Vector::Constant(1, std::numeric_limits<double>::quiet_NaN());
    if (!(mass.value > 0.0)) return pe;
    pe.log_marginal = shift + std::log(mass.value);
    pe.in_support = pe.log_marginal >= kLogSupportThreshold;
    pe.mean[0] = moment.value / mass.value;
    return pe;
}

}  // namespace

std::string to_string(Backend backend) {
    switch (backend) {
    case Backend::FiniteSum: return "finite_sum";
    case Backend::Quadrature: return "quadrature";
    case Backend::Series: return "series";
    case Backend::ClosedForm: return "closed_form";
    }
    return "unknown";
}

Backend select_backend(const Prior& prior, const NoiseModel& model,
                       const EstimatorOptions& options) {
    if (prior.is_finite()) return Backend::FiniteSum;
    if (options.prefer_closed_form && laplace_laplace_pair(prior, model)) return Backend::ClosedForm;
    return Backend::Quadrature;
}

PointEstimate estimate_point(const Prior& prior, const NoiseModel& model, const Vector& y,
                             const EstimatorOptions& options) {
    prior.require_compatible(model);
    model.require_y(y);
    switch (select_backend(prior, model, options)) {
    case Backend::FiniteSum: return finite_sum(prior, model, y);
    case Backend::ClosedForm: {
        const LaplaceLaplaceCase ll{prior.laplace_rate()};
        PointEstimate pe;
        pe.log_marginal = std::log(ll_marginal(ll, y[0]));
        pe.in_support = pe.log_marginal >= kLogSupportThreshold;
        pe.mean = scalar_vector(ll_mean(ll, y[0]));
        return pe;
    }
    default: return scalar_quadrature(prior, model, y[0], options);
    }
}

double log_marginal(const Prior& prior, const NoiseModel& model, const Vector& y,
                    const EstimatorOptions& options) {
    return estimate_point(prior, model, y, options).log_marginal;
}

double marginal(const Prior& prior, const NoiseModel& model, const Vector& y,
                const EstimatorOptions& options) {
    return std::exp(log_marginal(prior, model, y, options));
}

Vector conditional_mean(const Prior& prior, const NoiseModel& model, const Vector& y,
                        const EstimatorOptions& options) {
    auto pe = estimate_point(prior, model, y, options);
    if (!pe.in_support)
        throw OutsideSupportError("q_P(y) = " + format_shortest(std::exp(pe.log_marginal)) +
                                  " is below the support threshold: y is outside Y_P");
    return pe.mean;
}

double conditional_mean(const Prior& prior, const NoiseModel& model, double y,
                        const EstimatorOptions& options) {
    return conditional_mean(prior, model, scalar_vector(y), options)[0];
}

Vector two_point_mean(const Vector& x, const Vector& x2, double w, const NoiseModel& model,
                      const Vector& y) {
    if (!(w >= 0.0 && w <= 1.0)) throw InvalidArgument("two-point weight must lie in [0, 1]");
    if (x.size() != x2.size()) throw InvalidArgument("two-point atoms differ in dimension");
    const double l1 = w > 0.0 ? std::log(w) + model.log_q(y, x)
                              : -std::numeric_limits<double>::infinity();
    const double l2 = w < 1.0 ? std::log1p(-w) + model.log_q(y, x2)
                              : -std::numeric_limits<double>::infinity();
    const double m = std::max(l1, l2);
    if (!std::isfinite(m) || m < kLogSupportThreshold)
        throw OutsideSupportError("both atoms have q(y|x) = 0 at the query point");
    const double a = std::exp(l1 - m), b = std::exp(l2 - m);
    return (a * x + b * x2) / (a + b);
}

Matrix jacobian_closed_form(const Prior& prior, const NoiseModel& model, const Vector& y) {
    if (!prior.is_finite())
        throw InvalidArgument("closed-form Jacobian needs a discrete or grid prior");
    prior.require_compatible(model);
    model.require_y(y);
    const auto w = atom_weights(prior, model, y);
    if (!std::isfinite(w.shift) || w.shift + std::log(w.sum) < kLogSupportThreshold)
        throw OutsideSupportError("q_P(y) vanishes: Jacobian undefined outside Y_P");

    const auto& atoms = prior.atoms();
    const int n = model.dim();
    std::vector<double> pi(atoms.size());
    std::vector<Vector> g(atoms.size(), Vector::Zero(n));
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        pi[i] = w.shifted[i] / w.sum;
        if (w.shifted[i] > 0.0) g[i] = model.grad_y_log_q(y, atoms[i].point);
    }

    Matrix J = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (pi[i] == 0.0) continue;
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            if (pi[j] == 0.0 || i == j) continue;
            J += (pi[i] * pi[j]) * (atoms[j].point - atoms[i].point) * (g[j] - g[i]).transpose();
        }
    }
    return 0.5 * J;
}

EstimatorResult estimate(const Prior& prior, const NoiseModel& model, std::span<const Vector> ys,
                         const EstimatorOptions& options) {
    prior.require_compatible(model);
    for (const auto& y : ys) model.require_y(y);

    EstimatorResult r;
    r.backend = select_backend(prior, model, options);
    r.query_points.assign(ys.begin(), ys.end());
    r.marginal.resize(ys.size());
    r.mean.resize(ys.size());
    std::vector<char> mask(ys.size(), 0);
    parallel_for(ys.size(), [&](std::size_t i) {
        auto pe = estimate_point(prior, model, ys[i], options);
        r.marginal[i] = std::exp(pe.log_marginal);
        r.mean[i] = pe.in_support ? pe.mean
                                  : Vector::Constant(model.dim(),
                                                     std::numeric_limits<double>::quiet_NaN());
        mask[i] = pe.in_support ? 1 : 0;
    });
    r.support_mask.assign(mask.begin(), mask.end());
    return r;
}

void write_csv(std::ostream& out, const EstimatorResult& result) {
    const auto n = result.query_points.empty() ? 0 : result.query_points.front().size();
    for (Eigen::Index k = 0; k < n; ++k) out << "y_" << (k + 1) << ',';
    out << "qP";
    for (Eigen::Index k = 0; k < n; ++k) out << ",f_" << (k + 1);
    out << ",in_support\n";
    for (std::size_t i = 0; i < result.query_points.size(); ++i) {
        for (Eigen::Index k = 0; k < n; ++k) out << format_g17(result.query_points[i][k]) << ',';
        out << format_g17(result.marginal[i]);
        for (Eigen::Index k = 0; k < n; ++k) out << ',' << format_g17(result.mean[i][k]);
        out << ',' << (result.support_mask[i] ? 1 : 0) << '\n';
    }
}

}  // namespace proxmmse
