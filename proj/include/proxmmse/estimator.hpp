#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "proxmmse/noise_models.hpp"
#include "proxmmse/priors.hpp"
#include "proxmmse/types.hpp"

namespace proxmmse {

enum class Backend { FiniteSum, Quadrature, Series, ClosedForm };

std::string to_string(Backend backend);

/// q_P(y) below this value is treated as zero: y is outside the support Y_P.
inline constexpr double kSupportThreshold = 1e-300;

struct EstimatorOptions {
    /// Relative tolerance of the scalar quadrature backend.
    double rel_tol = 1e-10;
    std::size_t max_evaluations = std::size_t{1} << 20;
    /// Use the Laplace-Laplace closed form when the pair (analytic Laplacian
    /// prior, unit Laplacian noise) allows it.
    bool prefer_closed_form = false;
};

/// Log-domain marginal and conditional mean at one query point.
struct PointEstimate {
    double log_marginal = -std::numeric_limits<double>::infinity();
    Vector mean;
    bool in_support = false;
};

struct EstimatorResult {
    std::vector<Vector> query_points;
    std::vector<double> marginal;
    /// Only meaningful where support_mask is true; NaN elsewhere.
    std::vector<Vector> mean;
    std::vector<bool> support_mask;
    Backend backend = Backend::FiniteSum;
};

/// Backend that `estimate` uses for this (prior, model) pair.
Backend select_backend(const Prior& prior, const NoiseModel& model,
                       const EstimatorOptions& options = {});

/// q_P(y) and f_P(y) together. Never throws OutsideSupportError: check
/// `in_support`.
PointEstimate estimate_point(const Prior& prior, const NoiseModel& model, const Vector& y,
                             const EstimatorOptions& options = {});

/// q_P(y) = E_P q(y|X).
double marginal(const Prior& prior, const NoiseModel& model, const Vector& y,
                const EstimatorOptions& options = {});
double log_marginal(const Prior& prior, const NoiseModel& model, const Vector& y,
                    const EstimatorOptions& options = {});

/// f_P(y) = E_P[X q(y|X)] / E_P[q(y|X)]; throws OutsideSupportError when
/// q_P(y) < kSupportThreshold.
Vector conditional_mean(const Prior& prior, const NoiseModel& model, const Vector& y,
                        const EstimatorOptions& options = {});
double conditional_mean(const Prior& prior, const NoiseModel& model, double y,
                        const EstimatorOptions& options = {});

/// Conditional mean for the prior w delta_x + (1 - w) delta_x2.
Vector two_point_mean(const Vector& x, const Vector& x2, double w, const NoiseModel& model,
                      const Vector& y);

/// Df_P(y) for a finite prior as the pairwise double sum
///   1/(2 q_P^2) sum_ij w_i w_j q_i q_j (x_j - x_i)(g_j - g_i)^T,
/// with g_i = grad_y log q(y|x_i) (zero where q_i = 0).
Matrix jacobian_closed_form(const Prior& prior, const NoiseModel& model, const Vector& y);

/// Batch evaluation; points are independent and evaluated in parallel.
EstimatorResult estimate(const Prior& prior, const NoiseModel& model,
                         std::span<const Vector> ys, const EstimatorOptions& options = {});

/// CSV with header y_1..y_n,qP,f_1..f_n,in_support and 17 significant digits.
void write_csv(std::ostream& out, const EstimatorResult& result);

}  // namespace proxmmse
