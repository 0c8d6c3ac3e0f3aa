#pragma once

#include <string>
#include <vector>

#include "proxmmse/noise_models.hpp"
#include "proxmmse/types.hpp"

namespace proxmmse {

struct Atom {
    Vector point;
    double weight = 0.0;
};

/// Uniform tensor grid over the box [lower, upper]. Node (i_0, ..., i_{n-1})
/// is at lower_k + i_k (upper_k - lower_k) / (counts_k - 1); flat indices are
/// row-major with the last axis fastest.
struct TensorGrid {
    Vector lower;
    Vector upper;
    std::vector<int> counts;

    std::size_t size() const;
    int dim() const { return static_cast<int>(counts.size()); }
    Vector node(std::size_t flat_index) const;
};

enum class PriorKind { Discrete, GridDensity, AnalyticLaplacian, AnalyticGaussian };

std::string to_string(PriorKind kind);

/// Probability distribution P on the signal space. Immutable.
///
/// Weights are normalized at construction. GridDensity weights are a discrete
/// distribution on the grid nodes, not samples of a density: every
/// computation with such a prior is an exact finite sum over nodes.
class Prior {
public:
    static Prior discrete(std::vector<Atom> atoms);
    static Prior grid_density(TensorGrid grid, std::vector<double> weights);
    /// Uniform weights over every node.
    static Prior grid_density(TensorGrid grid);
    /// Scalar density (c/2) exp(-c|x|).
    static Prior analytic_laplacian(double c);
    static Prior analytic_gaussian(double mean, double variance);

    PriorKind kind() const { return kind_; }
    int dim() const { return dim_; }
    bool is_finite() const {
        return kind_ == PriorKind::Discrete || kind_ == PriorKind::GridDensity;
    }

    /// Atoms with positive weight (grid nodes for GridDensity). Empty for
    /// analytic priors.
    const std::vector<Atom>& atoms() const { return atoms_; }
    const TensorGrid* grid() const { return kind_ == PriorKind::GridDensity ? &grid_ : nullptr; }

    /// Sum of weights after normalization.
    double total_weight() const;

    /// Analytic priors only.
    double log_density(double x) const;
    double laplace_rate() const { return rate_; }
    double mean() const { return mean_; }
    double variance() const { return variance_; }

    std::string describe() const;

    /// Throws DomainError when a finite prior has an atom outside the
    /// model's X, or when an analytic prior's support (R) is not inside X.
    void require_compatible(const NoiseModel& model) const;

private:
    Prior() = default;
    PriorKind kind_ = PriorKind::Discrete;
    int dim_ = 1;
    std::vector<Atom> atoms_;
    TensorGrid grid_;
    double rate_ = 1.0;
    double mean_ = 0.0;
    double variance_ = 1.0;
};

enum class Admissibility { Admissible, Inadmissible, Unknown };

std::string to_string(Admissibility a);

struct AdmissibilityReport {
    Admissibility verdict = Admissibility::Unknown;
    std::string reason;
    /// Value of the bounded expectation where one was computed.
    double bound = 0.0;
};

/// Checks E_P[(1 + |X|) q(y|X)] < inf at the query point y. For
/// exponential-family models the stronger (1 + |X|)^2 exp(-a(X) + c r |X| +
/// c <X, y>) moment is used, with `radius` as r.
AdmissibilityReport check_admissible(const Prior& prior, const NoiseModel& model,
                                     const Vector& y, double radius = 0.1);

/// P is not supported on an affine hyperplane.
bool nondegenerate(const Prior& prior);

/// Product of scalar discrete priors: atoms on the tensor product of the
/// factors' atoms with product weights.
Prior product_prior(const std::vector<Prior>& factors);

}  // namespace proxmmse
