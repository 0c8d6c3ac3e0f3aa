#include "proxmmse/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "proxmmse/error.hpp"
#include "proxmmse/quadrature.hpp"

namespace proxmmse {

std::size_t TensorGrid::size() const {
    std::size_t n = counts.empty() ? 0 : 1;
    for (int c : counts) n *= static_cast<std::size_t>(c);
    return n;
}

Vector TensorGrid::node(std::size_t flat_index) const {
    const int n = dim();
    Vector x(n);
    for (int k = n - 1; k >= 0; --k) {
        const auto count = static_cast<std::size_t>(counts[k]);
        const std::size_t i = flat_index % count;
        flat_index /= count;
        x[k] = count == 1 ? lower[k]
                          : lower[k] + (upper[k] - lower[k]) * static_cast<double>(i) /
                                           static_cast<double>(count - 1);
    }
    return x;
}

std::string to_string(PriorKind kind) {
    switch (kind) {
    case PriorKind::Discrete: return "discrete";
    case PriorKind::GridDensity: return "grid";
    case PriorKind::AnalyticLaplacian: return "laplace";
    case PriorKind::AnalyticGaussian: return "gaussian";
    }
    return "unknown";
}

std::string to_string(Admissibility a) {
    switch (a) {
    case Admissibility::Admissible: return "admissible";
    case Admissibility::Inadmissible: return "inadmissible";
    case Admissibility::Unknown: return "unknown";
    }
    return "unknown";
}

namespace {

std::vector<Atom> normalized(std::vector<Atom> atoms) {
    double total = 0.0;
    for (const auto& a : atoms) {
        if (!(a.weight >= 0.0) || !std::isfinite(a.weight))
            throw InvalidArgument("prior weights must be finite and nonnegative");
        total += a.weight;
    }
    if (!(total > 0.0)) throw InvalidArgument("prior weights sum to zero");
    std::erase_if(atoms, [](const Atom& a) { return a.weight == 0.0; });
    for (auto& a : atoms) a.weight /= total;
    return atoms;
}

}  // namespace

Prior Prior::discrete(std::vector<Atom> atoms) {
    if (atoms.empty()) throw InvalidArgument("discrete prior needs at least one atom");
    const auto dim = atoms.front().point.size();
    if (dim < 1) throw InvalidArgument("prior atoms must have dimension >= 1");
    for (const auto& a : atoms) {
        if (a.point.size() != dim) throw InvalidArgument("prior atoms differ in dimension");
        if (!a.point.allFinite()) throw InvalidArgument("prior atom has a non-finite coordinate");
    }
    Prior p;
    p.kind_ = PriorKind::Discrete;
    p.dim_ = static_cast<int>(dim);
    p.atoms_ = normalized(std::move(atoms));
    return p;
}

Prior Prior::grid_density(TensorGrid grid, std::vector<double> weights) {
    const int n = grid.dim();
    if (n < 1 || grid.lower.size() != n || grid.upper.size() != n)
        throw InvalidArgument("grid bounds and counts disagree in dimension");
    for (int k = 0; k < n; ++k) {
        if (grid.counts[k] < 1) throw InvalidArgument("grid counts must be >= 1");
        if (!(grid.upper[k] >= grid.lower[k])) throw InvalidArgument("grid upper < lower");
    }
    if (weights.size() != grid.size())
        throw InvalidArgument("grid has " + std::to_string(grid.size()) + " nodes but " +
                              std::to_string(weights.size()) + " weights were given");
    std::vector<Atom> atoms;
    atoms.reserve(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) atoms.push_back({grid.node(i), weights[i]});
    Prior p;
    p.kind_ = PriorKind::GridDensity;
    p.dim_ = n;
    p.atoms_ = normalized(std::move(atoms));
    p.grid_ = std::move(grid);
    return p;
}

Prior Prior::grid_density(TensorGrid grid) {
    const auto n = grid.size();
    return grid_density(std::move(grid), std::vector<double>(n, 1.0));
}

Prior Prior::analytic_laplacian(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("laplacian prior rate must be positive");
    Prior p;
    p.kind_ = PriorKind::AnalyticLaplacian;
    p.rate_ = c;
    return p;
}

Prior Prior::analytic_gaussian(double mean, double variance) {
    if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(mean))
        throw InvalidArgument("gaussian prior needs finite mean and positive variance");
    Prior p;
    p.kind_ = PriorKind::AnalyticGaussian;
    p.mean_ = mean;
    p.variance_ = variance;
    return p;
}

double Prior::total_weight() const {
    if (!is_finite()) return 1.0;
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight;
    return s;
}

double Prior::log_density(double x) const {
    switch (kind_) {
    case PriorKind::AnalyticLaplacian: return std::log(0.5 * rate_) - rate_ * std::fabs(x);
    case PriorKind::AnalyticGaussian: {
        const double d = x - mean_;
        return -0.5 * d * d / variance_ - 0.5 * std::log(2.0 * std::numbers::pi * variance_);
    }
    default: throw InvalidArgument("log_density is only defined for analytic priors");
    }
}

std::string Prior::describe() const {
    std::ostringstream os;
    os << to_string(kind_);
    switch (kind_) {
    case PriorKind::Discrete: os << '(' << atoms_.size() << " atoms, dim=" << dim_ << ')'; break;
    case PriorKind::GridDensity: os << '(' << atoms_.size() << " nodes, dim=" << dim_ << ')'; break;
    case PriorKind::AnalyticLaplacian: os << "(c=" << rate_ << ')'; break;
    case PriorKind::AnalyticGaussian: os << "(mean=" << mean_ << ", variance=" << variance_ << ')'; break;
    }
    return os.str();
}

void Prior::require_compatible(const NoiseModel& model) const {
    if (dim_ != model.dim())
        throw InvalidArgument("prior dimension " + std::to_string(dim_) +
                              " does not match model dimension " + std::to_string(model.dim()));
    if (is_finite()) {
        for (const auto& a : atoms_) model.require_x(a.point);
    } else if (model.x_domain().kind != Domain::Kind::Real) {
        throw DomainError("analytic prior " + describe() + " has support R, outside X = " +
                          model.x_domain().describe());
    }
}

AdmissibilityReport check_admissible(const Prior& prior, const NoiseModel& model, const Vector& y,
                                     double radius) {
    if (prior.dim() != model.dim() || y.size() != model.dim())
        throw InvalidArgument("dimension mismatch between prior, model and y");
    if (!(radius > 0.0)) throw InvalidArgument("admissibility radius must be positive");
    prior.require_compatible(model);
    model.require_y(y);

    if (prior.is_finite()) {
        double bound = 0.0;
        for (const auto& a : prior.atoms())
            bound += a.weight * (1.0 + a.point.norm()) * model.eval_q(y, a.point);
        return {Admissibility::Admissible, "finite sum", bound};
    }
    if (model.log_concave_additive_scalar())
        return {Admissibility::Admissible, "log-concave bound", 0.0};

    // Tail quadrature on [-R, R], R doubling.
    const double yv = y[0];
    std::function<double(double)> log_integrand;
    if (model.kind() == NoiseKind::ExponentialFamily) {
        // (1+|x|)^2 exp(-a(x) + c r |x| + c x y) p(x), carried as
        // (1+|x|)^2 q(y|x) e^{c r |x|} p(x): the two differ by the constant
        // factor e^{b(y)}.
        const double cr = model.coupling() * radius;
        log_integrand = [&, yv, cr](double x) {
            return 2.0 * std::log1p(std::fabs(x)) + model.log_q(yv, x) + cr * std::fabs(x) +
                   prior.log_density(x);
        };
    } else {
        log_integrand = [&, yv](double x) {
            return std::log1p(std::fabs(x)) + model.log_q(yv, x) + prior.log_density(x);
        };
    }
    auto integrand = [&](double x) { return std::exp(log_integrand(x)); };

    const double center = prior.kind() == PriorKind::AnalyticGaussian ? prior.mean() : 0.0;
    double R = std::max({1.0, 2.0 * std::fabs(yv), 2.0 * std::fabs(center)});
    if (prior.kind() == PriorKind::AnalyticGaussian) R = std::max(R, 8.0 * std::sqrt(prior.variance()));

    quadrature::Options opts;
    opts.rel_tol = 1e-12;
    auto over = [&](double r) {
        std::vector<double> cuts = {-r, std::clamp(center, -r, r), std::clamp(yv, -r, r), r};
        std::sort(cuts.begin(), cuts.end());
        double total = 0.0;
        bool ok = true;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            if (cuts[i + 1] <= cuts[i]) continue;
            auto res = quadrature::integrate(integrand, cuts[i], cuts[i + 1], opts);
            ok = ok && res.converged;
            total += res.value;
        }
        return std::pair{total, ok};
    };

    auto [inner, inner_ok] = over(R);
    while (R <= 1e6) {
        auto [outer, outer_ok] = over(2.0 * R);
        if (!std::isfinite(outer))
            return {Admissibility::Inadmissible, "moment diverges: integrand overflows at R = " +
                                                     std::to_string(2.0 * R),
                    outer};
        const double tail = outer - inner;
        if (outer_ok && inner_ok && std::fabs(tail) < 1e-10 * std::fabs(outer))
            return {Admissibility::Admissible, "tail quadrature converged", outer};
        inner = outer;
        inner_ok = outer_ok;
        R *= 2.0;
    }
    return {Admissibility::Unknown, "tail quadrature did not settle before R > 1e6", inner};
}

bool nondegenerate(const Prior& prior) {
    if (!prior.is_finite()) return true;
    const auto& atoms = prior.atoms();
    const int n = prior.dim();
    Matrix centered(n, static_cast<Eigen::Index>(atoms.size()));
    const Vector origin = atoms.front().point;
    for (std::size_t j = 0; j < atoms.size(); ++j) centered.col(j) = atoms[j].point - origin;
    if (centered.cols() < n) return false;
    Eigen::FullPivLU<Matrix> lu(centered);
    lu.setThreshold(1e-10);
    return lu.rank() == n;
}

Prior product_prior(const std::vector<Prior>& factors) {
    if (factors.empty()) throw InvalidArgument("product prior needs at least one factor");
    std::vector<Atom> atoms = {{Vector(0), 1.0}};
    for (const auto& f : factors) {
        if (!f.is_finite() || f.dim() != 1)
            throw InvalidArgument("product prior factors must be scalar finite priors");
        std::vector<Atom> next;
        next.reserve(atoms.size() * f.atoms().size());
        for (const auto& a : atoms)
            for (const auto& b : f.atoms()) {
                Vector p(a.point.size() + 1);
                p << a.point, b.point[0];
                next.push_back({p, a.weight * b.weight});
            }
        atoms = std::move(next);
    }
    return Prior::discrete(std::move(atoms));
}

}  // namespace proxmmse
