#include "proxmmse/prox_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "proxmmse/error.hpp"
#include "proxmmse/numeric.hpp"

namespace proxmmse {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Verdict tiered(double worst, double tol) {
    if (worst >= -tol) return Verdict::Pass;
    return worst < -100.0 * tol ? Verdict::Fail : Verdict::Inconclusive;
}

std::string join(const Vector& v, char sep = ' ') {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += format_shortest(v[i]);
    }
    return s;
}

/// log q(y'|x') + log q(y|x) - log q(y'|x) - log q(y|x'), with 0 for two
/// vanishing products and -inf when only the left one vanishes.
double log_det_gap(double l_y2x2, double l_yx, double l_y2x, double l_yx2) {
    const double a = l_y2x2 + l_yx, b = l_y2x + l_yx2;
    if (a == kNegInf && b == kNegInf) return 0.0;
    return a - b;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

const Vector& Witness::point(const std::string& name) const {
    for (const auto& [n, v] : points)
        if (n == name) return v;
    throw InvalidArgument("witness has no point named " + name);
}

std::string to_string(Criterion c) {
    switch (c) {
    case Criterion::ScalarMonotone: return "scalar_monotone";
    case Criterion::ConditionB: return "condition_b";
    case Criterion::MonotoneOperator: return "monotone_operator";
    case Criterion::JacobianSymPsd: return "jacobian_sym_psd";
    case Criterion::GradientCollinearity: return "gradient_collinearity";
    case Criterion::NscInequality: return "nsc_inequality";
    }
    return "unknown";
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

Criterion criterion_from_string(const std::string& name) {
    for (auto c : {Criterion::ScalarMonotone, Criterion::ConditionB, Criterion::MonotoneOperator,
                   Criterion::JacobianSymPsd, Criterion::GradientCollinearity,
                   Criterion::NscInequality})
        if (to_string(c) == name) return c;
    throw InvalidArgument("unknown criterion '" + name + "'");
}

void write_report(std::ostream& out, const ProxCertificate& cert) {
    out << "criterion: " << to_string(cert.criterion) << '\n'
        << "verdict: " << to_string(cert.verdict) << '\n'
        << "tolerance: " << format_shortest(cert.tolerance_used) << '\n'
        << "value: " << format_shortest(cert.value) << '\n';
    if (cert.seed) out << "seed: " << *cert.seed << '\n';
    if (!cert.note.empty()) out << "note: " << cert.note << '\n';
    if (cert.witness) {
        for (const auto& [name, v] : cert.witness->points)
            out << "witness." << name << ": " << join(v) << '\n';
        if (cert.witness->fitted_c) out << "witness.c: " << format_shortest(*cert.witness->fitted_c) << '\n';
        if (cert.witness->matrix) {
            const Matrix& m = *cert.witness->matrix;
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                out << "witness.matrix[" << r << "]: " << join(m.row(r).transpose()) << '\n';
        }
    }
}

void write_certificate_csv_header(std::ostream& out) {
    out << "label,criterion,verdict,tolerance,value,seed,witness\n";
}

void write_certificate_csv_row(std::ostream& out, const std::string& label,
                               const ProxCertificate& cert) {
    out << label << ',' << to_string(cert.criterion) << ',' << to_string(cert.verdict) << ','
        << format_shortest(cert.tolerance_used) << ',' << format_shortest(cert.value) << ',';
    if (cert.seed) out << *cert.seed;
    out << ',';
    if (cert.witness) {
        std::string w;
        for (const auto& [name, v] : cert.witness->points) {
            if (!w.empty()) w += ';';
            w += name + '=' + join(v);
        }
        if (cert.witness->fitted_c) w += ";c=" + format_shortest(*cert.witness->fitted_c);
        if (cert.witness->matrix) {
            const Matrix& m = *cert.witness->matrix;
            w += ";matrix=";
            for (Eigen::Index r = 0; r < m.rows(); ++r) w += (r ? "|" : "") + join(m.row(r).transpose());
        }
        out << '"' << w << '"';
    }
    out << '\n';
}

// ---------------------------------------------------------------------------

ProxCertificate check_scalar_monotone(std::span<const double> y, std::span<const double> f,
                                      double tol) {
    if (y.size() != f.size()) throw InvalidArgument("y and f(y) differ in length");
    if (y.size() < 2) throw InvalidArgument("monotonicity check needs at least 2 samples");
    for (std::size_t k = 1; k < y.size(); ++k)
        if (!(y[k] > y[k - 1])) throw InvalidArgument("samples must be sorted by strictly increasing y");

    ProxCertificate cert;
    cert.criterion = Criterion::ScalarMonotone;
    cert.tolerance_used = tol;
    double worst = std::numeric_limits<double>::infinity();
    std::size_t first_bad = y.size(), first_certified = y.size();
    for (std::size_t k = 1; k < y.size(); ++k) {
        const double d = f[k] - f[k - 1];
        worst = std::min(worst, d);
        if (d < -tol && first_bad == y.size()) first_bad = k;
        if (d < -100.0 * tol && first_certified == y.size()) first_certified = k;
    }
    cert.value = std::min(worst, 0.0);
    cert.verdict = tiered(worst, tol);
    const std::size_t k = cert.verdict == Verdict::Fail ? first_certified : first_bad;
    if (cert.verdict != Verdict::Pass) {
        Witness w;
        w.points = {{"y", scalar_vector(y[k - 1])},
                    {"y'", scalar_vector(y[k])},
                    {"f(y)", scalar_vector(f[k - 1])},
                    {"f(y')", scalar_vector(f[k])}};
        cert.witness = std::move(w);
    }
    return cert;
}

ProxCertificate check_condition_b(const NoiseModel& model, std::span<const double> x_grid,
                                  std::span<const double> y_grid, double tol) {
    if (model.dim() != 1) throw InvalidArgument("condition (b) is a scalar criterion");
    if (!std::is_sorted(x_grid.begin(), x_grid.end()) || !std::is_sorted(y_grid.begin(), y_grid.end()))
        throw InvalidArgument("condition (b) grids must be sorted ascending");
    const std::size_t nx = x_grid.size(), ny = y_grid.size();
    std::vector<double> lq(nx * ny);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) lq[i * ny + j] = model.log_q(y_grid[j], x_grid[i]);
    auto L = [&](std::size_t i, std::size_t j) { return lq[i * ny + j]; };

    ProxCertificate cert;
    cert.criterion = Criterion::ConditionB;
    cert.tolerance_used = tol;
    double worst = 0.0;
    std::array<std::size_t, 4> arg{};
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t i2 = i + 1; i2 < nx; ++i2) {
            if (!(x_grid[i2] > x_grid[i])) continue;
            for (std::size_t j = 0; j < ny; ++j)
                for (std::size_t j2 = j + 1; j2 < ny; ++j2) {
                    if (!(y_grid[j2] > y_grid[j])) continue;
                    const double gap = log_det_gap(L(i2, j2), L(i, j), L(i, j2), L(i2, j));
                    if (gap < worst) {
                        worst = gap;
                        arg = {i, i2, j, j2};
                    }
                }
        }
    cert.value = worst;
    cert.verdict = worst >= -tol ? Verdict::Pass : Verdict::Fail;
    if (cert.failed()) {
        Witness w;
        w.points = {{"x", scalar_vector(x_grid[arg[0]])},
                    {"x'", scalar_vector(x_grid[arg[1]])},
                    {"y", scalar_vector(y_grid[arg[2]])},
                    {"y'", scalar_vector(y_grid[arg[3]])}};
        cert.witness = std::move(w);
    }
    return cert;
}

double nsc_value(const NoiseModel& model, const Vector& x, const Vector& x2, const Vector& y,
                 const Vector& y2) {
    const double inner = (x2 - x).dot(y2 - y);
    if (inner == 0.0) return 0.0;
    const double a = model.log_q(y2, x2) + model.log_q(y, x);
    const double b = model.log_q(y2, x) + model.log_q(y, x2);
    return inner * (std::exp(a) - std::exp(b));
}

NscResult check_nsc(const NoiseModel& model, const Vector& x, const Vector& x2, const Vector& y,
                    const Vector& y2, double tol) {
    NscResult r;
    r.value = nsc_value(model, x, x2, y, y2);
    auto& cert = r.certificate;
    cert.criterion = Criterion::NscInequality;
    cert.tolerance_used = tol;
    cert.value = r.value;
    cert.verdict = r.value >= -tol ? Verdict::Pass : Verdict::Fail;
    if (cert.failed()) cert.witness = Witness{{{"x", x}, {"x'", x2}, {"y", y}, {"y'", y2}}, {}, {}};
    return r;
}

ProxCertificate check_monotone_operator(const VectorMap& f,
                                        std::span<const std::pair<Vector, Vector>> pairs,
                                        double tol) {
    ProxCertificate cert;
    cert.criterion = Criterion::MonotoneOperator;
    cert.tolerance_used = tol;
    double worst = std::numeric_limits<double>::infinity();
    std::size_t skipped = 0, tested = 0;
    std::optional<Witness> worst_witness;
    std::string skipped_list;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& [y, y2] = pairs[k];
        Vector fy, fy2;
        try {
            fy = f(y);
            fy2 = f(y2);
        } catch (const OutsideSupportError&) {
            ++skipped;
            if (skipped <= 5) skipped_list += (skipped_list.empty() ? "" : ", ") + std::to_string(k);
            continue;
        }
        ++tested;
        const double v = (fy2 - fy).dot(y2 - y);
        if (v < worst) {
            worst = v;
            worst_witness = Witness{{{"y", y}, {"y'", y2}, {"f(y)", fy}, {"f(y')", fy2}}, {}, {}};
        }
    }
    if (skipped)
        cert.note = std::to_string(skipped) + " pair(s) outside support skipped (first: " +
                    skipped_list + ")";
    if (tested == 0) {
        cert.verdict = Verdict::Inconclusive;
        cert.note += cert.note.empty() ? "no pair tested" : "; no pair tested";
        return cert;
    }
    cert.value = std::min(worst, 0.0);
    cert.verdict = tiered(worst, tol);
    if (cert.verdict != Verdict::Pass) cert.witness = std::move(worst_witness);
    return cert;
}

FdJacobian jacobian_fd(const VectorMap& f, const Vector& y, double h) {
    if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
    const auto n = y.size();
    FdJacobian r;
    Vector probe = f(y);
    r.jacobian.resize(probe.size(), n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Vector up = y, down = y;
        up[k] += h;
        down[k] -= h;
        r.jacobian.col(k) = (f(up) - f(down)) / (2.0 * h);
    }
    if (r.jacobian.rows() == n) {
        r.symmetric = 0.5 * (r.jacobian + r.jacobian.transpose());
        r.skew = 0.5 * (r.jacobian - r.jacobian.transpose());
    }
    return r;
}

ProxCertificate check_symmetric_psd(const Matrix& J, double tol, std::optional<double> eig_tol) {
    if (J.rows() != J.cols() || J.rows() == 0) throw InvalidArgument("Jacobian must be square");
    const double etol = eig_tol.value_or(tol);
    ProxCertificate cert;
    cert.criterion = Criterion::JacobianSymPsd;
    cert.tolerance_used = tol;
    const double skew = (J - J.transpose()).norm();
    const bool symmetric = skew <= tol * (1.0 + J.norm());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (J + J.transpose()), Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    cert.value = min_eig;
    cert.verdict = symmetric && min_eig >= -etol ? Verdict::Pass : Verdict::Fail;
    std::ostringstream note;
    note << "skew=" << format_shortest(skew) << " min_eig=" << format_shortest(min_eig)
         << " eig_tol=" << format_shortest(etol);
    cert.note = note.str();
    if (cert.failed()) cert.witness = Witness{{}, J, {}};
    return cert;
}

ProxCertificate check_gradient_collinearity(const NoiseModel& model, const Vector& x,
                                            const Vector& y, const Vector& y2, double tol) {
    const Vector d = y2 - y;
    if (d.squaredNorm() == 0.0) throw InvalidArgument("gradient collinearity needs y != y'");
    const Vector g = model.grad_x_log_q(y2, x) - model.grad_x_log_q(y, x);
    const double c = g.dot(d) / d.squaredNorm();
    const double residual = (g - c * d).norm();

    ProxCertificate cert;
    cert.criterion = Criterion::GradientCollinearity;
    cert.tolerance_used = tol;
    cert.value = residual;
    cert.verdict = residual <= tol * (1.0 + g.norm()) && c >= -tol ? Verdict::Pass : Verdict::Fail;
    cert.note = "sampled-necessary";
    cert.witness = Witness{{{"x", x}, {"y", y}, {"y'", y2}, {"g", g}}, {}, c};
    return cert;
}

bool reverify(const ProxCertificate& cert, const NoiseModel* model) {
    if (!cert.failed() || !cert.witness) return false;
    const auto& w = *cert.witness;
    const double tol = cert.tolerance_used;
    switch (cert.criterion) {
    case Criterion::ScalarMonotone:
        return w.point("f(y')")[0] - w.point("f(y)")[0] < -100.0 * tol;
    case Criterion::MonotoneOperator:
        return (w.point("f(y')") - w.point("f(y)")).dot(w.point("y'") - w.point("y")) < -100.0 * tol;
    case Criterion::JacobianSymPsd:
        return check_symmetric_psd(*w.matrix, tol, tol).failed() ||
               check_symmetric_psd(*w.matrix, cert.tolerance_used).failed();
    case Criterion::ConditionB: {
        if (!model) throw InvalidArgument("condition (b) re-verification needs the model");
        const double x = w.point("x")[0], x2 = w.point("x'")[0];
        const double y = w.point("y")[0], y2 = w.point("y'")[0];
        return log_det_gap(model->log_q(y2, x2), model->log_q(y, x), model->log_q(y2, x),
                           model->log_q(y, x2)) < -tol;
    }
    case Criterion::NscInequality:
        if (!model) throw InvalidArgument("NSC re-verification needs the model");
        return nsc_value(*model, w.point("x"), w.point("x'"), w.point("y"), w.point("y'")) < -tol;
    case Criterion::GradientCollinearity:
        if (!model) throw InvalidArgument("collinearity re-verification needs the model");
        return check_gradient_collinearity(*model, w.point("x"), w.point("y"), w.point("y'"), tol)
            .failed();
    }
    return false;
}

// ---------------------------------------------------------------------------
// Counterexample search

namespace {

struct Quad {
    Vector x, x2, y, y2;
};

class Sampler {
public:
    Sampler(const SearchBox& box, int grid_points) : box_(box), points_(std::max(grid_points, 2)) {
        if (box.lower.size() != box.upper.size()) throw InvalidArgument("search box bounds differ in size");
        for (Eigen::Index k = 0; k < box.lower.size(); ++k)
            if (!(box.upper[k] >= box.lower[k])) throw InvalidArgument("search box upper < lower");
    }

    Eigen::Index dim() const { return box_.lower.size(); }

    double cell(Eigen::Index k) const {
        if (box_.integer) return 1.0;
        return (box_.upper[k] - box_.lower[k]) / (points_ - 1);
    }

    Vector lattice(std::mt19937_64& rng) const {
        Vector v(dim());
        for (Eigen::Index k = 0; k < dim(); ++k) {
            if (box_.integer) {
                const double lo = std::ceil(box_.lower[k]), hi = std::floor(box_.upper[k]);
                v[k] = lo + std::floor(uniform01(rng) * (hi - lo + 1.0));
                v[k] = std::min(v[k], hi);
            } else {
                const double i = std::floor(uniform01(rng) * points_);
                v[k] = box_.lower[k] + std::min<double>(i, points_ - 1) * cell(k);
            }
        }
        return v;
    }

    Vector around(const Vector& center, std::mt19937_64& rng) const {
        Vector v(dim());
        for (Eigen::Index k = 0; k < dim(); ++k) {
            if (box_.integer) {
                const double step = std::floor(uniform01(rng) * 3.0) - 1.0;
                v[k] = std::clamp(center[k] + step, std::ceil(box_.lower[k]), std::floor(box_.upper[k]));
            } else {
                const double u = 2.0 * uniform01(rng) - 1.0;
                v[k] = std::clamp(center[k] + u * cell(k), box_.lower[k], box_.upper[k]);
            }
        }
        return v;
    }

private:
    const SearchBox& box_;
    int points_;
};

}  // namespace

std::optional<Counterexample> search_counterexample(const NoiseModel& model,
                                                    const SearchBox& atom_box,
                                                    const SearchBox& y_box,
                                                    const SearchOptions& options) {
    const Sampler atoms(atom_box, options.grid_points);
    const Sampler obs(y_box, options.grid_points);
    if (atoms.dim() != model.dim() || obs.dim() != model.dim())
        throw InvalidArgument("search boxes must match the model dimension");
    if (options.fixed_atom) model.require_x(*options.fixed_atom);

    std::mt19937_64 rng(options.seed);
    const std::size_t refine = std::min(options.refinements, options.budget / 2);
    const std::size_t coarse = options.budget - refine;

    auto evaluate = [&](std::vector<Quad>& batch) {
        std::vector<double> values(batch.size(), 0.0);
        parallel_for(batch.size(), [&](std::size_t i) {
            const auto& q = batch[i];
            values[i] = nsc_value(model, q.x, q.x2, q.y, q.y2);
        });
        return values;
    };
    auto finish = [&](Quad& q) {
        if (options.fixed_atom) q.x = *options.fixed_atom;
        if (options.antipodal_y) q.y2 = -q.y;
    };

    std::vector<Quad> batch(coarse);
    for (auto& q : batch) {
        q.x = atoms.lattice(rng);
        q.x2 = atoms.lattice(rng);
        q.y = obs.lattice(rng);
        q.y2 = obs.lattice(rng);
        finish(q);
    }
    auto values = evaluate(batch);
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    Quad best_quad = batch.empty() ? Quad{} : batch[best];
    double best_value = batch.empty() ? 0.0 : values[best];

    if (refine > 0 && !batch.empty()) {
        std::vector<Quad> local(refine);
        for (auto& q : local) {
            q.x = atoms.around(best_quad.x, rng);
            q.x2 = atoms.around(best_quad.x2, rng);
            q.y = obs.around(best_quad.y, rng);
            q.y2 = obs.around(best_quad.y2, rng);
            finish(q);
        }
        const auto lv = evaluate(local);
        for (std::size_t i = 0; i < lv.size(); ++i)
            if (lv[i] < best_value) {
                best_value = lv[i];
                best_quad = local[i];
            }
    }

    if (!(best_value < -options.tol)) return std::nullopt;

    auto nsc = check_nsc(model, best_quad.x, best_quad.x2, best_quad.y, best_quad.y2, options.tol);
    nsc.certificate.seed = options.seed;
    nsc.certificate.note = "two-point prior 1/2 (delta_x + delta_x'), budget " +
                           std::to_string(options.budget);
    return Counterexample{Prior::discrete({{best_quad.x, 0.5}, {best_quad.x2, 0.5}}),
                          best_quad.x,
                          best_quad.x2,
                          best_quad.y,
                          best_quad.y2,
                          best_value,
                          std::move(nsc.certificate)};
}

}  // namespace proxmmse
