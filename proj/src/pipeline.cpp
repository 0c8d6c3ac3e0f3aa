#include "proxmmse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "proxmmse/error.hpp"
#include "proxmmse/numeric.hpp"

namespace proxmmse {

namespace fs = std::filesystem;

bool RunArtifacts::any_fail() const {
    return std::any_of(certificates.begin(), certificates.end(),
                       [](const auto& c) { return c.second.failed(); });
}

namespace {

class IndexRng {
public:
    explicit IndexRng(std::uint64_t seed) : rng_(seed) {}
    std::size_t operator()(std::size_t n) {
        const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        return std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
    }

private:
    std::mt19937_64 rng_;
};

/// At most `cap` evenly spaced elements, keeping both ends.
template <typename T>
std::vector<T> thin(const std::vector<T>& v, std::size_t cap) {
    if (v.size() <= cap || cap < 2) return v;
    std::vector<T> out;
    for (std::size_t i = 0; i < cap; ++i) out.push_back(v[i * (v.size() - 1) / (cap - 1)]);
    return out;
}

struct Context {
    const ExperimentConfig& cfg;
    const Prior& prior;
    const NoiseModel& model;
    EstimatorOptions options;
    /// In-support query points and their f values.
    std::vector<Vector> ys, fs;
    RunArtifacts& out;

    VectorMap f() const {
        return [this](const Vector& y) { return conditional_mean(prior, model, y, options); };
    }
    void add(const std::string& label, ProxCertificate cert) {
        cert.seed = cfg.seed;
        out.certificates.emplace_back(label, std::move(cert));
    }
};

ProxCertificate inconclusive(Criterion c, double tol, std::string why) {
    ProxCertificate cert;
    cert.criterion = c;
    cert.verdict = Verdict::Inconclusive;
    cert.tolerance_used = tol;
    cert.note = std::move(why);
    return cert;
}

void scalar_monotone(Context& ctx) {
    const double tol = ctx.cfg.analysis.tol;
    if (ctx.model.dim() != 1) {
        ctx.add("scalar_monotone", inconclusive(Criterion::ScalarMonotone, tol, "model is not scalar"));
        return;
    }
    if (ctx.ys.size() < 2) {
        ctx.add("scalar_monotone",
                inconclusive(Criterion::ScalarMonotone, tol, "fewer than 2 query points in support"));
        return;
    }
    std::vector<double> y, f;
    for (std::size_t i = 0; i < ctx.ys.size(); ++i) {
        y.push_back(ctx.ys[i][0]);
        f.push_back(ctx.fs[i][0]);
    }
    ctx.add("scalar_monotone", check_scalar_monotone(y, f, tol));
}

void condition_b(Context& ctx) {
    const double tol = ctx.cfg.analysis.tol;
    if (ctx.model.dim() != 1) {
        ctx.add("condition_b", inconclusive(Criterion::ConditionB, tol, "model is not scalar"));
        return;
    }
    std::vector<double> xs, ys;
    for (const auto& y : ctx.cfg.grid.materialize()) {
        if (ctx.model.y_domain().contains(y)) ys.push_back(y[0]);
        if (ctx.model.x_domain().contains(y)) xs.push_back(y[0]);
    }
    if (ctx.cfg.analysis.x_grid) xs = *ctx.cfg.analysis.x_grid;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    xs = thin(xs, 61);
    ys = thin(ys, 61);
    if (xs.size() < 2 || ys.size() < 2) {
        ctx.add("condition_b", inconclusive(Criterion::ConditionB, tol, "grids need at least 2 points"));
        return;
    }
    auto cert = check_condition_b(ctx.model, xs, ys, tol);
    cert.note = std::to_string(xs.size()) + "x" + std::to_string(ys.size()) + " grid";
    ctx.add("condition_b", std::move(cert));
}

void monotone_operator(Context& ctx, IndexRng& rng) {
    const double tol = ctx.cfg.analysis.tol;
    if (ctx.ys.size() < 2) {
        ctx.add("monotone_operator",
                inconclusive(Criterion::MonotoneOperator, tol, "fewer than 2 query points in support"));
        return;
    }
    // f values at query points are already known; reuse them by index.
    std::vector<std::pair<Vector, Vector>> pairs;
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    for (std::size_t k = 0; k < ctx.cfg.analysis.pairs; ++k) {
        std::size_t i = rng(ctx.ys.size()), j = rng(ctx.ys.size());
        if (i == j) j = (j + 1) % ctx.ys.size();
        pairs.emplace_back(ctx.ys[i], ctx.ys[j]);
        idx.emplace_back(i, j);
    }
    const auto& ys = ctx.ys;
    const auto& fs = ctx.fs;
    const VectorMap lookup = [&](const Vector& y) -> Vector {
        for (std::size_t i = 0; i < ys.size(); ++i)
            if (ys[i] == y) return fs[i];
        return ctx.f()(y);
    };
    ctx.add("monotone_operator", check_monotone_operator(lookup, pairs, tol));
}

std::vector<std::size_t> jacobian_indices(const Context& ctx) {
    std::vector<std::size_t> idx(ctx.ys.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return thin(idx, ctx.cfg.analysis.jacobian_points);
}

/// Worst-case symmetry/PSD certificate over the Jacobian probe points.
ProxCertificate symmetric_psd(Context& ctx) {
    const double jtol = ctx.cfg.analysis.jacobian_tol, tol = ctx.cfg.analysis.tol;
    ProxCertificate worst = inconclusive(Criterion::JacobianSymPsd, jtol, "no query point in support");
    bool any = false;
    std::size_t kinks = 0;
    for (std::size_t i : jacobian_indices(ctx)) {
        Matrix J;
        try {
            if (ctx.prior.is_finite()) {
                J = jacobian_closed_form(ctx.prior, ctx.model, ctx.ys[i]);
            } else {
                J = jacobian_fd(ctx.f(), ctx.ys[i], 1e-3).jacobian;
            }
        } catch (const KinkError&) {
            ++kinks;
            continue;
        } catch (const OutsideSupportError&) {
            continue;
        }
        auto cert = check_symmetric_psd(J, jtol, tol);
        if (cert.failed()) {
            cert.witness->points.emplace_back("y", ctx.ys[i]);
            return cert;
        }
        if (!any || cert.value < worst.value) worst = cert;
        any = true;
    }
    if (kinks) worst.note += (worst.note.empty() ? "" : "; ") + std::to_string(kinks) + " point(s) at kinks skipped";
    return worst;
}

void gradient_collinearity(Context& ctx, IndexRng& rng) {
    const double tol = ctx.cfg.analysis.tol;
    std::vector<Vector> xs;
    if (ctx.prior.is_finite())
        for (const auto& a : ctx.prior.atoms()) xs.push_back(a.point);
    else
        for (const auto& y : ctx.ys)
            if (ctx.model.x_domain().contains(y)) xs.push_back(y);
    const auto grid = ctx.cfg.grid.materialize();
    if (xs.empty() || grid.size() < 2) {
        ctx.add("gradient_collinearity",
                inconclusive(Criterion::GradientCollinearity, tol, "no sample points"));
        return;
    }
    const std::size_t samples = std::min<std::size_t>(ctx.cfg.analysis.pairs, 200);
    ProxCertificate worst;
    bool any = false;
    std::size_t kinks = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        const Vector& x = xs[rng(xs.size())];
        std::size_t i = rng(grid.size()), j = rng(grid.size());
        if (i == j) j = (j + 1) % grid.size();
        try {
            auto cert = check_gradient_collinearity(ctx.model, x, grid[i], grid[j], tol);
            if (cert.failed()) {
                ctx.add("gradient_collinearity", std::move(cert));
                return;
            }
            if (!any || cert.value > worst.value) worst = std::move(cert);
            any = true;
        } catch (const KinkError&) {
            ++kinks;
        }
    }
    if (!any) worst = inconclusive(Criterion::GradientCollinearity, tol, "every sample hit a kink");
    else if (kinks) worst.note += "; " + std::to_string(kinks) + " sample(s) at kinks skipped";
    ctx.add("gradient_collinearity", std::move(worst));
}

void nsc(Context& ctx, IndexRng& rng) {
    const double tol = ctx.cfg.analysis.tol;
    std::vector<Vector> xs;
    if (ctx.prior.is_finite())
        for (const auto& a : ctx.prior.atoms()) xs.push_back(a.point);
    else
        for (const auto& y : ctx.cfg.grid.materialize())
            if (ctx.model.x_domain().contains(y)) xs.push_back(y);
    const auto grid = ctx.cfg.grid.materialize();
    if (xs.size() < 2 || grid.size() < 2) {
        ctx.add("nsc_inequality", inconclusive(Criterion::NscInequality, tol, "needs 2 atoms and 2 query points"));
        return;
    }
    std::optional<NscResult> worst;
    for (std::size_t k = 0; k < ctx.cfg.analysis.pairs; ++k) {
        const Vector& x = xs[rng(xs.size())];
        const Vector& x2 = xs[rng(xs.size())];
        const Vector& y = grid[rng(grid.size())];
        const Vector& y2 = grid[rng(grid.size())];
        auto r = check_nsc(ctx.model, x, x2, y, y2, tol);
        if (!worst || r.value < worst->value) worst = std::move(r);
    }
    worst->certificate.note = "worst of " + std::to_string(ctx.cfg.analysis.pairs) + " sampled quadruples";
    ctx.add("nsc_inequality", std::move(worst->certificate));
}

void recover(Context& ctx) {
    auto& out = ctx.out;
    const int n = ctx.model.dim();
    if (ctx.ys.size() < 2) {
        out.notes.push_back("recovery skipped: fewer than 2 query points in support");
        return;
    }
    std::vector<Vector> probes;
    if (n == 1) {
        std::vector<double> y, f;
        for (std::size_t i = 0; i < ctx.ys.size(); ++i) {
            y.push_back(ctx.ys[i][0]);
            f.push_back(ctx.fs[i][0]);
        }
        const auto cert = check_scalar_monotone(y, f, ctx.cfg.analysis.tol);
        if (!cert.passed()) {
            out.notes.push_back("recovery skipped: sampled f is not certified nondecreasing");
            return;
        }
        out.penalty = recover_scalar(y, f, ctx.cfg.analysis.tol);
        if (ctx.model.kind() == NoiseKind::PoissonScalar)
            out.penalty->note = "counts extended to the continuous range y >= 0";
        for (std::size_t k = 1; k <= 21; ++k) {
            const double t = static_cast<double>(k) / 22.0;
            probes.push_back(scalar_vector(y.front() + t * (y.back() - y.front())));
        }
    } else {
        const auto sym = symmetric_psd(ctx);
        if (!sym.passed()) {
            out.notes.push_back("recovery skipped: no passing Jacobian symmetry certificate");
            return;
        }
        const Vector base = ctx.cfg.recovery.base.value_or(ctx.ys.front());
        auto psi = potential_vector(ctx.f(), base, ctx.ys, sym);
        out.penalty = penalty_from_potential(ctx.ys, ctx.fs, std::move(psi));
        for (std::size_t i = 1; i < ctx.ys.size() && probes.size() < 21; ++i)
            probes.push_back(0.5 * (ctx.ys[i - 1] + ctx.ys[i]));
    }

    double worst = 0.0;
    std::size_t tested = 0;
    for (const auto& y : probes) {
        Vector fy;
        try {
            fy = conditional_mean(ctx.prior, ctx.model, y, ctx.options);
        } catch (const OutsideSupportError&) {
            continue;
        }
        try {
            const double cell = cell_size(*out.penalty, fy);
            const double dev = verify_prox(fy, y, *out.penalty);
            worst = std::max(worst, cell > 0.0 ? dev / cell : (dev == 0.0 ? 0.0 : INFINITY));
            ++tested;
        } catch (const ExtrapolationError&) {
        }
    }
    if (tested) out.prox_deviation_cells = worst;
    out.notes.push_back("prox identity checked at " + std::to_string(tested) + " probe(s)");
}

}  // namespace

RunArtifacts execute(const ExperimentConfig& cfg, const Stages& stages) {
    RunArtifacts out;
    const bool analyze = stages.analyze && !cfg.analysis.criteria.empty();
    const bool recovery = stages.recover && cfg.recovery.enabled;
    // A search-only config has nothing to estimate.
    const bool search_only = stages.search && cfg.search.enabled && !cfg.prior;
    const bool estimate = analyze || recovery || (stages.estimate && !search_only);

    if (estimate) {
        if (!cfg.prior) throw ConfigError(cfg.source.string() + ": missing section [prior]");
        const auto points = cfg.grid.materialize();
        if (points.empty()) throw ConfigError(cfg.source.string() + ": missing or empty [grid]");
        Context ctx{cfg, *cfg.prior, cfg.model, {}, {}, {}, out};
        out.estimates = proxmmse::estimate(*cfg.prior, cfg.model, points, ctx.options);
        const auto& est = *out.estimates;
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (est.support_mask[i]) order.push_back(i);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::lexicographical_compare(points[a].data(), points[a].data() + points[a].size(),
                                                points[b].data(), points[b].data() + points[b].size());
        });
        for (std::size_t i : order) {
            ctx.ys.push_back(points[i]);
            ctx.fs.push_back(est.mean[i]);
        }
        if (order.size() < points.size())
            out.notes.push_back(std::to_string(points.size() - order.size()) +
                                " query point(s) outside the support");

        if (analyze) {
            IndexRng rng(cfg.seed);
            for (Criterion c : cfg.analysis.criteria) {
                switch (c) {
                case Criterion::ScalarMonotone: scalar_monotone(ctx); break;
                case Criterion::ConditionB: condition_b(ctx); break;
                case Criterion::MonotoneOperator: monotone_operator(ctx, rng); break;
                case Criterion::JacobianSymPsd: ctx.add("jacobian_sym_psd", symmetric_psd(ctx)); break;
                case Criterion::GradientCollinearity: gradient_collinearity(ctx, rng); break;
                case Criterion::NscInequality: nsc(ctx, rng); break;
                }
            }
        }
        if (recovery) recover(ctx);
    }

    if (stages.search && cfg.search.enabled) {
        out.counterexample = search_counterexample(cfg.model, cfg.search.atoms, cfg.search.ys,
                                                   cfg.search.options);
        if (out.counterexample) {
            out.certificates.emplace_back("counterexample", out.counterexample->certificate);
        } else {
            out.notes.push_back("counterexample search: no NSC violation below -" +
                                format_shortest(cfg.search.options.tol) + " in " +
                                std::to_string(cfg.search.options.budget) + " evaluations");
        }
    }
    return out;
}

std::string output_header(const ExperimentConfig& cfg, const std::string& comment) {
    std::ostringstream h;
    h << comment << "proxmmse " << kVersion << '\n'
      << comment << "config_sha256: " << cfg.digest << '\n'
      << comment << "seed: " << cfg.seed << '\n';
    return h.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write file: " + tmp.string());
        out << content;
        if (!out.flush()) throw Error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::vector<fs::path> write_artifacts(const ExperimentConfig& cfg, const RunArtifacts& a,
                                      const fs::path& dir) {
    fs::create_directories(dir);
    std::vector<fs::path> written;
    const std::string header = output_header(cfg);
    auto emit = [&](const std::string& suffix, const std::string& body) {
        const fs::path p = dir / (cfg.output.prefix + suffix);
        write_atomic(p, body);
        written.push_back(p);
    };

    if (a.estimates) {
        std::ostringstream s;
        s << header;
        write_csv(s, *a.estimates);
        emit("_estimate.csv", s.str());
    }
    if (!a.certificates.empty()) {
        std::ostringstream s;
        s << header;
        write_certificate_csv_header(s);
        for (const auto& [label, cert] : a.certificates) write_certificate_csv_row(s, label, cert);
        emit("_certificates.csv", s.str());
    }
    if (a.penalty) {
        std::ostringstream s;
        s << header;
        if (!a.penalty->note.empty()) s << "# note: " << a.penalty->note << '\n';
        write_penalty_csv(s, *a.penalty);
        emit("_penalty.csv", s.str());
        if (a.penalty->dim() == 1) {
            std::ostringstream svg;
            svg << "<!--\n" << output_header(cfg, "  ") << "-->\n";
            write_penalty_svg(svg, *a.penalty, cfg.name);
            emit("_penalty.svg", svg.str());
        }
    }

    std::ostringstream r;
    r << header << '\n'
      << "model: " << cfg.model.describe() << '\n';
    if (cfg.prior) r << "prior: " << cfg.prior->describe() << '\n';
    if (a.estimates) r << "backend: " << to_string(a.estimates->backend) << '\n';
    for (const auto& note : a.notes) r << "note: " << note << '\n';
    if (a.prox_deviation_cells)
        r << "prox_deviation_cells: " << format_shortest(*a.prox_deviation_cells) << '\n';
    for (const auto& [label, cert] : a.certificates) {
        r << "\n[" << label << "]\n";
        write_report(r, cert);
    }
    if (a.counterexample) {
        const auto& ce = *a.counterexample;
        r << "\ncounterexample prior: " << ce.prior.describe() << '\n'
          << "violation: " << format_shortest(ce.violation) << '\n';
    }
    emit("_report.txt", r.str());
    return written;
}

}  // namespace proxmmse
