#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "proxmmse/config.hpp"
#include "proxmmse/error.hpp"
#include "proxmmse/estimator.hpp"
#include "proxmmse/noise_models.hpp"
#include "proxmmse/penalty_recovery.hpp"
#include "proxmmse/pipeline.hpp"
#include "proxmmse/priors.hpp"
#include "proxmmse/prox_analysis.hpp"
#include "proxmmse/worked_examples.hpp"

namespace py = pybind11;
using namespace proxmmse;

namespace {

std::vector<Atom> to_atoms(const std::vector<std::pair<Vector, double>>& atoms) {
    std::vector<Atom> out;
    for (const auto& [x, w] : atoms) out.push_back({x, w});
    return out;
}

std::string report(const ProxCertificate& c) {
    std::ostringstream s;
    write_report(s, c);
    return s.str();
}

}  // namespace

PYBIND11_MODULE(_proxmmse, m) {
    m.doc() = "Conditional-mean estimators as proximity operators";
    m.attr("__version__") = kVersion;

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", error.ptr());
    py::register_exception<KinkError>(m, "KinkError", error.ptr());
    py::register_exception<OutsideSupportError>(m, "OutsideSupportError", error.ptr());
    py::register_exception<QuadratureError>(m, "QuadratureError", error.ptr());
    py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
    py::register_exception<ExtrapolationError>(m, "ExtrapolationError", error.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

    py::class_<Potential>(m, "Potential")
        .def_static("absolute", &Potential::absolute)
        .def_static("quadratic", &Potential::quadratic)
        .def_static("power", &Potential::power, py::arg("gamma"))
        .def_static("table", &Potential::table, py::arg("z"), py::arg("values"))
        .def("value", &Potential::value)
        .def("derivative", &Potential::derivative)
        .def("__repr__", &Potential::describe);

    py::class_<NoiseModel>(m, "NoiseModel")
        .def_static("gaussian_white", &NoiseModel::gaussian_white, py::arg("sigma"), py::arg("dim") = 1)
        .def_static("additive_scalar", &NoiseModel::additive_scalar, py::arg("potential"))
        .def_static("generalized_gaussian", &NoiseModel::generalized_gaussian, py::arg("gamma"),
                    py::arg("sigma") = 1.0)
        .def_static("laplacian", &NoiseModel::laplacian, py::arg("dim"))
        .def_static("poisson_scalar", &NoiseModel::poisson_scalar)
        .def_static("poisson", &NoiseModel::poisson, py::arg("dim"))
        .def_static("log_poisson", &NoiseModel::log_poisson, py::arg("dim"))
        .def_property_readonly("dim", &NoiseModel::dim)
        .def("log_q", py::overload_cast<const Vector&, const Vector&>(&NoiseModel::log_q, py::const_),
             py::arg("y"), py::arg("x"))
        .def("eval_q", py::overload_cast<const Vector&, const Vector&>(&NoiseModel::eval_q, py::const_),
             py::arg("y"), py::arg("x"))
        .def("grad_x_log_q", &NoiseModel::grad_x_log_q, py::arg("y"), py::arg("x"))
        .def("grad_y_log_q", &NoiseModel::grad_y_log_q, py::arg("y"), py::arg("x"))
        .def("__repr__", &NoiseModel::describe);

    py::class_<Prior>(m, "Prior")
        .def_static(
            "discrete", [](const std::vector<std::pair<Vector, double>>& a) { return Prior::discrete(to_atoms(a)); },
            py::arg("atoms"), "Finite prior from (point, weight) pairs")
        .def_static("analytic_laplacian", &Prior::analytic_laplacian, py::arg("rate"))
        .def_static("analytic_gaussian", &Prior::analytic_gaussian, py::arg("mean"), py::arg("variance"))
        .def_static("product", &product_prior, py::arg("factors"))
        .def_property_readonly("dim", &Prior::dim)
        .def_property_readonly("atoms",
                               [](const Prior& p) {
                                   std::vector<std::pair<Vector, double>> out;
                                   for (const auto& a : p.atoms()) out.emplace_back(a.point, a.weight);
                                   return out;
                               })
        .def("nondegenerate", [](const Prior& p) { return nondegenerate(p); })
        .def("__repr__", &Prior::describe);

    m.def("marginal", [](const Prior& p, const NoiseModel& n, const Vector& y) { return marginal(p, n, y); },
          py::arg("prior"), py::arg("model"), py::arg("y"));
    m.def("conditional_mean",
          [](const Prior& p, const NoiseModel& n, const Vector& y) { return conditional_mean(p, n, y); },
          py::arg("prior"), py::arg("model"), py::arg("y"));
    m.def("jacobian", &jacobian_closed_form, py::arg("prior"), py::arg("model"), py::arg("y"));
    m.def("two_point_mean", &two_point_mean, py::arg("x"), py::arg("x2"), py::arg("w"), py::arg("model"),
          py::arg("y"));
    m.def(
        "estimate",
        [](const Prior& p, const NoiseModel& n, const std::vector<Vector>& ys) {
            const auto r = estimate(p, n, ys);
            return py::make_tuple(r.marginal, r.mean, std::vector<bool>(r.support_mask.begin(), r.support_mask.end()));
        },
        py::arg("prior"), py::arg("model"), py::arg("ys"), "Returns (marginals, means, in_support)");

    py::class_<ProxCertificate>(m, "ProxCertificate")
        .def_property_readonly("criterion", [](const ProxCertificate& c) { return to_string(c.criterion); })
        .def_property_readonly("verdict", [](const ProxCertificate& c) { return to_string(c.verdict); })
        .def_readonly("value", &ProxCertificate::value)
        .def_readonly("tolerance", &ProxCertificate::tolerance_used)
        .def_readonly("seed", &ProxCertificate::seed)
        .def_readonly("note", &ProxCertificate::note)
        .def_property_readonly("passed", &ProxCertificate::passed)
        .def_property_readonly("failed", &ProxCertificate::failed)
        .def_property_readonly("witness",
                               [](const ProxCertificate& c) {
                                   py::dict d;
                                   if (!c.witness) return d;
                                   for (const auto& [name, v] : c.witness->points) d[py::str(name)] = v;
                                   if (c.witness->matrix) d["matrix"] = *c.witness->matrix;
                                   if (c.witness->fitted_c) d["c"] = *c.witness->fitted_c;
                                   return d;
                               })
        .def("report", &report)
        .def("__repr__", [](const ProxCertificate& c) {
            return "<ProxCertificate " + to_string(c.criterion) + " " + to_string(c.verdict) + ">";
        });

    m.def(
        "check_scalar_monotone",
        [](const std::vector<double>& y, const std::vector<double>& f, double tol) {
            return check_scalar_monotone(y, f, tol);
        },
        py::arg("y"), py::arg("f"), py::arg("tol") = kDefaultTolerance);
    m.def(
        "check_condition_b",
        [](const NoiseModel& n, const std::vector<double>& xs, const std::vector<double>& ys, double tol) {
            return check_condition_b(n, xs, ys, tol);
        },
        py::arg("model"), py::arg("x_grid"), py::arg("y_grid"), py::arg("tol") = kDefaultTolerance);
    m.def("nsc_value", &nsc_value, py::arg("model"), py::arg("x"), py::arg("x2"), py::arg("y"), py::arg("y2"));
    m.def(
        "check_nsc",
        [](const NoiseModel& n, const Vector& x, const Vector& x2, const Vector& y, const Vector& y2, double tol) {
            return check_nsc(n, x, x2, y, y2, tol).certificate;
        },
        py::arg("model"), py::arg("x"), py::arg("x2"), py::arg("y"), py::arg("y2"), py::arg("tol") = kDefaultTolerance);
    m.def(
        "check_monotone_operator",
        [](const VectorMap& f, const std::vector<std::pair<Vector, Vector>>& pairs, double tol) {
            return check_monotone_operator(f, pairs, tol);
        },
        py::arg("f"), py::arg("pairs"), py::arg("tol") = kDefaultTolerance);
    m.def(
        "check_symmetric_psd",
        [](const Matrix& J, double tol, std::optional<double> eig_tol) { return check_symmetric_psd(J, tol, eig_tol); },
        py::arg("jacobian"), py::arg("tol") = kDefaultJacobianTolerance, py::arg("eig_tol") = py::none());
    m.def("check_gradient_collinearity", &check_gradient_collinearity, py::arg("model"), py::arg("x"), py::arg("y"),
          py::arg("y2"), py::arg("tol") = kDefaultTolerance);
    m.def(
        "reverify", [](const ProxCertificate& c, const NoiseModel* n) { return reverify(c, n); }, py::arg("certificate"),
        py::arg("model") = nullptr);

    py::class_<SearchBox>(m, "SearchBox")
        .def(py::init([](const Vector& lo, const Vector& hi, bool integer) { return SearchBox{lo, hi, integer}; }),
             py::arg("lower"), py::arg("upper"), py::arg("integer") = false);
    py::class_<Counterexample>(m, "Counterexample")
        .def_readonly("prior", &Counterexample::prior)
        .def_readonly("x", &Counterexample::x)
        .def_readonly("x2", &Counterexample::x2)
        .def_readonly("y", &Counterexample::y)
        .def_readonly("y2", &Counterexample::y2)
        .def_readonly("violation", &Counterexample::violation)
        .def_readonly("certificate", &Counterexample::certificate);
    m.def(
        "search_counterexample",
        [](const NoiseModel& n, const SearchBox& atoms, const SearchBox& ys, std::size_t budget, std::uint64_t seed,
           std::size_t refinements, bool antipodal, std::optional<Vector> fixed_atom) {
            SearchOptions o;
            o.budget = budget;
            o.seed = seed;
            o.refinements = refinements;
            o.antipodal_y = antipodal;
            o.fixed_atom = std::move(fixed_atom);
            return search_counterexample(n, atoms, ys, o);
        },
        py::arg("model"), py::arg("atom_box"), py::arg("y_box"), py::arg("budget") = 100000,
        py::arg("seed") = 20180601, py::arg("refinements") = 10000, py::arg("antipodal") = false,
        py::arg("fixed_atom") = py::none(), "Returns a Counterexample or None");

    py::class_<PenaltyTable>(m, "PenaltyTable")
        .def_readonly("y_grid", &PenaltyTable::y_grid)
        .def_readonly("f_values", &PenaltyTable::f_values)
        .def_readonly("psi_values", &PenaltyTable::psi_values)
        .def_readonly("phi_values", &PenaltyTable::phi_values)
        .def_readonly("phi_pairs", &PenaltyTable::phi_pairs)
        .def_readonly("K", &PenaltyTable::K)
        .def("to_csv", [](const PenaltyTable& t) {
            std::ostringstream s;
            write_penalty_csv(s, t);
            return s.str();
        });
    m.def(
        "recover_scalar",
        [](const std::vector<double>& y, const std::vector<double>& f, double tol) { return recover_scalar(y, f, tol); },
        py::arg("y"), py::arg("f"), py::arg("tol") = kDefaultTolerance);
    m.def(
        "recover_vector",
        [](const VectorMap& f, const Vector& y0, const std::vector<Vector>& nodes, const ProxCertificate& symmetry) {
            std::vector<Vector> fs;
            for (const auto& y : nodes) fs.push_back(f(y));
            return penalty_from_potential(nodes, fs, potential_vector(f, y0, nodes, symmetry));
        },
        py::arg("f"), py::arg("y0"), py::arg("nodes"), py::arg("symmetry"));
    m.def("verify_prox", py::overload_cast<const Vector&, const Vector&, const PenaltyTable&>(&verify_prox),
          py::arg("f_value"), py::arg("y"), py::arg("table"));
    m.def("cell_size", &cell_size, py::arg("table"), py::arg("x"));

    py::class_<LaplaceLaplaceCase>(m, "LaplaceLaplaceCase")
        .def(py::init<double>(), py::arg("c"))
        .def_readonly("c", &LaplaceLaplaceCase::c)
        .def("marginal", [](const LaplaceLaplaceCase& ll, double y) { return ll_marginal(ll, y); })
        .def("numerator", [](const LaplaceLaplaceCase& ll, double y) { return ll_numerator(ll, y); })
        .def("mean", [](const LaplaceLaplaceCase& ll, double y) { return ll_mean(ll, y); });
    m.def(
        "figure_l1l1",
        [](const LaplaceLaplaceCase& ll, const std::vector<double>& y) {
            auto fig = figure_l1l1(ll, y);
            return py::make_tuple(std::move(fig.table), std::move(fig.monotone));
        },
        py::arg("case"), py::arg("y_grid"), "Returns (PenaltyTable, monotone certificate)");

    m.def(
        "run_config",
        [](const std::filesystem::path& path, std::optional<std::filesystem::path> out_dir) {
            const auto cfg = load_config(path);
            const auto art = execute(cfg);
            const auto written = write_artifacts(cfg, art, out_dir.value_or(cfg.output.dir));
            py::dict d;
            d["any_fail"] = art.any_fail();
            d["written"] = written;
            d["notes"] = art.notes;
            py::dict certs;
            for (const auto& [label, c] : art.certificates) certs[py::str(label)] = c;
            d["certificates"] = certs;
            d["prox_deviation_cells"] = art.prox_deviation_cells;
            return d;
        },
        py::arg("path"), py::arg("out_dir") = py::none(), "Runs every configured stage and writes the outputs");
}
