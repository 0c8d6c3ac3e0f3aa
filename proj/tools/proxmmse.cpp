// proxmmse: estimate conditional means, test whether they are proximity
// operators, recover penalties and search for counterexample priors.

#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "proxmmse/config.hpp"
#include "proxmmse/error.hpp"
#include "proxmmse/numeric.hpp"
#include "proxmmse/pipeline.hpp"
#include "proxmmse/worked_examples.hpp"

namespace fs = std::filesystem;
using namespace proxmmse;

namespace {

constexpr int kExitPass = 0, kExitFail = 1, kExitError = 2;

struct ConfigArgs {
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

void add_config_args(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("config", args.config, "Experiment config (INI)")->required();
    cmd->add_option("--out-dir", args.out_dir, "Output directory (overrides [output] dir)");
    cmd->add_option("--seed", args.seed, "Random seed (overrides [run] seed)");
}

int run_config(const ConfigArgs& args, const Stages& stages) {
    auto cfg = load_config(args.config);
    if (args.seed) {
        cfg.seed = *args.seed;
        cfg.search.options.seed = *args.seed;
    }
    if (stages.recover && !stages.analyze) cfg.recovery.enabled = true;
    if (stages.analyze && !stages.recover && cfg.analysis.criteria.empty()) {
        if (cfg.model.dim() == 1)
            cfg.analysis.criteria = {Criterion::ScalarMonotone, Criterion::ConditionB};
        else
            cfg.analysis.criteria = {Criterion::MonotoneOperator, Criterion::JacobianSymPsd,
                                     Criterion::NscInequality};
    }
    if (stages.search && !stages.estimate && !cfg.search.enabled)
        throw ConfigError(args.config + ": counterexample needs a [search] section");
    const fs::path dir = args.out_dir.empty() ? cfg.output.dir : fs::path(args.out_dir);
    const auto artifacts = execute(cfg, stages);
    const auto written = write_artifacts(cfg, artifacts, dir);

    for (const auto& note : artifacts.notes) std::cout << "note: " << note << '\n';
    for (const auto& [label, cert] : artifacts.certificates)
        std::cout << label << ": " << to_string(cert.verdict) << " (value "
                  << format_shortest(cert.value) << ")\n";
    if (artifacts.prox_deviation_cells)
        std::cout << "prox identity: max deviation " << format_shortest(*artifacts.prox_deviation_cells)
                  << " cell(s)\n";
    if (artifacts.counterexample) {
        std::ostringstream report;
        write_report(report, artifacts.counterexample->certificate);
        std::cout << "counterexample found, prior " << artifacts.counterexample->prior.describe()
                  << '\n'
                  << report.str();
    }
    for (const auto& p : written) std::cout << "wrote " << p.string() << '\n';
    return artifacts.any_fail() ? kExitFail : kExitPass;
}

struct FigureArgs {
    double c = 0.9;
    double ymin = -10.0;
    double ymax = 10.0;
    int nodes = 2001;
    std::string out_csv = "figure_l1l1.csv";
    std::string out_svg = "figure_l1l1.svg";
};

int run_figure(const FigureArgs& a) {
    if (a.nodes < 3) throw InvalidArgument("--nodes must be at least 3");
    if (!(a.ymax > a.ymin)) throw InvalidArgument("--ymax must exceed --ymin");
    const LaplaceLaplaceCase ll(a.c);
    std::vector<double> y(static_cast<std::size_t>(a.nodes));
    for (int i = 0; i < a.nodes; ++i) y[i] = a.ymin + (a.ymax - a.ymin) * i / (a.nodes - 1);
    const auto fig = figure_l1l1(ll, y);

    const std::string params = "figure-l1l1 c=" + format_shortest(a.c) + " ymin=" +
                               format_shortest(a.ymin) + " ymax=" + format_shortest(a.ymax) +
                               " nodes=" + std::to_string(a.nodes);
    std::ostringstream header;
    header << "proxmmse " << kVersion << "\nconfig_sha256: " << sha256_hex(params)
           << "\nparameters: " << params << "\nseed: none\n";
    auto commented = [&](const std::string& prefix) {
        std::istringstream in(header.str());
        std::string line, out;
        while (std::getline(in, line)) out += prefix + line + '\n';
        return out;
    };

    std::ostringstream csv;
    csv << commented("# ");
    write_penalty_csv(csv, fig.table);
    write_atomic(a.out_csv, csv.str());

    std::ostringstream svg;
    svg << "<!--\n" << commented("  ") << "-->\n";
    write_penalty_svg(svg, fig.table, "Laplacian prior c=" + format_shortest(a.c));
    write_atomic(a.out_svg, svg.str());

    double worst_second = 0.0;
    for (std::size_t k = 1; k + 1 < fig.table.psi_values.size(); ++k)
        worst_second = std::min(worst_second, fig.table.psi_values[k + 1] - 2 * fig.table.psi_values[k] +
                                                  fig.table.psi_values[k - 1]);
    double worst_dev = 0.0;
    for (int k = 1; k <= 21; ++k) {
        const double yp = a.ymin + (a.ymax - a.ymin) * k / 22.0;
        const double fp = ll_mean(ll, yp);
        worst_dev = std::max(worst_dev, verify_prox(fp, yp, fig.table) /
                                            cell_size(fig.table, scalar_vector(fp)));
    }
    std::cout << "scalar_monotone: " << to_string(fig.monotone.verdict) << '\n'
              << "psi min second difference: " << format_shortest(worst_second) << '\n'
              << "prox identity: max deviation " << format_shortest(worst_dev) << " cell(s) at 21 probes\n"
              << "wrote " << a.out_csv << "\nwrote " << a.out_svg << '\n';
    return fig.monotone.failed() ? kExitFail : kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Proximity-operator analysis of conditional-mean (MMSE) estimators"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("proxmmse ") + kVersion);

    ConfigArgs run_args, est_args, check_args, rec_args, ce_args;
    auto* run = app.add_subcommand("run", "Estimate, analyze, recover and search as the config asks");
    add_config_args(run, run_args);
    auto* est = app.add_subcommand("estimate", "Evaluate q_P and f_P on the query grid");
    add_config_args(est, est_args);
    auto* check = app.add_subcommand("check-prox", "Run the configured proximity criteria");
    add_config_args(check, check_args);
    auto* rec = app.add_subcommand("recover-penalty", "Recover the potential psi and penalty phi");
    add_config_args(rec, rec_args);
    auto* ce = app.add_subcommand("counterexample", "Search two-point priors violating the NSC inequality");
    add_config_args(ce, ce_args);

    FigureArgs fig_args;
    auto* fig = app.add_subcommand("figure-l1l1", "Laplacian prior with Laplacian noise: f, psi and phi");
    fig->add_option("--c", fig_args.c, "Prior rate c (c != 1)")->capture_default_str();
    fig->add_option("--ymin", fig_args.ymin, "Lower end of the y grid")->capture_default_str();
    fig->add_option("--ymax", fig_args.ymax, "Upper end of the y grid")->capture_default_str();
    fig->add_option("--nodes", fig_args.nodes, "Number of grid nodes")->capture_default_str();
    fig->add_option("--out-csv", fig_args.out_csv, "Penalty table CSV")->capture_default_str();
    fig->add_option("--out-svg", fig_args.out_svg, "Three-panel SVG plot")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitError;
    }

    try {
        if (*run) return run_config(run_args, {});
        if (*est) return run_config(est_args, {true, false, false, false});
        if (*check) return run_config(check_args, {true, true, false, false});
        if (*rec) return run_config(rec_args, {true, false, true, false});
        if (*ce) return run_config(ce_args, {false, false, false, true});
        if (*fig) return run_figure(fig_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
