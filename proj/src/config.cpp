#include "proxmmse/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "proxmmse/error.hpp"

namespace proxmmse {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::vector<Vector> QueryGridSpec::materialize() const {
    if (!grid) return points;
    std::vector<Vector> out(grid->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = grid->node(i);
    return out;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

std::optional<double> to_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (errno == ERANGE || end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Numeric rows of a CSV file; '#' lines and one non-numeric header row skipped.
std::vector<std::vector<double>> read_numeric_csv(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        bool numeric = true;
        for (const auto& cell : split(line, ',')) {
            auto v = to_double(cell);
            if (!v) {
                numeric = false;
                break;
            }
            row.push_back(*v);
        }
        if (!numeric) {
            if (rows.empty() && !header_seen) {
                header_seen = true;
                continue;
            }
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": non-numeric row");
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(rows.front().size()) + " columns");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError(path.string() + ": no data rows");
    return rows;
}

class Reader {
public:
    Reader(const std::string& text, fs::path base, std::string source)
        : base_(std::move(base)), source_(std::move(source)) {
        std::istringstream in(text);
        try {
            pt::read_ini(in, tree_);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError(source_ + ":" + std::to_string(e.line()) + ": " + e.message());
        }
        // Line numbers per key, for value errors.
        std::istringstream scan(text);
        std::string line, section;
        for (int n = 1; std::getline(scan, line); ++n) {
            line = trim(line);
            if (line.empty() || line[0] == ';' || line[0] == '#') continue;
            if (line.front() == '[') {
                section = trim(line.substr(1, line.find(']') - 1));
                continue;
            }
            const auto eq = line.find('=');
            if (eq != std::string::npos) lines_[section + "." + trim(line.substr(0, eq))] = n;
        }
        static const std::map<std::string, std::set<std::string>> known = {
            {"run", {"seed", "name"}},
            {"model", {"kind", "dim", "sigma", "gamma", "potential"}},
            {"prior", {"kind", "atoms", "file", "lower", "upper", "counts", "weights_file", "rate",
                       "mean", "variance"}},
            {"grid", {"lower", "upper", "counts", "file"}},
            {"analysis", {"criteria", "tol", "jacobian_tol", "pairs", "jacobian_points", "x_lower",
                          "x_upper", "x_count"}},
            {"recovery", {"enabled", "base"}},
            {"search", {"enabled", "atom_lower", "atom_upper", "atom_integer", "y_lower", "y_upper",
                        "y_integer", "budget", "grid_points", "refinements", "antipodal",
                        "fixed_atom", "tol"}},
            {"output", {"dir", "prefix"}},
        };
        for (const auto& [section, keys] : tree_) {
            if (!keys.data().empty() && keys.empty())
                throw ConfigError(where("", section) + "key outside any section: " + section);
            auto it = known.find(section);
            if (it == known.end()) throw ConfigError(source_ + ": unknown section [" + section + "]");
            for (const auto& [key, value] : keys)
                if (!it->second.count(key))
                    throw ConfigError(where(section, key) + "unknown key [" + section + "] " + key);
        }
    }

    bool has(const std::string& section, const std::string& key) const {
        return tree_.get_child_optional(pt::ptree::path_type(section + "." + key, '.')).has_value();
    }
    bool has_section(const std::string& section) const {
        return tree_.get_child_optional(section).has_value();
    }

    std::string str(const std::string& section, const std::string& key) const {
        auto v = tree_.get_optional<std::string>(pt::ptree::path_type(section + "." + key, '.'));
        if (!v) throw ConfigError(source_ + ": missing [" + section + "] " + key);
        return trim(*v);
    }
    std::string str(const std::string& section, const std::string& key, const std::string& def) const {
        return has(section, key) ? str(section, key) : def;
    }

    double num(const std::string& section, const std::string& key) const {
        const auto s = str(section, key);
        auto v = to_double(s);
        if (!v) fail(section, key, "expected a number, got '" + s + "'");
        return *v;
    }
    double num(const std::string& section, const std::string& key, double def) const {
        return has(section, key) ? num(section, key) : def;
    }
    double positive(const std::string& section, const std::string& key, double def) const {
        const double v = num(section, key, def);
        if (!(v > 0.0)) fail(section, key, "must be positive");
        return v;
    }

    std::uint64_t count(const std::string& section, const std::string& key, std::uint64_t def) const {
        if (!has(section, key)) return def;
        const auto s = str(section, key);
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (s.empty() || s[0] == '-' || errno == ERANGE || end != s.c_str() + s.size())
            fail(section, key, "expected a non-negative integer, got '" + s + "'");
        return v;
    }

    bool flag(const std::string& section, const std::string& key, bool def) const {
        if (!has(section, key)) return def;
        auto s = str(section, key);
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
        if (s == "false" || s == "no" || s == "off" || s == "0") return false;
        fail(section, key, "expected true or false, got '" + s + "'");
    }

    std::vector<double> list(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : split(str(section, key), ',')) {
            auto v = to_double(item);
            if (!v) fail(section, key, "expected comma-separated numbers, got '" + item + "'");
            out.push_back(*v);
        }
        return out;
    }

    Vector vec(const std::string& section, const std::string& key, int dim) const {
        auto v = list(section, key);
        if (v.size() == 1 && dim > 1) v.assign(dim, v[0]);
        if (static_cast<int>(v.size()) != dim)
            fail(section, key, "expected " + std::to_string(dim) + " values");
        return Eigen::Map<Vector>(v.data(), dim);
    }

    fs::path file(const std::string& section, const std::string& key) const {
        return resolve(str(section, key), section, key);
    }

    fs::path resolve(const std::string& name, const std::string& section, const std::string& key) const {
        fs::path p = trim(name);
        if (p.is_relative()) p = base_ / p;
        if (!fs::exists(p)) throw Error("file not found: " + p.string() + " ([" + section + "] " + key + ")");
        return p;
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key,
                           const std::string& msg) const {
        throw ConfigError(where(section, key) + "[" + section + "] " + key + ": " + msg);
    }

private:
    std::string where(const std::string& section, const std::string& key) const {
        auto it = lines_.find(section + "." + key);
        return source_ + (it != lines_.end() ? ":" + std::to_string(it->second) : "") + ": ";
    }

    pt::ptree tree_;
    fs::path base_;
    std::string source_;
    std::map<std::string, int> lines_;
};

Potential parse_potential(const Reader& r) {
    const auto s = r.str("model", "potential");
    if (s == "abs") return Potential::absolute();
    if (s == "quad") return Potential::quadratic();
    if (s.rfind("pow:", 0) == 0) {
        auto g = to_double(s.substr(4));
        if (!g || !(*g > 0.0)) r.fail("model", "potential", "pow:<gamma> needs a positive exponent");
        return Potential::power(*g);
    }
    if (s.rfind("table:", 0) == 0) {
        std::vector<double> z, v;
        for (const auto& row : read_numeric_csv(r.resolve(s.substr(6), "model", "potential"))) {
            if (row.size() < 2) r.fail("model", "potential", "table needs columns z,F");
            z.push_back(row[0]);
            v.push_back(row[1]);
        }
        return Potential::table(std::move(z), std::move(v));
    }
    r.fail("model", "potential", "expected abs, quad, pow:<gamma> or table:<file>, got '" + s + "'");
}

NoiseModel parse_model(const Reader& r) {
    const auto kind = r.str("model", "kind");
    const auto dim = static_cast<int>(r.count("model", "dim", 1));
    if (dim < 1 || dim > 16) r.fail("model", "dim", "must be between 1 and 16");
    if (kind == "gaussian") return NoiseModel::gaussian_white(r.positive("model", "sigma", 1.0), dim);
    if (kind == "generalized_gaussian")
        return NoiseModel::generalized_gaussian(r.positive("model", "gamma", 2.0),
                                                r.positive("model", "sigma", 1.0));
    if (kind == "laplacian") return NoiseModel::laplacian(dim);
    if (kind == "poisson") return dim == 1 ? NoiseModel::poisson_scalar() : NoiseModel::poisson(dim);
    if (kind == "log_poisson") return NoiseModel::log_poisson(dim);
    if (kind == "additive") return NoiseModel::additive_scalar(parse_potential(r));
    r.fail("model", "kind",
           "expected gaussian, generalized_gaussian, laplacian, poisson, log_poisson or additive, got '" +
               kind + "'");
}

std::vector<Atom> parse_inline_atoms(const Reader& r, int dim) {
    std::vector<Atom> atoms;
    for (const auto& item : split(r.str("prior", "atoms"), ';')) {
        if (item.empty()) continue;
        const auto colon = item.find(':');
        const auto coords = split(item.substr(0, colon), ',');
        Atom a;
        a.point.resize(static_cast<Eigen::Index>(coords.size()));
        for (std::size_t k = 0; k < coords.size(); ++k) {
            auto v = to_double(coords[k]);
            if (!v) r.fail("prior", "atoms", "bad coordinate '" + coords[k] + "'");
            a.point[static_cast<Eigen::Index>(k)] = *v;
        }
        if (a.point.size() != dim)
            r.fail("prior", "atoms", "atom '" + item + "' has " + std::to_string(a.point.size()) +
                                         " coordinates, model has " + std::to_string(dim));
        a.weight = 1.0;
        if (colon != std::string::npos) {
            auto w = to_double(trim(item.substr(colon + 1)));
            if (!w || *w < 0.0) r.fail("prior", "atoms", "bad weight in '" + item + "'");
            a.weight = *w;
        }
        atoms.push_back(std::move(a));
    }
    if (atoms.empty()) r.fail("prior", "atoms", "no atoms given");
    return atoms;
}

TensorGrid parse_grid(const Reader& r, const std::string& section, int dim) {
    TensorGrid g;
    g.lower = r.vec(section, "lower", dim);
    g.upper = r.vec(section, "upper", dim);
    const auto counts = r.list(section, "counts");
    for (double c : counts) {
        if (c < 1 || c != std::floor(c)) r.fail(section, "counts", "counts must be positive integers");
        g.counts.push_back(static_cast<int>(c));
    }
    if (g.counts.size() == 1 && dim > 1) g.counts.assign(dim, g.counts[0]);
    if (static_cast<int>(g.counts.size()) != dim)
        r.fail(section, "counts", "expected " + std::to_string(dim) + " values");
    for (int k = 0; k < dim; ++k)
        if (!(g.upper[k] >= g.lower[k])) r.fail(section, "upper", "upper bound below lower bound");
    return g;
}

Prior parse_prior(const Reader& r, int dim) {
    const auto kind = r.str("prior", "kind");
    if (kind == "discrete") {
        if (r.has("prior", "atoms") == r.has("prior", "file"))
            r.fail("prior", "kind", "discrete prior needs exactly one of atoms or file");
        if (r.has("prior", "atoms")) return Prior::discrete(parse_inline_atoms(r, dim));
        const auto rows = read_numeric_csv(r.file("prior", "file"));
        const auto cols = rows.front().size();
        if (cols != static_cast<std::size_t>(dim) && cols != static_cast<std::size_t>(dim) + 1)
            r.fail("prior", "file", "expected " + std::to_string(dim) + " coordinate columns and an optional weight");
        std::vector<Atom> atoms;
        for (const auto& row : rows)
            atoms.push_back({Eigen::Map<const Vector>(row.data(), dim), cols > static_cast<std::size_t>(dim) ? row[dim] : 1.0});
        return Prior::discrete(std::move(atoms));
    }
    if (kind == "grid") {
        auto grid = parse_grid(r, "prior", dim);
        if (!r.has("prior", "weights_file")) return Prior::grid_density(std::move(grid));
        std::vector<double> w;
        for (const auto& row : read_numeric_csv(r.file("prior", "weights_file"))) w.push_back(row.back());
        if (w.size() != grid.size())
            r.fail("prior", "weights_file", "has " + std::to_string(w.size()) + " weights for " +
                                                std::to_string(grid.size()) + " grid nodes");
        return Prior::grid_density(std::move(grid), std::move(w));
    }
    if (kind == "laplacian") return Prior::analytic_laplacian(r.positive("prior", "rate", 1.0));
    if (kind == "gaussian")
        return Prior::analytic_gaussian(r.num("prior", "mean", 0.0), r.positive("prior", "variance", 1.0));
    r.fail("prior", "kind", "expected discrete, grid, laplacian or gaussian, got '" + kind + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir,
                              const std::string& source_name) {
    const Reader r(text, base_dir, source_name);
    ExperimentConfig cfg;
    cfg.source = source_name;
    cfg.digest = sha256_hex(text);
    cfg.seed = r.count("run", "seed", cfg.seed);
    cfg.name = r.str("run", "name", "");

    if (!r.has_section("model")) throw ConfigError(source_name + ": missing section [model]");
    cfg.model = parse_model(r);
    const int dim = cfg.model.dim();

    if (r.has_section("prior")) {
        cfg.prior = parse_prior(r, dim);
        if (cfg.prior->dim() != dim)
            r.fail("prior", "kind", "prior dimension " + std::to_string(cfg.prior->dim()) +
                                        " differs from model dimension " + std::to_string(dim));
    }

    if (r.has_section("grid")) {
        if (r.has("grid", "file")) {
            for (const auto& row : read_numeric_csv(r.file("grid", "file"))) {
                if (row.size() != static_cast<std::size_t>(dim))
                    r.fail("grid", "file", "expected " + std::to_string(dim) + " columns");
                cfg.grid.points.push_back(Eigen::Map<const Vector>(row.data(), dim));
            }
        } else {
            cfg.grid.grid = parse_grid(r, "grid", dim);
        }
    }

    auto& a = cfg.analysis;
    if (r.has("analysis", "criteria"))
        for (const auto& name : split(r.str("analysis", "criteria"), ',')) {
            try {
                a.criteria.push_back(criterion_from_string(name));
            } catch (const InvalidArgument& e) {
                r.fail("analysis", "criteria", e.what());
            }
        }
    a.tol = r.positive("analysis", "tol", a.tol);
    a.jacobian_tol = r.positive("analysis", "jacobian_tol", a.jacobian_tol);
    a.pairs = r.count("analysis", "pairs", a.pairs);
    a.jacobian_points = r.count("analysis", "jacobian_points", a.jacobian_points);
    if (r.has("analysis", "x_lower") || r.has("analysis", "x_upper") || r.has("analysis", "x_count")) {
        const double lo = r.num("analysis", "x_lower"), hi = r.num("analysis", "x_upper");
        const auto n = r.count("analysis", "x_count", 0);
        if (n < 2 || !(hi > lo)) r.fail("analysis", "x_count", "x grid needs x_count >= 2 and x_upper > x_lower");
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        a.x_grid = std::move(xs);
    }

    cfg.recovery.enabled = r.flag("recovery", "enabled", r.has_section("recovery"));
    if (r.has("recovery", "base")) cfg.recovery.base = r.vec("recovery", "base", dim);

    auto& s = cfg.search;
    s.enabled = r.flag("search", "enabled", r.has_section("search"));
    if (s.enabled) {
        s.atoms = {r.vec("search", "atom_lower", dim), r.vec("search", "atom_upper", dim),
                   r.flag("search", "atom_integer", false)};
        s.ys = {r.vec("search", "y_lower", dim), r.vec("search", "y_upper", dim),
                r.flag("search", "y_integer", false)};
        s.options.seed = cfg.seed;
        s.options.budget = r.count("search", "budget", s.options.budget);
        s.options.grid_points = static_cast<int>(r.count("search", "grid_points", 11));
        s.options.refinements = r.count("search", "refinements", s.options.refinements);
        s.options.antipodal_y = r.flag("search", "antipodal", false);
        s.options.tol = r.positive("search", "tol", a.tol);
        if (r.has("search", "fixed_atom")) s.options.fixed_atom = r.vec("search", "fixed_atom", dim);
    }

    cfg.output.dir = r.str("output", "dir", ".");
    cfg.output.prefix = r.str("output", "prefix", cfg.name.empty() ? "proxmmse" : cfg.name);
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw Error("file not found: " + path.string());
    return parse_config(read_file(path), path.parent_path(), path.string());
}

}  // namespace proxmmse
