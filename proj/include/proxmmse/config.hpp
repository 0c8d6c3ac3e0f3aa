#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "proxmmse/noise_models.hpp"
#include "proxmmse/priors.hpp"
#include "proxmmse/prox_analysis.hpp"
#include "proxmmse/types.hpp"

namespace proxmmse {

inline constexpr const char* kVersion = "0.1.0";

/// Query points: a tensor grid or an explicit list read from CSV.
struct QueryGridSpec {
    std::optional<TensorGrid> grid;
    std::vector<Vector> points;

    std::vector<Vector> materialize() const;
};

struct AnalysisSpec {
    std::vector<Criterion> criteria;
    double tol = kDefaultTolerance;
    double jacobian_tol = kDefaultJacobianTolerance;
    /// Random pairs of query points for pairwise criteria.
    std::size_t pairs = 1000;
    /// Query points where Jacobians are checked (evenly spaced).
    std::size_t jacobian_points = 20;
    /// x grid of condition (b); defaults to the query grid inside X.
    std::optional<std::vector<double>> x_grid;
};

struct RecoverySpec {
    bool enabled = false;
    std::optional<Vector> base;
};

struct SearchSpec {
    bool enabled = false;
    SearchBox atoms;
    SearchBox ys;
    SearchOptions options;
};

struct OutputSpec {
    std::filesystem::path dir = ".";
    std::string prefix = "proxmmse";
};

struct ExperimentConfig {
    std::filesystem::path source;
    /// SHA-256 of the config file bytes, lowercase hex.
    std::string digest;
    std::uint64_t seed = 20180601;
    std::string name;

    NoiseModel model = NoiseModel::gaussian_white(1.0);
    std::optional<Prior> prior;
    QueryGridSpec grid;
    AnalysisSpec analysis;
    RecoverySpec recovery;
    SearchSpec search;
    OutputSpec output;
};

/// Reads an INI-style config. Relative file references are resolved against
/// the config file's directory. Throws ConfigError naming the line or the
/// [section] key at fault, and Error naming the path of a missing file.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& source_name = "<config>");

std::string sha256_hex(const std::string& bytes);

}  // namespace proxmmse
