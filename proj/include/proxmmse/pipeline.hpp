#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "proxmmse/config.hpp"
#include "proxmmse/estimator.hpp"
#include "proxmmse/penalty_recovery.hpp"
#include "proxmmse/prox_analysis.hpp"

namespace proxmmse {

struct Stages {
    bool estimate = true;
    bool analyze = true;
    bool recover = true;
    bool search = true;
};

struct RunArtifacts {
    std::optional<EstimatorResult> estimates;
    std::vector<std::pair<std::string, ProxCertificate>> certificates;
    std::optional<PenaltyTable> penalty;
    /// Largest verify_prox deviation over the probes, in units of the local cell.
    std::optional<double> prox_deviation_cells;
    std::optional<Counterexample> counterexample;
    std::vector<std::string> notes;

    bool any_fail() const;
};

/// Runs the stages enabled both in `stages` and in the config. Stages that
/// need a prior or query grid the config lacks raise ConfigError.
RunArtifacts execute(const ExperimentConfig& config, const Stages& stages = {});

/// Comment lines with the tool version, config digest and seed.
std::string output_header(const ExperimentConfig& config, const std::string& comment = "# ");

/// Writes the artifacts under `dir` (created when missing), each through a
/// temporary file and a rename. Returns the paths written.
std::vector<std::filesystem::path> write_artifacts(const ExperimentConfig& config,
                                                   const RunArtifacts& artifacts,
                                                   const std::filesystem::path& dir);

/// Replaces `path` with `content` via a sibling temporary file.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace proxmmse
