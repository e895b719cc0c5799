#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace gdlab::cli {

enum class ExperimentKind {
    ScalarSweep,
    ScalarBoundary,
    MatrixSingleVsDouble,
    MatrixRateCheck,
    Fit1D,
    ConvexityAudit,
    OptCondAudit,
};

std::string kind_name(ExperimentKind k);

struct ScalarSweepParams {
    std::size_t depth = 2;
    double lambda = 2.0;
    double sigma = 1.0;
    std::vector<double> steps;
    std::size_t max_iters = 100000;
    bool write_trajectories = false;
};

struct ScalarBoundaryParams {
    struct Case {
        std::size_t depth = 2;
        double lambda = 2.0;
        double sigma = 1.0;
        std::vector<double> weights;  // empty: balanced equilibrium lambda^{1/L}
    };
    std::vector<Case> cases;
    double rel_tol = 0.01;
};

struct MatrixSingleVsDoubleParams {
    std::size_t n = 20;
    std::size_t depth = 20;
    double eig_low = -1.5;
    double eig_high = 1.5;
    std::size_t num_seeds = 10;
    std::size_t iters = 10000;
};

struct MatrixRateCheckParams {
    std::size_t n = 5;
    std::size_t depth = 5;
    double eig_low = 0.5;
    double eig_high = 1.5;
    std::size_t iters = 2000;
};

struct Fit1DParams {
    std::size_t grid_size = 101;
    std::size_t depth = 10;
    std::size_t num_seeds = 10;
    double step = 2e-3;
    std::size_t epochs = 40000;
    std::vector<std::array<double, 2>> bias_ranges{{0.0, 0.5}, {0.0, 1.0}};
    std::array<double, 2> weight_range{0.0, 0.1};
    bool write_models = true;
};

struct ConvexityAuditParams {
    std::size_t num_nets = 100;
    std::size_t num_pairs = 1000;
    std::size_t max_dim = 3;
    std::size_t max_depth = 3;
    std::size_t max_units = 3;
};

struct OptCondAuditParams {
    std::size_t depth = 3;
    std::size_t grid_size = 21;
    double step = 2e-3;
    std::size_t epochs = 200000;
};

using ExperimentParams =
    std::variant<ScalarSweepParams, ScalarBoundaryParams, MatrixSingleVsDoubleParams,
                 MatrixRateCheckParams, Fit1DParams, ConvexityAuditParams, OptCondAuditParams>;

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::ScalarSweep;
    std::uint64_t seed = 0;
    std::string out_dir;
    ExperimentParams params;
};

struct ArtifactRecord {
    std::string name;    // file name relative to out_dir
    std::string digest;  // fnv1a-64 over file bytes, lowercase hex
};

struct RunManifest {
    std::string config_echo;  // the validated config, serialized
    std::uint64_t seed = 0;
    std::string started_at, finished_at;  // ISO-8601 UTC
    std::string out_dir;
    std::vector<ArtifactRecord> artifacts;
};

/// Empty list iff the JSON text is a valid experiment config. Violations are
/// "field: message" strings; unknown keys are rejected.
std::vector<std::string> validate(const std::string& config_json);

/// Parses a validated config. Throws std::invalid_argument with the first
/// violation otherwise. A nonempty out_dir_override (CLI environment
/// variable) replaces the configured output directory.
ExperimentConfig parse_config(const std::string& config_json,
                              const std::string& out_dir_override = "");

/// Executes the experiment, writes its CSV/JSON artifacts plus manifest.json
/// under config.out_dir. Deterministic given (config, seed).
RunManifest run(const ExperimentConfig& config);

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

/// Reshapes a run's artifacts into tidy long-format CSVs ("series,x,y"-style)
/// next to the originals; returns the files written.
std::vector<std::string> emit_plotdata(const RunManifest& manifest);

/// fnv1a-64 of a byte string, lowercase hex. Used for artifact digests.
std::string fnv1a64_hex(const std::string& bytes);

}  // namespace gdlab::cli
