#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "relsynth/evaluate.hpp"
#include "relsynth/io.hpp"
#include "relsynth/vae.hpp"

// High-level run entry points shared by the command-line tool and the python
// module. Each function loads what it needs from disk, runs one stage, writes
// the stage's artifacts, and returns a summary. Errors surface as the module
// exceptions; mapping them to exit codes is the caller's concern.

namespace relsynth {

/// Training settings from a JSON config file (all keys optional; see README).
TrainConfig load_train_config(const std::filesystem::path& config_file, TrainConfig base = {});

struct ValidateOutcome {
    ValidationReport report;
    std::size_t tables = 0;
    std::size_t rows = 0;
};

/// Loads the schema and data without throwing on validation violations.
ValidateOutcome run_validate(const std::filesystem::path& schema_path);

struct TrainOutcome {
    std::vector<EpochLoss> trace;
    std::uint64_t schema_fingerprint = 0;
    std::size_t parameter_count = 0;
};

/// Trains on the schema's dataset and writes the checkpoint; when trace_path
/// is nonempty, writes the per-epoch loss trace CSV (epoch,total,
/// reconstruction,kl).
TrainOutcome run_train(const std::filesystem::path& schema_path, const TrainConfig& config,
                       const std::filesystem::path& checkpoint_path,
                       const std::filesystem::path& trace_path);

/// Loads the checkpoint, synthesizes against the schema's dataset, writes one
/// CSV per table into out_dir, and returns the synthetic dataset.
RelationalDataset run_generate(const std::filesystem::path& checkpoint_path,
                               const std::filesystem::path& schema_path, std::uint64_t seed,
                               const std::filesystem::path& out_dir);

/// Loads the real dataset from the schema and the synthetic tables from
/// out_dir (same schema, `<table>.csv` files), evaluates, and writes the JSON
/// report when report_path is nonempty.
EvalReport run_evaluate(const std::filesystem::path& schema_path,
                        const std::filesystem::path& synthetic_dir, const std::string& target,
                        std::uint64_t seed, const std::filesystem::path& report_path);

struct PipelineOutcome {
    TrainOutcome train;
    EvalReport report;
};

/// train -> generate -> evaluate, with every artifact under out_dir.
PipelineOutcome run_pipeline(const std::filesystem::path& schema_path, const TrainConfig& config,
                             const std::string& target, const std::filesystem::path& out_dir);

}  // namespace relsynth
