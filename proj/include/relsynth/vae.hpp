#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "relsynth/graph.hpp"
#include "relsynth/nn.hpp"
#include "relsynth/preprocess.hpp"
#include "relsynth/relational.hpp"
#include "relsynth/tensor.hpp"

// The generative model: merged row features are projected to a hidden state,
// refined by k1 message-passing layers, encoded per vertex into a per-table
// Gaussian latent, sampled, decoded back to hidden states, refined by k2
// further message-passing layers over the same adjacency, and projected to
// per-table feature blocks. Training minimizes reconstruction plus
// beta-weighted KL per vertex. Synthesis feeds standard-normal latents
// through the decoder half over the real adjacency.

namespace relsynth {

class ConfigMismatch : public std::runtime_error {
public:
    explicit ConfigMismatch(const std::string& what) : std::runtime_error(what) {}
};

class NonFiniteLoss : public std::runtime_error {
public:
    explicit NonFiniteLoss(const std::string& what) : std::runtime_error(what) {}
};

class SchemaFingerprintMismatch : public std::runtime_error {
public:
    SchemaFingerprintMismatch(std::uint64_t expected, std::uint64_t got)
        : std::runtime_error("schema fingerprint mismatch: model " + std::to_string(expected) +
                             ", dataset " + std::to_string(got)) {}
};

struct TrainConfig {
    int k1 = 4;
    int k2 = 4;
    std::size_t hidden = 32;
    std::vector<std::size_t> latent;  // per table; empty -> 8 each, single value -> broadcast
    std::vector<double> beta;         // per table; empty -> 1 each, single value -> broadcast
    std::size_t epochs = 200;
    std::size_t batch_size = 0;  // accepted for config compatibility; every step is full-graph
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

/// Message operator plus GRU update; the edge feature is the constant scalar
/// 1, so the operator collapses to one learned hidden-to-hidden matrix.
struct MpLayer {
    std::size_t message_op = 0;  // d_h x d_h
    GruCell gru;
};

struct TableHead {
    LinearLayer enc_mu;      // d_h -> n_i
    LinearLayer enc_logvar;  // d_h -> n_i
    LinearLayer dec_in;      // n_i -> d_h
    LinearLayer dec_out;     // d_h -> encoded width of the table
};

struct GraphVaeModel {
    TrainConfig config;  // resolved (latent/beta expanded per table)
    std::vector<TableCodec> codecs;
    std::uint64_t schema_fingerprint = 0;
    std::size_t merged_width = 0;
    ParamSet params;
    LinearLayer input_proj;
    std::vector<MpLayer> pre_layers;
    std::vector<MpLayer> post_layers;
    std::vector<TableHead> heads;

    /// One forward message-passing layer outside any training tape; used by
    /// tests and synthesis.
    Matrix message_pass(const Matrix& hidden, const NeighborLists& adj, std::size_t layer,
                        bool post) const;
};

/// Expands per-table vectors and checks every bound; throws ConfigMismatch.
TrainConfig resolve_config(TrainConfig config, std::size_t table_count);

/// Registers all parameters (seeded init) for the given codecs.
GraphVaeModel build_model(std::vector<TableCodec> codecs, const TrainConfig& resolved,
                          std::uint64_t fingerprint);

NeighborLists to_neighbor_lists(const std::vector<std::vector<std::uint32_t>>& adjacency);

struct EpochLoss {
    double total = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
};

/// Owns the model plus everything precomputed from the dataset: encoded
/// targets, merged input, adjacency, and per-table loss layout.
class GraphVaeTrainer {
public:
    GraphVaeTrainer(const RelationalDataset& dataset, const TrainConfig& config);

    /// One full-graph gradient step; returns the epoch's losses.
    EpochLoss step();

    /// Per-table noise draws with the latent shapes, from an explicit seed.
    std::vector<Matrix> make_eps(std::uint64_t seed) const;

    /// Deterministic forward pass under fixed noise; when grads is non-null
    /// it is filled with dLoss/dParam per parameter (no optimizer update).
    EpochLoss evaluate(const std::vector<Matrix>& eps, std::vector<Matrix>* grads = nullptr);

    GraphVaeModel& model() { return model_; }
    const GraphVaeModel& model() const { return model_; }
    const MergedTable& merged() const { return merged_; }
    const NeighborLists& adjacency() const { return adj_; }

private:
    GraphVaeModel model_;
    MergedTable merged_;
    NeighborLists adj_;
    std::vector<Matrix> targets_;       // per table, rows x width
    std::vector<Matrix> column_weights_;  // per table, 1 x width; 1 on squared-error columns
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> cat_spans_;  // offset, width
    RandomStream noise_;
    AdamOptimizer optimizer_;
};

struct TrainResult {
    GraphVaeModel model;
    std::vector<EpochLoss> trace;
};

/// Full training loop; throws NonFiniteLoss if any epoch diverges.
TrainResult train_model(const RelationalDataset& dataset, const TrainConfig& config);

/// Draws one standard-normal latent per vertex, decodes over the real
/// adjacency, and rebuilds typed tables with fresh sequential identifiers
/// wired to preserve the real link topology.
RelationalDataset synthesize(const GraphVaeModel& model, const RelationalDataset& dataset,
                             std::uint64_t seed);

}  // namespace relsynth
