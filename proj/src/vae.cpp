#include "relsynth/vae.hpp"

#include <cmath>
#include <unordered_map>
#include <utility>

namespace relsynth {

namespace {

Matrix seeded_gaussian(std::size_t rows, std::size_t cols, double scale, RandomStream& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.gaussian();
    return m;
}

Tape::NodeId run_mp_layer(Tape& tape, const std::vector<Tape::NodeId>& bound, const MpLayer& layer,
                          Tape::NodeId h, const NeighborLists& adj) {
    Tape::NodeId messages = tape.matmul(tape.neighbor_sum(h, adj), bound[layer.message_op]);
    return gru_forward(tape, bound, layer.gru, messages, h);
}

constexpr double kLogvarLimit = 20.0;

}  // namespace

TrainConfig resolve_config(TrainConfig config, std::size_t table_count) {
    auto fail = [](const std::string& what) { throw ConfigMismatch(what); };
    if (config.k1 < 0 || config.k2 < 0) fail("message-passing depths must be >= 0");
    if (config.hidden < 1) fail("hidden dimension must be >= 1");
    if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate))
        fail("learning rate must be positive and finite");

    if (config.latent.empty()) config.latent.assign(table_count, 8);
    if (config.latent.size() == 1 && table_count > 1)
        config.latent.assign(table_count, config.latent[0]);
    if (config.latent.size() != table_count)
        fail("latent dims: " + std::to_string(config.latent.size()) + " entries for " +
             std::to_string(table_count) + " tables");
    for (std::size_t n : config.latent)
        if (n < 1) fail("latent dims must be >= 1");

    if (config.beta.empty()) config.beta.assign(table_count, 1.0);
    if (config.beta.size() == 1 && table_count > 1)
        config.beta.assign(table_count, config.beta[0]);
    if (config.beta.size() != table_count)
        fail("beta: " + std::to_string(config.beta.size()) + " entries for " +
             std::to_string(table_count) + " tables");
    for (double b : config.beta)
        if (!(b >= 0.0) || !std::isfinite(b)) fail("beta entries must be >= 0 and finite");
    return config;
}

GraphVaeModel build_model(std::vector<TableCodec> codecs, const TrainConfig& resolved,
                          std::uint64_t fingerprint) {
    GraphVaeModel model;
    model.config = resolved;
    model.codecs = std::move(codecs);
    model.schema_fingerprint = fingerprint;
    for (const TableCodec& c : model.codecs) model.merged_width += c.encoded_width;

    RandomStream rng(derive_seed(resolved.seed, 1));
    const std::size_t dh = resolved.hidden;
    const double msg_scale = 1.0 / std::sqrt(static_cast<double>(dh));

    model.input_proj = make_linear(model.params, "input", model.merged_width, dh, rng);
    for (int l = 0; l < resolved.k1; ++l) {
        const std::string prefix = "mp1." + std::to_string(l);
        MpLayer layer;
        layer.message_op = model.params.add(prefix + ".msg", seeded_gaussian(dh, dh, msg_scale, rng));
        layer.gru = make_gru(model.params, prefix + ".gru", dh, dh, rng);
        model.pre_layers.push_back(layer);
    }
    for (std::size_t t = 0; t < model.codecs.size(); ++t) {
        const std::string prefix = "head." + model.codecs[t].table;
        const std::size_t n = resolved.latent[t];
        TableHead head;
        head.enc_mu = make_linear(model.params, prefix + ".mu", dh, n, rng);
        head.enc_logvar = make_linear(model.params, prefix + ".logvar", dh, n, rng);
        head.dec_in = make_linear(model.params, prefix + ".dec", n, dh, rng);
        head.dec_out = make_linear(model.params, prefix + ".out", dh,
                                   model.codecs[t].encoded_width, rng);
        model.heads.push_back(head);
    }
    for (int l = 0; l < resolved.k2; ++l) {
        const std::string prefix = "mp2." + std::to_string(l);
        MpLayer layer;
        layer.message_op = model.params.add(prefix + ".msg", seeded_gaussian(dh, dh, msg_scale, rng));
        layer.gru = make_gru(model.params, prefix + ".gru", dh, dh, rng);
        model.post_layers.push_back(layer);
    }
    return model;
}

Matrix GraphVaeModel::message_pass(const Matrix& hidden, const NeighborLists& adj,
                                   std::size_t layer, bool post) const {
    const std::vector<MpLayer>& layers = post ? post_layers : pre_layers;
    if (layer >= layers.size()) throw ShapeError("message_pass: no such layer");
    Tape tape;
    std::vector<Tape::NodeId> bound = bind_params(tape, params);
    Tape::NodeId h = tape.leaf(hidden);
    return tape.value(run_mp_layer(tape, bound, layers[layer], h, adj));
}

NeighborLists to_neighbor_lists(const std::vector<std::vector<std::uint32_t>>& adjacency) {
    NeighborLists lists;
    lists.offsets.reserve(adjacency.size() + 1);
    lists.offsets.push_back(0);
    for (const auto& nbrs : adjacency) {
        lists.neighbors.insert(lists.neighbors.end(), nbrs.begin(), nbrs.end());
        lists.offsets.push_back(static_cast<std::uint32_t>(lists.neighbors.size()));
    }
    return lists;
}

namespace {

struct ForwardLoss {
    Tape::NodeId total = 0;
    EpochLoss values;
};

/// The full training-objective graph: input projection, k1 MP layers,
/// per-table Gaussian heads and sampling, decoder projection, k2 MP layers,
/// per-table output blocks scored against the encoded targets.
ForwardLoss build_objective(Tape& tape, const std::vector<Tape::NodeId>& bound,
                            const GraphVaeModel& model, const MergedTable& merged,
                            const NeighborLists& adj, const std::vector<Matrix>& targets,
                            const std::vector<Matrix>& column_weights,
                            const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& cat_spans,
                            const std::vector<Matrix>& eps) {
    Tape::NodeId x = tape.leaf(merged.features);
    Tape::NodeId h = tape.tanh(linear_forward(tape, bound, model.input_proj, x));
    for (const MpLayer& layer : model.pre_layers) h = run_mp_layer(tape, bound, layer, h, adj);

    std::vector<Tape::NodeId> decoded;
    std::vector<Tape::NodeId> kl_parts;
    decoded.reserve(model.heads.size());
    for (std::size_t t = 0; t < model.heads.size(); ++t) {
        const MergedTable::TableSlot& slot = merged.slots[t];
        Tape::NodeId ht = tape.row_slice(h, slot.row_offset, slot.row_offset + slot.rows);
        Tape::NodeId mu = linear_forward(tape, bound, model.heads[t].enc_mu, ht);
        Tape::NodeId logvar = tape.clamp(
            linear_forward(tape, bound, model.heads[t].enc_logvar, ht), -kLogvarLimit, kLogvarLimit);
        kl_parts.push_back(tape.affine(tape.kl_standard_normal(mu, logvar),
                                       model.config.beta[t], 0.0));
        Tape::NodeId z = tape.reparam_sample(mu, logvar, eps[t]);
        decoded.push_back(tape.tanh(linear_forward(tape, bound, model.heads[t].dec_in, z)));
    }

    Tape::NodeId d = tape.vconcat(decoded);
    for (const MpLayer& layer : model.post_layers) d = run_mp_layer(tape, bound, layer, d, adj);

    Tape::NodeId recon = 0;
    bool have_recon = false;
    for (std::size_t t = 0; t < model.heads.size(); ++t) {
        const MergedTable::TableSlot& slot = merged.slots[t];
        Tape::NodeId dt = tape.row_slice(d, slot.row_offset, slot.row_offset + slot.rows);
        Tape::NodeId out = linear_forward(tape, bound, model.heads[t].dec_out, dt);
        Tape::NodeId part = tape.weighted_squared_error(out, targets[t], column_weights[t]);
        for (const auto& [offset, width] : cat_spans[t]) {
            Matrix span_target(slot.rows, width);
            for (std::size_t r = 0; r < slot.rows; ++r)
                for (std::size_t j = 0; j < width; ++j)
                    span_target(r, j) = targets[t](r, offset + j);
            part = tape.add(part, tape.softmax_cross_entropy(
                                      tape.col_slice(out, offset, offset + width),
                                      std::move(span_target)));
        }
        recon = have_recon ? tape.add(recon, part) : part;
        have_recon = true;
    }

    Tape::NodeId kl = kl_parts[0];
    for (std::size_t i = 1; i < kl_parts.size(); ++i) kl = tape.add(kl, kl_parts[i]);

    ForwardLoss result;
    result.total = tape.add(recon, kl);
    result.values.total = tape.value(result.total)(0, 0);
    result.values.reconstruction = tape.value(recon)(0, 0);
    result.values.kl = tape.value(kl)(0, 0);
    return result;
}

}  // namespace

GraphVaeTrainer::GraphVaeTrainer(const RelationalDataset& dataset, const TrainConfig& config)
    : noise_(derive_seed(config.seed, 2)), optimizer_(config.learning_rate) {
    RelationalGraph graph = build_graph(dataset);
    TrainConfig resolved = resolve_config(config, dataset.tables.size());

    std::vector<TableCodec> codecs;
    std::vector<EncodedTable> encoded;
    codecs.reserve(dataset.tables.size());
    encoded.reserve(dataset.tables.size());
    for (const TableData& table : dataset.tables) {
        codecs.push_back(fit_codecs(table));
        encoded.push_back(encode_table(table, codecs.back(), EncodeMode::Strict));
    }
    merged_ = merge_tables(encoded, graph);
    adj_ = to_neighbor_lists(merged_.adjacency);
    model_ = build_model(codecs, resolved, schema_fingerprint(dataset));

    for (std::size_t t = 0; t < codecs.size(); ++t) {
        const TableCodec& codec = codecs[t];
        Matrix weights(1, codec.encoded_width);
        weights.fill(1.0);
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        for (const AttributeCodec& ac : codec.attributes) {
            if (ac.kind != AttributeKind::Categorical || ac.span.width == 0) continue;
            for (std::size_t j = 0; j < ac.span.width; ++j) weights(0, ac.span.offset + j) = 0.0;
            spans.emplace_back(ac.span.offset, ac.span.width);
        }
        column_weights_.push_back(std::move(weights));
        cat_spans_.push_back(std::move(spans));
        targets_.push_back(std::move(encoded[t].features));
    }
}

std::vector<Matrix> GraphVaeTrainer::make_eps(std::uint64_t seed) const {
    RandomStream rng(seed);
    std::vector<Matrix> eps;
    eps.reserve(model_.heads.size());
    for (std::size_t t = 0; t < model_.heads.size(); ++t)
        eps.push_back(seeded_gaussian(merged_.slots[t].rows, model_.config.latent[t], 1.0, rng));
    return eps;
}

EpochLoss GraphVaeTrainer::step() {
    std::vector<Matrix> eps;
    eps.reserve(model_.heads.size());
    for (std::size_t t = 0; t < model_.heads.size(); ++t)
        eps.push_back(seeded_gaussian(merged_.slots[t].rows, model_.config.latent[t], 1.0, noise_));

    Tape tape;
    std::vector<Tape::NodeId> bound = bind_params(tape, model_.params);
    ForwardLoss loss = build_objective(tape, bound, model_, merged_, adj_, targets_,
                                       column_weights_, cat_spans_, eps);
    if (!std::isfinite(loss.values.total))
        throw NonFiniteLoss("loss diverged to " + std::to_string(loss.values.total));
    tape.backward(loss.total);
    optimizer_.step(model_.params, tape, bound);
    return loss.values;
}

EpochLoss GraphVaeTrainer::evaluate(const std::vector<Matrix>& eps, std::vector<Matrix>* grads) {
    Tape tape;
    std::vector<Tape::NodeId> bound = bind_params(tape, model_.params);
    ForwardLoss loss = build_objective(tape, bound, model_, merged_, adj_, targets_,
                                       column_weights_, cat_spans_, eps);
    if (grads) {
        tape.backward(loss.total);
        grads->clear();
        grads->reserve(bound.size());
        for (Tape::NodeId id : bound) grads->push_back(tape.grad(id));
    }
    return loss.values;
}

TrainResult train_model(const RelationalDataset& dataset, const TrainConfig& config) {
    GraphVaeTrainer trainer(dataset, config);
    TrainResult result;
    const std::size_t epochs = trainer.model().config.epochs;
    result.trace.reserve(epochs);
    for (std::size_t e = 0; e < epochs; ++e) result.trace.push_back(trainer.step());
    result.model = std::move(trainer.model());
    return result;
}

RelationalDataset synthesize(const GraphVaeModel& model, const RelationalDataset& dataset,
                             std::uint64_t seed) {
    const std::uint64_t fp = schema_fingerprint(dataset);
    if (fp != model.schema_fingerprint) throw SchemaFingerprintMismatch(model.schema_fingerprint, fp);
    RelationalGraph graph = build_graph(dataset);
    NeighborLists adj = to_neighbor_lists(graph.adjacency);

    RandomStream rng(derive_seed(seed, 3));
    Tape tape;
    std::vector<Tape::NodeId> bound = bind_params(tape, model.params);
    std::vector<Tape::NodeId> decoded;
    decoded.reserve(model.heads.size());
    for (std::size_t t = 0; t < model.heads.size(); ++t) {
        const std::size_t rows = graph.table_offsets[t + 1] - graph.table_offsets[t];
        Tape::NodeId z = tape.leaf(seeded_gaussian(rows, model.config.latent[t], 1.0, rng));
        decoded.push_back(tape.tanh(linear_forward(tape, bound, model.heads[t].dec_in, z)));
    }
    Tape::NodeId d = tape.vconcat(decoded);
    for (const MpLayer& layer : model.post_layers) d = run_mp_layer(tape, bound, layer, d, adj);

    // Fresh sequential identifier tokens; each link's secondary rows copy the
    // token minted for their real parent row, so the topology carries over.
    std::vector<std::unordered_map<std::string, std::vector<Value>>> tokens(model.codecs.size());
    for (std::size_t t = 0; t < model.codecs.size(); ++t) {
        const std::size_t rows = graph.table_offsets[t + 1] - graph.table_offsets[t];
        for (const AttributeCodec& ac : model.codecs[t].attributes) {
            if (ac.kind != AttributeKind::Identifier) continue;
            std::vector<Value>& col = tokens[t][ac.name];
            col.reserve(rows);
            for (std::size_t r = 0; r < rows; ++r) col.push_back(Identifier{std::to_string(r + 1)});
        }
    }
    for (const LinkTriple& link : dataset.links) {
        const int p = dataset.table_index(link.primary);
        const int s = dataset.table_index(link.secondary);
        const TableData& primary = dataset.tables[p];
        const TableData& secondary = dataset.tables[s];
        const int pa = primary.attribute_index(link.identifier);
        const int sa = secondary.attribute_index(link.identifier);
        std::unordered_map<std::string, std::string> fresh;
        fresh.reserve(primary.rows.size());
        for (std::size_t r = 0; r < primary.rows.size(); ++r)
            fresh[value_to_text(primary.rows[r].values[pa])] = std::to_string(r + 1);
        std::vector<Value>& col = tokens[s][link.identifier];
        for (std::size_t r = 0; r < secondary.rows.size(); ++r)
            col[r] = Identifier{fresh.at(value_to_text(secondary.rows[r].values[sa]))};
    }

    RelationalDataset out;
    out.name = dataset.name;
    out.primary_table = dataset.primary_table;
    out.identifier_attribute = dataset.identifier_attribute;
    out.links = dataset.links;
    out.tables.reserve(model.codecs.size());
    for (std::size_t t = 0; t < model.codecs.size(); ++t) {
        const TableCodec& codec = model.codecs[t];
        const std::size_t row0 = graph.table_offsets[t];
        const std::size_t rows = graph.table_offsets[t + 1] - row0;
        Tape::NodeId block = tape.row_slice(d, row0, row0 + rows);
        Matrix features = tape.value(linear_forward(
            tape, bound, model.heads[t].dec_out, block));
        for (const AttributeCodec& ac : codec.attributes) {
            switch (ac.kind) {
                case AttributeKind::Numeric:
                case AttributeKind::DateTime:
                    for (std::size_t r = 0; r < rows; ++r) {
                        double& v = features(r, ac.span.offset);
                        v = std::min(1.0, std::max(0.0, v));
                    }
                    break;
                case AttributeKind::Categorical:
                    for (std::size_t r = 0; r < rows && ac.span.width > 0; ++r) {
                        double mx = features(r, ac.span.offset);
                        for (std::size_t j = 1; j < ac.span.width; ++j)
                            mx = std::max(mx, features(r, ac.span.offset + j));
                        double z = 0.0;
                        for (std::size_t j = 0; j < ac.span.width; ++j)
                            z += std::exp(features(r, ac.span.offset + j) - mx);
                        for (std::size_t j = 0; j < ac.span.width; ++j) {
                            double& v = features(r, ac.span.offset + j);
                            v = std::exp(v - mx) / z;
                        }
                    }
                    break;
                case AttributeKind::Identifier:
                    break;
            }
            if (ac.span.flag_column >= 0)
                for (std::size_t r = 0; r < rows; ++r) {
                    double& v = features(r, static_cast<std::size_t>(ac.span.flag_column));
                    v = std::min(1.0, std::max(0.0, v));
                }
        }
        EncodedTable block_encoded;
        block_encoded.table = codec.table;
        for (const AttributeCodec& ac : codec.attributes)
            block_encoded.attribute_names.push_back(ac.name);
        block_encoded.features = std::move(features);
        for (const AttributeCodec& ac : codec.attributes)
            if (ac.kind == AttributeKind::Identifier)
                block_encoded.identifier_columns.emplace_back(ac.name,
                                                              std::move(tokens[t][ac.name]));
        out.tables.push_back(decode_table(block_encoded, codec));
    }
    return out;
}

}  // namespace relsynth
