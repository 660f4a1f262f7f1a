#include "relsynth/api.hpp"

#include <charconv>
#include <fstream>

#include <json.hpp>

#include "relsynth/checkpoint.hpp"

namespace relsynth {

namespace {

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

template <typename T>
std::vector<T> scalar_or_array(const nlohmann::json& j) {
    std::vector<T> out;
    if (j.is_array())
        for (const auto& v : j) out.push_back(v.get<T>());
    else
        out.push_back(j.get<T>());
    return out;
}

}  // namespace

TrainConfig load_train_config(const std::filesystem::path& config_file, TrainConfig base) {
    std::ifstream in(config_file);
    if (!in) throw FileNotFound(config_file.string());
    nlohmann::json j;
    try {
        in >> j;
        if (j.contains("k1")) base.k1 = j.at("k1").get<int>();
        if (j.contains("k2")) base.k2 = j.at("k2").get<int>();
        if (j.contains("hidden")) base.hidden = j.at("hidden").get<std::size_t>();
        if (j.contains("latent")) base.latent = scalar_or_array<std::size_t>(j.at("latent"));
        if (j.contains("beta")) base.beta = scalar_or_array<double>(j.at("beta"));
        if (j.contains("epochs")) base.epochs = j.at("epochs").get<std::size_t>();
        if (j.contains("batch_size")) base.batch_size = j.at("batch_size").get<std::size_t>();
        if (j.contains("learning_rate")) base.learning_rate = j.at("learning_rate").get<double>();
        if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(config_file.string(), 0, 0, e.what());
    }
    return base;
}

ValidateOutcome run_validate(const std::filesystem::path& schema_path) {
    SchemaConfig schema = load_schema(schema_path);
    ValidateOutcome outcome;
    try {
        RelationalDataset dataset = load_dataset(schema);
        outcome.tables = dataset.tables.size();
        for (const TableData& t : dataset.tables) outcome.rows += t.rows.size();
    } catch (const ValidationFailed& failure) {
        outcome.report = failure.report;
    }
    return outcome;
}

TrainOutcome run_train(const std::filesystem::path& schema_path, const TrainConfig& config,
                       const std::filesystem::path& checkpoint_path,
                       const std::filesystem::path& trace_path) {
    SchemaConfig schema = load_schema(schema_path);
    RelationalDataset dataset = load_dataset(schema);
    TrainResult trained = train_model(dataset, config);

    if (checkpoint_path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(checkpoint_path.parent_path(), ec);
    }
    save_checkpoint(trained.model, checkpoint_path);

    if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        if (!out) throw IoError("cannot open " + trace_path.string() + " for writing");
        out << "epoch,total,reconstruction,kl\n";
        for (std::size_t e = 0; e < trained.trace.size(); ++e)
            out << e << ',' << shortest(trained.trace[e].total) << ','
                << shortest(trained.trace[e].reconstruction) << ','
                << shortest(trained.trace[e].kl) << '\n';
        if (!out) throw IoError("write failed for " + trace_path.string());
    }

    TrainOutcome outcome;
    outcome.trace = std::move(trained.trace);
    outcome.schema_fingerprint = trained.model.schema_fingerprint;
    outcome.parameter_count = trained.model.params.scalar_count();
    return outcome;
}

RelationalDataset run_generate(const std::filesystem::path& checkpoint_path,
                               const std::filesystem::path& schema_path, std::uint64_t seed,
                               const std::filesystem::path& out_dir) {
    GraphVaeModel model = load_checkpoint(checkpoint_path);
    SchemaConfig schema = load_schema(schema_path);
    RelationalDataset dataset = load_dataset(schema);
    RelationalDataset synthetic = synthesize(model, dataset, seed);
    write_synthetic_dataset(synthetic, out_dir);
    return synthetic;
}

EvalReport run_evaluate(const std::filesystem::path& schema_path,
                        const std::filesystem::path& synthetic_dir, const std::string& target,
                        std::uint64_t seed, const std::filesystem::path& report_path) {
    if (target.empty()) throw ConfigMismatch("evaluation requires a target attribute");
    SchemaConfig schema = load_schema(schema_path);
    RelationalDataset real = load_dataset(schema);

    SchemaConfig synth_schema = schema;
    synth_schema.base_dir = synthetic_dir;
    for (TableConfig& table : synth_schema.tables) table.csv = table.name + ".csv";
    RelationalDataset synthetic = load_dataset(synth_schema);

    EvalReport report = evaluate_synthetic(real, synthetic, target, seed);
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw IoError("cannot open " + report_path.string() + " for writing");
        out << report.to_json();
        if (!out) throw IoError("write failed for " + report_path.string());
    }
    return report;
}

PipelineOutcome run_pipeline(const std::filesystem::path& schema_path, const TrainConfig& config,
                             const std::string& target, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir.string() + ": " + ec.message());

    PipelineOutcome outcome;
    outcome.train = run_train(schema_path, config, out_dir / "model.ckpt",
                              out_dir / "loss_trace.csv");
    run_generate(out_dir / "model.ckpt", schema_path, config.seed, out_dir / "synthetic");
    outcome.report = run_evaluate(schema_path, out_dir / "synthetic", target, config.seed,
                                  out_dir / "report.json");
    return outcome;
}

}  // namespace relsynth
