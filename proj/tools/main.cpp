#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "relsynth/api.hpp"
#include "relsynth/checkpoint.hpp"

namespace {

bool log_debug() {
    const char* level = std::getenv("RELSYNTH_LOG");
    return level && std::string(level) == "debug";
}

bool log_quiet() {
    const char* level = std::getenv("RELSYNTH_LOG");
    return level && std::string(level) == "quiet";
}

struct TrainFlags {
    std::string schema;
    std::string config_file;
    std::string checkpoint = "model.ckpt";
    std::string trace;
    std::uint64_t seed = 0;
    long long epochs = -1;
    int k1 = -1, k2 = -1;
    std::vector<std::size_t> latent;
    std::vector<double> beta;

    void add_common(CLI::App* cmd, bool with_schema = true) {
        if (with_schema) cmd->add_option("--schema", schema, "schema config file")->required();
        cmd->add_option("--config", config_file, "training config JSON");
        cmd->add_option("--seed", seed, "master random seed")->required();
        cmd->add_option("--epochs", epochs, "training epochs");
        cmd->add_option("--k1", k1, "pre-encoder message-passing layers");
        cmd->add_option("--k2", k2, "post-decoder message-passing layers");
        cmd->add_option("--latent", latent, "per-table latent dims (or one value for all)")
            ->delimiter(',');
        cmd->add_option("--beta", beta, "per-table KL weights (or one value for all)")
            ->delimiter(',');
    }

    relsynth::TrainConfig resolve() const {
        relsynth::TrainConfig config;
        if (!config_file.empty()) config = relsynth::load_train_config(config_file, config);
        if (epochs >= 0) config.epochs = static_cast<std::size_t>(epochs);
        if (k1 >= 0) config.k1 = k1;
        if (k2 >= 0) config.k2 = k2;
        if (!latent.empty()) config.latent = latent;
        if (!beta.empty()) config.beta = beta;
        config.seed = seed;
        return config;
    }
};

int dispatch(int argc, char** argv) {
    CLI::App app{"relsynth: synthesizes multi-table relational data with a graph VAE"};
    app.require_subcommand(1);

    auto* validate_cmd = app.add_subcommand("validate", "load a dataset and report violations");
    std::string validate_schema;
    validate_cmd->add_option("--schema", validate_schema, "schema config file")->required();

    auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
    TrainFlags train_flags;
    train_flags.add_common(train_cmd);
    train_cmd->add_option("--checkpoint", train_flags.checkpoint, "checkpoint output path");
    train_cmd->add_option("--out", train_flags.trace, "loss trace CSV output path");

    auto* generate_cmd = app.add_subcommand("generate", "synthesize CSVs from a checkpoint");
    std::string gen_checkpoint, gen_schema, gen_out = "synthetic";
    std::uint64_t gen_seed = 0;
    generate_cmd->add_option("--checkpoint", gen_checkpoint, "checkpoint path")->required();
    generate_cmd->add_option("--schema", gen_schema, "schema config file")->required();
    generate_cmd->add_option("--seed", gen_seed, "master random seed")->required();
    generate_cmd->add_option("--out", gen_out, "output directory for synthetic CSVs");

    auto* eval_cmd = app.add_subcommand("evaluate", "score synthetic data against the real data");
    std::string eval_schema, eval_synth, eval_target;
    std::uint64_t eval_seed = 0;
    eval_cmd->add_option("--schema", eval_schema, "schema config file")->required();
    eval_cmd->add_option("--out", eval_synth, "directory holding the synthetic CSVs")->required();
    eval_cmd->add_option("--target", eval_target, "categorical target attribute")->required();
    eval_cmd->add_option("--seed", eval_seed, "master random seed")->required();

    auto* pipeline_cmd = app.add_subcommand("pipeline", "train, generate, evaluate in one run");
    TrainFlags pipe_flags;
    pipe_flags.add_common(pipeline_cmd);
    std::string pipe_target, pipe_out = "pipeline_out";
    pipeline_cmd->add_option("--target", pipe_target, "categorical target attribute")->required();
    pipeline_cmd->add_option("--out", pipe_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (validate_cmd->parsed()) {
        relsynth::ValidateOutcome outcome = relsynth::run_validate(validate_schema);
        if (!outcome.report.ok()) {
            std::cout << outcome.report.to_text();
            return 1;
        }
        if (!log_quiet())
            std::cout << "ok: " << outcome.tables << " tables, " << outcome.rows << " rows\n";
        return 0;
    }

    if (train_cmd->parsed()) {
        relsynth::TrainOutcome outcome = relsynth::run_train(
            train_flags.schema, train_flags.resolve(), train_flags.checkpoint, train_flags.trace);
        if (log_debug())
            for (std::size_t e = 0; e < outcome.trace.size(); ++e)
                std::cerr << "epoch " << e << " total " << outcome.trace[e].total << " recon "
                          << outcome.trace[e].reconstruction << " kl " << outcome.trace[e].kl
                          << "\n";
        if (!log_quiet()) {
            std::cout << "trained " << outcome.parameter_count << " parameters";
            if (!outcome.trace.empty())
                std::cout << ", final loss " << outcome.trace.back().total;
            std::cout << ", checkpoint " << train_flags.checkpoint << "\n";
        }
        return 0;
    }

    if (generate_cmd->parsed()) {
        relsynth::RelationalDataset synthetic =
            relsynth::run_generate(gen_checkpoint, gen_schema, gen_seed, gen_out);
        if (!log_quiet()) {
            std::cout << "wrote";
            for (const auto& table : synthetic.tables)
                std::cout << " " << table.name << ".csv(" << table.rows.size() << ")";
            std::cout << " to " << gen_out << "\n";
        }
        return 0;
    }

    if (eval_cmd->parsed()) {
        std::filesystem::path report_path = std::filesystem::path(eval_synth) / "report.json";
        relsynth::EvalReport report =
            relsynth::run_evaluate(eval_schema, eval_synth, eval_target, eval_seed, report_path);
        std::cout << report.to_text();
        if (!log_quiet()) std::cout << "report written to " << report_path.string() << "\n";
        return 0;
    }

    relsynth::PipelineOutcome outcome = relsynth::run_pipeline(
        pipe_flags.schema, pipe_flags.resolve(), pipe_target, pipe_out);
    std::cout << outcome.report.to_text();
    if (!log_quiet()) std::cout << "artifacts under " << pipe_out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const relsynth::ValidationFailed& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const relsynth::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
