#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "relsynth/api.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_relsynth, m) {
    m.doc() = "relational synthetic data: graph-VAE training, generation, evaluation";

    py::class_<relsynth::TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("k1", &relsynth::TrainConfig::k1)
        .def_readwrite("k2", &relsynth::TrainConfig::k2)
        .def_readwrite("hidden", &relsynth::TrainConfig::hidden)
        .def_readwrite("latent", &relsynth::TrainConfig::latent)
        .def_readwrite("beta", &relsynth::TrainConfig::beta)
        .def_readwrite("epochs", &relsynth::TrainConfig::epochs)
        .def_readwrite("batch_size", &relsynth::TrainConfig::batch_size)
        .def_readwrite("learning_rate", &relsynth::TrainConfig::learning_rate)
        .def_readwrite("seed", &relsynth::TrainConfig::seed);

    py::class_<relsynth::EpochLoss>(m, "EpochLoss")
        .def_readonly("total", &relsynth::EpochLoss::total)
        .def_readonly("reconstruction", &relsynth::EpochLoss::reconstruction)
        .def_readonly("kl", &relsynth::EpochLoss::kl);

    py::class_<relsynth::ValidateOutcome>(m, "ValidateOutcome")
        .def_property_readonly("ok",
                               [](const relsynth::ValidateOutcome& o) { return o.report.ok(); })
        .def_property_readonly("violations",
                               [](const relsynth::ValidateOutcome& o) { return o.report.to_text(); })
        .def_readonly("tables", &relsynth::ValidateOutcome::tables)
        .def_readonly("rows", &relsynth::ValidateOutcome::rows);

    py::class_<relsynth::TrainOutcome>(m, "TrainOutcome")
        .def_readonly("trace", &relsynth::TrainOutcome::trace)
        .def_readonly("schema_fingerprint", &relsynth::TrainOutcome::schema_fingerprint)
        .def_readonly("parameter_count", &relsynth::TrainOutcome::parameter_count);

    py::class_<relsynth::McResult>(m, "McResult")
        .def_readonly("real_auc", &relsynth::McResult::real_auc)
        .def_readonly("synth_auc", &relsynth::McResult::synth_auc)
        .def_readonly("real_f1", &relsynth::McResult::real_f1)
        .def_readonly("synth_f1", &relsynth::McResult::synth_f1)
        .def_readonly("mc_auc", &relsynth::McResult::mc_auc)
        .def_readonly("mc_f1", &relsynth::McResult::mc_f1)
        .def_readonly("auc_defined", &relsynth::McResult::auc_defined)
        .def_readonly("f1_defined", &relsynth::McResult::f1_defined)
        .def_readonly("note", &relsynth::McResult::note);

    py::class_<relsynth::PrivacyResult>(m, "PrivacyResult")
        .def_readonly("score", &relsynth::PrivacyResult::score)
        .def_readonly("alpha", &relsynth::PrivacyResult::alpha)
        .def_readonly("pass_", &relsynth::PrivacyResult::pass);

    py::class_<relsynth::EvalReport>(m, "EvalReport")
        .def_readonly("mc", &relsynth::EvalReport::mc)
        .def_readonly("privacy", &relsynth::EvalReport::privacy)
        .def_readonly("target", &relsynth::EvalReport::target)
        .def_readonly("seed", &relsynth::EvalReport::seed)
        .def("to_text", &relsynth::EvalReport::to_text)
        .def("to_json", &relsynth::EvalReport::to_json);

    py::class_<relsynth::PipelineOutcome>(m, "PipelineOutcome")
        .def_readonly("train", &relsynth::PipelineOutcome::train)
        .def_readonly("report", &relsynth::PipelineOutcome::report);

    m.def("load_train_config", &relsynth::load_train_config, py::arg("config_file"),
          py::arg("base") = relsynth::TrainConfig{});
    m.def("validate", &relsynth::run_validate, py::arg("schema"));
    m.def(
        "train",
        [](const std::filesystem::path& schema, const relsynth::TrainConfig& config,
           const std::filesystem::path& checkpoint,
           const std::optional<std::filesystem::path>& trace) {
            return relsynth::run_train(schema, config, checkpoint,
                                       trace.value_or(std::filesystem::path()));
        },
        py::arg("schema"), py::arg("config"), py::arg("checkpoint"),
        py::arg("trace") = std::nullopt);
    m.def(
        "generate",
        [](const std::filesystem::path& checkpoint, const std::filesystem::path& schema,
           std::uint64_t seed, const std::filesystem::path& out_dir) {
            relsynth::RelationalDataset synthetic =
                relsynth::run_generate(checkpoint, schema, seed, out_dir);
            py::dict shapes;
            for (const auto& table : synthetic.tables)
                shapes[py::str(table.name)] = table.rows.size();
            return shapes;
        },
        py::arg("checkpoint"), py::arg("schema"), py::arg("seed"), py::arg("out_dir"));
    m.def(
        "evaluate",
        [](const std::filesystem::path& schema, const std::filesystem::path& synthetic_dir,
           const std::string& target, std::uint64_t seed,
           const std::optional<std::filesystem::path>& report) {
            return relsynth::run_evaluate(schema, synthetic_dir, target, seed,
                                          report.value_or(std::filesystem::path()));
        },
        py::arg("schema"), py::arg("synthetic_dir"), py::arg("target"), py::arg("seed"),
        py::arg("report") = std::nullopt);
    m.def("pipeline", &relsynth::run_pipeline, py::arg("schema"), py::arg("config"),
          py::arg("target"), py::arg("out_dir"));
}
