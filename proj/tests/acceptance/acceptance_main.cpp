// Acceptance gate: ten checks covering round-tripping, graph construction,
// gradients, the KL term, the toy fidelity experiment, the privacy metric,
// AUC, determinism of the command-line tool, and the end-to-end pipeline.
// Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relsynth/evaluate.hpp"
#include "relsynth/graph.hpp"
#include "relsynth/io.hpp"
#include "relsynth/preprocess.hpp"
#include "relsynth/vae.hpp"
#include "test_data.hpp"

using namespace relsynth;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Settings for the toy fidelity experiment (criteria 6, 7, 10).
constexpr std::uint64_t kToyDataSeed = 4242;
constexpr std::size_t kToyPrimary = 200;
constexpr std::size_t kToySecondary = 600;

TrainConfig toy_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.k1 = 2;
    cfg.k2 = 2;
    cfg.hidden = 32;
    cfg.latent = {8, 8};
    cfg.beta = {0.05, 0.05};
    cfg.epochs = 120;
    cfg.learning_rate = 0.005;
    cfg.seed = seed;
    return cfg;
}

std::string toy_config_json() {
    const TrainConfig cfg = toy_config(0);
    nlohmann::json j;
    j["k1"] = cfg.k1;
    j["k2"] = cfg.k2;
    j["hidden"] = cfg.hidden;
    j["latent"] = cfg.latent[0];
    j["beta"] = cfg.beta[0];
    j["epochs"] = cfg.epochs;
    j["learning_rate"] = cfg.learning_rate;
    return j.dump(2);
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in.is_open()) throw std::runtime_error("cannot read " + p.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct Gate {
    int failures = 0;

    void run(int number, const std::string& name, const std::function<std::string()>& check) {
        std::string detail;
        bool pass = false;
        try {
            detail = check();
            pass = true;
        } catch (const std::exception& e) {
            detail = e.what();
        }
        std::cout << "criterion " << number << (number < 10 ? "  " : " ")
                  << (pass ? "PASS" : "FAIL") << "  " << name;
        if (!detail.empty()) std::cout << " (" << detail << ")";
        std::cout << "\n" << std::flush;
        if (!pass) ++failures;
    }
};

class CheckFailed : public std::runtime_error {
public:
    explicit CheckFailed(const std::string& what) : std::runtime_error(what) {}
};

void require(bool ok, const std::string& what) {
    if (!ok) throw CheckFailed(what);
}

// ---- criterion 1: preprocessing round trip ---------------------------------

void check_round_trip(const TableData& original, const TableData& recovered) {
    require(recovered.rows.size() == original.rows.size(), "row count changed");
    for (std::size_t r = 0; r < original.rows.size(); ++r)
        for (std::size_t a = 0; a < original.attributes.size(); ++a) {
            const Value& want = original.rows[r].values[a];
            const Value& got = recovered.rows[r].values[a];
            if (is_missing(want)) {
                require(is_missing(got), "missing value not recovered");
                continue;
            }
            switch (original.attributes[a].kind) {
                case AttributeKind::Numeric:
                    require(std::fabs(std::get<double>(got) - std::get<double>(want)) <= 1e-9,
                            "numeric deviates beyond 1e-9");
                    break;
                case AttributeKind::DateTime:
                    require(std::llabs(std::get<Timestamp>(got).seconds -
                                       std::get<Timestamp>(want).seconds) <= 1,
                            "datetime deviates beyond 1s");
                    break;
                default:
                    require(got == want, "categorical or identifier changed");
            }
        }
}

std::string criterion_round_trip() {
    const auto start = Clock::now();
    for (std::uint64_t seed = 9000; seed < 9100; ++seed) {
        RelationalDataset d = testdata::random_dataset(seed, 50);
        RelationalGraph graph = build_graph(d);
        std::vector<TableCodec> codecs;
        std::vector<EncodedTable> encoded;
        for (const TableData& table : d.tables) {
            auto [enc, codec] = encode_table(table);
            codecs.push_back(std::move(codec));
            encoded.push_back(std::move(enc));
        }
        MergedTable merged = merge_tables(encoded, graph);
        std::vector<EncodedTable> split = split_tables(merged);
        for (std::size_t t = 0; t < d.tables.size(); ++t)
            check_round_trip(d.tables[t], decode_table(split[t], codecs[t]));
    }
    const double secs = seconds_since(start);
    require(secs < 30.0, "round trips took too long");
    std::ostringstream out;
    out << "100 datasets in " << secs << " s";
    return out.str();
}

// ---- criterion 2: graph oracle ---------------------------------------------

std::string criterion_graph_oracle() {
    for (std::uint64_t seed = 9200; seed < 9300; ++seed) {
        RelationalDataset d = testdata::random_dataset(seed, 150);
        RelationalGraph g = build_graph(d);

        std::set<std::pair<std::uint32_t, std::uint32_t>> got;
        for (const GraphEdge& e : g.edges) {
            require(e.a < e.b, "edge endpoints out of order");
            got.insert({e.a, e.b});
        }
        require(got.size() == g.edges.size(), "duplicate edges");

        std::set<std::pair<std::uint32_t, std::uint32_t>> want;
        for (const auto& link : d.links) {
            const int pt = d.table_index(link.primary);
            const int st = d.table_index(link.secondary);
            const int pa = d.tables[pt].attribute_index(link.identifier);
            const int sa = d.tables[st].attribute_index(link.identifier);
            for (std::size_t pr = 0; pr < d.tables[pt].rows.size(); ++pr)
                for (std::size_t sr = 0; sr < d.tables[st].rows.size(); ++sr) {
                    const Value& a = d.tables[pt].rows[pr].values[pa];
                    const Value& b = d.tables[st].rows[sr].values[sa];
                    if (is_missing(a) || is_missing(b) || !(a == b)) continue;
                    std::uint32_t u = g.vertex_id(static_cast<std::uint32_t>(pt),
                                                  static_cast<std::uint32_t>(pr));
                    std::uint32_t v = g.vertex_id(static_cast<std::uint32_t>(st),
                                                  static_cast<std::uint32_t>(sr));
                    if (u > v) std::swap(u, v);
                    want.insert({u, v});
                }
        }
        require(got == want, "edge set differs from the all-pairs scan");

        std::size_t total = 0;
        for (const auto& nbrs : g.adjacency) total += nbrs.size();
        require(total == 2 * g.edges.size(), "handshake identity broken");
    }
    return "100 datasets, edge sets and handshake identical";
}

// ---- criterion 3: merged attribute count -----------------------------------

std::string criterion_attribute_identity() {
    std::size_t configs = 0;
    auto check = [&configs](const RelationalDataset& d, std::size_t expect_named) {
        RelationalGraph graph = build_graph(d);
        std::vector<EncodedTable> encoded;
        for (const TableData& table : d.tables) encoded.push_back(encode_table(table).first);
        MergedTable merged = merge_tables(encoded, graph);
        std::size_t total = 0;
        for (const auto& t : d.tables) total += t.attributes.size();
        require(merged.logical_attribute_count == total - d.tables.size() + 2,
                "identity violated");
        if (expect_named)
            require(merged.logical_attribute_count == expect_named, "fixed shape total wrong");
        ++configs;
    };

    for (std::uint64_t seed = 9400; seed < 9450; ++seed)
        check(testdata::random_dataset(seed, 20), 0);
    check(testdata::three_table_shape(), 16);  // 4 + 7 + 6 attributes, 3 tables
    check(testdata::tiny_pair(), 7);

    std::ostringstream out;
    out << configs << " configurations, including 4/7/6 -> 16";
    return out.str();
}

// ---- criterion 4: gradients --------------------------------------------------

RelationalDataset five_vertices() {
    TableData p;
    p.name = "p";
    p.attributes = {{"id", AttributeKind::Identifier, true},
                    {"x", AttributeKind::Numeric, false},
                    {"c", AttributeKind::Categorical, false}};
    p.rows = {{{Identifier{"a"}, 0.2, Category{"u"}}}, {{Identifier{"b"}, 0.9, Category{"v"}}}};
    TableData s;
    s.name = "s";
    s.attributes = {{"id", AttributeKind::Identifier, false},
                    {"y", AttributeKind::Numeric, false}};
    s.rows = {{{Identifier{"a"}, 1.0}}, {{Identifier{"a"}, 2.0}}, {{Identifier{"b"}, 3.0}}};
    return RelationalDataset::single_primary("five", {p, s}, "p", "id");
}

std::string criterion_gradients() {
    // layer level: projection into a gated update, every parameter checked
    {
        ParamSet params;
        RandomStream rng(9600);
        LinearLayer lin = make_linear(params, "lin", 3, 2, rng);
        GruCell gru = make_gru(params, "gru", 2, 2, rng);
        Matrix x(4, 3), h0(4, 2);
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = -1.0 + 2.0 * rng.uniform();
        for (std::size_t i = 0; i < h0.size(); ++i) h0.data()[i] = -1.0 + 2.0 * rng.uniform();

        auto loss_value = [&]() {
            Tape tape;
            std::vector<Tape::NodeId> bound = bind_params(tape, params);
            Tape::NodeId xin = tape.tanh(linear_forward(tape, bound, lin, tape.leaf(x)));
            Tape::NodeId out = gru_forward(tape, bound, gru, xin, tape.leaf(h0));
            return tape.value(tape.sum_all(tape.hadamard(out, out)))(0, 0);
        };
        Tape tape;
        std::vector<Tape::NodeId> bound = bind_params(tape, params);
        Tape::NodeId xin = tape.tanh(linear_forward(tape, bound, lin, tape.leaf(x)));
        Tape::NodeId out = gru_forward(tape, bound, gru, xin, tape.leaf(h0));
        tape.backward(tape.sum_all(tape.hadamard(out, out)));

        const double h = 1e-5;
        for (std::size_t p = 0; p < params.count(); ++p)
            for (std::size_t i = 0; i < params.value(p).size(); ++i) {
                double& entry = params.value(p).data()[i];
                const double keep = entry;
                entry = keep + h;
                const double up = loss_value();
                entry = keep - h;
                const double down = loss_value();
                entry = keep;
                const double fd = (up - down) / (2.0 * h);
                const double got = tape.grad(bound[p]).data()[i];
                const double scale = std::max({1.0, std::fabs(fd), std::fabs(got)});
                require(std::fabs(fd - got) / scale < 1e-4, "layer gradient off at " +
                                                                params.name(p));
            }
    }

    // end to end: full training objective on the 5-vertex dataset
    TrainConfig cfg;
    cfg.k1 = 1;
    cfg.k2 = 1;
    cfg.hidden = 4;
    cfg.latent = {2, 2};
    cfg.beta = {0.7, 1.3};
    cfg.seed = 5;
    GraphVaeTrainer trainer(five_vertices(), cfg);
    const std::vector<Matrix> eps = trainer.make_eps(derive_seed(5, 99));
    std::vector<Matrix> grads;
    trainer.evaluate(eps, &grads);
    ParamSet& params = trainer.model().params;

    const double h = 1e-5;
    std::size_t checked = 0;
    for (std::size_t p = 0; p < params.count(); ++p)
        for (std::size_t i = 0; i < params.value(p).size(); ++i, ++checked) {
            double& entry = params.value(p).data()[i];
            const double keep = entry;
            entry = keep + h;
            const double up = trainer.evaluate(eps).total;
            entry = keep - h;
            const double down = trainer.evaluate(eps).total;
            entry = keep;
            const double fd = (up - down) / (2.0 * h);
            const double got = grads[p].data()[i];
            const double scale = std::max({1.0, std::fabs(fd), std::fabs(got)});
            require(std::fabs(fd - got) / scale < 1e-3,
                    "end-to-end gradient off at " + params.name(p));
        }
    std::ostringstream out;
    out << "layers at 1e-4; " << checked << " end-to-end entries at 1e-3";
    return out.str();
}

// ---- criterion 5: KL against quadrature --------------------------------------

double kl_quadrature(double mu, double logvar) {
    const double sigma = std::exp(0.5 * logvar);
    const double lo = mu - 14.0 * sigma - 14.0;
    const double hi = mu + 14.0 * sigma + 14.0;
    const int n = 1 << 15;
    const double h = (hi - lo) / n;
    auto integrand = [&](double x) {
        const double log_p = -0.5 * (x - mu) * (x - mu) / (sigma * sigma) - std::log(sigma) -
                             0.5 * std::log(2.0 * M_PI);
        const double log_q = -0.5 * x * x - 0.5 * std::log(2.0 * M_PI);
        return std::exp(log_p) * (log_p - log_q);
    };
    double acc = integrand(lo) + integrand(hi);
    for (int i = 1; i < n; ++i) acc += integrand(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

std::string criterion_kl() {
    RandomStream rng(9700);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double mu = -3.0 + 6.0 * rng.uniform();
        const double logvar = -2.0 + 4.0 * rng.uniform();
        const double closed = kl_to_standard_normal(Matrix(1, 1, mu), Matrix(1, 1, logvar));
        const double numeric = kl_quadrature(mu, logvar);
        worst = std::max(worst, std::fabs(closed - numeric));
    }
    require(worst <= 1e-6, "closed form drifts from quadrature");
    require(kl_to_standard_normal(Matrix(2, 2), Matrix(2, 2)) == 0.0,
            "KL(standard, standard) not exactly zero");
    std::ostringstream out;
    out << "50 heads, worst gap " << worst;
    return out.str();
}

// ---- criteria 6 and 7: the toy fidelity experiment ---------------------------

struct ToyRun {
    double mc_f1 = 0.0;
    bool mc_defined = false;
    double privacy = 1.0;
    double train_seconds = 0.0;
};

std::vector<ToyRun> toy_runs;  // filled once, read by criteria 6 and 7

void run_toy_experiment() {
    const RelationalDataset real =
        testdata::signal_dataset(kToyDataSeed, kToyPrimary, kToySecondary);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ToyRun run;
        const auto start = Clock::now();
        TrainResult trained = train_model(real, toy_config(seed));
        run.train_seconds = seconds_since(start);
        RelationalDataset synth = synthesize(trained.model, real, seed);
        McResult mc = model_compatibility(real, synth, "label", seed);
        run.mc_defined = mc.f1_defined;
        run.mc_f1 = mc.mc_f1;
        run.privacy = privacy_score(real, synth, seed).score;
        toy_runs.push_back(run);
    }
}

std::string criterion_toy_mc() {
    run_toy_experiment();
    int good = 0;
    double worst_time = 0.0;
    for (const ToyRun& run : toy_runs) {
        worst_time = std::max(worst_time, run.train_seconds);
        require(run.train_seconds <= 300.0, "a training run exceeded 5 minutes");
        if (run.mc_defined && run.mc_f1 <= 0.25) ++good;
    }
    std::ostringstream out;
    out << good << "/10 seeds with MC(F1) <= 0.25, slowest train " << worst_time << " s";
    require(good >= 8, out.str());
    return out.str();
}

std::string criterion_toy_privacy() {
    const RelationalDataset real = testdata::signal_dataset(kToyDataSeed, 40, 120);

    PrivacyResult copy = privacy_score(real, real, 77);
    require(copy.score == 1.0, "copy not flagged completely");
    require(!copy.pass, "copy passed the privacy gate");

    RelationalDataset far = real;
    for (TableData& table : far.tables)
        for (Row& row : table.rows)
            for (std::size_t a = 0; a < table.attributes.size(); ++a) {
                if (is_missing(row.values[a])) continue;
                if (table.attributes[a].kind == AttributeKind::Numeric)
                    row.values[a] = std::get<double>(row.values[a]) + 1e6;
                else if (table.attributes[a].kind == AttributeKind::Categorical)
                    row.values[a] = Category{"elsewhere"};
            }
    PrivacyResult far_result = privacy_score(real, far, 77);
    require(far_result.score == 0.0, "far-shifted data flagged");
    require(far_result.pass, "far-shifted data failed the gate");

    require(!toy_runs.empty(), "toy experiment did not run");
    int good = 0;
    for (const ToyRun& run : toy_runs)
        if (run.privacy <= 0.05) ++good;
    std::ostringstream out;
    out << "copy 1.0, far 0.0; " << good << "/10 trained seeds at or below 0.05";
    require(good >= 8, out.str());
    return out.str();
}

// ---- criterion 8: AUC oracle and MC identity ----------------------------------

std::string criterion_auc() {
    RandomStream rng(9800);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(199);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = trial % 2 ? rng.uniform() : static_cast<double>(rng.below(5)) / 4.0;
            labels[i] = rng.uniform() < 0.4 ? 1 : 0;
        }
        labels[0] = 1;
        labels[n - 1] = 0;

        double wins = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!labels[i]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[j]) continue;
                ++pairs;
                if (scores[i] > scores[j])
                    wins += 1.0;
                else if (scores[i] == scores[j])
                    wins += 0.5;
            }
        }
        const double brute = wins / static_cast<double>(pairs);
        worst = std::max(worst, std::fabs(roc_auc(scores, labels) - brute));
    }
    require(worst <= 1e-12, "rank AUC deviates from the pairwise count");

    const RelationalDataset d = testdata::signal_dataset(kToyDataSeed, 60, 180);
    const std::uint64_t seed = 5;
    auto folds = train_test_split(d, 0.8, seed);
    McResult identity = model_compatibility(d, folds.first, "label", seed);
    require(identity.auc_defined && identity.f1_defined, "identity MC undefined");
    require(identity.mc_auc == 0.0 && identity.mc_f1 == 0.0, "MC(D, D) is not exactly zero");

    std::ostringstream out;
    out << "100 sets, worst gap " << worst << "; MC(D, D) = 0";
    return out.str();
}

// ---- criteria 9 and 10: the command-line tool ---------------------------------

fs::path g_cli;
fs::path g_scratch;

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = "\"" + g_cli.string() + "\" " + args + " > \"" + log.string() +
                            "\" 2>&1";
    return std::system(cmd.c_str());
}

std::string criterion_cli_determinism() {
    const fs::path dir = g_scratch / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const RelationalDataset d = testdata::signal_dataset(kToyDataSeed, 60, 180);
    const fs::path schema = testdata::write_schema_dir(d, dir / "data");
    std::ofstream(dir / "config.json") << toy_config_json();

    auto train_once = [&](const std::string& leaf) {
        const fs::path ckpt = dir / leaf;
        const int rc = run_cli("train --schema \"" + schema.string() + "\" --config \"" +
                                   (dir / "config.json").string() +
                                   "\" --seed 11 --epochs 25 --checkpoint \"" + ckpt.string() +
                                   "\"",
                               dir / (leaf + ".log"));
        require(rc == 0, "train exited with " + std::to_string(rc));
        return ckpt;
    };
    const fs::path ckpt1 = train_once("model1.ckpt");
    const fs::path ckpt2 = train_once("model2.ckpt");
    require(read_bytes(ckpt1) == read_bytes(ckpt2), "checkpoints differ between runs");

    auto generate_once = [&](const std::string& leaf) {
        const fs::path out = dir / leaf;
        const int rc = run_cli("generate --checkpoint \"" + ckpt1.string() + "\" --schema \"" +
                                   schema.string() + "\" --seed 12 --out \"" + out.string() +
                                   "\"",
                               dir / (leaf + ".log"));
        require(rc == 0, "generate exited with " + std::to_string(rc));
        return out;
    };
    const fs::path gen1 = generate_once("gen1");
    const fs::path gen2 = generate_once("gen2");
    for (const std::string& table : {"patients", "visits"}) {
        const std::string csv = table + ".csv";
        require(read_bytes(gen1 / csv) == read_bytes(gen2 / csv), csv + " differs between runs");
    }
    return "checkpoints and synthetic CSVs byte-identical across reruns";
}

std::string criterion_pipeline() {
    const fs::path dir = g_scratch / "pipeline";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const RelationalDataset d =
        testdata::signal_dataset(kToyDataSeed, kToyPrimary, kToySecondary);
    const fs::path schema = testdata::write_schema_dir(d, dir / "data");
    std::ofstream(dir / "config.json") << toy_config_json();

    const auto start = Clock::now();
    const int rc = run_cli("pipeline --schema \"" + schema.string() + "\" --config \"" +
                               (dir / "config.json").string() +
                               "\" --seed 3 --target label --out \"" + (dir / "out").string() +
                               "\"",
                           dir / "pipeline.log");
    const double secs = seconds_since(start);
    require(rc == 0, "pipeline exited with " + std::to_string(rc));
    require(secs < 600.0, "pipeline exceeded 10 minutes");

    require(fs::exists(dir / "out" / "model.ckpt"), "checkpoint missing");
    require(fs::exists(dir / "out" / "synthetic" / "patients.csv"), "synthetic csv missing");

    const nlohmann::json report = nlohmann::json::parse(read_bytes(dir / "out" / "report.json"));
    for (const char* key : {"target", "seed", "model_compatibility", "privacy"})
        require(report.contains(key), std::string("report lacks ") + key);
    require(report["model_compatibility"].contains("roc_auc"), "report lacks roc_auc");
    require(report["model_compatibility"].contains("f1"), "report lacks f1");
    require(report["privacy"].contains("score"), "report lacks privacy score");
    require(report["privacy"].contains("pass"), "report lacks privacy verdict");

    std::ostringstream out;
    out << "finished in " << secs << " s with a well-formed report";
    return out.str();
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <path-to-cli> [scratch-dir]\n";
        return 2;
    }
    g_cli = argv[1];
    g_scratch = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "relsynth-acceptance";
    fs::create_directories(g_scratch);

    Gate gate;
    gate.run(1, "preprocessing round trip", criterion_round_trip);
    gate.run(2, "graph construction oracle", criterion_graph_oracle);
    gate.run(3, "merged attribute count identity", criterion_attribute_identity);
    gate.run(4, "finite-difference gradient checks", criterion_gradients);
    gate.run(5, "KL closed form vs quadrature", criterion_kl);
    gate.run(6, "toy fidelity: model compatibility", criterion_toy_mc);
    gate.run(7, "privacy metric behavior", criterion_toy_privacy);
    gate.run(8, "ROC AUC oracle and MC identity", criterion_auc);
    gate.run(9, "seeded CLI determinism", criterion_cli_determinism);
    gate.run(10, "end-to-end pipeline", criterion_pipeline);

    std::cout << (gate.failures == 0 ? "all criteria passed"
                                     : std::to_string(gate.failures) + " criteria failed")
              << "\n";
    return gate.failures == 0 ? 0 : 1;
}
