#include "relsynth/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "relsynth/preprocess.hpp"
#include "relsynth/tensor.hpp"

namespace relsynth {

std::pair<RelationalDataset, RelationalDataset> train_test_split(const RelationalDataset& dataset,
                                                                 double fraction,
                                                                 std::uint64_t seed) {
    const int p = dataset.table_index(dataset.primary_table);
    if (p < 0) throw UnknownTable(dataset.primary_table);
    const std::size_t n = dataset.tables[p].rows.size();
    if (n < 2) throw InvalidDataset("cannot split fewer than 2 primary rows");

    std::vector<std::uint32_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
    RandomStream rng(derive_seed(seed, 4));
    rng.shuffle(perm);
    std::size_t n_train = static_cast<std::size_t>(fraction * static_cast<double>(n) + 0.5);
    n_train = std::min(std::max<std::size_t>(n_train, 1), n - 1);

    std::vector<std::uint8_t> in_train(n, 0);
    for (std::size_t i = 0; i < n_train; ++i) in_train[perm[i]] = 1;

    auto carve = [&](bool train_fold) {
        RelationalDataset fold;
        fold.name = dataset.name;
        fold.primary_table = dataset.primary_table;
        fold.identifier_attribute = dataset.identifier_attribute;
        fold.links = dataset.links;
        fold.tables.resize(dataset.tables.size());

        // keep[t][r] = 1 when row r of table t belongs to this fold
        std::vector<std::vector<std::uint8_t>> keep(dataset.tables.size());
        keep[p].resize(n);
        for (std::size_t r = 0; r < n; ++r)
            keep[p][r] = (in_train[r] != 0) == train_fold ? 1 : 0;

        bool progress = true;
        while (progress) {
            progress = false;
            for (const LinkTriple& link : dataset.links) {
                const int pi = dataset.table_index(link.primary);
                const int si = dataset.table_index(link.secondary);
                if (keep[pi].empty() || !keep[si].empty()) continue;
                const TableData& parent = dataset.tables[pi];
                const TableData& child = dataset.tables[si];
                const int pa = parent.attribute_index(link.identifier);
                const int sa = child.attribute_index(link.identifier);
                std::unordered_set<std::string> kept_keys;
                for (std::size_t r = 0; r < parent.rows.size(); ++r)
                    if (keep[pi][r]) kept_keys.insert(value_to_text(parent.rows[r].values[pa]));
                keep[si].resize(child.rows.size());
                for (std::size_t r = 0; r < child.rows.size(); ++r)
                    keep[si][r] =
                        kept_keys.count(value_to_text(child.rows[r].values[sa])) ? 1 : 0;
                progress = true;
            }
        }

        for (std::size_t t = 0; t < dataset.tables.size(); ++t) {
            const TableData& src = dataset.tables[t];
            TableData& dst = fold.tables[t];
            dst.name = src.name;
            dst.attributes = src.attributes;
            if (keep[t].empty()) {
                dst.rows = src.rows;  // table unreachable through links; shared by both folds
                continue;
            }
            for (std::size_t r = 0; r < src.rows.size(); ++r)
                if (keep[t][r]) dst.rows.push_back(src.rows[r]);
        }
        return fold;
    };

    return {carve(true), carve(false)};
}

TableData join_all(const RelationalDataset& dataset) {
    const int p = dataset.table_index(dataset.primary_table);
    if (p < 0) throw UnknownTable(dataset.primary_table);
    TableData current = dataset.tables[p];
    std::vector<bool> consumed(dataset.links.size(), false);
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t l = 0; l < dataset.links.size(); ++l) {
            if (consumed[l]) continue;
            const LinkTriple& link = dataset.links[l];
            if (current.attribute_index(link.identifier) < 0) continue;
            const int s = dataset.table_index(link.secondary);
            if (s < 0) throw UnknownTable(link.secondary);
            current = join_tables(current, dataset.tables[s], link.identifier);
            consumed[l] = true;
            progress = true;
        }
    }
    for (bool c : consumed)
        if (!c) throw InvalidDataset("join chain cannot consume every link");
    current.name = dataset.name + ".joined";
    return current;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.empty() || scores.size() != labels.size())
        throw EmptyTable("roc_auc needs matched nonempty scores and labels");
    std::size_t pos = 0;
    for (int y : labels) pos += y ? 1 : 0;
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw SingleClassLabels();

    std::vector<std::uint32_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });

    // midranks over tie groups
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) rank_sum_pos += midrank;
        i = j;
    }
    const double p = static_cast<double>(pos);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double macro_roc_auc(const Matrix& probabilities, const std::vector<int>& labels) {
    if (probabilities.rows() != labels.size())
        throw EmptyTable("macro_roc_auc needs one probability row per label");
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < probabilities.cols(); ++k) {
        std::size_t pos = 0;
        for (int y : labels) pos += y == static_cast<int>(k) ? 1 : 0;
        if (pos == 0 || pos == labels.size()) continue;
        std::vector<double> scores(labels.size());
        std::vector<int> binary(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            scores[i] = probabilities(i, k);
            binary[i] = labels[i] == static_cast<int>(k) ? 1 : 0;
        }
        sum += roc_auc(scores, binary);
        ++used;
    }
    if (used == 0) throw SingleClassLabels();
    return sum / static_cast<double>(used);
}

double macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.empty() || predictions.size() != labels.size())
        throw EmptyTable("macro_f1 needs matched nonempty predictions and labels");
    std::set<int> class_set(labels.begin(), labels.end());
    class_set.insert(predictions.begin(), predictions.end());
    double sum = 0.0;
    for (int k : class_set) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const bool truth = labels[i] == k;
            const bool guessed = predictions[i] == k;
            if (truth && guessed) ++tp;
            if (!truth && guessed) ++fp;
            if (truth && !guessed) ++fn;
        }
        const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        sum += p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    return sum / static_cast<double>(class_set.size());
}

double percentile_linear(std::vector<double> values, double q) {
    if (values.empty()) throw EmptyTable("percentile of an empty set");
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    const double rank = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

struct ClassifierData {
    Matrix features;
    std::vector<int> labels;
};

/// Feature table = joined table minus the target column.
TableData drop_attribute(const TableData& table, std::size_t index) {
    TableData out;
    out.name = table.name;
    for (std::size_t a = 0; a < table.attributes.size(); ++a)
        if (a != index) out.attributes.push_back(table.attributes[a]);
    out.rows.reserve(table.rows.size());
    for (const Row& row : table.rows) {
        Row r;
        r.values.reserve(row.values.size() - 1);
        for (std::size_t a = 0; a < row.values.size(); ++a)
            if (a != index) r.values.push_back(row.values[a]);
        out.rows.push_back(std::move(r));
    }
    return out;
}

/// Encodes features with the shared real-data codec and maps target labels
/// through the shared class list. Rows whose target is missing or unknown to
/// the real data are skipped.
ClassifierData prepare(const TableData& joined, std::size_t target_index,
                       const TableCodec& feature_codec,
                       const std::unordered_map<std::string, int>& class_of) {
    TableData features_only = drop_attribute(joined, target_index);
    std::vector<std::size_t> kept;
    std::vector<int> labels;
    for (std::size_t r = 0; r < joined.rows.size(); ++r) {
        const Value& v = joined.rows[r].values[target_index];
        if (is_missing(v)) continue;
        auto it = class_of.find(std::get<Category>(v).label);
        if (it == class_of.end()) continue;
        kept.push_back(r);
        labels.push_back(it->second);
    }
    TableData filtered;
    filtered.name = features_only.name;
    filtered.attributes = features_only.attributes;
    filtered.rows.reserve(kept.size());
    for (std::size_t r : kept) filtered.rows.push_back(std::move(features_only.rows[r]));

    ClassifierData data;
    data.features = encode_table(filtered, feature_codec, EncodeMode::Tolerant).features;
    data.labels = std::move(labels);
    return data;
}

double euclidean(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double nearest_distance(const Matrix& pool, const double* query, std::ptrdiff_t exclude) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.rows(); ++i) {
        if (static_cast<std::ptrdiff_t>(i) == exclude) continue;
        best = std::min(best, euclidean(pool.row(i), query, pool.cols()));
    }
    return best;
}

/// Ratio with the zero-denominator rule: positive/0 -> +inf, 0/0 -> 0.
double nn_ratio(double numerator, double denominator) {
    if (denominator == 0.0)
        return numerator > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return numerator / denominator;
}

}  // namespace

McResult model_compatibility(const RelationalDataset& real, const RelationalDataset& synthetic,
                             const std::string& target, std::uint64_t seed) {
    TableData joined_real = join_all(real);
    if (joined_real.rows.empty()) throw EmptyTable("joined real dataset is empty");
    const int target_index = joined_real.attribute_index(target);
    if (target_index < 0) throw UnknownTable("target attribute " + target + " not in joined table");
    if (joined_real.attributes[target_index].kind != AttributeKind::Categorical)
        throw TargetNotCategorical(target);

    // Shared class list and feature codec, both fitted on the full real join.
    std::unordered_map<std::string, int> class_of;
    std::vector<std::string> class_names;
    for (const Row& row : joined_real.rows) {
        const Value& v = row.values[target_index];
        if (is_missing(v)) continue;
        const std::string& label = std::get<Category>(v).label;
        if (class_of.emplace(label, static_cast<int>(class_names.size())).second)
            class_names.push_back(label);
    }
    if (class_names.empty()) throw EmptyTable("target has no defined values in the real data");
    TableCodec feature_codec =
        fit_codecs(drop_attribute(joined_real, static_cast<std::size_t>(target_index)));

    auto [train, test] = train_test_split(real, 0.8, seed);
    ClassifierData train_data = prepare(join_all(train), static_cast<std::size_t>(target_index),
                                        feature_codec, class_of);
    ClassifierData test_data = prepare(join_all(test), static_cast<std::size_t>(target_index),
                                       feature_codec, class_of);
    ClassifierData synth_data = prepare(join_all(synthetic),
                                        static_cast<std::size_t>(target_index), feature_codec,
                                        class_of);
    if (train_data.labels.empty()) throw EmptyTable("train fold has no usable rows");
    if (test_data.labels.empty()) throw EmptyTable("test fold has no usable rows");
    if (synth_data.labels.empty()) throw EmptyTable("synthetic data has no usable rows");

    GbtConfig config;
    GbtClassifier m, m_hat;
    m.fit(train_data.features, train_data.labels, class_names.size(), config);
    m_hat.fit(synth_data.features, synth_data.labels, class_names.size(), config);

    const Matrix proba_real = m.predict_proba(test_data.features);
    const Matrix proba_synth = m_hat.predict_proba(test_data.features);

    McResult result;
    result.real_auc = macro_roc_auc(proba_real, test_data.labels);
    result.synth_auc = macro_roc_auc(proba_synth, test_data.labels);
    auto argmax_rows = [](const Matrix& proba) {
        std::vector<int> out(proba.rows(), 0);
        for (std::size_t i = 0; i < proba.rows(); ++i)
            for (std::size_t k = 1; k < proba.cols(); ++k)
                if (proba(i, k) > proba(i, static_cast<std::size_t>(out[i])))
                    out[i] = static_cast<int>(k);
        return out;
    };
    result.real_f1 = macro_f1(argmax_rows(proba_real), test_data.labels);
    result.synth_f1 = macro_f1(argmax_rows(proba_synth), test_data.labels);

    if (result.synth_auc == 0.0) {
        result.auc_defined = false;
        result.note += "MC(AUC) undefined: synthetic-trained model scored 0 on the test fold. ";
    } else {
        result.mc_auc = std::fabs(1.0 - result.real_auc / result.synth_auc);
    }
    if (result.synth_f1 == 0.0) {
        result.f1_defined = false;
        result.note += "MC(F1) undefined: synthetic-trained model scored 0 on the test fold.";
    } else {
        result.mc_f1 = std::fabs(1.0 - result.real_f1 / result.synth_f1);
    }
    return result;
}

PrivacyResult privacy_score(const RelationalDataset& real, const RelationalDataset& synthetic,
                            std::uint64_t seed) {
    TableData joined_real = join_all(real);
    TableData joined_synth = join_all(synthetic);
    if (joined_real.rows.size() < 4) throw EmptyTable("privacy score needs >= 4 joined real rows");
    if (joined_synth.rows.empty()) throw EmptyTable("joined synthetic dataset is empty");

    TableCodec codec = fit_codecs(joined_real);
    Matrix d = encode_table(joined_real, codec, EncodeMode::Strict).features;
    Matrix d_hat = encode_table(joined_synth, codec, EncodeMode::Tolerant).features;

    const std::size_t n = d.rows();
    std::vector<std::uint32_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
    RandomStream rng(derive_seed(seed, 5));
    rng.shuffle(perm);
    const std::size_t half = n / 2;
    Matrix d1(half, d.cols()), d2(n - half, d.cols());
    for (std::size_t i = 0; i < half; ++i)
        std::copy(d.row(perm[i]), d.row(perm[i]) + d.cols(), d1.row(i));
    for (std::size_t i = half; i < n; ++i)
        std::copy(d.row(perm[i]), d.row(perm[i]) + d.cols(), d2.row(i - half));

    std::vector<double> calibration;
    calibration.reserve(half);
    for (std::size_t i = 0; i < half; ++i) {
        const double num = nearest_distance(d2, d1.row(i), -1);
        const double den = nearest_distance(d1, d1.row(i), static_cast<std::ptrdiff_t>(i));
        calibration.push_back(nn_ratio(num, den));
    }
    PrivacyResult result;
    result.alpha = percentile_linear(calibration, 0.05);

    std::size_t flagged = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double num = nearest_distance(d_hat, d.row(i), -1);
        const double den = nearest_distance(d, d.row(i), static_cast<std::ptrdiff_t>(i));
        if (nn_ratio(num, den) < result.alpha) ++flagged;
    }
    result.score = static_cast<double>(flagged) / static_cast<double>(n);
    result.pass = result.score <= 0.05;
    return result;
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out << "model compatibility (target '" << target << "', split " << split_fraction
        << ", seed " << seed << ")\n";
    out << "  ROC AUC: real " << mc.real_auc << ", synthetic " << mc.synth_auc << " -> MC ";
    if (mc.auc_defined)
        out << mc.mc_auc << "\n";
    else
        out << "undefined\n";
    out << "  F1:      real " << mc.real_f1 << ", synthetic " << mc.synth_f1 << " -> MC ";
    if (mc.f1_defined)
        out << mc.mc_f1 << "\n";
    else
        out << "undefined\n";
    if (!mc.note.empty()) out << "  note: " << mc.note << "\n";
    out << "privacy\n";
    out << "  score " << privacy.score << " (alpha " << privacy.alpha << ", threshold 0.05): "
        << (privacy.pass ? "PASS" : "FAIL") << "\n";
    return out.str();
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["target"] = target;
    j["seed"] = seed;
    j["split_fraction"] = split_fraction;
    j["model_compatibility"]["roc_auc"] = {{"real", mc.real_auc},
                                           {"synthetic", mc.synth_auc},
                                           {"mc", mc.auc_defined ? nlohmann::json(mc.mc_auc)
                                                                 : nlohmann::json()},
                                           {"defined", mc.auc_defined}};
    j["model_compatibility"]["f1"] = {{"real", mc.real_f1},
                                      {"synthetic", mc.synth_f1},
                                      {"mc", mc.f1_defined ? nlohmann::json(mc.mc_f1)
                                                           : nlohmann::json()},
                                      {"defined", mc.f1_defined}};
    if (!mc.note.empty()) j["model_compatibility"]["note"] = mc.note;
    j["privacy"] = {{"score", privacy.score},
                    {"alpha", privacy.alpha},
                    {"threshold", 0.05},
                    {"pass", privacy.pass}};
    return j.dump(2) + "\n";
}

EvalReport evaluate_synthetic(const RelationalDataset& real, const RelationalDataset& synthetic,
                              const std::string& target, std::uint64_t seed) {
    EvalReport report;
    report.target = target;
    report.seed = seed;
    report.split_fraction = 0.8;
    report.mc = model_compatibility(real, synthetic, target, seed);
    report.privacy = privacy_score(real, synthetic, seed);
    return report;
}

}  // namespace relsynth
