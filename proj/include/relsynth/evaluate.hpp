#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "relsynth/gbt.hpp"
#include "relsynth/relational.hpp"

// Evaluation of synthetic output against the real dataset: model
// compatibility (how interchangeable the two are as classifier training data)
// and a nearest-neighbor privacy score.

namespace relsynth {

class TargetNotCategorical : public std::runtime_error {
public:
    explicit TargetNotCategorical(const std::string& attr)
        : std::runtime_error("target attribute is not categorical: " + attr) {}
};

class EmptyTable : public std::runtime_error {
public:
    explicit EmptyTable(const std::string& what) : std::runtime_error(what) {}
};

class SingleClassLabels : public std::runtime_error {
public:
    SingleClassLabels() : std::runtime_error("labels contain a single class; AUC undefined") {}
};

/// Splits on primary-table rows; every other row follows its parent through
/// the links, so both folds are valid datasets.
std::pair<RelationalDataset, RelationalDataset> train_test_split(const RelationalDataset& dataset,
                                                                 double fraction,
                                                                 std::uint64_t seed);

/// Inner-joins the primary table with every linked secondary table, consuming
/// links as their key attribute becomes available.
TableData join_all(const RelationalDataset& dataset);

/// Rank-statistic AUC with tie midranks; labels are 0/1.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// One-vs-rest macro average over classes present on both sides of the split.
double macro_roc_auc(const Matrix& probabilities, const std::vector<int>& labels);

/// Macro-averaged F1 over the classes appearing in labels or predictions.
double macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels);

/// Linear-interpolation percentile, q in [0, 1].
double percentile_linear(std::vector<double> values, double q);

struct McResult {
    double real_auc = 0.0, synth_auc = 0.0;
    double real_f1 = 0.0, synth_f1 = 0.0;
    double mc_auc = 0.0, mc_f1 = 0.0;
    bool auc_defined = true, f1_defined = true;
    std::string note;  // set when a ratio is undefined
};

/// Trains one classifier on the real train fold and one on the synthetic
/// data, scores both on the real test fold, and compares: MC = |1 - e/e'|.
McResult model_compatibility(const RelationalDataset& real, const RelationalDataset& synthetic,
                             const std::string& target, std::uint64_t seed);

struct PrivacyResult {
    double score = 0.0;  // fraction of real records with a suspiciously close synthetic neighbor
    double alpha = 0.0;  // 5th percentile of the real-vs-real half-split ratio distribution
    bool pass = false;   // score <= 0.05
};

PrivacyResult privacy_score(const RelationalDataset& real, const RelationalDataset& synthetic,
                            std::uint64_t seed);

struct EvalReport {
    McResult mc;
    PrivacyResult privacy;
    std::string target;
    std::uint64_t seed = 0;
    double split_fraction = 0.8;

    std::string to_text() const;
    std::string to_json() const;
};

EvalReport evaluate_synthetic(const RelationalDataset& real, const RelationalDataset& synthetic,
                              const std::string& target, std::uint64_t seed);

}  // namespace relsynth
