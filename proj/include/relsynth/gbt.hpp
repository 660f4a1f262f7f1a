#pragma once

#include <cstdint>
#include <vector>

#include "relsynth/tensor.hpp"

// Gradient-boosted trees on softmax log-loss: one depth-limited regression
// tree per class per round, exact greedy splits, deterministic (no sampling,
// fixed tie-breaking). Both sides of any model-compatibility comparison use
// this classifier with one shared config.

namespace relsynth {

struct GbtConfig {
    std::size_t rounds = 100;
    std::size_t max_depth = 3;
    double learning_rate = 0.1;
    double l2 = 1.0;  // leaf weight regularization
};

class GbtClassifier {
public:
    /// labels hold class indices in [0, classes).
    void fit(const Matrix& features, const std::vector<int>& labels, std::size_t classes,
             const GbtConfig& config = {});

    /// Rows of class probabilities, summing to 1.
    Matrix predict_proba(const Matrix& features) const;
    std::vector<int> predict(const Matrix& features) const;

    std::size_t classes() const { return classes_; }

private:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };
    struct Tree {
        std::vector<Node> nodes;
        double predict_row(const double* row) const;
    };

    std::size_t classes_ = 0;
    GbtConfig config_;
    std::vector<std::vector<Tree>> rounds_;  // [round][class]
};

}  // namespace relsynth
