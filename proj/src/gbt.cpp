#include "relsynth/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace relsynth {

namespace {

constexpr double kMinGain = 1e-10;
constexpr double kMinHessian = 1e-16;

void softmax_rows(Matrix& logits) {
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        double* row = logits.row(r);
        double mx = row[0];
        for (std::size_t k = 1; k < logits.cols(); ++k) mx = std::max(mx, row[k]);
        double z = 0.0;
        for (std::size_t k = 0; k < logits.cols(); ++k) {
            row[k] = std::exp(row[k] - mx);
            z += row[k];
        }
        for (std::size_t k = 0; k < logits.cols(); ++k) row[k] /= z;
    }
}

}  // namespace

double GbtClassifier::Tree::predict_row(const double* row) const {
    int at = 0;
    while (nodes[at].feature >= 0)
        at = row[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left : nodes[at].right;
    return nodes[at].value;
}

void GbtClassifier::fit(const Matrix& features, const std::vector<int>& labels,
                        std::size_t classes, const GbtConfig& config) {
    const std::size_t n = features.rows();
    const std::size_t f = features.cols();
    classes_ = classes;
    config_ = config;
    rounds_.clear();
    if (n == 0 || classes <= 1) return;

    std::vector<std::vector<std::uint32_t>> order(f);
    for (std::size_t j = 0; j < f; ++j) {
        order[j].resize(n);
        std::iota(order[j].begin(), order[j].end(), 0u);
        std::stable_sort(order[j].begin(), order[j].end(), [&](std::uint32_t a, std::uint32_t b) {
            return features(a, j) < features(b, j);
        });
    }

    Matrix logits(n, classes);
    std::vector<double> g(n), h(n);
    std::vector<std::uint8_t> in_node(n, 0);

    for (std::size_t round = 0; round < config.rounds; ++round) {
        Matrix proba = logits;
        softmax_rows(proba);
        rounds_.emplace_back();
        for (std::size_t k = 0; k < classes; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                const double p = proba(i, k);
                g[i] = p - (labels[i] == static_cast<int>(k) ? 1.0 : 0.0);
                h[i] = std::max(p * (1.0 - p), kMinHessian);
            }
            Tree tree;
            std::vector<std::uint32_t> all(n);
            std::iota(all.begin(), all.end(), 0u);

            // Recursive exact greedy construction.
            auto build = [&](auto&& self, std::vector<std::uint32_t>& rows,
                             std::size_t depth) -> int {
                double gsum = 0.0, hsum = 0.0;
                for (std::uint32_t r : rows) {
                    gsum += g[r];
                    hsum += h[r];
                }
                auto make_leaf = [&]() {
                    const double value = config.learning_rate * (-gsum / (hsum + config.l2));
                    for (std::uint32_t r : rows) logits(r, k) += value;
                    tree.nodes.push_back({-1, 0.0, -1, -1, value});
                    return static_cast<int>(tree.nodes.size() - 1);
                };
                if (depth >= config.max_depth || rows.size() < 2) return make_leaf();

                const double base = gsum * gsum / (hsum + config.l2);
                int best_feature = -1;
                double best_threshold = 0.0;
                double best_gain = kMinGain;
                for (std::uint32_t r : rows) in_node[r] = 1;
                for (std::size_t j = 0; j < f; ++j) {
                    double gl = 0.0, hl = 0.0;
                    bool have_prev = false;
                    double prev = 0.0;
                    for (std::uint32_t r : order[j]) {
                        if (!in_node[r]) continue;
                        const double v = features(r, j);
                        if (have_prev && v > prev) {
                            const double gr = gsum - gl, hr = hsum - hl;
                            const double gain = gl * gl / (hl + config.l2) +
                                                gr * gr / (hr + config.l2) - base;
                            if (gain > best_gain) {
                                best_gain = gain;
                                best_feature = static_cast<int>(j);
                                best_threshold = prev + (v - prev) / 2.0;
                            }
                        }
                        gl += g[r];
                        hl += h[r];
                        have_prev = true;
                        prev = v;
                    }
                }
                for (std::uint32_t r : rows) in_node[r] = 0;
                if (best_feature < 0) return make_leaf();

                std::vector<std::uint32_t> left, right;
                left.reserve(rows.size());
                right.reserve(rows.size());
                for (std::uint32_t r : rows)
                    (features(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left
                                                                                           : right)
                        .push_back(r);
                if (left.empty() || right.empty()) return make_leaf();
                rows.clear();
                rows.shrink_to_fit();
                tree.nodes.push_back({best_feature, best_threshold, -1, -1, 0.0});
                const int at = static_cast<int>(tree.nodes.size() - 1);
                const int l = self(self, left, depth + 1);
                const int rgt = self(self, right, depth + 1);
                tree.nodes[at].left = l;
                tree.nodes[at].right = rgt;
                return at;
            };
            build(build, all, 0);
            rounds_.back().push_back(std::move(tree));
        }
    }
}

Matrix GbtClassifier::predict_proba(const Matrix& features) const {
    const std::size_t n = features.rows();
    if (classes_ <= 1) {
        Matrix proba(n, classes_ == 0 ? 0 : 1);
        proba.fill(1.0);
        return proba;
    }
    Matrix logits(n, classes_);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = features.row(i);
        for (const std::vector<Tree>& round : rounds_)
            for (std::size_t k = 0; k < classes_; ++k)
                logits(i, k) += round[k].predict_row(row);
    }
    softmax_rows(logits);
    return logits;
}

std::vector<int> GbtClassifier::predict(const Matrix& features) const {
    Matrix proba = predict_proba(features);
    std::vector<int> out(features.rows(), 0);
    for (std::size_t i = 0; i < proba.rows(); ++i) {
        int best = 0;
        for (std::size_t k = 1; k < proba.cols(); ++k)
            if (proba(i, k) > proba(i, best)) best = static_cast<int>(k);
        out[i] = best;
    }
    return out;
}

}  // namespace relsynth
