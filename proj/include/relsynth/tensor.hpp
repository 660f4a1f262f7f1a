#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

// Minimal float64 numeric kernel: dense row-major matrices, a seeded random
// stream with reproducible draws, and a define-by-run reverse-mode tape over
// the handful of operations the model composes. Every differentiable op is
// finite-difference checked in the tests.

namespace relsynth {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix row_vector(std::initializer_list<double> values) {
        Matrix m(1, values.size());
        std::size_t i = 0;
        for (double v : values) m.data_[i++] = v;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    bool all_finite() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);

/// Deterministic seeded stream; gaussians come from Box-Muller so draws are
/// identical across standard libraries.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    double uniform();   // [0, 1)
    double gaussian();  // N(0, 1)
    std::uint64_t next_u64() { return gen_(); }
    std::uint32_t below(std::uint32_t n);  // uniform in [0, n)

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(static_cast<std::uint32_t>(i))]);
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Stable per-stage seed derivation from one master seed (documented in the
/// README): splitmix64 over master xor a stream tag.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// CSR neighbor lists for the aggregation op.
struct NeighborLists {
    std::vector<std::uint32_t> offsets;    // size = vertices + 1
    std::vector<std::uint32_t> neighbors;  // concatenated, sorted per vertex
    std::size_t vertex_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

class Tape {
public:
    using NodeId = std::int32_t;

    NodeId leaf(Matrix value);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId hadamard(NodeId a, NodeId b);
    NodeId add_row(NodeId a, NodeId row);           // broadcast a 1 x c row (e.g. bias)
    NodeId affine(NodeId a, double k, double c);    // k * a + c, elementwise
    NodeId sigmoid(NodeId a);
    NodeId tanh(NodeId a);
    NodeId clamp(NodeId a, double lo, double hi);   // gradient passes inside the range
    NodeId row_slice(NodeId a, std::size_t r0, std::size_t r1);
    NodeId col_slice(NodeId a, std::size_t c0, std::size_t c1);
    NodeId vconcat(const std::vector<NodeId>& parts);
    NodeId mul_columns(NodeId a, Matrix column_weights);  // constant 1 x c weights
    NodeId neighbor_sum(NodeId a, const NeighborLists& adj);
    NodeId sum_all(NodeId a);  // 1 x 1

    /// z = mu + exp(logvar / 2) * eps with eps held constant.
    NodeId reparam_sample(NodeId mu, NodeId logvar, Matrix eps);
    /// Sum over all entries of (mu^2 + exp(logvar) - 1 - logvar) / 2.
    NodeId kl_standard_normal(NodeId mu, NodeId logvar);
    /// Row-wise softmax cross entropy against constant targets, summed over
    /// rows. An all-zero target row contributes nothing.
    NodeId softmax_cross_entropy(NodeId logits, Matrix targets);
    /// Sum over entries of weight[c] * (pred - target)^2.
    NodeId weighted_squared_error(NodeId pred, Matrix target, Matrix column_weights);

    const Matrix& value(NodeId id) const { return nodes_[id].value; }
    const Matrix& grad(NodeId id) const { return nodes_[id].grad; }

    /// Reverse pass from a scalar node; fills grad buffers for every node.
    void backward(NodeId loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&)> back;  // empty for leaves
    };
    NodeId push(Matrix value, std::function<void(Tape&)> back);
    Matrix& grad_ref(NodeId id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
};

class ShapeError : public std::logic_error {
public:
    explicit ShapeError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace relsynth
