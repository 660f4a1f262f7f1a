#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "relsynth/tensor.hpp"

// Named parameter store, layer builders over the tape, and the optimizer.
// Layers here are construction helpers: each call appends the layer's forward
// graph to a tape whose leaves were bound from the ParamSet.

namespace relsynth {

class NonFiniteGradient : public std::runtime_error {
public:
    explicit NonFiniteGradient(const std::string& param)
        : std::runtime_error("non-finite gradient for parameter " + param) {}
};

/// Flat list of named float64 arrays. Registration order is the canonical
/// layout for checkpoints and optimizer state.
class ParamSet {
public:
    std::size_t add(std::string name, Matrix value);
    std::size_t count() const { return values_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    Matrix& value(std::size_t i) { return values_[i]; }
    const Matrix& value(std::size_t i) const { return values_[i]; }
    std::size_t scalar_count() const;

private:
    std::vector<std::string> names_;
    std::vector<Matrix> values_;
};

/// Registers every parameter as a tape leaf, index-aligned with the set.
std::vector<Tape::NodeId> bind_params(Tape& tape, const ParamSet& params);

/// Adaptive-moment descent with bias correction. Moment buffers are allocated
/// lazily on the first step and keyed by parameter index.
class AdamOptimizer {
public:
    explicit AdamOptimizer(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    /// Applies one update from the gradients the tape holds for the bound
    /// leaves. Throws NonFiniteGradient before touching any parameter.
    void step(ParamSet& params, const Tape& tape, const std::vector<Tape::NodeId>& bound);

private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<Matrix> m_, v_;
};

struct LinearLayer {
    std::size_t w = 0;  // in x out
    std::size_t b = 0;  // 1 x out
};

LinearLayer make_linear(ParamSet& params, const std::string& prefix, std::size_t in,
                        std::size_t out, RandomStream& rng);
Tape::NodeId linear_forward(Tape& tape, const std::vector<Tape::NodeId>& bound,
                            const LinearLayer& layer, Tape::NodeId x);

/// Gate convention: z = sigmoid(x Wz + h Uz + bz), r likewise, candidate
/// h~ = tanh(x W + (r * h) U + b), output h' = (1 - z) * h + z * h~.
struct GruCell {
    std::size_t wz = 0, uz = 0, bz = 0;
    std::size_t wr = 0, ur = 0, br = 0;
    std::size_t wh = 0, uh = 0, bh = 0;
};

GruCell make_gru(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t hidden,
                 RandomStream& rng);
Tape::NodeId gru_forward(Tape& tape, const std::vector<Tape::NodeId>& bound, const GruCell& cell,
                         Tape::NodeId x, Tape::NodeId h);

/// Non-tape helpers for the Gaussian head, shared by tests and synthesis.
Matrix sample_reparameterized(const Matrix& mu, const Matrix& logvar, RandomStream& rng);
double kl_to_standard_normal(const Matrix& mu, const Matrix& logvar);

}  // namespace relsynth
