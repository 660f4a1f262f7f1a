#include "relsynth/nn.hpp"

#include <cmath>

namespace relsynth {

std::size_t ParamSet::add(std::string name, Matrix value) {
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return values_.size() - 1;
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const Matrix& m : values_) n += m.size();
    return n;
}

std::vector<Tape::NodeId> bind_params(Tape& tape, const ParamSet& params) {
    std::vector<Tape::NodeId> bound;
    bound.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) bound.push_back(tape.leaf(params.value(i)));
    return bound;
}

void AdamOptimizer::step(ParamSet& params, const Tape& tape,
                         const std::vector<Tape::NodeId>& bound) {
    if (bound.size() != params.count()) throw ShapeError("optimizer: binding out of sync");
    for (std::size_t i = 0; i < params.count(); ++i)
        if (!tape.grad(bound[i]).all_finite()) throw NonFiniteGradient(params.name(i));
    if (m_.empty()) {
        m_.reserve(params.count());
        v_.reserve(params.count());
        for (std::size_t i = 0; i < params.count(); ++i) {
            m_.emplace_back(params.value(i).rows(), params.value(i).cols());
            v_.emplace_back(params.value(i).rows(), params.value(i).cols());
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.count(); ++i) {
        Matrix& p = params.value(i);
        const Matrix& g = tape.grad(bound[i]);
        Matrix& m = m_[i];
        Matrix& v = v_[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double gk = g.data()[k];
            m.data()[k] = beta1_ * m.data()[k] + (1.0 - beta1_) * gk;
            v.data()[k] = beta2_ * v.data()[k] + (1.0 - beta2_) * gk * gk;
            const double mhat = m.data()[k] / c1;
            const double vhat = v.data()[k] / c2;
            p.data()[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

namespace {

Matrix gaussian_init(std::size_t rows, std::size_t cols, double scale, RandomStream& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.gaussian();
    return m;
}

}  // namespace

LinearLayer make_linear(ParamSet& params, const std::string& prefix, std::size_t in,
                        std::size_t out, RandomStream& rng) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    LinearLayer layer;
    layer.w = params.add(prefix + ".w", gaussian_init(in, out, scale, rng));
    layer.b = params.add(prefix + ".b", Matrix(1, out));
    return layer;
}

Tape::NodeId linear_forward(Tape& tape, const std::vector<Tape::NodeId>& bound,
                            const LinearLayer& layer, Tape::NodeId x) {
    return tape.add_row(tape.matmul(x, bound[layer.w]), bound[layer.b]);
}

GruCell make_gru(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t hidden,
                 RandomStream& rng) {
    const double sx = 1.0 / std::sqrt(static_cast<double>(in));
    const double sh = 1.0 / std::sqrt(static_cast<double>(hidden));
    GruCell cell;
    cell.wz = params.add(prefix + ".wz", gaussian_init(in, hidden, sx, rng));
    cell.uz = params.add(prefix + ".uz", gaussian_init(hidden, hidden, sh, rng));
    cell.bz = params.add(prefix + ".bz", Matrix(1, hidden));
    cell.wr = params.add(prefix + ".wr", gaussian_init(in, hidden, sx, rng));
    cell.ur = params.add(prefix + ".ur", gaussian_init(hidden, hidden, sh, rng));
    cell.br = params.add(prefix + ".br", Matrix(1, hidden));
    cell.wh = params.add(prefix + ".wh", gaussian_init(in, hidden, sx, rng));
    cell.uh = params.add(prefix + ".uh", gaussian_init(hidden, hidden, sh, rng));
    cell.bh = params.add(prefix + ".bh", Matrix(1, hidden));
    return cell;
}

Tape::NodeId gru_forward(Tape& tape, const std::vector<Tape::NodeId>& bound, const GruCell& cell,
                         Tape::NodeId x, Tape::NodeId h) {
    auto gate = [&](std::size_t w, std::size_t u, std::size_t b) {
        return tape.sigmoid(tape.add_row(
            tape.add(tape.matmul(x, bound[w]), tape.matmul(h, bound[u])), bound[b]));
    };
    Tape::NodeId z = gate(cell.wz, cell.uz, cell.bz);
    Tape::NodeId r = gate(cell.wr, cell.ur, cell.br);
    Tape::NodeId cand = tape.tanh(tape.add_row(
        tape.add(tape.matmul(x, bound[cell.wh]), tape.matmul(tape.hadamard(r, h), bound[cell.uh])),
        bound[cell.bh]));
    // (1 - z) * h + z * cand == h + z * (cand - h)
    return tape.add(h, tape.hadamard(z, tape.sub(cand, h)));
}

Matrix sample_reparameterized(const Matrix& mu, const Matrix& logvar, RandomStream& rng) {
    if (!mu.same_shape(logvar)) throw ShapeError("sample: shape mismatch");
    Matrix z = mu;
    for (std::size_t i = 0; i < z.size(); ++i)
        z.data()[i] += std::exp(0.5 * logvar.data()[i]) * rng.gaussian();
    return z;
}

double kl_to_standard_normal(const Matrix& mu, const Matrix& logvar) {
    if (!mu.same_shape(logvar)) throw ShapeError("kl: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double m = mu.data()[i], l = logvar.data()[i];
        acc += 0.5 * (m * m + std::exp(l) - 1.0 - l);
    }
    return acc;
}

}  // namespace relsynth
