#include "relsynth/tensor.hpp"

#include <cmath>

namespace relsynth {

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: " + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()));
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

double RandomStream::uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double RandomStream::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint32_t RandomStream::below(std::uint32_t n) {
    return static_cast<std::uint32_t>((static_cast<unsigned __int128>(gen_()) * n) >> 64);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master ^ (stream * 0x9E3779B97F4A7C15ULL);
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Tape::NodeId Tape::push(Matrix value, std::function<void(Tape&)> back) {
    nodes_.push_back({std::move(value), Matrix(), std::move(back)});
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::leaf(Matrix value) { return push(std::move(value), {}); }

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    Matrix c = relsynth::matmul(value(a), value(b));
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, b, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        const Matrix& av = t.value(a);
        const Matrix& bv = t.value(b);
        Matrix& ga = t.grad_ref(a);
        Matrix& gb = t.grad_ref(b);
        // ga += g * b^T
        for (std::size_t i = 0; i < av.rows(); ++i)
            for (std::size_t k = 0; k < av.cols(); ++k) {
                double acc = 0.0;
                const double* grow = g.row(i);
                const double* brow = bv.row(k);
                for (std::size_t j = 0; j < bv.cols(); ++j) acc += grow[j] * brow[j];
                ga(i, k) += acc;
            }
        // gb += a^T * g
        for (std::size_t i = 0; i < av.rows(); ++i) {
            const double* arow = av.row(i);
            const double* grow = g.row(i);
            for (std::size_t k = 0; k < av.cols(); ++k) {
                const double avk = arow[k];
                if (avk == 0.0) continue;
                double* gbrow = gb.row(k);
                for (std::size_t j = 0; j < bv.cols(); ++j) gbrow[j] += avk * grow[j];
            }
        }
    };
    return id;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    if (!value(a).same_shape(value(b))) throw ShapeError("add: shape mismatch");
    Matrix c = value(a);
    const Matrix& bv = value(b);
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += bv.data()[i];
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, b, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        Matrix& ga = t.grad_ref(a);
        Matrix& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i];
            gb.data()[i] += g.data()[i];
        }
    };
    return id;
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
    if (!value(a).same_shape(value(b))) throw ShapeError("sub: shape mismatch");
    Matrix c = value(a);
    const Matrix& bv = value(b);
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= bv.data()[i];
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, b, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        Matrix& ga = t.grad_ref(a);
        Matrix& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i];
            gb.data()[i] -= g.data()[i];
        }
    };
    return id;
}

Tape::NodeId Tape::hadamard(NodeId a, NodeId b) {
    if (!value(a).same_shape(value(b))) throw ShapeError("hadamard: shape mismatch");
    Matrix c = value(a);
    const Matrix& bv = value(b);
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= bv.data()[i];
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, b, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        const Matrix& av = t.value(a);
        const Matrix& bv2 = t.value(b);
        Matrix& ga = t.grad_ref(a);
        Matrix& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i] * bv2.data()[i];
            gb.data()[i] += g.data()[i] * av.data()[i];
        }
    };
    return id;
}

Tape::NodeId Tape::add_row(NodeId a, NodeId row) {
    const Matrix& av = value(a);
    const Matrix& rv = value(row);
    if (rv.rows() != 1 || rv.cols() != av.cols()) throw ShapeError("add_row: bad row shape");
    Matrix c = av;
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) += rv(0, j);
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, row, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        Matrix& ga = t.grad_ref(a);
        Matrix& gr = t.grad_ref(row);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i];
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
    };
    return id;
}

Tape::NodeId Tape::affine(NodeId a, double k, double c0) {
    Matrix c = value(a);
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] = k * c.data()[i] + c0;
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, k, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        Matrix& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += k * g.data()[i];
    };
    return id;
}

Tape::NodeId Tape::sigmoid(NodeId a) {
    Matrix c = value(a);
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] = 1.0 / (1.0 + std::exp(-c.data()[i]));
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        const Matrix& s = t.value(id);
        Matrix& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double sv = s.data()[i];
            ga.data()[i] += g.data()[i] * sv * (1.0 - sv);
        }
    };
    return id;
}

Tape::NodeId Tape::tanh(NodeId a) {
    Matrix c = value(a);
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] = std::tanh(c.data()[i]);
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        const Matrix& s = t.value(id);
        Matrix& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double tv = s.data()[i];
            ga.data()[i] += g.data()[i] * (1.0 - tv * tv);
        }
    };
    return id;
}

Tape::NodeId Tape::clamp(NodeId a, double lo, double hi) {
    Matrix c = value(a);
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] = std::min(hi, std::max(lo, c.data()[i]));
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, lo, hi, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        const Matrix& av = t.value(a);
        Matrix& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (av.data()[i] > lo && av.data()[i] < hi) ga.data()[i] += g.data()[i];
    };
    return id;
}

Tape::NodeId Tape::row_slice(NodeId a, std::size_t r0, std::size_t r1) {
    const Matrix& av = value(a);
    if (r0 > r1 || r1 > av.rows()) throw ShapeError("row_slice: bad range");
    Matrix c(r1 - r0, av.cols());
    for (std::size_t i = r0; i < r1; ++i)
        std::copy(av.row(i), av.row(i) + av.cols(), c.row(i - r0));
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, r0, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        Matrix& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(r0 + i, j) += g(i, j);
    };
    return id;
}

Tape::NodeId Tape::col_slice(NodeId a, std::size_t c0, std::size_t c1) {
    const Matrix& av = value(a);
    if (c0 > c1 || c1 > av.cols()) throw ShapeError("col_slice: bad range");
    Matrix c(av.rows(), c1 - c0);
    for (std::size_t i = 0; i < av.rows(); ++i)
        std::copy(av.row(i) + c0, av.row(i) + c1, c.row(i));
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, c0, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        Matrix& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, c0 + j) += g(i, j);
    };
    return id;
}

Tape::NodeId Tape::vconcat(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ShapeError("vconcat: no parts");
    std::size_t cols = value(parts[0]).cols();
    std::size_t rows = 0;
    for (NodeId p : parts) {
        if (value(p).cols() != cols) throw ShapeError("vconcat: column mismatch");
        rows += value(p).rows();
    }
    Matrix c(rows, cols);
    std::size_t at = 0;
    for (NodeId p : parts) {
        const Matrix& pv = value(p);
        std::copy(pv.data(), pv.data() + pv.size(), c.row(at));
        at += pv.rows();
    }
    NodeId id = push(std::move(c), {});
    std::vector<NodeId> captured = parts;
    nodes_[id].back = [captured, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        std::size_t at = 0;
        for (NodeId p : captured) {
            Matrix& gp = t.grad_ref(p);
            for (std::size_t i = 0; i < gp.rows(); ++i)
                for (std::size_t j = 0; j < gp.cols(); ++j) gp(i, j) += g(at + i, j);
            at += gp.rows();
        }
    };
    return id;
}

Tape::NodeId Tape::mul_columns(NodeId a, Matrix column_weights) {
    const Matrix& av = value(a);
    if (column_weights.rows() != 1 || column_weights.cols() != av.cols())
        throw ShapeError("mul_columns: bad weight shape");
    Matrix c = av;
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) *= column_weights(0, j);
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, w = std::move(column_weights), id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        Matrix& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += g(i, j) * w(0, j);
    };
    return id;
}

Tape::NodeId Tape::neighbor_sum(NodeId a, const NeighborLists& adj) {
    const Matrix& av = value(a);
    if (adj.vertex_count() != av.rows()) throw ShapeError("neighbor_sum: vertex count mismatch");
    Matrix c(av.rows(), av.cols());
    for (std::size_t t = 0; t < av.rows(); ++t) {
        double* crow = c.row(t);
        for (std::uint32_t e = adj.offsets[t]; e < adj.offsets[t + 1]; ++e) {
            const double* srow = av.row(adj.neighbors[e]);
            for (std::size_t j = 0; j < av.cols(); ++j) crow[j] += srow[j];
        }
    }
    NodeId id = push(std::move(c), {});
    const NeighborLists* adj_ptr = &adj;  // caller keeps the lists alive past backward()
    nodes_[id].back = [a, adj_ptr, id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        Matrix& ga = t.grad_ref(a);
        // Undirected adjacency: the transpose of the aggregation is itself.
        for (std::size_t v = 0; v < g.rows(); ++v) {
            double* garow = ga.row(v);
            for (std::uint32_t e = adj_ptr->offsets[v]; e < adj_ptr->offsets[v + 1]; ++e) {
                const double* grow = g.row(adj_ptr->neighbors[e]);
                for (std::size_t j = 0; j < g.cols(); ++j) garow[j] += grow[j];
            }
        }
    };
    return id;
}

Tape::NodeId Tape::sum_all(NodeId a) {
    const Matrix& av = value(a);
    Matrix c(1, 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += av.data()[i];
    c(0, 0) = acc;
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [a, id](Tape& t) {
        double g = t.nodes_[id].grad(0, 0);
        Matrix& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g;
    };
    return id;
}

Tape::NodeId Tape::reparam_sample(NodeId mu, NodeId logvar, Matrix eps) {
    const Matrix& mv = value(mu);
    const Matrix& lv = value(logvar);
    if (!mv.same_shape(lv) || !mv.same_shape(eps)) throw ShapeError("reparam_sample: shape mismatch");
    Matrix c = mv;
    for (std::size_t i = 0; i < c.size(); ++i)
        c.data()[i] += std::exp(0.5 * lv.data()[i]) * eps.data()[i];
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [mu, logvar, e = std::move(eps), id](Tape& t) {
        const Matrix& g = t.nodes_[id].grad;
        const Matrix& lvv = t.value(logvar);
        Matrix& gm = t.grad_ref(mu);
        Matrix& gl = t.grad_ref(logvar);
        for (std::size_t i = 0; i < g.size(); ++i) {
            gm.data()[i] += g.data()[i];
            gl.data()[i] += g.data()[i] * 0.5 * std::exp(0.5 * lvv.data()[i]) * e.data()[i];
        }
    };
    return id;
}

Tape::NodeId Tape::kl_standard_normal(NodeId mu, NodeId logvar) {
    const Matrix& mv = value(mu);
    const Matrix& lv = value(logvar);
    if (!mv.same_shape(lv)) throw ShapeError("kl_standard_normal: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < mv.size(); ++i) {
        double m = mv.data()[i], l = lv.data()[i];
        acc += 0.5 * (m * m + std::exp(l) - 1.0 - l);
    }
    Matrix c(1, 1);
    c(0, 0) = acc;
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [mu, logvar, id](Tape& t) {
        double g = t.nodes_[id].grad(0, 0);
        const Matrix& mv2 = t.value(mu);
        const Matrix& lv2 = t.value(logvar);
        Matrix& gm = t.grad_ref(mu);
        Matrix& gl = t.grad_ref(logvar);
        for (std::size_t i = 0; i < mv2.size(); ++i) {
            gm.data()[i] += g * mv2.data()[i];
            gl.data()[i] += g * 0.5 * (std::exp(lv2.data()[i]) - 1.0);
        }
    };
    return id;
}

Tape::NodeId Tape::softmax_cross_entropy(NodeId logits, Matrix targets) {
    const Matrix& lv = value(logits);
    if (!lv.same_shape(targets)) throw ShapeError("softmax_cross_entropy: shape mismatch");
    Matrix soft(lv.rows(), lv.cols());
    double acc = 0.0;
    for (std::size_t r = 0; r < lv.rows(); ++r) {
        double mx = lv(r, 0);
        for (std::size_t j = 1; j < lv.cols(); ++j) mx = std::max(mx, lv(r, j));
        double z = 0.0;
        for (std::size_t j = 0; j < lv.cols(); ++j) z += std::exp(lv(r, j) - mx);
        double logz = std::log(z) + mx;
        for (std::size_t j = 0; j < lv.cols(); ++j) {
            soft(r, j) = std::exp(lv(r, j) - logz);
            acc -= targets(r, j) * (lv(r, j) - logz);
        }
    }
    Matrix c(1, 1);
    c(0, 0) = acc;
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [logits, tg = std::move(targets), sm = std::move(soft), id](Tape& t) {
        double g = t.nodes_[id].grad(0, 0);
        Matrix& gl = t.grad_ref(logits);
        for (std::size_t r = 0; r < gl.rows(); ++r) {
            double tsum = 0.0;
            for (std::size_t j = 0; j < gl.cols(); ++j) tsum += tg(r, j);
            for (std::size_t j = 0; j < gl.cols(); ++j)
                gl(r, j) += g * (sm(r, j) * tsum - tg(r, j));
        }
    };
    return id;
}

Tape::NodeId Tape::weighted_squared_error(NodeId pred, Matrix target, Matrix column_weights) {
    const Matrix& pv = value(pred);
    if (!pv.same_shape(target)) throw ShapeError("weighted_squared_error: shape mismatch");
    if (column_weights.rows() != 1 || column_weights.cols() != pv.cols())
        throw ShapeError("weighted_squared_error: bad weight shape");
    double acc = 0.0;
    for (std::size_t r = 0; r < pv.rows(); ++r)
        for (std::size_t j = 0; j < pv.cols(); ++j) {
            double d = pv(r, j) - target(r, j);
            acc += column_weights(0, j) * d * d;
        }
    Matrix c(1, 1);
    c(0, 0) = acc;
    NodeId id = push(std::move(c), {});
    nodes_[id].back = [pred, tg = std::move(target), w = std::move(column_weights), id](Tape& t) {
        double g = t.nodes_[id].grad(0, 0);
        const Matrix& pv2 = t.value(pred);
        Matrix& gp = t.grad_ref(pred);
        for (std::size_t r = 0; r < pv2.rows(); ++r)
            for (std::size_t j = 0; j < pv2.cols(); ++j)
                gp(r, j) += g * 2.0 * w(0, j) * (pv2(r, j) - tg(r, j));
    };
    return id;
}

void Tape::backward(NodeId loss) {
    const Matrix& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward: loss must be 1x1");
    for (auto& n : nodes_) {
        n.grad = Matrix(n.value.rows(), n.value.cols());
    }
    nodes_[loss].grad(0, 0) = 1.0;
    for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id)
        if (nodes_[id].back) nodes_[id].back(*this);
}

}  // namespace relsynth
