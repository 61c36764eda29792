#include "vad/autodiff.hpp"

#include <cmath>

namespace vad::ad {

namespace {

void ensure_grad(Tensor& grad, const Tensor& like) {
    if (grad.size() != like.size()) grad = Tensor(like.shape());
}

}  // namespace

int Tape::push(Tensor val, bool requires_grad, std::function<void(Tape&)> back) {
    Node n;
    n.val = std::move(val);
    n.requires_grad = requires_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Value Tape::leaf(Tensor value, bool requires_grad) {
    return {push(std::move(value), requires_grad, nullptr)};
}

Value Tape::matmul(Value a, Value b) {
    const Tensor& ta = nodes_[a.idx].val;
    const Tensor& tb = nodes_[b.idx].val;
    Tensor out({ta.rows(), tb.cols()});
    matmul_into(ta, tb, out, false);
    bool rg = nodes_[a.idx].requires_grad || nodes_[b.idx].requires_grad;
    int ai = a.idx, bi = b.idx;
    int oi = push(std::move(out), rg, nullptr);
    nodes_[oi].back = [ai, bi, oi](Tape& t) {
        const Tensor& go = t.node(oi).grad;
        Node& na = t.node(ai);
        Node& nb = t.node(bi);
        if (na.requires_grad) {
            ensure_grad(na.grad, na.val);
            matmul_a_bt_into(go, nb.val, na.grad, true);  // dA = dY * B^T
        }
        if (nb.requires_grad) {
            ensure_grad(nb.grad, nb.val);
            matmul_at_b_into(na.val, go, nb.grad, true);  // dB = A^T * dY
        }
    };
    return {oi};
}

Value Tape::add(Value a, Value b) {
    const Tensor& ta = nodes_[a.idx].val;
    const Tensor& tb = nodes_[b.idx].val;
    if (!ta.same_shape(tb)) throw ConfigError("add: shape mismatch");
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta[i] + tb[i];
    bool rg = nodes_[a.idx].requires_grad || nodes_[b.idx].requires_grad;
    int ai = a.idx, bi = b.idx;
    int oi = push(std::move(out), rg, nullptr);
    nodes_[oi].back = [ai, bi, oi](Tape& t) {
        const Tensor& go = t.node(oi).grad;
        for (int pi : {ai, bi}) {
            Node& np = t.node(pi);
            if (!np.requires_grad) continue;
            ensure_grad(np.grad, np.val);
            for (std::size_t i = 0; i < go.size(); ++i) np.grad[i] += go[i];
        }
    };
    return {oi};
}

Value Tape::sub(Value a, Value b) {
    const Tensor& ta = nodes_[a.idx].val;
    const Tensor& tb = nodes_[b.idx].val;
    if (!ta.same_shape(tb)) throw ConfigError("sub: shape mismatch");
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta[i] - tb[i];
    bool rg = nodes_[a.idx].requires_grad || nodes_[b.idx].requires_grad;
    int ai = a.idx, bi = b.idx;
    int oi = push(std::move(out), rg, nullptr);
    nodes_[oi].back = [ai, bi, oi](Tape& t) {
        const Tensor& go = t.node(oi).grad;
        Node& na = t.node(ai);
        if (na.requires_grad) {
            ensure_grad(na.grad, na.val);
            for (std::size_t i = 0; i < go.size(); ++i) na.grad[i] += go[i];
        }
        Node& nb = t.node(bi);
        if (nb.requires_grad) {
            ensure_grad(nb.grad, nb.val);
            for (std::size_t i = 0; i < go.size(); ++i) nb.grad[i] -= go[i];
        }
    };
    return {oi};
}

Value Tape::mul(Value a, Value b) {
    const Tensor& ta = nodes_[a.idx].val;
    const Tensor& tb = nodes_[b.idx].val;
    if (!ta.same_shape(tb)) throw ConfigError("mul: shape mismatch");
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta[i] * tb[i];
    bool rg = nodes_[a.idx].requires_grad || nodes_[b.idx].requires_grad;
    int ai = a.idx, bi = b.idx;
    int oi = push(std::move(out), rg, nullptr);
    nodes_[oi].back = [ai, bi, oi](Tape& t) {
        const Tensor& go = t.node(oi).grad;
        Node& na = t.node(ai);
        Node& nb = t.node(bi);
        if (na.requires_grad) {
            ensure_grad(na.grad, na.val);
            for (std::size_t i = 0; i < go.size(); ++i) na.grad[i] += go[i] * nb.val[i];
        }
        if (nb.requires_grad) {
            ensure_grad(nb.grad, nb.val);
            for (std::size_t i = 0; i < go.size(); ++i) nb.grad[i] += go[i] * na.val[i];
        }
    };
    return {oi};
}

Value Tape::add_rowvec(Value a, Value bias) {
    const Tensor& ta = nodes_[a.idx].val;
    const Tensor& tb = nodes_[bias.idx].val;
    const std::size_t m = ta.rows(), n = ta.cols();
    if (tb.size() != n) throw ConfigError("add_rowvec: bias length mismatch");
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at2(i, j) = ta.at2(i, j) + tb[j];
    bool rg = nodes_[a.idx].requires_grad || nodes_[bias.idx].requires_grad;
    int ai = a.idx, bi = bias.idx;
    int oi = push(std::move(out), rg, nullptr);
    nodes_[oi].back = [ai, bi, oi, m, n](Tape& t) {
        const Tensor& go = t.node(oi).grad;
        Node& na = t.node(ai);
        if (na.requires_grad) {
            ensure_grad(na.grad, na.val);
            for (std::size_t i = 0; i < go.size(); ++i) na.grad[i] += go[i];
        }
        Node& nb = t.node(bi);
        if (nb.requires_grad) {
            ensure_grad(nb.grad, nb.val);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) nb.grad[j] += go.at2(i, j);
        }
    };
    return {oi};
}

Value Tape::tanh(Value a) {
    const Tensor& ta = nodes_[a.idx].val;
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(ta[i]);
    int ai = a.idx;
    int oi = push(std::move(out), nodes_[a.idx].requires_grad, nullptr);
    nodes_[oi].back = [ai, oi](Tape& t) {
        Node& na = t.node(ai);
        if (!na.requires_grad) return;
        const Tensor& go = t.node(oi).grad;
        const Tensor& y = t.node(oi).val;
        ensure_grad(na.grad, na.val);
        for (std::size_t i = 0; i < go.size(); ++i) na.grad[i] += go[i] * (1.0 - y[i] * y[i]);
    };
    return {oi};
}

Value Tape::exp(Value a) {
    const Tensor& ta = nodes_[a.idx].val;
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(ta[i]);
    int ai = a.idx;
    int oi = push(std::move(out), nodes_[a.idx].requires_grad, nullptr);
    nodes_[oi].back = [ai, oi](Tape& t) {
        Node& na = t.node(ai);
        if (!na.requires_grad) return;
        const Tensor& go = t.node(oi).grad;
        const Tensor& y = t.node(oi).val;
        ensure_grad(na.grad, na.val);
        for (std::size_t i = 0; i < go.size(); ++i) na.grad[i] += go[i] * y[i];
    };
    return {oi};
}

Value Tape::scale(Value a, double c) {
    const Tensor& ta = nodes_[a.idx].val;
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta[i] * c;
    int ai = a.idx;
    int oi = push(std::move(out), nodes_[a.idx].requires_grad, nullptr);
    nodes_[oi].back = [ai, oi, c](Tape& t) {
        Node& na = t.node(ai);
        if (!na.requires_grad) return;
        const Tensor& go = t.node(oi).grad;
        ensure_grad(na.grad, na.val);
        for (std::size_t i = 0; i < go.size(); ++i) na.grad[i] += go[i] * c;
    };
    return {oi};
}

Value Tape::add_const(Value a, double c) {
    const Tensor& ta = nodes_[a.idx].val;
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta[i] + c;
    int ai = a.idx;
    int oi = push(std::move(out), nodes_[a.idx].requires_grad, nullptr);
    nodes_[oi].back = [ai, oi](Tape& t) {
        Node& na = t.node(ai);
        if (!na.requires_grad) return;
        const Tensor& go = t.node(oi).grad;
        ensure_grad(na.grad, na.val);
        for (std::size_t i = 0; i < go.size(); ++i) na.grad[i] += go[i];
    };
    return {oi};
}

Value Tape::row_sum(Value a) {
    const Tensor& ta = nodes_[a.idx].val;
    const std::size_t m = ta.rows(), n = ta.cols();
    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += ta.at2(i, j);
        out[i] = s;
    }
    int ai = a.idx;
    int oi = push(std::move(out), nodes_[a.idx].requires_grad, nullptr);
    nodes_[oi].back = [ai, oi, m, n](Tape& t) {
        Node& na = t.node(ai);
        if (!na.requires_grad) return;
        const Tensor& go = t.node(oi).grad;
        ensure_grad(na.grad, na.val);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) na.grad[i * n + j] += go[i];
    };
    return {oi};
}

Value Tape::mean_all(Value a) {
    const Tensor& ta = nodes_[a.idx].val;
    double s = 0.0;
    for (double v : ta.vec()) s += v;
    const double inv = 1.0 / static_cast<double>(ta.size());
    Tensor out({1});
    out[0] = s * inv;
    int ai = a.idx;
    int oi = push(std::move(out), nodes_[a.idx].requires_grad, nullptr);
    nodes_[oi].back = [ai, oi, inv](Tape& t) {
        Node& na = t.node(ai);
        if (!na.requires_grad) return;
        const double g = t.node(oi).grad[0] * inv;
        ensure_grad(na.grad, na.val);
        for (std::size_t i = 0; i < na.grad.size(); ++i) na.grad[i] += g;
    };
    return {oi};
}

Value Tape::gather_cols(Value a, const std::vector<std::size_t>& idx) {
    const Tensor& ta = nodes_[a.idx].val;
    const std::size_t m = ta.rows(), n = ta.cols(), w = idx.size();
    Tensor out({m, w});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) out.at2(i, j) = ta.at2(i, idx[j]);
    int ai = a.idx;
    int oi = push(std::move(out), nodes_[a.idx].requires_grad, nullptr);
    std::vector<std::size_t> ix = idx;
    nodes_[oi].back = [ai, oi, ix, m, n, w](Tape& t) {
        Node& na = t.node(ai);
        if (!na.requires_grad) return;
        const Tensor& go = t.node(oi).grad;
        ensure_grad(na.grad, na.val);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) na.grad[i * n + ix[j]] += go.at2(i, j);
    };
    return {oi};
}

Value Tape::scatter_cols(Value a, const std::vector<std::size_t>& idx, std::size_t n) {
    const Tensor& ta = nodes_[a.idx].val;
    const std::size_t m = ta.rows(), w = ta.cols();
    if (w != idx.size()) throw ConfigError("scatter_cols: index count mismatch");
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) out.at2(i, idx[j]) = ta.at2(i, j);
    int ai = a.idx;
    int oi = push(std::move(out), nodes_[a.idx].requires_grad, nullptr);
    std::vector<std::size_t> ix = idx;
    nodes_[oi].back = [ai, oi, ix, m, n, w](Tape& t) {
        Node& na = t.node(ai);
        if (!na.requires_grad) return;
        const Tensor& go = t.node(oi).grad;
        ensure_grad(na.grad, na.val);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) na.grad[i * w + j] += go.at2(i, ix[j]);
    };
    return {oi};
}

Value Tape::reshape(Value a, std::vector<std::size_t> new_shape) {
    const Tensor& ta = nodes_[a.idx].val;
    Tensor out = ta.reshape(std::move(new_shape));
    int ai = a.idx;
    int oi = push(std::move(out), nodes_[a.idx].requires_grad, nullptr);
    nodes_[oi].back = [ai, oi](Tape& t) {
        Node& na = t.node(ai);
        if (!na.requires_grad) return;
        const Tensor& go = t.node(oi).grad;
        ensure_grad(na.grad, na.val);
        for (std::size_t i = 0; i < go.size(); ++i) na.grad[i] += go[i];
    };
    return {oi};
}

Value Tape::softmax_cross_entropy(Value logits, const std::vector<int>& labels) {
    const Tensor& tl = nodes_[logits.idx].val;
    const std::size_t m = tl.rows(), c = tl.cols();
    if (labels.size() != m) throw ConfigError("softmax_cross_entropy: label count mismatch");
    Tensor probs({m, c});
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double mx = tl.at2(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, tl.at2(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            double e = std::exp(tl.at2(i, j) - mx);
            probs.at2(i, j) = e;
            z += e;
        }
        for (std::size_t j = 0; j < c; ++j) probs.at2(i, j) /= z;
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c)
            throw ConfigError("softmax_cross_entropy: label out of range");
        loss -= std::log(std::max(probs.at2(i, y), 1e-300));
    }
    Tensor out({1});
    out[0] = loss / static_cast<double>(m);
    int li = logits.idx;
    int oi = push(std::move(out), nodes_[logits.idx].requires_grad, nullptr);
    std::vector<int> ys = labels;
    Tensor probs_copy = probs;
    nodes_[oi].back = [li, oi, ys, probs_copy, m, c](Tape& t) {
        Node& nl = t.node(li);
        if (!nl.requires_grad) return;
        const double g = t.node(oi).grad[0] / static_cast<double>(m);
        ensure_grad(nl.grad, nl.val);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                double p = probs_copy.at2(i, j);
                double onehot = (static_cast<std::size_t>(ys[i]) == j) ? 1.0 : 0.0;
                nl.grad[i * c + j] += g * (p - onehot);
            }
    };
    return {oi};
}

void Tape::backward(Value root) {
    if (!root.valid()) throw ConfigError("backward: invalid root");
    Node& r = nodes_[root.idx];
    if (r.val.size() != 1) throw ConfigError("backward: root must be scalar");
    r.grad = Tensor({1});
    r.grad[0] = 1.0;
    // nodes are pushed in topological order; walk it backwards
    for (int i = root.idx; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.requires_grad || !n.back) continue;
        if (n.grad.size() != n.val.size()) continue;  // never reached from root
        n.back(*this);
    }
}

}  // namespace vad::ad
