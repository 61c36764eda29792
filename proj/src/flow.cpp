#include "vad/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "vad/autodiff.hpp"
#include "vad/io_util.hpp"

namespace vad {

namespace {

using nlohmann::json;

std::string pname(std::size_t layer, const char* net, const char* part) {
    std::ostringstream os;
    os << "layer" << (layer < 10 ? "0" : "") << layer << "." << net << "." << part;
    return os.str();
}

// bounded squashing of the raw log-scale: smax * tanh(s / smax)
double squash(double s, double smax) { return smax * std::tanh(s / smax); }

struct CouplingNets {
    const Tensor *w1s, *b1s, *w2s, *b2s;
    const Tensor *w1t, *b1t, *w2t, *b2t;
};

CouplingNets nets_of(const FlowModel& m, std::size_t layer) {
    const auto& p = m.params.params;
    return {&p.at(pname(layer, "scale", "W1")), &p.at(pname(layer, "scale", "b1")),
            &p.at(pname(layer, "scale", "W2")), &p.at(pname(layer, "scale", "b2")),
            &p.at(pname(layer, "shift", "W1")), &p.at(pname(layer, "shift", "b1")),
            &p.at(pname(layer, "shift", "W2")), &p.at(pname(layer, "shift", "b2"))};
}

// evaluate both coupling nets on the kept coordinates (plain, no tape)
void eval_nets(const FlowModel& m, std::size_t layer, const Tensor& kept, Tensor& s_out,
               Tensor& t_out) {
    const CouplingNets n = nets_of(m, layer);
    const std::size_t b = kept.rows();
    Tensor h({b, m.hyper.hidden});

    matmul_into(kept, *n.w1s, h, false);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < m.hyper.hidden; ++j)
            h.at2(i, j) = std::tanh(h.at2(i, j) + (*n.b1s)[j]);
    matmul_into(h, *n.w2s, s_out, false);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < s_out.cols(); ++j)
            s_out.at2(i, j) = squash(s_out.at2(i, j) + (*n.b2s)[j], m.hyper.smax);

    matmul_into(kept, *n.w1t, h, false);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < m.hyper.hidden; ++j)
            h.at2(i, j) = std::tanh(h.at2(i, j) + (*n.b1t)[j]);
    matmul_into(h, *n.w2t, t_out, false);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < t_out.cols(); ++j) t_out.at2(i, j) += (*n.b2t)[j];
}

Tensor as_matrix(const Tensor& x, std::size_t dims) {
    if (x.rank() == 1) {
        if (x.size() != dims) throw ConfigError("flow input dimensionality mismatch");
        return x.reshape({1, dims});
    }
    if (x.rank() == 2 && x.cols() == dims) return x;
    throw ConfigError("flow input must be {D} or {B, D}");
}

}  // namespace

FlowModel FlowModel::create(const FlowHyper& hyper, Rng& rng, FlowInit init) {
    if (hyper.layers < 2) throw ConfigError("flow needs at least 2 coupling layers");
    if (hyper.dims() < 2) throw ConfigError("flow input dimensionality must be >= 2");
    FlowModel m;
    m.hyper = hyper;
    const std::size_t d = hyper.dims();
    for (std::size_t l = 0; l < hyper.layers; ++l) {
        std::vector<std::size_t> keep, move;
        for (std::size_t i = 0; i < d; ++i)
            ((i % 2 == l % 2) ? keep : move).push_back(i);
        m.idx_keep.push_back(std::move(keep));
        m.idx_move.push_back(std::move(move));
        const std::size_t in = m.idx_keep[l].size(), out = m.idx_move[l].size();
        const double w1_sd = 1.0 / std::sqrt(static_cast<double>(in));
        const double w2_sd = init == FlowInit::Random
                                 ? 0.5 / std::sqrt(static_cast<double>(hyper.hidden))
                                 : 0.0;
        for (const char* net : {"scale", "shift"}) {
            m.params.add(pname(l, net, "W1"), Tensor::randn({in, hyper.hidden}, rng, w1_sd));
            m.params.add(pname(l, net, "b1"), Tensor({hyper.hidden}));
            m.params.add(pname(l, net, "W2"),
                         init == FlowInit::Random
                             ? Tensor::randn({hyper.hidden, out}, rng, w2_sd)
                             : Tensor({hyper.hidden, out}));
            m.params.add(pname(l, net, "b2"),
                         init == FlowInit::Random ? Tensor::randn({out}, rng, 0.1)
                                                  : Tensor({out}));
        }
    }
    return m;
}

std::vector<PoseWindow> segment_tracks(const std::vector<SkeletonTrack>& tracks,
                                       const std::string& video_id, std::size_t window_len,
                                       std::size_t stride) {
    if (window_len < 2) throw ConfigError("window length must be >= 2");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    std::vector<PoseWindow> out;
    for (const auto& track : tracks) {
        if (track.frames.empty()) continue;
        const std::size_t k = track.frames[0].kps.size();
        // maximal runs of consecutive frame indices
        std::size_t run_start = 0;
        for (std::size_t i = 1; i <= track.frames.size(); ++i) {
            const bool brk = i == track.frames.size() ||
                             track.frames[i].frame != track.frames[i - 1].frame + 1;
            if (!brk) continue;
            const std::size_t run_len = i - run_start;
            if (run_len >= window_len) {
                for (std::size_t s = 0; s + window_len <= run_len; s += stride) {
                    const std::size_t begin = run_start + s;
                    PoseWindow w;
                    w.video_id = video_id;
                    w.person_id = track.person_id;
                    w.start_frame = track.frames[begin].frame;
                    w.length = window_len;
                    w.data = Tensor({window_len, k, 2});

                    const double rx = track.frames[begin].kps[0].x;
                    const double ry = track.frames[begin].kps[0].y;
                    // body size: mean distance of keypoints to their own frame's root
                    double scale = 0.0;
                    std::size_t cnt = 0;
                    for (std::size_t t = 0; t < window_len; ++t) {
                        const auto& tf = track.frames[begin + t];
                        for (std::size_t j = 1; j < k; ++j) {
                            scale += std::hypot(tf.kps[j].x - tf.kps[0].x,
                                                tf.kps[j].y - tf.kps[0].y);
                            ++cnt;
                        }
                    }
                    scale = cnt > 0 ? scale / static_cast<double>(cnt) : 1.0;
                    if (scale < 1e-9) scale = 1.0;

                    for (std::size_t t = 0; t < window_len; ++t) {
                        const auto& tf = track.frames[begin + t];
                        if (tf.kps.size() != k)
                            throw DataError("keypoint count varies within track");
                        for (std::size_t j = 0; j < k; ++j) {
                            w.data[(t * k + j) * 2 + 0] = (tf.kps[j].x - rx) / scale;
                            w.data[(t * k + j) * 2 + 1] = (tf.kps[j].y - ry) / scale;
                        }
                    }
                    out.push_back(std::move(w));
                }
            }
            run_start = i;
        }
    }
    return out;
}

std::pair<Tensor, Tensor> flow_forward(const FlowModel& m, const Tensor& x) {
    Tensor cur = as_matrix(x, m.hyper.dims());
    if (!cur.all_finite()) throw NumericError("flow_forward: non-finite input");
    const std::size_t b = cur.rows();
    Tensor log_det({b});
    for (std::size_t l = 0; l < m.hyper.layers; ++l) {
        const auto& keep = m.idx_keep[l];
        const auto& move = m.idx_move[l];
        Tensor kept({b, keep.size()});
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < keep.size(); ++j) kept.at2(i, j) = cur.at2(i, keep[j]);
        Tensor s({b, move.size()}), t({b, move.size()});
        eval_nets(m, l, kept, s, t);
        for (std::size_t i = 0; i < b; ++i) {
            double ld = 0.0;
            for (std::size_t j = 0; j < move.size(); ++j) {
                const double sv = s.at2(i, j);
                cur.at2(i, move[j]) = cur.at2(i, move[j]) * std::exp(sv) + t.at2(i, j);
                ld += sv;
            }
            log_det[i] += ld;
        }
    }
    if (!cur.all_finite() || !log_det.all_finite())
        throw NumericError("flow_forward: non-finite intermediate");
    if (x.rank() == 1) return {cur.reshape({m.hyper.dims()}), log_det};
    return {cur, log_det};
}

Tensor flow_inverse(const FlowModel& m, const Tensor& z) {
    Tensor cur = as_matrix(z, m.hyper.dims());
    if (!cur.all_finite()) throw NumericError("flow_inverse: non-finite input");
    const std::size_t b = cur.rows();
    for (std::size_t li = m.hyper.layers; li-- > 0;) {
        const auto& keep = m.idx_keep[li];
        const auto& move = m.idx_move[li];
        Tensor kept({b, keep.size()});
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < keep.size(); ++j) kept.at2(i, j) = cur.at2(i, keep[j]);
        Tensor s({b, move.size()}), t({b, move.size()});
        eval_nets(m, li, kept, s, t);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < move.size(); ++j)
                cur.at2(i, move[j]) =
                    (cur.at2(i, move[j]) - t.at2(i, j)) * std::exp(-s.at2(i, j));
    }
    if (!cur.all_finite()) throw NumericError("flow_inverse: non-finite intermediate");
    if (z.rank() == 1) return cur.reshape({m.hyper.dims()});
    return cur;
}

std::vector<double> flow_log_likelihood(const FlowModel& m, const Tensor& x) {
    const auto [z, log_det] = flow_forward(m, x);
    const Tensor zm = as_matrix(z, m.hyper.dims());
    const std::size_t b = zm.rows(), d = zm.cols();
    const double base_const = -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
    std::vector<double> out(b);
    for (std::size_t i = 0; i < b; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = zm.at2(i, j);
            ss += v * v;
        }
        out[i] = base_const - 0.5 * ss + log_det[i];
    }
    return out;
}

double flow_nll_loss_and_grad(const FlowModel& m, ParamSet& params, const Tensor& batch) {
    const std::size_t d = m.hyper.dims();
    const Tensor bm = as_matrix(batch, d);
    const std::size_t b = bm.rows();

    ad::Tape tape;
    std::map<std::string, ad::Value> vp;
    for (const auto& [name, tensor] : params.params) vp[name] = tape.leaf(tensor, true);

    ad::Value cur = tape.leaf(bm, false);
    ad::Value log_det;  // {B}
    for (std::size_t l = 0; l < m.hyper.layers; ++l) {
        const auto& keep = m.idx_keep[l];
        const auto& move = m.idx_move[l];
        ad::Value kept = tape.gather_cols(cur, keep);
        ad::Value moved = tape.gather_cols(cur, move);

        ad::Value hs = tape.tanh(tape.add_rowvec(tape.matmul(kept, vp[pname(l, "scale", "W1")]),
                                                 vp[pname(l, "scale", "b1")]));
        ad::Value sraw = tape.add_rowvec(tape.matmul(hs, vp[pname(l, "scale", "W2")]),
                                         vp[pname(l, "scale", "b2")]);
        ad::Value s = tape.scale(tape.tanh(tape.scale(sraw, 1.0 / m.hyper.smax)), m.hyper.smax);

        ad::Value ht = tape.tanh(tape.add_rowvec(tape.matmul(kept, vp[pname(l, "shift", "W1")]),
                                                 vp[pname(l, "shift", "b1")]));
        ad::Value t = tape.add_rowvec(tape.matmul(ht, vp[pname(l, "shift", "W2")]),
                                      vp[pname(l, "shift", "b2")]);

        ad::Value y = tape.add(tape.mul(moved, tape.exp(s)), t);
        cur = tape.add(tape.scatter_cols(kept, keep, d), tape.scatter_cols(y, move, d));
        ad::Value ld = tape.row_sum(s);
        log_det = log_det.valid() ? tape.add(log_det, ld) : ld;
    }

    // NLL per row: D/2 ln(2pi) + 1/2 sum z^2 - log_det
    ad::Value zsq = tape.row_sum(tape.mul(cur, cur));
    ad::Value per_row =
        tape.add_const(tape.sub(tape.scale(zsq, 0.5), log_det),
                       0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi));
    ad::Value loss = tape.mean_all(per_row);
    tape.backward(loss);

    params.zero_grads();
    for (const auto& [name, tensor] : params.params) {
        const Tensor& g = tape.grad(vp[name]);
        if (g.size() == tensor.size()) params.grads[name] = g;
    }
    (void)b;
    const double value = tape.value(loss)[0];
    if (!std::isfinite(value)) throw NumericError("flow NLL became non-finite");
    return value;
}

namespace {

Tensor windows_matrix(const std::vector<PoseWindow>& windows, const FlowHyper& hyper) {
    const std::size_t d = hyper.dims();
    Tensor x({windows.size(), d});
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (windows[i].data.size() != d)
            throw ConfigError("window dimensionality does not match flow model");
        std::copy(windows[i].data.vec().begin(), windows[i].data.vec().end(),
                  x.vec().begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return x;
}

}  // namespace

double flow_mean_nll(const FlowModel& m, const std::vector<PoseWindow>& windows) {
    if (windows.empty()) throw DataError("empty window set");
    const auto lls = flow_log_likelihood(m, windows_matrix(windows, m.hyper));
    double s = 0.0;
    for (double v : lls) s += v;
    return -s / static_cast<double>(lls.size());
}

FlowTrainResult train_flow(FlowModel& m, const std::vector<PoseWindow>& windows,
                           const FlowTrainHyper& hyper) {
    if (windows.empty()) throw DataError("train_flow: empty training set");
    FlowTrainResult result;
    result.initial_nll = flow_mean_nll(m, windows);

    Rng rng(hyper.seed);
    OptimState opt;
    opt.lr = hyper.lr;
    const std::size_t n = windows.size();
    const std::size_t bs = std::max<std::size_t>(1, std::min(hyper.batch_size, n));
    const std::size_t d = m.hyper.dims();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t off = 0; off < n; off += bs) {
            const std::size_t cur_bs = std::min(bs, n - off);
            Tensor batch({cur_bs, d});
            for (std::size_t i = 0; i < cur_bs; ++i)
                std::copy(windows[order[off + i]].data.vec().begin(),
                          windows[order[off + i]].data.vec().end(),
                          batch.vec().begin() + static_cast<std::ptrdiff_t>(i * d));
            epoch_loss += flow_nll_loss_and_grad(m, m.params, batch);
            adam_step(m.params, opt);
            ++batches;
        }
        result.epoch_nll.push_back(epoch_loss / static_cast<double>(batches));
    }
    result.final_nll = flow_mean_nll(m, windows);
    return result;
}

FrameScoreSeries score_frames_flow(const FlowModel& m, const std::vector<PoseWindow>& windows,
                                   const std::string& video_id, std::size_t frame_count) {
    FrameScoreSeries series(video_id, frame_count);
    if (windows.empty()) return series;
    for (const auto& w : windows)
        if (w.video_id != video_id)
            throw DataError("score_frames_flow: window from different video " + w.video_id);

    const auto lls = flow_log_likelihood(m, windows_matrix(windows, m.hyper));
    std::vector<double> min_ll(frame_count, 0.0);
    std::vector<bool> covered(frame_count, false);
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const long start = windows[i].start_frame;
        for (std::size_t t = 0; t < windows[i].length; ++t) {
            const long f = start + static_cast<long>(t);
            if (f < 0 || static_cast<std::size_t>(f) >= frame_count) continue;
            auto fi = static_cast<std::size_t>(f);
            if (!covered[fi] || lls[i] < min_ll[fi]) {
                min_ll[fi] = lls[i];
                covered[fi] = true;
            }
        }
    }
    for (std::size_t f = 0; f < frame_count; ++f)
        if (covered[f]) series.scores[f] = -min_ll[f];
    return series;
}

void save_flow(const FlowModel& m, const std::string& path) {
    json params = json::object();
    for (const auto& [name, t] : m.params.params) {
        params[name] = json{{"shape", t.shape()}, {"data", t.vec()}};
    }
    const json doc{{"kind", "flow"},
                   {"window_len", m.hyper.window_len},
                   {"keypoints", m.hyper.keypoints},
                   {"layers", m.hyper.layers},
                   {"hidden", m.hyper.hidden},
                   {"smax", m.hyper.smax},
                   {"params", params}};
    write_text_file(path, doc.dump() + "\n");
}

FlowModel load_flow(const std::string& path) {
    const json doc = json::parse(read_text_file(path));
    if (doc.value("kind", "") != "flow") throw DataError("not a flow checkpoint: " + path);
    FlowHyper hyper;
    hyper.window_len = doc.at("window_len").get<std::size_t>();
    hyper.keypoints = doc.at("keypoints").get<std::size_t>();
    hyper.layers = doc.at("layers").get<std::size_t>();
    hyper.hidden = doc.at("hidden").get<std::size_t>();
    hyper.smax = doc.at("smax").get<double>();
    Rng rng(0);
    FlowModel m = FlowModel::create(hyper, rng, FlowInit::Identity);
    for (auto& [name, t] : m.params.params) {
        const auto& entry = doc.at("params").at(name);
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        auto data = entry.at("data").get<std::vector<double>>();
        t = Tensor(shape, std::move(data));
    }
    return m;
}

}  // namespace vad
