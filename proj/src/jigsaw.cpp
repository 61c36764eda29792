#include "vad/jigsaw.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "vad/autodiff.hpp"
#include "vad/io_util.hpp"

namespace vad {

using nlohmann::json;

std::size_t factorial(std::size_t n) {
    if (n > 7) throw ConfigError("permutation head capacity exceeded: " + std::to_string(n) + "!");
    std::size_t f = 1;
    for (std::size_t i = 2; i <= n; ++i) f *= i;
    return f;
}

std::size_t perm_rank(const std::vector<std::size_t>& perm) {
    const std::size_t n = perm.size();
    factorial(n);  // capacity check
    std::size_t rank = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t smaller = 0;
        for (std::size_t j = i + 1; j < n; ++j)
            if (perm[j] < perm[i]) ++smaller;
        rank += smaller * factorial(n - 1 - i);
    }
    return rank;
}

std::vector<std::size_t> perm_unrank(std::size_t rank, std::size_t n) {
    if (rank >= factorial(n)) throw ConfigError("permutation rank out of range");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<std::size_t> perm;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t f = factorial(n - 1 - i);
        const std::size_t k = rank / f;
        rank %= f;
        perm.push_back(pool[k]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return perm;
}

std::vector<std::size_t> perm_inverse(const std::vector<std::size_t>& perm) {
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
    return inv;
}

std::vector<std::size_t> perm_compose(const std::vector<std::size_t>& p,
                                      const std::vector<std::size_t>& q) {
    if (p.size() != q.size()) throw ConfigError("perm_compose: size mismatch");
    std::vector<std::size_t> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[q[i]];
    return out;
}

PermutationTask sample_permutation(PermAxis axis, std::size_t n, Rng& rng) {
    factorial(n);  // throws if the class space is intractable
    PermutationTask task;
    task.axis = axis;
    task.perm.resize(n);
    std::iota(task.perm.begin(), task.perm.end(), 0);
    rng.shuffle(task.perm);
    task.class_index = perm_rank(task.perm);
    return task;
}

void JigsawHyper::validate() const {
    if (T % 2 == 0) throw ConfigError("cube temporal extent T must be odd");
    if (G == 0 || S == 0 || S % G != 0) throw ConfigError("patch size S must be divisible by G");
    if (T_sub < 2 || T_sub > T) throw ConfigError("temporal sub-puzzle must satisfy 2 <= T_sub <= T");
    if (filter < 0.0 || filter > 1.0) throw ConfigError("filter must lie in [0,1]");
    factorial(T_sub);
    factorial(G * G);
}

SpaceTimeCube apply_permutation(const SpaceTimeCube& cube, const PermutationTask& task,
                                std::size_t grid) {
    const auto& shape = cube.patches.shape();
    if (shape.size() != 3 || shape[1] != shape[2])
        throw ConfigError("cube patches must have shape {T, S, S}");
    const std::size_t t_len = shape[0], s = shape[1];
    SpaceTimeCube out = cube;

    if (task.axis == PermAxis::Temporal) {
        const std::size_t n = task.perm.size();
        if (task.offset + n > t_len)
            throw ConfigError("temporal permutation does not fit cube length");
        const std::size_t plane = s * s;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t dst = (task.offset + i) * plane;
            const std::size_t src = (task.offset + task.perm[i]) * plane;
            std::copy(cube.patches.vec().begin() + static_cast<std::ptrdiff_t>(src),
                      cube.patches.vec().begin() + static_cast<std::ptrdiff_t>(src + plane),
                      out.patches.vec().begin() + static_cast<std::ptrdiff_t>(dst));
        }
        return out;
    }

    if (grid == 0 || s % grid != 0) throw ConfigError("spatial permutation: bad grid");
    if (task.perm.size() != grid * grid)
        throw ConfigError("spatial permutation size must equal G*G");
    const std::size_t cell = s / grid;
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t c = 0; c < grid * grid; ++c) {
            const std::size_t src_c = task.perm[c];
            const std::size_t dy = (c / grid) * cell, dx = (c % grid) * cell;
            const std::size_t sy = (src_c / grid) * cell, sx = (src_c % grid) * cell;
            for (std::size_t r = 0; r < cell; ++r) {
                const std::size_t dst_off = (t * s + dy + r) * s + dx;
                const std::size_t src_off = (t * s + sy + r) * s + sx;
                std::copy(cube.patches.vec().begin() + static_cast<std::ptrdiff_t>(src_off),
                          cube.patches.vec().begin() + static_cast<std::ptrdiff_t>(src_off + cell),
                          out.patches.vec().begin() + static_cast<std::ptrdiff_t>(dst_off));
            }
        }
    }
    return out;
}

JigsawNet JigsawNet::create(const JigsawHyper& hyper, Rng& rng) {
    hyper.validate();
    JigsawNet net;
    net.hyper = hyper;
    const std::size_t cd = hyper.cell_dim();
    const std::size_t gg = hyper.G * hyper.G;
    auto sd = [](std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
    net.params.add("cell.W", Tensor::randn({cd, hyper.d_cell}, rng, sd(cd)));
    net.params.add("cell.b", Tensor({hyper.d_cell}));
    net.params.add("patch.W", Tensor::randn({gg * hyper.d_cell, hyper.d_patch}, rng, sd(gg * hyper.d_cell)));
    net.params.add("patch.b", Tensor({hyper.d_patch}));
    const std::size_t trunk_in = (2 * hyper.T - 1) * hyper.d_patch;
    net.params.add("trunk.W", Tensor::randn({trunk_in, hyper.d_trunk}, rng, sd(trunk_in)));
    net.params.add("trunk.b", Tensor({hyper.d_trunk}));
    net.params.add("head_t.W",
                   Tensor::randn({hyper.d_trunk, hyper.temporal_classes()}, rng, sd(hyper.d_trunk)));
    net.params.add("head_t.b", Tensor({hyper.temporal_classes()}));
    net.params.add("head_s.W",
                   Tensor::randn({hyper.d_trunk, hyper.spatial_classes()}, rng, sd(hyper.d_trunk)));
    net.params.add("head_s.b", Tensor({hyper.spatial_classes()}));
    return net;
}

namespace {

// Repack {T, S, S} cubes into a (B*T*G*G) x cell_dim matrix, cell-major, so
// every later stage is a plain matmul over free reshapes.
Tensor pack_cells(const std::vector<const SpaceTimeCube*>& cubes, const JigsawHyper& h) {
    const std::size_t cell = h.S / h.G;
    const std::size_t cd = h.cell_dim();
    const std::size_t gg = h.G * h.G;
    Tensor out({cubes.size() * h.T * gg, cd});
    std::size_t row = 0;
    for (const SpaceTimeCube* cube : cubes) {
        const auto& shape = cube->patches.shape();
        if (shape.size() != 3 || shape[0] != h.T || shape[1] != h.S || shape[2] != h.S)
            throw ConfigError("cube shape does not match jigsaw hyperparameters");
        const double* src = cube->patches.data();
        for (std::size_t t = 0; t < h.T; ++t)
            for (std::size_t cy = 0; cy < h.G; ++cy)
                for (std::size_t cx = 0; cx < h.G; ++cx) {
                    double* dst = out.data() + row * cd;
                    for (std::size_t r = 0; r < cell; ++r) {
                        const double* s = src + (t * h.S + cy * cell + r) * h.S + cx * cell;
                        std::copy(s, s + cell, dst + r * cell);
                    }
                    ++row;
                }
    }
    return out;
}

struct ForwardValues {
    ad::Value trunk;  // {B, d_trunk}
};

std::vector<std::size_t> patch_cols(std::size_t t, std::size_t d_patch) {
    std::vector<std::size_t> idx(d_patch);
    std::iota(idx.begin(), idx.end(), t * d_patch);
    return idx;
}

// trunk input: per-patch features plus adjacent-frame differences; the
// differences make temporal-order patterns close to linearly separable
ForwardValues forward_graph(ad::Tape& tape, const std::map<std::string, ad::Value>& vp,
                            const Tensor& packed, std::size_t batch, const JigsawHyper& h) {
    const std::size_t gg = h.G * h.G;
    ad::Value x = tape.leaf(packed, false);
    ad::Value e = tape.tanh(tape.add_rowvec(tape.matmul(x, vp.at("cell.W")), vp.at("cell.b")));
    ad::Value e2 = tape.reshape(e, {batch * h.T, gg * h.d_cell});
    ad::Value f = tape.tanh(tape.add_rowvec(tape.matmul(e2, vp.at("patch.W")), vp.at("patch.b")));
    ad::Value f2 = tape.reshape(f, {batch, h.T * h.d_patch});

    const std::size_t width = (2 * h.T - 1) * h.d_patch;
    ad::Value joined = tape.scatter_cols(f2, [&] {
        std::vector<std::size_t> idx(h.T * h.d_patch);
        std::iota(idx.begin(), idx.end(), 0);
        return idx;
    }(), width);
    for (std::size_t t = 0; t + 1 < h.T; ++t) {
        ad::Value diff = tape.sub(tape.gather_cols(f2, patch_cols(t + 1, h.d_patch)),
                                  tape.gather_cols(f2, patch_cols(t, h.d_patch)));
        std::vector<std::size_t> dst(h.d_patch);
        std::iota(dst.begin(), dst.end(), (h.T + t) * h.d_patch);
        joined = tape.add(joined, tape.scatter_cols(diff, dst, width));
    }

    ad::Value trunk =
        tape.tanh(tape.add_rowvec(tape.matmul(joined, vp.at("trunk.W")), vp.at("trunk.b")));
    return {trunk};
}

void softmax_rows(Tensor& logits) {
    const std::size_t m = logits.rows(), c = logits.cols();
    for (std::size_t i = 0; i < m; ++i) {
        double mx = logits.at2(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits.at2(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            logits.at2(i, j) = std::exp(logits.at2(i, j) - mx);
            z += logits.at2(i, j);
        }
        for (std::size_t j = 0; j < c; ++j) logits.at2(i, j) /= z;
    }
}

Tensor plain_affine(const Tensor& x, const Tensor& w, const Tensor& b, bool with_tanh) {
    Tensor y({x.rows(), w.cols()});
    matmul_into(x, w, y, false);
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t j = 0; j < y.cols(); ++j) {
            y.at2(i, j) += b[j];
            if (with_tanh) y.at2(i, j) = std::tanh(y.at2(i, j));
        }
    return y;
}

}  // namespace

JigsawProbs jigsaw_forward(const JigsawNet& net, const std::vector<SpaceTimeCube>& cubes) {
    const JigsawHyper& h = net.hyper;
    const auto& p = net.params.params;
    std::vector<const SpaceTimeCube*> ptrs;
    for (const auto& c : cubes) ptrs.push_back(&c);
    const std::size_t b = cubes.size();
    const std::size_t gg = h.G * h.G;

    Tensor packed = pack_cells(ptrs, h);
    Tensor e = plain_affine(packed, p.at("cell.W"), p.at("cell.b"), true);
    Tensor f = plain_affine(e.reshape({b * h.T, gg * h.d_cell}), p.at("patch.W"), p.at("patch.b"),
                            true);
    const Tensor f2 = f.reshape({b, h.T * h.d_patch});
    Tensor joined({b, (2 * h.T - 1) * h.d_patch});
    for (std::size_t i = 0; i < b; ++i) {
        double* dst = joined.data() + i * joined.cols();
        const double* src = f2.data() + i * f2.cols();
        std::copy(src, src + h.T * h.d_patch, dst);
        for (std::size_t t = 0; t + 1 < h.T; ++t)
            for (std::size_t j = 0; j < h.d_patch; ++j)
                dst[(h.T + t) * h.d_patch + j] =
                    src[(t + 1) * h.d_patch + j] - src[t * h.d_patch + j];
    }
    Tensor trunk = plain_affine(joined, p.at("trunk.W"), p.at("trunk.b"), true);
    JigsawProbs probs;
    probs.temporal = plain_affine(trunk, p.at("head_t.W"), p.at("head_t.b"), false);
    probs.spatial = plain_affine(trunk, p.at("head_s.W"), p.at("head_s.b"), false);
    softmax_rows(probs.temporal);
    softmax_rows(probs.spatial);
    return probs;
}

double jigsaw_loss_and_grad(const JigsawNet& net, ParamSet& params,
                            const std::vector<const SpaceTimeCube*>& cubes,
                            const std::vector<PermutationTask>& tasks) {
    if (cubes.size() != tasks.size()) throw ConfigError("cube/task count mismatch");
    if (cubes.empty()) throw DataError("jigsaw loss: empty batch");
    const JigsawHyper& h = net.hyper;

    // shuffle cubes and split by task axis; each sub-batch hits one head
    std::vector<SpaceTimeCube> shuffled_t, shuffled_s;
    std::vector<int> labels_t, labels_s;
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        SpaceTimeCube sc = apply_permutation(*cubes[i], tasks[i], h.G);
        if (tasks[i].axis == PermAxis::Temporal) {
            shuffled_t.push_back(std::move(sc));
            labels_t.push_back(static_cast<int>(tasks[i].class_index));
        } else {
            shuffled_s.push_back(std::move(sc));
            labels_s.push_back(static_cast<int>(tasks[i].class_index));
        }
    }

    ad::Tape tape;
    std::map<std::string, ad::Value> vp;
    for (const auto& [name, tensor] : params.params) vp[name] = tape.leaf(tensor, true);

    ad::Value loss;
    const double total = static_cast<double>(cubes.size());
    auto add_head_loss = [&](std::vector<SpaceTimeCube>& subset, std::vector<int>& labels,
                             const char* w_name, const char* b_name) {
        if (subset.empty()) return;
        std::vector<const SpaceTimeCube*> ptrs;
        for (const auto& c : subset) ptrs.push_back(&c);
        Tensor packed = pack_cells(ptrs, h);
        ForwardValues fw = forward_graph(tape, vp, packed, subset.size(), h);
        ad::Value logits = tape.add_rowvec(tape.matmul(fw.trunk, vp.at(w_name)), vp.at(b_name));
        ad::Value ce = tape.softmax_cross_entropy(logits, labels);
        ad::Value weighted = tape.scale(ce, static_cast<double>(subset.size()) / total);
        loss = loss.valid() ? tape.add(loss, weighted) : weighted;
    };
    add_head_loss(shuffled_t, labels_t, "head_t.W", "head_t.b");
    add_head_loss(shuffled_s, labels_s, "head_s.W", "head_s.b");

    tape.backward(loss);
    params.zero_grads();
    for (const auto& [name, tensor] : params.params) {
        const Tensor& g = tape.grad(vp[name]);
        if (g.size() == tensor.size()) params.grads[name] = g;
    }
    const double value = tape.value(loss)[0];
    if (!std::isfinite(value)) throw NumericError("jigsaw loss became non-finite");
    return value;
}

std::vector<SpaceTimeCube> build_cubes(const SyntheticVideo& video, const JigsawHyper& hyper) {
    return build_cubes(video, video.detections, hyper);
}

std::vector<SpaceTimeCube> build_cubes(const SyntheticVideo& video,
                                       const std::vector<DetectionBox>& detections,
                                       const JigsawHyper& hyper) {
    hyper.validate();
    const std::size_t half = hyper.T / 2;

    std::map<int, std::map<long, const DetectionBox*>> per_object;
    for (const auto& d : detections) per_object[d.object_id][d.frame] = &d;

    // patch cache: overlapping cubes share most of their frames
    std::map<std::pair<int, long>, Tensor> patch_cache;
    auto patch_of = [&](const DetectionBox& box) -> const Tensor& {
        const auto key = std::make_pair(box.object_id, box.frame);
        auto it = patch_cache.find(key);
        if (it == patch_cache.end())
            it = patch_cache.emplace(key, render_patch(video, box, hyper.S)).first;
        return it->second;
    };

    std::vector<SpaceTimeCube> cubes;
    for (const auto& [object_id, frames] : per_object) {
        for (const auto& [center, box_ptr] : frames) {
            bool present = true;
            double min_area = box_ptr->area(), max_area = min_area;
            for (long off = -static_cast<long>(half); off <= static_cast<long>(half); ++off) {
                auto it = frames.find(center + off);
                if (it == frames.end()) {
                    present = false;
                    break;
                }
                min_area = std::min(min_area, it->second->area());
                max_area = std::max(max_area, it->second->area());
            }
            if (!present) continue;
            if (max_area > 0.0 && min_area / max_area < hyper.filter) continue;

            SpaceTimeCube cube;
            cube.video_id = video.video_id;
            cube.object_id = object_id;
            cube.center_frame = center;
            cube.cls = video.object_class.count(object_id)
                           ? video.object_class.at(object_id)
                           : box_ptr->cls;
            cube.patches = Tensor({hyper.T, hyper.S, hyper.S});
            for (std::size_t t = 0; t < hyper.T; ++t) {
                const long f = center - static_cast<long>(half) + static_cast<long>(t);
                const Tensor& patch = patch_of(*frames.at(f));
                std::copy(patch.vec().begin(), patch.vec().end(),
                          cube.patches.vec().begin() +
                              static_cast<std::ptrdiff_t>(t * hyper.S * hyper.S));
            }
            cubes.push_back(std::move(cube));
        }
    }
    return cubes;
}

JigsawTrainResult train_jigsaw(JigsawNet& net, const std::vector<SpaceTimeCube>& cubes,
                               const JigsawTrainHyper& hyper) {
    if (cubes.empty()) throw DataError("train_jigsaw: empty training set");
    const JigsawHyper& h = net.hyper;
    Rng rng(hyper.seed);

    std::vector<std::size_t> order(cubes.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const std::size_t holdout =
        std::min(cubes.size() - 1,
                 static_cast<std::size_t>(hyper.holdout_fraction * static_cast<double>(cubes.size())));
    std::vector<SpaceTimeCube> eval_set;
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < holdout)
            eval_set.push_back(cubes[order[i]]);
        else
            train_idx.push_back(order[i]);
    }
    if (eval_set.empty()) eval_set.push_back(cubes[order[0]]);

    OptimState opt;
    opt.lr = hyper.lr;
    const std::size_t bs = std::max<std::size_t>(1, std::min(hyper.batch_size, train_idx.size()));

    JigsawTrainResult result;
    auto evaluate = [&](std::size_t epoch, double loss) {
        Rng eval_rng(derive_seed(hyper.seed, 0xe5a1 + epoch));
        const double acc_t = jigsaw_accuracy(net, eval_set, PermAxis::Temporal, eval_rng);
        const double acc_s = jigsaw_accuracy(net, eval_set, PermAxis::Spatial, eval_rng);
        result.curve.push_back({epoch, loss, acc_t, acc_s});
        result.final_acc_temporal = acc_t;
        result.final_acc_spatial = acc_s;
        return acc_t >= hyper.early_stop_acc && acc_s >= hyper.early_stop_acc;
    };

    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        rng.shuffle(train_idx);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t off = 0; off < train_idx.size(); off += bs) {
            const std::size_t cur_bs = std::min(bs, train_idx.size() - off);
            std::vector<const SpaceTimeCube*> batch;
            std::vector<PermutationTask> tasks;
            for (std::size_t i = 0; i < cur_bs; ++i) {
                batch.push_back(&cubes[train_idx[off + i]]);
                if (rng.coin()) {
                    // centered sub-puzzle; per-example window offsets make the
                    // label ambiguous (boundary-fixing permutations collide)
                    PermutationTask task = sample_permutation(PermAxis::Temporal, h.T_sub, rng);
                    task.offset = (h.T - h.T_sub) / 2;
                    tasks.push_back(std::move(task));
                } else {
                    tasks.push_back(sample_permutation(PermAxis::Spatial, h.G * h.G, rng));
                }
            }
            epoch_loss += jigsaw_loss_and_grad(net, net.params, batch, tasks);
            adam_step(net.params, opt);
            ++batches;
        }
        result.epochs_run = epoch + 1;
        const double mean_loss = epoch_loss / static_cast<double>(std::max<std::size_t>(1, batches));
        if ((epoch + 1) % hyper.eval_every == 0 || epoch + 1 == hyper.epochs) {
            const bool stop = evaluate(epoch + 1, mean_loss);
            if (hyper.early_stop_acc > 0.0 && stop) break;
        }
    }
    if (result.curve.empty()) evaluate(0, 0.0);
    return result;
}

double jigsaw_accuracy(const JigsawNet& net, const std::vector<SpaceTimeCube>& cubes,
                       PermAxis axis, Rng& rng) {
    if (cubes.empty()) throw DataError("jigsaw_accuracy: no cubes");
    const JigsawHyper& h = net.hyper;
    std::vector<SpaceTimeCube> shuffled;
    std::vector<std::size_t> expected;
    for (const auto& cube : cubes) {
        PermutationTask task;
        if (axis == PermAxis::Temporal) {
            task = sample_permutation(PermAxis::Temporal, h.T_sub, rng);
            task.offset = (h.T - h.T_sub) / 2;
        } else {
            task = sample_permutation(PermAxis::Spatial, h.G * h.G, rng);
        }
        shuffled.push_back(apply_permutation(cube, task, h.G));
        expected.push_back(task.class_index);
    }
    const JigsawProbs probs = jigsaw_forward(net, shuffled);
    const Tensor& head = axis == PermAxis::Temporal ? probs.temporal : probs.spatial;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < head.cols(); ++j)
            if (head.at2(i, j) > head.at2(i, best)) best = j;
        if (best == expected[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(shuffled.size());
}

FrameScoreSeries score_frames_jigsaw(const JigsawNet& net,
                                     const std::vector<SpaceTimeCube>& cubes,
                                     const std::string& video_id, std::size_t frame_count,
                                     JigsawScoreMode mode) {
    FrameScoreSeries series(video_id, frame_count);
    std::vector<SpaceTimeCube> eligible;
    for (const auto& c : cubes) {
        if (c.video_id != video_id)
            throw DataError("score_frames_jigsaw: cube from different video " + c.video_id);
        if (mode == JigsawScoreMode::NonHumanOnly && c.cls == ObjectClass::Human) continue;
        eligible.push_back(c);
    }
    if (eligible.empty()) return series;

    const JigsawProbs probs = jigsaw_forward(net, eligible);
    const std::size_t half = net.hyper.T / 2;
    std::vector<double> min_normality(frame_count, 0.0);
    std::vector<bool> covered(frame_count, false);
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        const double normality = 0.5 * (probs.temporal.at2(i, 0) + probs.spatial.at2(i, 0));
        const long first = eligible[i].center_frame - static_cast<long>(half);
        for (std::size_t t = 0; t < net.hyper.T; ++t) {
            const long f = first + static_cast<long>(t);
            if (f < 0 || static_cast<std::size_t>(f) >= frame_count) continue;
            const auto fi = static_cast<std::size_t>(f);
            if (!covered[fi] || normality < min_normality[fi]) {
                min_normality[fi] = normality;
                covered[fi] = true;
            }
        }
    }
    for (std::size_t f = 0; f < frame_count; ++f)
        if (covered[f]) series.scores[f] = 1.0 - min_normality[f];
    return series;
}

void save_jigsaw(const JigsawNet& net, const std::string& path) {
    json params = json::object();
    for (const auto& [name, t] : net.params.params)
        params[name] = json{{"shape", t.shape()}, {"data", t.vec()}};
    const json doc{{"kind", "jigsaw"},
                   {"T", net.hyper.T},
                   {"S", net.hyper.S},
                   {"G", net.hyper.G},
                   {"T_sub", net.hyper.T_sub},
                   {"filter", net.hyper.filter},
                   {"d_cell", net.hyper.d_cell},
                   {"d_patch", net.hyper.d_patch},
                   {"d_trunk", net.hyper.d_trunk},
                   {"params", params}};
    write_text_file(path, doc.dump() + "\n");
}

JigsawNet load_jigsaw(const std::string& path) {
    const json doc = json::parse(read_text_file(path));
    if (doc.value("kind", "") != "jigsaw") throw DataError("not a jigsaw checkpoint: " + path);
    JigsawHyper hyper;
    hyper.T = doc.at("T").get<std::size_t>();
    hyper.S = doc.at("S").get<std::size_t>();
    hyper.G = doc.at("G").get<std::size_t>();
    hyper.T_sub = doc.at("T_sub").get<std::size_t>();
    hyper.filter = doc.at("filter").get<double>();
    hyper.d_cell = doc.at("d_cell").get<std::size_t>();
    hyper.d_patch = doc.at("d_patch").get<std::size_t>();
    hyper.d_trunk = doc.at("d_trunk").get<std::size_t>();
    Rng rng(0);
    JigsawNet net = JigsawNet::create(hyper, rng);
    for (auto& [name, t] : net.params.params) {
        const auto& entry = doc.at("params").at(name);
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        auto data = entry.at("data").get<std::vector<double>>();
        t = Tensor(shape, std::move(data));
    }
    return net;
}

}  // namespace vad
