#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "vad/flow.hpp"

using namespace vad;

namespace {

SkeletonTrack straight_track(int person, long first_frame, long n_frames, int k = 3) {
    SkeletonTrack t;
    t.person_id = person;
    for (long f = 0; f < n_frames; ++f) {
        TrackFrame tf;
        tf.frame = first_frame + f;
        for (int j = 0; j < k; ++j) {
            tf.kps.push_back({10.0 + 1.5 * static_cast<double>(f) + j,
                              20.0 + 0.5 * static_cast<double>(f) + 2.0 * j});
            tf.conf.push_back(1.0);
        }
        t.frames.push_back(tf);
    }
    return t;
}

FlowHyper tiny_hyper(std::size_t l = 3, std::size_t k = 2, std::size_t layers = 4,
                     std::size_t hidden = 8) {
    FlowHyper h;
    h.window_len = l;
    h.keypoints = k;
    h.layers = layers;
    h.hidden = hidden;
    return h;
}

// log|det| via LU with partial pivoting; oracle for the analytic log_det
double log_abs_det(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    double log_det = 0.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (pivot != col) std::swap(a[pivot], a[col]);
        REQUIRE(std::fabs(a[col][col]) > 1e-300);
        log_det += std::log(std::fabs(a[col][col]));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r][col] / a[col][col];
            for (std::size_t cc = col; cc < n; ++cc) a[r][cc] -= factor * a[col][cc];
        }
    }
    return log_det;
}

double jacobian_log_det(const FlowModel& m, const Tensor& x, double eps = 1e-6) {
    const std::size_t d = x.size();
    std::vector<std::vector<double>> jac(d, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < d; ++j) {
        Tensor xp = x, xm = x;
        xp[j] += eps;
        xm[j] -= eps;
        const Tensor zp = flow_forward(m, xp).first;
        const Tensor zm = flow_forward(m, xm).first;
        for (std::size_t i = 0; i < d; ++i) jac[i][j] = (zp[i] - zm[i]) / (2.0 * eps);
    }
    return log_abs_det(std::move(jac));
}

std::vector<PoseWindow> synthetic_windows(std::size_t count, const FlowHyper& h,
                                          std::uint64_t seed) {
    // smooth sinusoid windows: a learnable low-dimensional family
    Rng rng(seed);
    std::vector<PoseWindow> out;
    for (std::size_t i = 0; i < count; ++i) {
        PoseWindow w;
        w.video_id = "synthwin";
        w.person_id = 0;
        w.start_frame = static_cast<long>(i);
        w.length = h.window_len;
        w.data = Tensor({h.window_len, h.keypoints, 2});
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double speed = rng.uniform(0.8, 1.2);
        for (std::size_t t = 0; t < h.window_len; ++t)
            for (std::size_t k = 0; k < h.keypoints; ++k) {
                const double base = 0.4 * static_cast<double>(k);
                w.data[(t * h.keypoints + k) * 2 + 0] =
                    base + 0.08 * speed * static_cast<double>(t);
                w.data[(t * h.keypoints + k) * 2 + 1] =
                    0.3 * std::sin(0.5 * static_cast<double>(t) + phase + base);
            }
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace

TEST_CASE("segment_tracks window counts") {
    const std::string vid = "v";
    SUBCASE("exact-length track yields one window") {
        auto w = segment_tracks({straight_track(0, 0, 24)}, vid, 24, 1);
        CHECK(w.size() == 1);
        CHECK(w[0].start_frame == 0);
    }
    SUBCASE("30 frames, L=24, stride 1 gives starts 0..6") {
        auto w = segment_tracks({straight_track(0, 0, 30)}, vid, 24, 1);
        REQUIRE(w.size() == 7);
        CHECK(w.front().start_frame == 0);
        CHECK(w.back().start_frame == 6);
    }
    SUBCASE("short track yields none") {
        CHECK(segment_tracks({straight_track(0, 0, 10)}, vid, 24, 1).empty());
    }
    SUBCASE("stride skips starts") {
        CHECK(segment_tracks({straight_track(0, 0, 30)}, vid, 24, 4).size() == 2);
    }
}

TEST_CASE("gapped tracks only produce windows inside consecutive runs") {
    // frames 0-9 then 20-43: runs of 10 and 24
    SkeletonTrack track = straight_track(0, 0, 10);
    const SkeletonTrack tail = straight_track(0, 20, 24);
    track.frames.insert(track.frames.end(), tail.frames.begin(), tail.frames.end());

    // brute-force oracle: enumerate consecutive runs of length >= L
    auto oracle_starts = [&](std::size_t l) {
        std::vector<long> starts;
        for (std::size_t i = 0; i < track.frames.size(); ++i) {
            bool ok = i + l <= track.frames.size();
            for (std::size_t j = 1; ok && j < l; ++j)
                if (track.frames[i + j].frame != track.frames[i + j - 1].frame + 1) ok = false;
            if (ok) starts.push_back(track.frames[i].frame);
        }
        return starts;
    };

    auto w24 = segment_tracks({track}, "v", 24, 1);
    CHECK(w24.size() == oracle_starts(24).size());
    CHECK(w24.size() == 1);  // only the 24-frame run qualifies

    auto w8 = segment_tracks({track}, "v", 8, 1);
    const auto expect = oracle_starts(8);
    REQUIRE(w8.size() == expect.size());
    for (std::size_t i = 0; i < w8.size(); ++i) CHECK(w8[i].start_frame == expect[i]);
}

TEST_CASE("window normalization is exactly translation-invariant") {
    // integer offsets on 1/1024-quantized coordinates keep the arithmetic exact
    SkeletonTrack base = straight_track(0, 0, 30);
    SkeletonTrack shifted = base;
    for (auto& tf : shifted.frames)
        for (auto& kp : tf.kps) {
            kp.x += 37.0;
            kp.y -= 12.0;
        }
    const auto wa = segment_tracks({base}, "v", 8, 2);
    const auto wb = segment_tracks({shifted}, "v", 8, 2);
    REQUIRE(wa.size() == wb.size());
    for (std::size_t i = 0; i < wa.size(); ++i) CHECK(wa[i].data.vec() == wb[i].data.vec());
}

TEST_CASE("identity-initialized flow is the identity map with zero log-det") {
    Rng rng(3);
    const FlowModel m = FlowModel::create(tiny_hyper(), rng, FlowInit::Identity);
    Tensor x = Tensor::randn({m.hyper.dims()}, rng);
    const auto [z, log_det] = flow_forward(m, x);
    CHECK(z.vec() == x.vec());
    CHECK(log_det[0] == 0.0);
    CHECK(flow_inverse(m, x).vec() == x.vec());

    const auto ll = flow_log_likelihood(m, x);
    CHECK(ll[0] == doctest::Approx(gaussian_log_density(x)).epsilon(1e-12));
}

TEST_CASE("analytic log-det matches the numerical-Jacobian oracle (D=6)") {
    for (std::uint64_t seed : {10u, 11u, 12u, 13u}) {
        Rng rng(seed);
        const FlowModel m = FlowModel::create(tiny_hyper(3, 1, 4, 6), rng, FlowInit::Random);
        Tensor x = Tensor::randn({m.hyper.dims()}, rng, 0.8);
        const double analytic = flow_forward(m, x).second[0];
        CHECK(analytic == doctest::Approx(jacobian_log_det(m, x)).epsilon(1e-5));
    }
}

TEST_CASE("forward/inverse round trip on 100 random vectors") {
    Rng rng(21);
    const FlowModel m = FlowModel::create(tiny_hyper(4, 3, 6, 12), rng, FlowInit::Random);
    const std::size_t d = m.hyper.dims();
    double worst = 0.0;
    Tensor batch({100, d});
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = rng.normal();
    const Tensor z = flow_forward(m, batch).first;
    const Tensor back = flow_inverse(m, z);
    for (std::size_t i = 0; i < batch.size(); ++i)
        worst = std::max(worst, std::fabs(back[i] - batch[i]));
    CHECK(worst < 1e-8);
}

TEST_CASE("inverse-then-forward at the origin returns the origin") {
    Rng rng(22);
    const FlowModel m = FlowModel::create(tiny_hyper(3, 2, 4, 8), rng, FlowInit::Random);
    Tensor zero({m.hyper.dims()});
    const Tensor x = flow_inverse(m, zero);
    const Tensor z = flow_forward(m, x).first;
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::fabs(z[i]) < 1e-10);
}

TEST_CASE("training-path NLL equals the inference-path NLL") {
    Rng rng(23);
    FlowModel m = FlowModel::create(tiny_hyper(3, 2, 4, 8), rng, FlowInit::Random);
    const auto windows = synthetic_windows(8, m.hyper, 5);
    Tensor batch({windows.size(), m.hyper.dims()});
    for (std::size_t i = 0; i < windows.size(); ++i)
        std::copy(windows[i].data.vec().begin(), windows[i].data.vec().end(),
                  batch.vec().begin() + static_cast<std::ptrdiff_t>(i * m.hyper.dims()));
    const double train_path = flow_nll_loss_and_grad(m, m.params, batch);
    CHECK(train_path == doctest::Approx(flow_mean_nll(m, windows)).epsilon(1e-9));
}

TEST_CASE("flow gradients agree with central differences") {
    Rng rng(24);
    FlowModel m = FlowModel::create(tiny_hyper(3, 2, 2, 6), rng, FlowInit::Random);
    const auto windows = synthetic_windows(4, m.hyper, 6);
    Tensor batch({windows.size(), m.hyper.dims()});
    for (std::size_t i = 0; i < windows.size(); ++i)
        std::copy(windows[i].data.vec().begin(), windows[i].data.vec().end(),
                  batch.vec().begin() + static_cast<std::ptrdiff_t>(i * m.hyper.dims()));
    auto loss_fn = [&](ParamSet& p) { return flow_nll_loss_and_grad(m, p, batch); };
    const auto report = grad_check(loss_fn, m.params, 1e-5);
    CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("zero training epochs leave the model unchanged") {
    Rng rng(25);
    FlowModel m = FlowModel::create(tiny_hyper(), rng, FlowInit::Identity);
    const auto snapshot = m.params.params;
    FlowTrainHyper h;
    h.epochs = 0;
    const auto result = train_flow(m, synthetic_windows(4, m.hyper, 7), h);
    CHECK(result.epoch_nll.empty());
    for (const auto& [name, t] : m.params.params) CHECK(t.vec() == snapshot.at(name).vec());
}

TEST_CASE("training an empty window set is an error") {
    Rng rng(26);
    FlowModel m = FlowModel::create(tiny_hyper(), rng);
    CHECK_THROWS_AS(train_flow(m, {}, FlowTrainHyper{}), DataError);
}

TEST_CASE("single-window overfit: NLL strictly decreases over the first 10 epochs") {
    Rng rng(27);
    FlowModel m = FlowModel::create(tiny_hyper(4, 2, 4, 16), rng, FlowInit::Identity);
    const auto windows = synthetic_windows(1, m.hyper, 8);
    FlowTrainHyper h;
    h.epochs = 10;
    h.batch_size = 1;
    const auto result = train_flow(m, windows, h);
    REQUIRE(result.epoch_nll.size() == 10);
    for (std::size_t e = 1; e < result.epoch_nll.size(); ++e)
        CHECK(result.epoch_nll[e] < result.epoch_nll[e - 1]);
    CHECK(result.final_nll < result.initial_nll);
}

TEST_CASE("training on a window family reduces NLL and is seed-deterministic") {
    const FlowHyper hyper = tiny_hyper(6, 3, 4, 16);
    const auto windows = synthetic_windows(64, hyper, 9);
    FlowTrainHyper h;
    h.epochs = 30;
    h.batch_size = 16;

    Rng rng_a(31), rng_b(31);
    FlowModel a = FlowModel::create(hyper, rng_a, FlowInit::Identity);
    FlowModel b = FlowModel::create(hyper, rng_b, FlowInit::Identity);
    const auto ra = train_flow(a, windows, h);
    const auto rb = train_flow(b, windows, h);
    CHECK(ra.final_nll < ra.initial_nll);
    CHECK(ra.final_nll == rb.final_nll);
    for (const auto& [name, t] : a.params.params) CHECK(t.vec() == b.params.params.at(name).vec());
}

TEST_CASE("score_frames_flow: single window and overlapping minimum") {
    Rng rng(33);
    const FlowModel m = FlowModel::create(tiny_hyper(3, 2, 4, 8), rng, FlowInit::Identity);

    SUBCASE("one window covers exactly its frames") {
        auto windows = synthetic_windows(1, m.hyper, 10);
        windows[0].start_frame = 0;
        const auto series = score_frames_flow(m, windows, "synthwin", 5);
        const double ll = flow_log_likelihood(m, windows[0].data.reshape({m.hyper.dims()}))[0];
        for (std::size_t f = 0; f < 3; ++f) {
            REQUIRE(series.scores[f].has_value());
            CHECK(*series.scores[f] == doctest::Approx(-ll).epsilon(1e-12));
        }
        CHECK_FALSE(series.scores[3].has_value());
        CHECK_FALSE(series.scores[4].has_value());
    }

    SUBCASE("overlap takes the minimum log-likelihood") {
        auto windows = synthetic_windows(2, m.hyper, 11);
        windows[0].start_frame = 0;
        windows[1].start_frame = 2;
        const auto series = score_frames_flow(m, windows, "synthwin", 6);
        const double ll0 = flow_log_likelihood(m, windows[0].data.reshape({m.hyper.dims()}))[0];
        const double ll1 = flow_log_likelihood(m, windows[1].data.reshape({m.hyper.dims()}))[0];
        REQUIRE(series.scores[2].has_value());
        CHECK(*series.scores[2] == doctest::Approx(-std::min(ll0, ll1)).epsilon(1e-12));
    }
}

TEST_CASE("score_frames_flow matches a brute-force coverage oracle") {
    Rng rng(34);
    const FlowModel m = FlowModel::create(tiny_hyper(3, 2, 4, 8), rng, FlowInit::Random);
    auto windows = synthetic_windows(5, m.hyper, 12);
    const long starts[5] = {0, 7, 14, 2, 30};
    for (std::size_t i = 0; i < windows.size(); ++i) windows[i].start_frame = starts[i];
    const std::size_t frames = 40;
    const auto series = score_frames_flow(m, windows, "synthwin", frames);

    for (std::size_t f = 0; f < frames; ++f) {
        bool covered = false;
        double best = 0.0;
        for (const auto& w : windows) {
            if (static_cast<long>(f) < w.start_frame ||
                static_cast<long>(f) >= w.start_frame + static_cast<long>(w.length))
                continue;
            const double ll = flow_log_likelihood(m, w.data.reshape({m.hyper.dims()}))[0];
            if (!covered || ll < best) best = ll;
            covered = true;
        }
        CHECK(series.scores[f].has_value() == covered);
        if (covered) CHECK(*series.scores[f] == doctest::Approx(-best).epsilon(1e-10));
    }
}

TEST_CASE("flow checkpoints round-trip") {
    Rng rng(35);
    const FlowModel m = FlowModel::create(tiny_hyper(3, 2, 4, 8), rng, FlowInit::Random);
    const auto path = (std::filesystem::temp_directory_path() / "vad_flow_ckpt.json").string();
    save_flow(m, path);
    const FlowModel loaded = load_flow(path);
    CHECK(loaded.hyper.window_len == m.hyper.window_len);
    for (const auto& [name, t] : m.params.params)
        CHECK(t.vec() == loaded.params.params.at(name).vec());
    std::filesystem::remove(path);

    Rng rng2(36);
    Tensor x = Tensor::randn({m.hyper.dims()}, rng2);
    CHECK(flow_log_likelihood(m, x)[0] == flow_log_likelihood(loaded, x)[0]);
}
