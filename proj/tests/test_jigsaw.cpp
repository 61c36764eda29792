#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "vad/jigsaw.hpp"

using namespace vad;

namespace {

JigsawHyper tiny_hyper() {
    JigsawHyper h;
    h.T = 5;
    h.S = 8;
    h.G = 2;
    h.T_sub = 3;
    h.d_cell = 6;
    h.d_patch = 8;
    h.d_trunk = 12;
    return h;
}

// cube whose patch t is constant value marker(t); cells get +cell offsets
SpaceTimeCube marker_cube(const JigsawHyper& h, double scale = 1.0) {
    SpaceTimeCube cube;
    cube.video_id = "v";
    cube.object_id = 0;
    cube.center_frame = static_cast<long>(h.T / 2);
    cube.patches = Tensor({h.T, h.S, h.S});
    const std::size_t cell = h.S / h.G;
    for (std::size_t t = 0; t < h.T; ++t)
        for (std::size_t y = 0; y < h.S; ++y)
            for (std::size_t x = 0; x < h.S; ++x) {
                const std::size_t c = (y / cell) * h.G + (x / cell);
                cube.patches[(t * h.S + y) * h.S + x] =
                    scale * (10.0 * static_cast<double>(t) + static_cast<double>(c));
            }
    return cube;
}

SyntheticVideo tiny_video(std::uint64_t seed, int actors = 1, int objects = 1) {
    SynthConfig c;
    c.train_videos = 1;
    c.test_videos = 1;
    c.frames_per_video = 60;
    c.actors_per_video = actors;
    c.benign_objects_per_video = objects;
    c.interval_len = 20;
    return generate_normal_video(c, "v", seed);
}

}  // namespace

TEST_CASE("lexicographic rank: identity is 0, reversal is n!-1") {
    CHECK(perm_rank({0, 1, 2}) == 0);
    CHECK(perm_rank({2, 1, 0}) == 5);
    CHECK(perm_rank({0, 2, 1}) == 1);
    CHECK(factorial(4) == 24);
    CHECK_THROWS_AS(factorial(9), ConfigError);
}

TEST_CASE("rank/unrank is a bijection for n <= 5") {
    for (std::size_t n = 1; n <= 5; ++n) {
        std::set<std::size_t> seen;
        for (std::size_t r = 0; r < factorial(n); ++r) {
            const auto perm = perm_unrank(r, n);
            CHECK(perm_rank(perm) == r);
            seen.insert(perm_rank(perm));
        }
        CHECK(seen.size() == factorial(n));
    }
}

TEST_CASE("sampled permutations are uniform (5-sigma band, n=4)") {
    Rng rng(77);
    const std::size_t samples = 60000;
    std::vector<std::size_t> counts(24, 0);
    for (std::size_t i = 0; i < samples; ++i)
        counts[sample_permutation(PermAxis::Temporal, 4, rng).class_index]++;
    const double p = 1.0 / 24.0;
    const double sigma = std::sqrt(static_cast<double>(samples) * p * (1.0 - p));
    for (std::size_t c = 0; c < 24; ++c) {
        const double diff = std::fabs(static_cast<double>(counts[c]) -
                                      static_cast<double>(samples) * p);
        CHECK(diff <= 5.0 * sigma);
    }
}

TEST_CASE("apply_permutation: identity, inverse, composition, reversal") {
    const JigsawHyper h = tiny_hyper();
    const SpaceTimeCube cube = marker_cube(h);

    PermutationTask identity;
    identity.axis = PermAxis::Temporal;
    identity.perm = {0, 1, 2, 3, 4};
    identity.class_index = 0;
    CHECK(apply_permutation(cube, identity, h.G).patches.vec() == cube.patches.vec());

    SUBCASE("temporal inverse restores bit-exactly") {
        Rng rng(5);
        PermutationTask task = sample_permutation(PermAxis::Temporal, h.T, rng);
        PermutationTask inverse = task;
        inverse.perm = perm_inverse(task.perm);
        const SpaceTimeCube there = apply_permutation(cube, task, h.G);
        const SpaceTimeCube back = apply_permutation(there, inverse, h.G);
        CHECK(back.patches.vec() == cube.patches.vec());
    }

    SUBCASE("spatial inverse restores bit-exactly") {
        Rng rng(6);
        PermutationTask task = sample_permutation(PermAxis::Spatial, h.G * h.G, rng);
        PermutationTask inverse = task;
        inverse.perm = perm_inverse(task.perm);
        const SpaceTimeCube back =
            apply_permutation(apply_permutation(cube, task, h.G), inverse, h.G);
        CHECK(back.patches.vec() == cube.patches.vec());
    }

    SUBCASE("group action: apply(q) then apply(p) equals apply(p_after_q)") {
        Rng rng(7);
        PermutationTask p = sample_permutation(PermAxis::Temporal, h.T, rng);
        PermutationTask q = sample_permutation(PermAxis::Temporal, h.T, rng);
        const SpaceTimeCube stepwise =
            apply_permutation(apply_permutation(cube, p, h.G), q, h.G);
        PermutationTask combined = p;
        combined.perm = perm_compose(p.perm, q.perm);
        combined.class_index = perm_rank(combined.perm);
        CHECK(apply_permutation(cube, combined, h.G).patches.vec() == stepwise.patches.vec());
    }

    SUBCASE("temporal reversal reverses marker order") {
        PermutationTask rev;
        rev.axis = PermAxis::Temporal;
        rev.perm = {4, 3, 2, 1, 0};
        rev.class_index = perm_rank(rev.perm);
        const SpaceTimeCube flipped = apply_permutation(cube, rev, h.G);
        for (std::size_t t = 0; t < h.T; ++t) {
            const double marker = std::floor(flipped.patches[t * h.S * h.S] / 10.0);
            CHECK(marker == static_cast<double>(h.T - 1 - t));
        }
    }

    SUBCASE("shape mismatches are rejected") {
        PermutationTask bad;
        bad.axis = PermAxis::Temporal;
        bad.perm = {1, 0};
        bad.offset = 4;  // offset + n exceeds T
        CHECK_THROWS_AS(apply_permutation(cube, bad, h.G), ConfigError);
        PermutationTask bad_s;
        bad_s.axis = PermAxis::Spatial;
        bad_s.perm = {1, 0, 2};
        CHECK_THROWS_AS(apply_permutation(cube, bad_s, h.G), ConfigError);
    }
}

TEST_CASE("temporal sub-puzzle with offset only reorders its own run") {
    const JigsawHyper h = tiny_hyper();
    const SpaceTimeCube cube = marker_cube(h);
    PermutationTask task;
    task.axis = PermAxis::Temporal;
    task.perm = {2, 0, 1};
    task.offset = 1;
    task.class_index = perm_rank(task.perm);
    const SpaceTimeCube out = apply_permutation(cube, task, h.G);
    auto marker = [&](std::size_t t) { return std::floor(out.patches[t * h.S * h.S] / 10.0); };
    CHECK(marker(0) == 0.0);
    CHECK(marker(1) == 3.0);
    CHECK(marker(2) == 1.0);
    CHECK(marker(3) == 2.0);
    CHECK(marker(4) == 4.0);
}

TEST_CASE("build_cubes counts and filtering") {
    SUBCASE("object on frames 0..8 with T=9 gives one centered cube") {
        SyntheticVideo v = tiny_video(3, 0, 1);
        JigsawHyper h;
        h.T = 9;
        h.S = 8;
        h.G = 2;
        h.T_sub = 4;
        h.filter = 0.0;
        std::vector<DetectionBox> dets;
        for (const auto& d : v.detections)
            if (d.frame < 9) dets.push_back(d);
        const auto cubes = build_cubes(v, dets, h);
        REQUIRE(cubes.size() == 1);
        CHECK(cubes[0].center_frame == 4);
    }

    SUBCASE("object on frames 0..10 with T=5 gives centers 2..8") {
        SyntheticVideo v = tiny_video(4, 0, 1);
        JigsawHyper h = tiny_hyper();
        h.filter = 0.0;
        std::vector<DetectionBox> dets;
        for (const auto& d : v.detections)
            if (d.frame < 11) dets.push_back(d);
        const auto cubes = build_cubes(v, dets, h);
        REQUIRE(cubes.size() == 7);
        CHECK(cubes.front().center_frame == 2);
        CHECK(cubes.back().center_frame == 8);
    }

    SUBCASE("a strict filter on jittering human boxes drops cubes") {
        SyntheticVideo v = tiny_video(5, 2, 0);  // humans jitter; benign boxes are rigid
        JigsawHyper h = tiny_hyper();
        h.filter = 0.0;
        const auto loose = build_cubes(v, h);
        h.filter = 1.0;
        const auto strict = build_cubes(v, h);
        CHECK(strict.size() < loose.size());
        CHECK(!loose.empty());
    }
}

TEST_CASE("head outputs are probability simplices for any input") {
    Rng rng(9);
    const JigsawHyper h = tiny_hyper();
    const JigsawNet net = JigsawNet::create(h, rng);
    std::vector<SpaceTimeCube> cubes = {marker_cube(h, 1.0), marker_cube(h, -3.7),
                                        marker_cube(h, 100.0)};
    const JigsawProbs probs = jigsaw_forward(net, cubes);
    for (const Tensor* head : {&probs.temporal, &probs.spatial}) {
        for (std::size_t i = 0; i < head->rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < head->cols(); ++j) {
                CHECK(head->at2(i, j) >= 0.0);
                sum += head->at2(i, j);
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("untrained accuracy sits at chance within a 5-sigma binomial band") {
    Rng rng(10);
    JigsawHyper h = tiny_hyper();
    h.T = 9;
    h.T_sub = 4;  // 24 classes, mirroring the default temporal head
    const JigsawNet net = JigsawNet::create(h, rng);
    SyntheticVideo v = tiny_video(11, 1, 1);
    JigsawHyper build = h;
    build.filter = 0.0;
    auto cubes = build_cubes(v, build);
    REQUIRE(cubes.size() >= 50);
    Rng task_rng(12);
    // repeat cubes to get a tight band
    std::vector<SpaceTimeCube> many;
    while (many.size() < 600) many.insert(many.end(), cubes.begin(), cubes.end());
    const double acc = jigsaw_accuracy(net, many, PermAxis::Temporal, task_rng);
    const double p = 1.0 / 24.0;
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(many.size()));
    CHECK(std::fabs(acc - p) <= 5.0 * sigma);
}

TEST_CASE("jigsaw gradients agree with central differences") {
    Rng rng(13);
    const JigsawHyper h = tiny_hyper();
    JigsawNet net = JigsawNet::create(h, rng);
    std::vector<SpaceTimeCube> cubes = {marker_cube(h, 0.5), marker_cube(h, 1.5),
                                        marker_cube(h, -0.5), marker_cube(h, 2.0)};
    std::vector<const SpaceTimeCube*> ptrs;
    for (const auto& c : cubes) ptrs.push_back(&c);
    Rng task_rng(14);
    std::vector<PermutationTask> tasks;
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        if (i % 2 == 0) {
            PermutationTask t = sample_permutation(PermAxis::Temporal, h.T_sub, task_rng);
            t.offset = i % (h.T - h.T_sub + 1);
            tasks.push_back(t);
        } else {
            tasks.push_back(sample_permutation(PermAxis::Spatial, h.G * h.G, task_rng));
        }
    }
    auto loss_fn = [&](ParamSet& p) { return jigsaw_loss_and_grad(net, p, ptrs, tasks); };
    const auto report = grad_check(loss_fn, net.params, 1e-5);
    CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("zero epochs leave the net unchanged; empty cube set is an error") {
    Rng rng(15);
    JigsawNet net = JigsawNet::create(tiny_hyper(), rng);
    const auto snapshot = net.params.params;
    JigsawTrainHyper th;
    th.epochs = 0;
    SyntheticVideo v = tiny_video(16, 1, 1);
    JigsawHyper build = tiny_hyper();
    build.filter = 0.0;
    const auto cubes = build_cubes(v, build);
    REQUIRE(!cubes.empty());
    train_jigsaw(net, cubes, th);
    for (const auto& [name, t] : net.params.params) CHECK(t.vec() == snapshot.at(name).vec());
    CHECK_THROWS_AS(train_jigsaw(net, {}, th), DataError);
}

TEST_CASE("jigsaw training is seed-deterministic") {
    const JigsawHyper h = tiny_hyper();
    SyntheticVideo v = tiny_video(17, 1, 1);
    JigsawHyper build = h;
    build.filter = 0.0;
    const auto cubes = build_cubes(v, build);
    JigsawTrainHyper th;
    th.epochs = 3;
    th.batch_size = 16;
    Rng ra(18), rb(18);
    JigsawNet a = JigsawNet::create(h, ra);
    JigsawNet b = JigsawNet::create(h, rb);
    train_jigsaw(a, cubes, th);
    train_jigsaw(b, cubes, th);
    for (const auto& [name, t] : a.params.params) CHECK(t.vec() == b.params.params.at(name).vec());
}

TEST_CASE("score_frames_jigsaw arithmetic and modes") {
    Rng rng(19);
    const JigsawHyper h = tiny_hyper();
    const JigsawNet net = JigsawNet::create(h, rng);

    SUBCASE("single cube: canonical score is 1 - mean identity probability") {
        std::vector<SpaceTimeCube> cubes = {marker_cube(h)};
        const JigsawProbs probs = jigsaw_forward(net, cubes);
        const double normality = 0.5 * (probs.temporal.at2(0, 0) + probs.spatial.at2(0, 0));
        const auto series =
            score_frames_jigsaw(net, cubes, "v", 7, JigsawScoreMode::AllObjects);
        for (std::size_t f = 0; f < 5; ++f) {
            REQUIRE(series.scores[f].has_value());
            CHECK(*series.scores[f] == doctest::Approx(1.0 - normality).epsilon(1e-12));
        }
        CHECK_FALSE(series.scores[5].has_value());
        CHECK_FALSE(series.scores[6].has_value());
    }

    SUBCASE("non-human-only mode on an all-human video leaves every frame MISSING") {
        std::vector<SpaceTimeCube> cubes = {marker_cube(h)};
        cubes[0].cls = ObjectClass::Human;
        const auto series =
            score_frames_jigsaw(net, cubes, "v", 7, JigsawScoreMode::NonHumanOnly);
        CHECK(series.missing_count() == series.size());
    }

    SUBCASE("overlapping cubes match a brute-force aggregation oracle") {
        std::vector<SpaceTimeCube> cubes;
        for (long center = 2; center < 8; ++center) {
            SpaceTimeCube c = marker_cube(h, 0.3 * static_cast<double>(center + 1));
            c.center_frame = center;
            cubes.push_back(std::move(c));
        }
        const JigsawProbs probs = jigsaw_forward(net, cubes);
        const std::size_t frames = 12;
        const auto series =
            score_frames_jigsaw(net, cubes, "v", frames, JigsawScoreMode::AllObjects);
        for (std::size_t f = 0; f < frames; ++f) {
            bool covered = false;
            double best = 0.0;
            for (std::size_t i = 0; i < cubes.size(); ++i) {
                const long first = cubes[i].center_frame - static_cast<long>(h.T / 2);
                if (static_cast<long>(f) < first ||
                    static_cast<long>(f) >= first + static_cast<long>(h.T))
                    continue;
                const double normality =
                    0.5 * (probs.temporal.at2(i, 0) + probs.spatial.at2(i, 0));
                if (!covered || normality < best) best = normality;
                covered = true;
            }
            CHECK(series.scores[f].has_value() == covered);
            if (covered) CHECK(*series.scores[f] == doctest::Approx(1.0 - best).epsilon(1e-12));
        }
    }
}

TEST_CASE("non-human-only scores ignore arbitrary human-patch changes") {
    Rng rng(20);
    SyntheticVideo v = tiny_video(21, 2, 1);
    JigsawHyper h = tiny_hyper();
    h.filter = 0.0;
    const JigsawNet net = JigsawNet::create(h, rng);

    const auto cubes = build_cubes(v, h);
    const auto base = score_frames_jigsaw(net, cubes, "v", 60, JigsawScoreMode::NonHumanOnly);

    // mutilate every human cube's patches; non-human-only scores must not move
    auto mutated = cubes;
    for (auto& c : mutated)
        if (c.cls == ObjectClass::Human)
            for (auto& px : c.patches.vec()) px = 1000.0 - px;
    const auto after = score_frames_jigsaw(net, mutated, "v", 60, JigsawScoreMode::NonHumanOnly);
    REQUIRE(base.size() == after.size());
    for (std::size_t f = 0; f < base.size(); ++f) {
        CHECK(base.scores[f].has_value() == after.scores[f].has_value());
        if (base.scores[f]) CHECK(*base.scores[f] == *after.scores[f]);
    }
}

TEST_CASE("jigsaw checkpoints round-trip") {
    Rng rng(22);
    const JigsawHyper h = tiny_hyper();
    const JigsawNet net = JigsawNet::create(h, rng);
    const auto path = (std::filesystem::temp_directory_path() / "vad_jigsaw_ckpt.json").string();
    save_jigsaw(net, path);
    const JigsawNet loaded = load_jigsaw(path);
    CHECK(loaded.hyper.T == h.T);
    for (const auto& [name, t] : net.params.params)
        CHECK(t.vec() == loaded.params.params.at(name).vec());
    std::filesystem::remove(path);
}
