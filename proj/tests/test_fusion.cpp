#include <doctest.h>

#include <cmath>

#include "vad/fusion.hpp"

using namespace vad;

namespace {

FrameScoreSeries series_of(const std::string& id, std::vector<std::optional<double>> vals) {
    FrameScoreSeries s(id, vals.size());
    s.scores = std::move(vals);
    return s;
}

}  // namespace

TEST_CASE("fill_missing") {
    const auto s = series_of("v", {std::nullopt, 0.4, std::nullopt});
    const auto filled = fill_missing(s, 0.0);
    CHECK(*filled.scores[0] == 0.0);
    CHECK(*filled.scores[1] == 0.4);
    CHECK(*filled.scores[2] == 0.0);

    const auto untouched = fill_missing(series_of("v", {0.1, 0.2}), 0.0);
    CHECK(*untouched.scores[0] == 0.1);
    CHECK(*untouched.scores[1] == 0.2);

    const auto all = fill_missing(
        series_of("v", {std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt,
                        std::nullopt, std::nullopt}),
        0.0);
    CHECK(all.size() == 7);
    for (const auto& v : all.scores) CHECK(*v == 0.0);

    const auto custom = fill_missing(series_of("v", {std::nullopt}), -2.5);
    CHECK(*custom.scores[0] == -2.5);
}

TEST_CASE("normalize_scores") {
    SUBCASE("minmax maps the range onto [0,1]") {
        const auto out = normalize_scores({series_of("v", {0.0, 5.0, 10.0})}, Normalization::MinMax);
        CHECK(*out[0].scores[0] == 0.0);
        CHECK(*out[0].scores[1] == 0.5);
        CHECK(*out[0].scores[2] == 1.0);
    }
    SUBCASE("constant series maps to zero") {
        const auto out = normalize_scores({series_of("v", {3.0, 3.0, 3.0})}, Normalization::MinMax);
        for (const auto& v : out[0].scores) CHECK(*v == 0.0);
        const auto z = normalize_scores({series_of("v", {3.0, 3.0, 3.0})}, Normalization::ZScore);
        for (const auto& v : z[0].scores) CHECK(*v == 0.0);
    }
    SUBCASE("none is the identity") {
        const auto out = normalize_scores({series_of("v", {0.7, -1.3})}, Normalization::None);
        CHECK(*out[0].scores[0] == 0.7);
        CHECK(*out[0].scores[1] == -1.3);
    }
    SUBCASE("normalization spans the whole concatenated set") {
        const auto out = normalize_scores(
            {series_of("a", {0.0, 2.0}), series_of("b", {4.0})}, Normalization::MinMax);
        CHECK(*out[0].scores[0] == 0.0);
        CHECK(*out[0].scores[1] == 0.5);
        CHECK(*out[1].scores[0] == 1.0);
    }
    SUBCASE("zscore normalizes to zero mean and unit variance") {
        const auto out =
            normalize_scores({series_of("v", {1.0, 2.0, 3.0, 4.0})}, Normalization::ZScore);
        double mean = 0.0, var = 0.0;
        for (const auto& v : out[0].scores) mean += *v;
        mean /= 4.0;
        for (const auto& v : out[0].scores) var += (*v - mean) * (*v - mean);
        CHECK(std::fabs(mean) < 1e-12);
        CHECK(var / 4.0 == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("missing entries are rejected") {
        CHECK_THROWS_AS(normalize_scores({series_of("v", {std::nullopt})}, Normalization::MinMax),
                        DataError);
    }
}

TEST_CASE("fuse sums per frame and keeps exact provenance") {
    FusionConfig fc;
    const auto fused = fuse(series_of("v", {0.2, 0.9}), series_of("v", {0.1, 0.8}), fc);
    CHECK(*fused.fused.scores[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(*fused.fused.scores[1] == doctest::Approx(1.7).epsilon(1e-15));
    REQUIRE(fused.provenance.size() == 2);
    for (std::size_t f = 0; f < 2; ++f)
        CHECK(*fused.fused.scores[f] == fused.provenance[f].first + fused.provenance[f].second);
}

TEST_CASE("an all-zero jigsaw series is the neutral element") {
    FusionConfig fc;
    const auto skeleton = series_of("v", {0.4, -0.2, 1.1});
    const auto fused = fuse(skeleton, series_of("v", {0.0, 0.0, 0.0}), fc);
    for (std::size_t f = 0; f < 3; ++f) CHECK(*fused.fused.scores[f] == *skeleton.scores[f]);
}

TEST_CASE("fuse is commutative") {
    FusionConfig fc;
    const auto a = series_of("v", {0.3, 0.6, 0.1});
    const auto b = series_of("v", {0.5, 0.2, 0.9});
    const auto ab = fuse(a, b, fc);
    const auto ba = fuse(b, a, fc);
    for (std::size_t f = 0; f < 3; ++f) CHECK(*ab.fused.scores[f] == *ba.fused.scores[f]);
}

TEST_CASE("fuse validates alignment") {
    FusionConfig fc;
    CHECK_THROWS_AS(fuse(series_of("a", {0.1}), series_of("b", {0.1}), fc), DataError);
    CHECK_THROWS_AS(fuse(series_of("v", {0.1, 0.2}), series_of("v", {0.1}), fc), DataError);
    CHECK_THROWS_AS(fuse(series_of("v", {std::nullopt}), series_of("v", {0.1}), fc), DataError);
}

TEST_CASE("select_mode_inputs") {
    std::vector<DetectionBox> dets;
    for (int i = 0; i < 3; ++i) {
        DetectionBox d;
        d.object_id = i;
        d.cls = ObjectClass::Human;
        dets.push_back(d);
    }
    for (int i = 3; i < 5; ++i) {
        DetectionBox d;
        d.object_id = i;
        d.cls = ObjectClass::NonHuman;
        dets.push_back(d);
    }

    FusionConfig wo;
    wo.mode = FusionMode::WO_HUMAN;
    const auto filtered = select_mode_inputs(wo, dets);
    CHECK(filtered.size() == 2);
    for (const auto& d : filtered) CHECK(d.cls == ObjectClass::NonHuman);

    FusionConfig w;
    w.mode = FusionMode::W_HUMAN;
    CHECK(select_mode_inputs(w, dets).size() == dets.size());
}

TEST_CASE("fused csv carries recomputable components") {
    FusionConfig fc;
    const auto fused = fuse_all({series_of("v", {0.25, 0.5})}, {series_of("v", {0.125, 0.25})}, fc);
    const std::string csv = fused_to_csv(fused);
    CHECK(csv.find("video,frame,score,skeleton_component,jigsaw_component") == 0);
    CHECK(csv.find("v,0,0.375,0.25,0.125") != std::string::npos);
    CHECK(csv.find("v,1,0.75,0.5,0.25") != std::string::npos);
}

TEST_CASE("mode parsing round-trips") {
    CHECK(parse_fusion_mode("w_human") == FusionMode::W_HUMAN);
    CHECK(parse_fusion_mode("WO_HUMAN") == FusionMode::WO_HUMAN);
    CHECK_THROWS_AS(parse_fusion_mode("nope"), ConfigError);
    CHECK(parse_normalization("zscore") == Normalization::ZScore);
    CHECK_THROWS_AS(parse_normalization("nope"), ConfigError);
}
