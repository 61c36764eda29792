#include <doctest.h>

#include <filesystem>

#include "vad/config.hpp"
#include "vad/io_util.hpp"
#include "vad/pipeline.hpp"

using namespace vad;

namespace {

namespace fs = std::filesystem;

// deliberately tiny: unit tests only exercise plumbing, not model quality
ExperimentConfig tiny_config() {
    ExperimentConfig cfg = parse_experiment_config(default_config_ini());
    cfg.synth.train_videos = 1;
    cfg.synth.test_videos = 2;
    cfg.synth.frames_per_video = 80;
    cfg.synth.actors_per_video = 2;
    cfg.synth.benign_objects_per_video = 1;
    cfg.synth.interval_len = 24;
    cfg.flow.model.window_len = 8;
    cfg.flow.model.layers = 2;
    cfg.flow.model.hidden = 8;
    cfg.flow.train.epochs = 2;
    cfg.flow.train_stride = 8;
    cfg.flow.max_train_windows = 64;
    cfg.jigsaw.model.T = 5;
    cfg.jigsaw.model.S = 8;
    cfg.jigsaw.model.T_sub = 3;
    cfg.jigsaw.model.d_cell = 4;
    cfg.jigsaw.model.d_patch = 6;
    cfg.jigsaw.model.d_trunk = 8;
    cfg.jigsaw.model.filter = 0.0;
    cfg.jigsaw.train.epochs = 2;
    cfg.jigsaw.max_train_cubes = 128;
    return cfg;
}

fs::path scratch(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("vad_pipe_" + tag);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("config parsing: defaults, overrides, and validation") {
    const ExperimentConfig d = parse_experiment_config(default_config_ini());
    CHECK(d.flow.model.window_len == 24);
    CHECK(d.jigsaw.model.T == 9);
    CHECK(d.jigsaw.model.filter == 0.8);
    CHECK(d.flow.model.dims() == 24 * 17 * 2);

    const ExperimentConfig c = parse_experiment_config(
        "[synth]\nseed = 5\nkeypoints = 4\n\n[flow]\nwindow_len = 12\n\n[jigsaw]\nfilter = 0.5\n");
    CHECK(c.synth_seed == 5);
    CHECK(c.flow.model.window_len == 12);
    CHECK(c.flow.model.keypoints == 4);  // follows the synth keypoint count
    CHECK(c.jigsaw.model.filter == 0.5);

    CHECK_THROWS_AS(parse_experiment_config("[nope]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("[flow]\ntypo_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("[flow]\nbroken line\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("[synth]\npose_fraction = 2\n"), ConfigError);
}

TEST_CASE("master seed override rewrites all stage seeds deterministically") {
    ExperimentConfig a = parse_experiment_config(default_config_ini());
    ExperimentConfig b = parse_experiment_config(default_config_ini());
    a.override_master_seed(123);
    b.override_master_seed(123);
    CHECK(a.synth_seed == b.synth_seed);
    CHECK(a.flow.train.seed == b.flow.train.seed);
    CHECK(a.jigsaw.train.seed == b.jigsaw.train.seed);
    b.override_master_seed(124);
    CHECK(a.synth_seed != b.synth_seed);
}

TEST_CASE("run_experiment writes every artifact and is byte-deterministic") {
    const ExperimentConfig cfg = tiny_config();
    const fs::path out_a = scratch("run_a");
    const fs::path out_b = scratch("run_b");
    const ExperimentReport ra = run_experiment(cfg, out_a.string());
    const ExperimentReport rb = run_experiment(cfg, out_b.string());

    const char* files[] = {
        "config.ini",
        "models/flow.json",
        "models/jigsaw.json",
        "curves/flow_loss.csv",
        "curves/jigsaw_accuracy.csv",
        "scores/scores_skeleton.csv",
        "scores/scores_jigsaw_w.csv",
        "scores/scores_jigsaw_wo.csv",
        "scores/scores_fused_w.csv",
        "scores/scores_fused_wo.csv",
        "eval/report.csv",
        "eval/report.txt",
        "eval/roc_skeleton.csv",
        "eval/roc_jigsaw.csv",
        "eval/roc_fused_w_human.csv",
        "eval/roc_fused_wo_human.csv",
    };
    for (const char* f : files) {
        CAPTURE(f);
        REQUIRE(fs::exists(out_a / f));
        CHECK(read_text_file(out_a / f) == read_text_file(out_b / f));
    }
    CHECK(ra.aucs.size() == 4);
    CHECK(ra.aucs.at("skeleton") == rb.aucs.at("skeleton"));
    CHECK(ra.comparison.rows.front().best);

    // dataset split loads back and matches video count
    const Dataset ds = load_dataset((out_a / "dataset").string());
    CHECK(ds.train.size() == 1);
    CHECK(ds.test.size() == 2);

    fs::remove_all(out_a);
    fs::remove_all(out_b);
}

TEST_CASE("intermediate artifacts are consumable by the standalone stages") {
    const ExperimentConfig cfg = tiny_config();
    const fs::path out = scratch("consume");
    run_experiment(cfg, out.string());

    // reload models and re-score the persisted dataset; must match the run's csv
    const Dataset ds = load_dataset((out / "dataset").string());
    const FlowModel flow = load_flow((out / "models" / "flow.json").string());
    const auto series = score_skeleton_split(flow, ds.test, cfg.flow);
    const auto persisted = read_series_csv((out / "scores" / "scores_skeleton.csv").string());
    REQUIRE(series.size() == persisted.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        CHECK(series[i].video_id == persisted[i].video_id);
        REQUIRE(series[i].size() == persisted[i].size());
        for (std::size_t f = 0; f < series[i].size(); ++f) {
            CHECK(series[i].scores[f].has_value() == persisted[i].scores[f].has_value());
            if (series[i].scores[f])
                CHECK(*series[i].scores[f] ==
                      doctest::Approx(*persisted[i].scores[f]).epsilon(1e-12));
        }
    }

    const JigsawNet net = load_jigsaw((out / "models" / "jigsaw.json").string());
    const auto jig = score_jigsaw_split(net, ds.test, net.hyper, FusionMode::W_HUMAN);
    const auto jig_persisted = read_series_csv((out / "scores" / "scores_jigsaw_w.csv").string());
    REQUIRE(jig.size() == jig_persisted.size());

    fs::remove_all(out);
}

TEST_CASE("a test split without anomalies fails evaluation cleanly") {
    ExperimentConfig cfg = tiny_config();
    cfg.synth.intervals_per_test_video = 0;
    const fs::path out = scratch("degenerate");
    CHECK_THROWS_AS(run_experiment(cfg, out.string()), UndefinedAucError);
    // partial outputs were flushed before the eval stage failed
    CHECK(fs::exists(out / "scores" / "scores_fused_w.csv"));
    fs::remove_all(out);
}

TEST_CASE("score csv NA round-trip") {
    FrameScoreSeries s("v", 3);
    s.scores[1] = 0.5;
    const std::string csv = series_to_csv({s});
    CHECK(csv.find("v,0,NA") != std::string::npos);
    const auto back = series_from_csv(csv);
    REQUIRE(back.size() == 1);
    CHECK_FALSE(back[0].scores[0].has_value());
    CHECK(*back[0].scores[1] == 0.5);
    CHECK_FALSE(back[0].scores[2].has_value());
}
