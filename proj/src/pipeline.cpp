#include "vad/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <thread>

#include "vad/io_util.hpp"

namespace vad {

namespace {

namespace fs = std::filesystem;

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const UsageError& e) {
        throw UsageError(name + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(name + ": " + e.what());
    } catch (const UndefinedAucError& e) {
        throw UndefinedAucError(name + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(name + ": " + e.what());
    }
}

std::string curve_csv(const FlowTrainResult& r) {
    std::ostringstream os;
    os << "epoch,mean_nll\n";
    os << "0," << fmt_double(r.initial_nll) << "\n";
    for (std::size_t i = 0; i < r.epoch_nll.size(); ++i)
        os << (i + 1) << "," << fmt_double(r.epoch_nll[i]) << "\n";
    return os.str();
}

std::string curve_csv(const JigsawTrainResult& r) {
    std::ostringstream os;
    os << "epoch,train_loss,holdout_acc_temporal,holdout_acc_spatial\n";
    for (const auto& p : r.curve)
        os << p.epoch << "," << fmt_double(p.train_loss) << ","
           << fmt_double(p.holdout_acc_temporal) << "," << fmt_double(p.holdout_acc_spatial)
           << "\n";
    return os.str();
}

std::string roc_csv(const RocCurve& curve) {
    std::ostringstream os;
    os << "fpr,tpr\n";
    for (const auto& [fpr, tpr] : curve.points)
        os << fmt_double(fpr) << "," << fmt_double(tpr) << "\n";
    return os.str();
}

}  // namespace

std::vector<PoseWindow> collect_train_windows(const std::vector<SyntheticVideo>& videos,
                                              const FlowBranchConfig& cfg) {
    std::vector<PoseWindow> windows;
    for (const auto& v : videos) {
        auto w = segment_tracks(v.tracks, v.video_id, cfg.model.window_len, cfg.train_stride);
        windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                       std::make_move_iterator(w.end()));
    }
    if (windows.size() > cfg.max_train_windows) {
        std::vector<std::size_t> order(windows.size());
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(cfg.train.seed, 0x5e1ec7));
        rng.shuffle(order);
        std::vector<PoseWindow> kept;
        for (std::size_t i = 0; i < cfg.max_train_windows; ++i)
            kept.push_back(std::move(windows[order[i]]));
        windows = std::move(kept);
    }
    return windows;
}

std::vector<SpaceTimeCube> collect_train_cubes(const std::vector<SyntheticVideo>& videos,
                                               const JigsawBranchConfig& cfg) {
    std::vector<SpaceTimeCube> cubes;
    for (const auto& v : videos) {
        auto c = build_cubes(v, cfg.model);
        cubes.insert(cubes.end(), std::make_move_iterator(c.begin()),
                     std::make_move_iterator(c.end()));
    }
    if (cubes.size() > cfg.max_train_cubes) {
        std::vector<std::size_t> order(cubes.size());
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(cfg.train.seed, 0xcb5e1));
        rng.shuffle(order);
        std::vector<SpaceTimeCube> kept;
        for (std::size_t i = 0; i < cfg.max_train_cubes; ++i)
            kept.push_back(std::move(cubes[order[i]]));
        cubes = std::move(kept);
    }
    return cubes;
}

std::vector<FrameScoreSeries> score_skeleton_split(const FlowModel& model,
                                                   const std::vector<SyntheticVideo>& videos,
                                                   const FlowBranchConfig& cfg) {
    std::vector<FrameScoreSeries> out;
    for (const auto& v : videos) {
        auto windows = segment_tracks(v.tracks, v.video_id, cfg.model.window_len, cfg.test_stride);
        out.push_back(score_frames_flow(model, windows, v.video_id,
                                        static_cast<std::size_t>(v.frame_count)));
    }
    return out;
}

std::vector<FrameScoreSeries> score_jigsaw_split(const JigsawNet& net,
                                                 const std::vector<SyntheticVideo>& videos,
                                                 const JigsawHyper& hyper, FusionMode mode) {
    FusionConfig fc;
    fc.mode = mode;
    std::vector<FrameScoreSeries> out;
    for (const auto& v : videos) {
        const auto detections = select_mode_inputs(fc, v.detections);
        const auto cubes = build_cubes(v, detections, hyper);
        const auto score_mode = mode == FusionMode::WO_HUMAN ? JigsawScoreMode::NonHumanOnly
                                                             : JigsawScoreMode::AllObjects;
        out.push_back(score_frames_jigsaw(net, cubes, v.video_id,
                                          static_cast<std::size_t>(v.frame_count), score_mode));
    }
    return out;
}

LabeledScores to_labeled(const std::vector<FrameScoreSeries>& series,
                         const std::vector<SyntheticVideo>& videos) {
    if (series.size() != videos.size()) throw DataError("series/video count mismatch");
    LabeledScores ls;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].video_id != videos[i].video_id)
            throw DataError("series/video order mismatch: " + series[i].video_id);
        std::vector<double> scores;
        for (const auto& s : series[i].scores) {
            if (!s) throw DataError("labeled scores need filled series");
            scores.push_back(*s);
        }
        ls.append(videos[i].video_id, scores, videos[i].labels);
    }
    return ls;
}

LabeledScores to_labeled_fused(const std::vector<FusedResult>& fused,
                               const std::vector<SyntheticVideo>& videos) {
    std::vector<FrameScoreSeries> series;
    for (const auto& f : fused) series.push_back(f.fused);
    return to_labeled(series, videos);
}

std::vector<FrameScoreSeries> prepare_series(const std::vector<FrameScoreSeries>& raw,
                                             const FusionConfig& fusion) {
    std::vector<FrameScoreSeries> filled;
    for (const auto& s : raw) filled.push_back(fill_missing(s, fusion.missing_default));
    return normalize_scores(filled, fusion.normalization);
}

PipelineArtifacts run_pipeline(const ExperimentConfig& cfg) {
    PipelineArtifacts art;
    art.dataset = stage("synth", [&] { return generate_dataset(cfg.synth, cfg.synth_seed); });

    // the two branch trainings are independent; run them concurrently
    std::exception_ptr flow_err, jigsaw_err;
    Rng flow_rng(derive_seed(cfg.flow.train.seed, 0xf10a));
    art.flow = FlowModel::create(cfg.flow.model, flow_rng, FlowInit::Identity);
    Rng jig_rng(derive_seed(cfg.jigsaw.train.seed, 0x1195a));
    art.jigsaw = JigsawNet::create(cfg.jigsaw.model, jig_rng);

    std::thread flow_thread([&] {
        try {
            const auto windows = collect_train_windows(art.dataset.train, cfg.flow);
            art.flow_train = stage("train-flow", [&] {
                return train_flow(art.flow, windows, cfg.flow.train);
            });
        } catch (...) {
            flow_err = std::current_exception();
        }
    });
    std::thread jigsaw_thread([&] {
        try {
            const auto cubes = collect_train_cubes(art.dataset.train, cfg.jigsaw);
            art.jigsaw_train = stage("train-jigsaw", [&] {
                return train_jigsaw(art.jigsaw, cubes, cfg.jigsaw.train);
            });
        } catch (...) {
            jigsaw_err = std::current_exception();
        }
    });
    flow_thread.join();
    jigsaw_thread.join();
    if (flow_err) std::rethrow_exception(flow_err);
    if (jigsaw_err) std::rethrow_exception(jigsaw_err);

    stage("score", [&] {
        art.skeleton_raw = score_skeleton_split(art.flow, art.dataset.test, cfg.flow);
        art.jigsaw_w_raw =
            score_jigsaw_split(art.jigsaw, art.dataset.test, cfg.jigsaw.model, FusionMode::W_HUMAN);
        art.jigsaw_wo_raw = score_jigsaw_split(art.jigsaw, art.dataset.test, cfg.jigsaw.model,
                                               FusionMode::WO_HUMAN);
        return 0;
    });

    stage("fuse", [&] {
        art.skeleton_n = prepare_series(art.skeleton_raw, cfg.fusion);
        art.jigsaw_w_n = prepare_series(art.jigsaw_w_raw, cfg.fusion);
        art.jigsaw_wo_n = prepare_series(art.jigsaw_wo_raw, cfg.fusion);
        art.fused_w = fuse_all(art.skeleton_n, art.jigsaw_w_n, cfg.fusion);
        art.fused_wo = fuse_all(art.skeleton_n, art.jigsaw_wo_n, cfg.fusion);
        return 0;
    });
    return art;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    write_text_file(out / "config.ini",
                    cfg.raw_text.empty() ? default_config_ini() : cfg.raw_text);

    PipelineArtifacts art = run_pipeline(cfg);

    stage("persist", [&] {
        save_dataset(art.dataset, (out / "dataset").string(), cfg.synth);
        fs::create_directories(out / "models");
        save_flow(art.flow, (out / "models" / "flow.json").string());
        save_jigsaw(art.jigsaw, (out / "models" / "jigsaw.json").string());
        fs::create_directories(out / "curves");
        write_text_file(out / "curves" / "flow_loss.csv", curve_csv(art.flow_train));
        write_text_file(out / "curves" / "jigsaw_accuracy.csv", curve_csv(art.jigsaw_train));
        fs::create_directories(out / "scores");
        write_series_csv((out / "scores" / "scores_skeleton.csv").string(), art.skeleton_raw);
        write_series_csv((out / "scores" / "scores_jigsaw_w.csv").string(), art.jigsaw_w_raw);
        write_series_csv((out / "scores" / "scores_jigsaw_wo.csv").string(), art.jigsaw_wo_raw);
        write_fused_csv((out / "scores" / "scores_fused_w.csv").string(), art.fused_w);
        write_fused_csv((out / "scores" / "scores_fused_wo.csv").string(), art.fused_wo);
        return 0;
    });

    ExperimentReport report;
    report.out_dir = out_dir;
    stage("eval", [&] {
        std::vector<std::pair<std::string, LabeledScores>> runs;
        runs.emplace_back("skeleton", to_labeled(art.skeleton_n, art.dataset.test));
        runs.emplace_back("jigsaw", to_labeled(art.jigsaw_w_n, art.dataset.test));
        runs.emplace_back("fused_w_human", to_labeled_fused(art.fused_w, art.dataset.test));
        runs.emplace_back("fused_wo_human", to_labeled_fused(art.fused_wo, art.dataset.test));

        report.comparison = compare_runs(runs);
        fs::create_directories(out / "eval");
        for (const auto& [name, ls] : runs) {
            report.aucs[name] = micro_auc(ls);
            write_text_file(out / "eval" / ("roc_" + name + ".csv"), roc_csv(roc_curve(ls)));
        }
        write_text_file(out / "eval" / "report.csv", report.comparison.csv);
        write_text_file(out / "eval" / "report.txt", report.comparison.text);
        return 0;
    });
    return report;
}

}  // namespace vad
