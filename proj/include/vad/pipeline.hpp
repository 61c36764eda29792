#pragma once

#include <map>
#include <string>
#include <vector>

#include "vad/config.hpp"
#include "vad/eval.hpp"
#include "vad/flow.hpp"
#include "vad/fusion.hpp"
#include "vad/jigsaw.hpp"
#include "vad/synth.hpp"

namespace vad {

// Canonical skeleton scores for each video of a split (test stride).
std::vector<FrameScoreSeries> score_skeleton_split(const FlowModel& model,
                                                   const std::vector<SyntheticVideo>& videos,
                                                   const FlowBranchConfig& cfg);

// Canonical jigsaw scores; WO_HUMAN removes human detections before cubes.
std::vector<FrameScoreSeries> score_jigsaw_split(const JigsawNet& net,
                                                 const std::vector<SyntheticVideo>& videos,
                                                 const JigsawHyper& hyper, FusionMode mode);

// Training-set assembly (deterministically subsampled).
std::vector<PoseWindow> collect_train_windows(const std::vector<SyntheticVideo>& videos,
                                              const FlowBranchConfig& cfg);
std::vector<SpaceTimeCube> collect_train_cubes(const std::vector<SyntheticVideo>& videos,
                                               const JigsawBranchConfig& cfg);

LabeledScores to_labeled(const std::vector<FrameScoreSeries>& series,
                         const std::vector<SyntheticVideo>& videos);
LabeledScores to_labeled_fused(const std::vector<FusedResult>& fused,
                               const std::vector<SyntheticVideo>& videos);

// fill + normalize, in the documented order
std::vector<FrameScoreSeries> prepare_series(const std::vector<FrameScoreSeries>& raw,
                                             const FusionConfig& fusion);

struct PipelineArtifacts {
    Dataset dataset;
    FlowModel flow;
    JigsawNet jigsaw;
    FlowTrainResult flow_train;
    JigsawTrainResult jigsaw_train;
    std::vector<FrameScoreSeries> skeleton_raw, jigsaw_w_raw, jigsaw_wo_raw;
    std::vector<FrameScoreSeries> skeleton_n, jigsaw_w_n, jigsaw_wo_n;
    std::vector<FusedResult> fused_w, fused_wo;
};

// synth -> train both branches (concurrently) -> score test split -> fuse.
PipelineArtifacts run_pipeline(const ExperimentConfig& cfg);

struct ExperimentReport {
    std::map<std::string, double> aucs;  // skeleton / jigsaw / fused_w_human / fused_wo_human
    RunComparison comparison;
    std::string out_dir;
};

// run_pipeline plus evaluation and full on-disk persistence.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace vad
