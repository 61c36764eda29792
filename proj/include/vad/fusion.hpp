#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vad/score_series.hpp"
#include "vad/synth.hpp"
#include "vad/taxonomy.hpp"

namespace vad {

enum class Normalization { None, MinMax, ZScore };

Normalization parse_normalization(const std::string& name);
std::string normalization_name(Normalization n);
std::string fusion_mode_name(FusionMode m);
FusionMode parse_fusion_mode(const std::string& name);

struct FusionConfig {
    FusionMode mode = FusionMode::W_HUMAN;
    Normalization normalization = Normalization::MinMax;
    double missing_default = 0.0;
};

// Per-video fused series plus the per-frame branch components it was
// summed from, so the fusion is exactly recomputable.
struct FusedResult {
    FrameScoreSeries fused;
    std::vector<std::pair<double, double>> provenance;  // (skeleton, jigsaw)
};

FrameScoreSeries fill_missing(const FrameScoreSeries& series, double missing_default);

// Normalizes over the concatenation of all series (the whole test set).
// Input must already be filled. Constant input maps to all-zero output.
std::vector<FrameScoreSeries> normalize_scores(const std::vector<FrameScoreSeries>& series,
                                               Normalization method);

FusedResult fuse(const FrameScoreSeries& skeleton, const FrameScoreSeries& jigsaw,
                 const FusionConfig& config);
std::vector<FusedResult> fuse_all(const std::vector<FrameScoreSeries>& skeleton,
                                  const std::vector<FrameScoreSeries>& jigsaw,
                                  const FusionConfig& config);

// WO_HUMAN removes human detections before jigsaw cube building; the
// skeleton branch always sees all tracks.
std::vector<DetectionBox> select_mode_inputs(const FusionConfig& config,
                                             const std::vector<DetectionBox>& detections);

std::string fused_to_csv(const std::vector<FusedResult>& results);
void write_fused_csv(const std::string& path, const std::vector<FusedResult>& results);

}  // namespace vad
