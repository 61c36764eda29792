#include "vad/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vad/io_util.hpp"

namespace vad {

Normalization parse_normalization(const std::string& name) {
    if (name == "none") return Normalization::None;
    if (name == "minmax") return Normalization::MinMax;
    if (name == "zscore") return Normalization::ZScore;
    throw ConfigError("unknown normalization: " + name);
}

std::string normalization_name(Normalization n) {
    switch (n) {
        case Normalization::None: return "none";
        case Normalization::MinMax: return "minmax";
        case Normalization::ZScore: return "zscore";
    }
    throw ConfigError("unknown normalization");
}

std::string fusion_mode_name(FusionMode m) {
    return m == FusionMode::WO_HUMAN ? "wo_human" : "w_human";
}

FusionMode parse_fusion_mode(const std::string& name) {
    if (name == "wo_human" || name == "WO_HUMAN") return FusionMode::WO_HUMAN;
    if (name == "w_human" || name == "W_HUMAN") return FusionMode::W_HUMAN;
    throw ConfigError("unknown fusion mode: " + name);
}

FrameScoreSeries fill_missing(const FrameScoreSeries& series, double missing_default) {
    FrameScoreSeries out = series;
    for (auto& s : out.scores)
        if (!s.has_value()) s = missing_default;
    return out;
}

std::vector<FrameScoreSeries> normalize_scores(const std::vector<FrameScoreSeries>& series,
                                               Normalization method) {
    for (const auto& s : series)
        if (s.has_missing())
            throw DataError("normalize_scores: series still has MISSING entries (" + s.video_id +
                            "); run fill_missing first");
    if (method == Normalization::None) return series;

    double mn = 0.0, mx = 0.0, sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (const auto& s : series)
        for (const auto& v : s.scores) {
            const double x = *v;
            if (n == 0) {
                mn = mx = x;
            } else {
                mn = std::min(mn, x);
                mx = std::max(mx, x);
            }
            sum += x;
            sum_sq += x * x;
            ++n;
        }
    if (n == 0) return series;

    std::vector<FrameScoreSeries> out = series;
    if (method == Normalization::MinMax) {
        const double range = mx - mn;
        for (auto& s : out)
            for (auto& v : s.scores) v = range > 0.0 ? (*v - mn) / range : 0.0;
    } else {
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
        const double sd = std::sqrt(var);
        for (auto& s : out)
            for (auto& v : s.scores) v = sd > 0.0 ? (*v - mean) / sd : 0.0;
    }
    return out;
}

FusedResult fuse(const FrameScoreSeries& skeleton, const FrameScoreSeries& jigsaw,
                 const FusionConfig& config) {
    (void)config;
    if (skeleton.video_id != jigsaw.video_id)
        throw DataError("fuse: video-id mismatch: " + skeleton.video_id + " vs " +
                        jigsaw.video_id);
    if (skeleton.size() != jigsaw.size())
        throw DataError("fuse: length mismatch for " + skeleton.video_id);

    FusedResult result;
    result.fused = FrameScoreSeries(skeleton.video_id, skeleton.size());
    for (std::size_t f = 0; f < skeleton.size(); ++f) {
        if (!skeleton.scores[f] || !jigsaw.scores[f])
            throw DataError("fuse: MISSING scores must be filled before fusing");
        const double a = *skeleton.scores[f];
        const double b = *jigsaw.scores[f];
        result.fused.scores[f] = a + b;
        result.provenance.emplace_back(a, b);
    }
    return result;
}

std::vector<FusedResult> fuse_all(const std::vector<FrameScoreSeries>& skeleton,
                                  const std::vector<FrameScoreSeries>& jigsaw,
                                  const FusionConfig& config) {
    if (skeleton.size() != jigsaw.size()) throw DataError("fuse_all: video count mismatch");
    std::vector<FusedResult> out;
    for (std::size_t i = 0; i < skeleton.size(); ++i)
        out.push_back(fuse(skeleton[i], jigsaw[i], config));
    return out;
}

std::vector<DetectionBox> select_mode_inputs(const FusionConfig& config,
                                             const std::vector<DetectionBox>& detections) {
    if (config.mode == FusionMode::W_HUMAN) return detections;
    std::vector<DetectionBox> out;
    for (const auto& d : detections)
        if (d.cls != ObjectClass::Human) out.push_back(d);
    return out;
}

std::string fused_to_csv(const std::vector<FusedResult>& results) {
    std::ostringstream os;
    os << "video,frame,score,skeleton_component,jigsaw_component\n";
    for (const auto& r : results)
        for (std::size_t f = 0; f < r.fused.size(); ++f)
            os << r.fused.video_id << "," << f << "," << fmt_double(*r.fused.scores[f]) << ","
               << fmt_double(r.provenance[f].first) << "," << fmt_double(r.provenance[f].second)
               << "\n";
    return os.str();
}

void write_fused_csv(const std::string& path, const std::vector<FusedResult>& results) {
    write_text_file(path, fused_to_csv(results));
}

}  // namespace vad
