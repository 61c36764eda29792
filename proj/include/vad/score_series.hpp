#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vad/errors.hpp"

namespace vad {

// Per-frame anomaly scores for one video. Canonical orientation everywhere:
// higher means more anomalous. Frames no window/cube covered are MISSING
// until fill_missing runs.
struct FrameScoreSeries {
    std::string video_id;
    std::vector<std::optional<double>> scores;

    FrameScoreSeries() = default;
    FrameScoreSeries(std::string id, std::size_t frame_count)
        : video_id(std::move(id)), scores(frame_count) {}

    std::size_t size() const { return scores.size(); }
    std::size_t missing_count() const;
    bool has_missing() const { return missing_count() > 0; }
};

// CSV rows "video,frame,score" with literal NA for MISSING.
std::string series_to_csv(const std::vector<FrameScoreSeries>& series);
std::vector<FrameScoreSeries> series_from_csv(const std::string& csv);

void write_series_csv(const std::string& path, const std::vector<FrameScoreSeries>& series);
std::vector<FrameScoreSeries> read_series_csv(const std::string& path);

}  // namespace vad
