#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "vad/errors.hpp"

namespace vad {

struct UndefinedAucError : DataError {
    explicit UndefinedAucError(const std::string& msg) : DataError(msg) {}
};

// Frame scores and labels concatenated across all test videos, in video order.
struct LabeledScores {
    std::vector<double> scores;
    std::vector<int> labels;  // 0 or 1
    // (video id, offset of its first frame in the concatenation)
    std::vector<std::pair<std::string, std::size_t>> offsets;

    void append(const std::string& video_id, const std::vector<double>& s,
                const std::vector<int>& l);
    void validate() const;
};

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0) .. (1,1)
    double auc = 0.0;
};

// Frame-level micro-AUC: Mann-Whitney statistic computed with a single sort,
// midranks on ties. Higher score must mean more anomalous.
double micro_auc(const LabeledScores& ls);

// Threshold sweep over distinct scores descending; trapezoidal area.
RocCurve roc_curve(const LabeledScores& ls);

struct RunComparison {
    struct Row {
        std::string name;
        double auc;
        bool best;
    };
    std::vector<Row> rows;  // sorted by AUC descending
    std::string text;       // aligned table
    std::string csv;        // "name,auc" lines
};

RunComparison compare_runs(const std::vector<std::pair<std::string, LabeledScores>>& runs);

}  // namespace vad
