#include "vad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace vad {

void LabeledScores::append(const std::string& video_id, const std::vector<double>& s,
                           const std::vector<int>& l) {
    if (s.size() != l.size()) throw DataError("scores/labels length mismatch for " + video_id);
    offsets.emplace_back(video_id, scores.size());
    scores.insert(scores.end(), s.begin(), s.end());
    labels.insert(labels.end(), l.begin(), l.end());
}

void LabeledScores::validate() const {
    if (scores.size() != labels.size()) throw DataError("scores/labels length mismatch");
    for (int l : labels)
        if (l != 0 && l != 1) throw DataError("labels must be 0 or 1");
    for (double s : scores)
        if (!std::isfinite(s)) throw DataError("non-finite score");
}

namespace {

std::pair<std::size_t, std::size_t> class_counts(const LabeledScores& ls) {
    std::size_t pos = 0;
    for (int l : ls.labels) pos += static_cast<std::size_t>(l);
    return {pos, ls.labels.size() - pos};
}

}  // namespace

double micro_auc(const LabeledScores& ls) {
    ls.validate();
    auto [pos, neg] = class_counts(ls);
    if (pos == 0 || neg == 0)
        throw UndefinedAucError("AUC undefined: need both classes, got " +
                                std::to_string(pos) + " positives / " +
                                std::to_string(neg) + " negatives");

    const std::size_t n = ls.scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ls.scores[a] < ls.scores[b]; });

    // midranks over tie groups; accumulate rank sum of positives
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && ls.scores[order[j]] == ls.scores[order[i]]) ++j;
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (ls.labels[order[k]] == 1) pos_rank_sum += midrank;
        i = j;
    }
    const double np = static_cast<double>(pos), nn = static_cast<double>(neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

RocCurve roc_curve(const LabeledScores& ls) {
    ls.validate();
    auto [pos, neg] = class_counts(ls);
    if (pos == 0 || neg == 0) throw UndefinedAucError("ROC undefined: single-class labels");

    const std::size_t n = ls.scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ls.scores[a] > ls.scores[b]; });

    RocCurve curve;
    curve.points.emplace_back(0.0, 0.0);
    const double np = static_cast<double>(pos), nn = static_cast<double>(neg);
    std::size_t tp = 0, fp = 0;
    double area = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && ls.scores[order[j]] == ls.scores[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (ls.labels[order[k]] == 1)
                ++tp;
            else
                ++fp;
        }
        const double fpr = static_cast<double>(fp) / nn;
        const double tpr = static_cast<double>(tp) / np;
        const auto& prev = curve.points.back();
        area += 0.5 * (tpr + prev.second) * (fpr - prev.first);
        curve.points.emplace_back(fpr, tpr);
        i = j;
    }
    curve.auc = area;
    return curve;
}

RunComparison compare_runs(const std::vector<std::pair<std::string, LabeledScores>>& runs) {
    if (runs.empty()) throw DataError("compare_runs: no runs");
    const auto& ref = runs.front().second.labels;
    for (const auto& [name, ls] : runs)
        if (ls.labels != ref)
            throw DataError("compare_runs: label vectors differ (run " + name + ")");

    RunComparison cmp;
    for (const auto& [name, ls] : runs) cmp.rows.push_back({name, micro_auc(ls), false});
    std::stable_sort(cmp.rows.begin(), cmp.rows.end(), [](const auto& a, const auto& b) {
        if (a.auc != b.auc) return a.auc > b.auc;
        return a.name < b.name;
    });
    cmp.rows.front().best = true;

    std::size_t width = 4;  // "name"
    for (const auto& r : cmp.rows) width = std::max(width, r.name.size());
    std::ostringstream text, csv;
    text << std::left << std::setw(static_cast<int>(width) + 2) << "name"
         << "auc\n";
    csv << "name,auc\n";
    csv << std::fixed << std::setprecision(6);
    for (const auto& r : cmp.rows) {
        std::ostringstream auc_s;
        auc_s << std::fixed << std::setprecision(4) << r.auc;
        text << std::left << std::setw(static_cast<int>(width) + 2) << r.name << auc_s.str()
             << (r.best ? "  *" : "") << "\n";
        csv << r.name << "," << r.auc << "\n";
    }
    cmp.text = text.str();
    cmp.csv = csv.str();
    return cmp;
}

}  // namespace vad
