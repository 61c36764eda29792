#include "vad/score_series.hpp"

#include <sstream>

#include "vad/io_util.hpp"

namespace vad {

std::size_t FrameScoreSeries::missing_count() const {
    std::size_t n = 0;
    for (const auto& s : scores)
        if (!s.has_value()) ++n;
    return n;
}

std::string series_to_csv(const std::vector<FrameScoreSeries>& series) {
    std::ostringstream os;
    os << "video,frame,score\n";
    for (const auto& s : series)
        for (std::size_t f = 0; f < s.scores.size(); ++f)
            os << s.video_id << "," << f << ","
               << (s.scores[f] ? fmt_double(*s.scores[f]) : std::string("NA")) << "\n";
    return os.str();
}

std::vector<FrameScoreSeries> series_from_csv(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line)) throw DataError("score csv: empty");
    std::vector<FrameScoreSeries> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != 3) throw DataError("score csv: expected 3 fields, got: " + line);
        const std::string& vid = fields[0];
        const std::size_t frame = static_cast<std::size_t>(std::stoull(fields[1]));
        if (out.empty() || out.back().video_id != vid) {
            for (const auto& prev : out)
                if (prev.video_id == vid)
                    throw DataError("score csv: video rows not contiguous: " + vid);
            out.emplace_back(vid, 0);
        }
        auto& series = out.back();
        if (frame != series.scores.size())
            throw DataError("score csv: frames not consecutive for " + vid);
        if (fields[2] == "NA")
            series.scores.emplace_back(std::nullopt);
        else
            series.scores.emplace_back(parse_double(fields[2]));
    }
    return out;
}

void write_series_csv(const std::string& path, const std::vector<FrameScoreSeries>& series) {
    write_text_file(path, series_to_csv(series));
}

std::vector<FrameScoreSeries> read_series_csv(const std::string& path) {
    return series_from_csv(read_text_file(path));
}

}  // namespace vad
