#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace vad {

// Shortest round-trip decimal form via std::to_chars: locale-free and
// byte-stable across runs, which the determinism contract needs.
std::string fmt_double(double v);

double parse_double(const std::string& s);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

std::vector<std::string> split(const std::string& s, char sep);

}  // namespace vad
