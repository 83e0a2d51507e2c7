#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace specflow {

// Locale-independent decimal formatting/parsing (std::to_chars/from_chars).
// fmt_double emits the shortest string that round-trips; fmt_double17 pins
// 17 significant digits for checkpoint files.
std::string fmt_double(double v);
std::string fmt_double17(double v);

double parse_double(std::string_view s, const std::string& what);
int64_t parse_int(std::string_view s, const std::string& what);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

std::vector<std::string_view> split_lines(std::string_view text);
std::vector<std::string_view> split_fields(std::string_view line, char sep);

// FNV-1a over bytes; stable content hash used to link checkpoints to the
// basis they were trained against.
uint64_t fnv1a(std::string_view bytes);
std::string hex64(uint64_t v);

}  // namespace specflow
