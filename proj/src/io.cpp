#include "specflow/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "specflow/errors.hpp"

namespace specflow {

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  require(ec == std::errc(), ErrClass::NumericFailure, "to_chars failed");
  return std::string(buf, ptr);
}

std::string fmt_double17(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v,
                                 std::chars_format::scientific, 16);
  require(ec == std::errc(), ErrClass::NumericFailure, "to_chars failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view s, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail(ErrClass::ParseError,
         "bad numeric value '" + std::string(s) + "' for " + what);
  return v;
}

int64_t parse_int(std::string_view s, const std::string& what) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail(ErrClass::ParseError,
         "bad integer value '" + std::string(s) + "' for " + what);
  return v;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrClass::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrClass::IoError, "read failed on " + path);
  return std::move(ss).str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrClass::IoError, "cannot create " + path);
  out.write(content.data(), std::streamsize(content.size()));
  out.flush();
  if (!out) fail(ErrClass::IoError, "write failed on " + path);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(pos));
      break;
    }
    size_t end = nl;
    if (end > pos && text[end - 1] == '\r') --end;
    out.push_back(text.substr(pos, end - pos));
    pos = nl + 1;
  }
  return out;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  while (true) {
    size_t c = line.find(sep, pos);
    if (c == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, c - pos));
    pos = c + 1;
  }
}

uint64_t fnv1a(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf, 16);
}

}  // namespace specflow
