#include "lata/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "lata/error.hpp"

namespace lata {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool parse_float(std::string_view field, float& out) {
  // strtof handles inf/nan spellings so they can be rejected explicitly.
  std::string buf(field);
  char* end = nullptr;
  out = std::strtof(buf.c_str(), &end);
  return !buf.empty() && end == buf.c_str() + buf.size();
}

template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) fail(Errc::MissingFile, "cannot open: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    fn(lineno, std::string_view(line));
  }
}

}  // namespace

FeatureMatrix read_csv_matrix(const fs::path& path) {
  std::vector<float> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  bool first = true;
  for_each_line(path, [&](std::size_t lineno, std::string_view line) {
    const auto fields = split_fields(line);
    float probe;
    if (first && !parse_float(fields.front(), probe)) {
      first = false;
      return;  // header
    }
    first = false;
    if (cols == 0) cols = fields.size();
    if (fields.size() != cols) {
      fail(Errc::ParseError, path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                                 " fields, found " + std::to_string(fields.size()));
    }
    for (auto f : fields) {
      float v;
      if (!parse_float(f, v)) {
        fail(Errc::ParseError, path.string() + ":" + std::to_string(lineno) + ": not a number: '" + std::string(f) + "'");
      }
      if (!std::isfinite(v)) {
        fail(Errc::NonFiniteElement, path.string() + ":" + std::to_string(lineno));
      }
      values.push_back(v);
    }
    ++rows;
  });
  if (rows == 0) fail(Errc::ParseError, path.string() + ": no data rows");
  return FeatureMatrix(rows, cols, std::move(values));
}

LabelVector read_csv_labels(const fs::path& path) {
  LabelVector labels;
  bool first = true;
  for_each_line(path, [&](std::size_t lineno, std::string_view line) {
    const auto field = split_fields(line).front();
    std::int32_t v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    const bool ok = ec == std::errc() && ptr == field.data() + field.size() && !field.empty();
    if (!ok && first) {
      first = false;
      return;
    }
    first = false;
    if (!ok) {
      fail(Errc::ParseError, path.string() + ":" + std::to_string(lineno) + ": not an integer label: '" +
                                 std::string(field) + "'");
    }
    labels.push_back(v);
  });
  if (labels.empty()) fail(Errc::ParseError, path.string() + ": no labels");
  return labels;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_text_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot open for writing: " + path.string());
  out << contents;
  if (!out) fail(Errc::IoFailure, "write failed: " + path.string());
}

}  // namespace lata
