#pragma once
// CSV import (convenience path into LATC) and small CSV writers.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "lata/matrix.hpp"

namespace lata {

/// Parses a numeric CSV. A first line whose first field is not a number is
/// treated as a header. Ragged rows or bad numbers raise ParseError naming the
/// 1-based line.
FeatureMatrix read_csv_matrix(const std::filesystem::path& path);

/// One integer label per line (first column). Same header rule.
LabelVector read_csv_labels(const std::filesystem::path& path);

/// Shortest decimal that round-trips the double.
std::string format_double(double value);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace lata
