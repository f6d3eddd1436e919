#pragma once
// LATC binary container and dataset manifests.
//
// LATC layout (all integers little-endian):
//   offset 0   4 bytes  magic "LATC"
//   offset 4   1 byte   version (1)
//   offset 5   1 byte   dtype code (1 = f32, 2 = i32)
//   offset 6   2 bytes  reserved, zero
//   offset 8   u64      rows
//   offset 16  u64      cols
//   offset 24  rows*cols*4 bytes row-major payload

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lata/matrix.hpp"

namespace lata {

enum class DType : std::uint8_t { f32 = 1, i32 = 2 };

inline constexpr char kLatcMagic[4] = {'L', 'A', 'T', 'C'};
inline constexpr std::uint8_t kLatcVersion = 1;
inline constexpr std::size_t kLatcHeaderBytes = 24;

void write_container(const FeatureMatrix& matrix, const std::filesystem::path& path);
void write_container(const LabelVector& labels, const std::filesystem::path& path);

/// Reads any LATC file. An i32 container must be a single column and comes
/// back as a LabelVector.
std::variant<FeatureMatrix, LabelVector> read_container(const std::filesystem::path& path);

FeatureMatrix read_matrix(const std::filesystem::path& path);
LabelVector read_labels(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Manifests

enum class Split { pool, validation, test };

std::string_view to_string(Split split) noexcept;
Split parse_split(std::string_view text);

struct FoundationEntry {
  std::string model_id;
  std::filesystem::path path;
};

/// On-disk manifest.json contents. Relative paths resolve against the
/// manifest's directory.
struct ManifestSpec {
  std::filesystem::path classifier_features;
  std::vector<FoundationEntry> foundation_features;
  std::optional<std::filesystem::path> logits;  // required unless split == pool
  std::filesystem::path labels;
  Split split = Split::test;
  std::uint64_t seed = 0;
};

ManifestSpec parse_manifest_json(const std::string& text);
std::string manifest_to_json(const ManifestSpec& spec);
void save_manifest(const ManifestSpec& spec, const std::filesystem::path& path);

struct FoundationSpace {
  std::string model_id;
  FeatureMatrix features;
};

/// A validated bundle: every matrix has the same row count and labels are in
/// range. Immutable once loaded.
struct Dataset {
  FeatureMatrix classifier;
  std::vector<FoundationSpace> foundation;
  std::optional<LogitsMatrix> logits;
  LabelVector labels;
  Split split = Split::test;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return classifier.rows(); }
  std::size_t num_classes() const noexcept { return logits ? logits->cols() : 0; }
  const FoundationSpace& space(std::string_view model_id) const;

  /// Subset with the given rows in the given order.
  Dataset select_rows(std::span<const std::size_t> indices) const;
};

/// Cross-checks row counts and label ranges. Throws RowCountMismatch or
/// LabelOutOfRange.
void validate_dataset(const Dataset& dataset);

Dataset load_manifest(const std::filesystem::path& path);

}  // namespace lata

namespace lata {

/// Writes every array of `dataset` as LATC into `dir` plus a manifest.json
/// with relative paths; returns the manifest path.
std::filesystem::path write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

}  // namespace lata
