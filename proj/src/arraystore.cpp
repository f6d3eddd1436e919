#include "lata/arraystore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lata {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "LATC I/O assumes a little-endian host");

void put_u64(char* dst, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) dst[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
}

std::uint64_t get_u64(const unsigned char* src) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | src[i];
  return v;
}

void write_raw(const fs::path& path, DType dtype, std::uint64_t rows, std::uint64_t cols,
               const void* payload, std::size_t bytes) {
  char header[kLatcHeaderBytes] = {};
  std::memcpy(header, kLatcMagic, 4);
  header[4] = static_cast<char>(kLatcVersion);
  header[5] = static_cast<char>(dtype);
  put_u64(header + 8, rows);
  put_u64(header + 16, cols);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot open for writing: " + path.string());
  out.write(header, sizeof header);
  out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(bytes));
  if (!out) fail(Errc::IoFailure, "write failed: " + path.string());
}

struct RawContainer {
  DType dtype;
  std::uint64_t rows;
  std::uint64_t cols;
  std::vector<unsigned char> payload;
};

RawContainer read_raw(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(fs::exists(path) ? Errc::IoFailure : Errc::MissingFile, "cannot open: " + path.string());
  }
  unsigned char header[kLatcHeaderBytes];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got < 4 || std::memcmp(header, kLatcMagic, 4) != 0) {
    fail(Errc::BadMagic, path.string());
  }
  if (got < kLatcHeaderBytes) fail(Errc::TruncatedPayload, "short header in " + path.string());
  if (header[4] != kLatcVersion) {
    fail(Errc::UnsupportedVersion, "version " + std::to_string(header[4]) + " in " + path.string());
  }
  if (header[5] != static_cast<unsigned char>(DType::f32) &&
      header[5] != static_cast<unsigned char>(DType::i32)) {
    fail(Errc::UnsupportedDtype, "dtype " + std::to_string(header[5]) + " in " + path.string());
  }
  RawContainer raw{static_cast<DType>(header[5]), get_u64(header + 8), get_u64(header + 16), {}};
  if (raw.rows == 0 || raw.cols == 0) fail(Errc::TruncatedPayload, "empty shape in " + path.string());
  if (raw.cols > (std::uint64_t{1} << 40) / raw.rows) {
    fail(Errc::TruncatedPayload, "implausible shape in " + path.string());
  }
  const std::uint64_t bytes = raw.rows * raw.cols * 4;
  raw.payload.resize(bytes);
  in.read(reinterpret_cast<char*>(raw.payload.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::uint64_t>(in.gcount()) != bytes) {
    fail(Errc::TruncatedPayload, path.string());
  }
  return raw;
}

void require_finite(const FeatureMatrix& m, const std::string& where) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i])) {
      fail(Errc::NonFiniteElement, where + " element " + std::to_string(i));
    }
  }
}

}  // namespace

void write_container(const FeatureMatrix& matrix, const fs::path& path) {
  if (matrix.empty()) fail(Errc::InvalidArgument, "cannot write an empty matrix");
  require_finite(matrix, path.string());
  write_raw(path, DType::f32, matrix.rows(), matrix.cols(), matrix.data(), matrix.size() * 4);
}

void write_container(const LabelVector& labels, const fs::path& path) {
  if (labels.empty()) fail(Errc::InvalidArgument, "cannot write an empty label vector");
  write_raw(path, DType::i32, labels.size(), 1, labels.data(), labels.size() * 4);
}

std::variant<FeatureMatrix, LabelVector> read_container(const fs::path& path) {
  RawContainer raw = read_raw(path);
  const std::size_t count = raw.rows * raw.cols;
  if (raw.dtype == DType::i32) {
    if (raw.cols != 1) fail(Errc::DimensionMismatch, "i32 container must have one column");
    LabelVector labels(count);
    std::memcpy(labels.data(), raw.payload.data(), count * 4);
    return labels;
  }
  std::vector<float> values(count);
  std::memcpy(values.data(), raw.payload.data(), count * 4);
  FeatureMatrix m(raw.rows, raw.cols, std::move(values));
  require_finite(m, path.string());
  return m;
}

FeatureMatrix read_matrix(const fs::path& path) {
  auto any = read_container(path);
  if (auto* m = std::get_if<FeatureMatrix>(&any)) return std::move(*m);
  fail(Errc::UnsupportedDtype, "expected f32 matrix in " + path.string());
}

LabelVector read_labels(const fs::path& path) {
  auto any = read_container(path);
  if (auto* l = std::get_if<LabelVector>(&any)) return std::move(*l);
  fail(Errc::UnsupportedDtype, "expected i32 labels in " + path.string());
}

// ---------------------------------------------------------------------------

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::pool: return "pool";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "test";
}

Split parse_split(std::string_view text) {
  if (text == "pool") return Split::pool;
  if (text == "validation") return Split::validation;
  if (text == "test") return Split::test;
  fail(Errc::ManifestInvalid, "unknown split '" + std::string(text) + "'");
}

ManifestSpec parse_manifest_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::ManifestInvalid, e.what());
  }
  auto need_string = [&](const json& obj, const char* key) -> std::string {
    if (!obj.contains(key) || !obj[key].is_string()) {
      fail(Errc::ManifestInvalid, std::string("missing string field '") + key + "'");
    }
    return obj[key].get<std::string>();
  };
  if (!doc.is_object()) fail(Errc::ManifestInvalid, "manifest must be a JSON object");
  ManifestSpec spec;
  spec.classifier_features = need_string(doc, "classifier_features");
  spec.labels = need_string(doc, "labels");
  spec.split = parse_split(need_string(doc, "split"));
  if (doc.contains("logits") && !doc["logits"].is_null()) spec.logits = need_string(doc, "logits");
  if (!spec.logits && spec.split != Split::pool) {
    fail(Errc::ManifestInvalid, "missing string field 'logits'");
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer()) fail(Errc::ManifestInvalid, "'seed' must be an integer");
    spec.seed = doc["seed"].get<std::uint64_t>();
  }
  if (!doc.contains("foundation_features") || !doc["foundation_features"].is_array()) {
    fail(Errc::ManifestInvalid, "missing array field 'foundation_features'");
  }
  for (const auto& entry : doc["foundation_features"]) {
    if (!entry.is_object()) fail(Errc::ManifestInvalid, "foundation entry must be an object");
    spec.foundation_features.push_back({need_string(entry, "model_id"), need_string(entry, "path")});
  }
  return spec;
}

std::string manifest_to_json(const ManifestSpec& spec) {
  nlohmann::ordered_json doc;
  doc["classifier_features"] = spec.classifier_features.generic_string();
  auto list = nlohmann::ordered_json::array();
  for (const auto& f : spec.foundation_features) {
    list.push_back({{"model_id", f.model_id}, {"path", f.path.generic_string()}});
  }
  doc["foundation_features"] = list;
  if (spec.logits) doc["logits"] = spec.logits->generic_string();
  doc["labels"] = spec.labels.generic_string();
  doc["split"] = std::string(to_string(spec.split));
  doc["seed"] = spec.seed;
  return doc.dump(2) + "\n";
}

void save_manifest(const ManifestSpec& spec, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoFailure, "cannot open for writing: " + path.string());
  out << manifest_to_json(spec);
  if (!out) fail(Errc::IoFailure, "write failed: " + path.string());
}

const FoundationSpace& Dataset::space(std::string_view model_id) const {
  for (const auto& f : foundation) {
    if (f.model_id == model_id) return f;
  }
  fail(Errc::UnknownModel, "no foundation space '" + std::string(model_id) + "'");
}

Dataset Dataset::select_rows(std::span<const std::size_t> indices) const {
  Dataset out;
  out.classifier = classifier.select_rows(indices);
  for (const auto& f : foundation) out.foundation.push_back({f.model_id, f.features.select_rows(indices)});
  if (logits) out.logits = logits->select_rows(indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  out.split = split;
  out.seed = seed;
  return out;
}

void validate_dataset(const Dataset& d) {
  const std::size_t n = d.classifier.rows();
  auto check = [&](std::size_t rows, const std::string& what) {
    if (rows != n) {
      fail(Errc::RowCountMismatch, what + " has " + std::to_string(rows) + " rows, classifier features have " +
                                       std::to_string(n));
    }
  };
  for (const auto& f : d.foundation) check(f.features.rows(), "foundation '" + f.model_id + "'");
  if (d.logits) check(d.logits->rows(), "logits");
  check(d.labels.size(), "labels");
  if (d.logits && d.logits->cols() < 2) fail(Errc::DimensionMismatch, "logits need at least 2 classes");
  const std::int64_t classes = d.logits ? static_cast<std::int64_t>(d.logits->cols()) : INT32_MAX;
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    if (d.labels[i] < 0 || d.labels[i] >= classes) {
      fail(Errc::LabelOutOfRange, "label " + std::to_string(d.labels[i]) + " at row " + std::to_string(i));
    }
  }
}

Dataset load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::MissingFile, "manifest not found: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const ManifestSpec spec = parse_manifest_json(buffer.str());
  const fs::path base = path.parent_path();
  auto resolve = [&](const fs::path& p) { return p.is_absolute() ? p : base / p; };

  Dataset d;
  d.classifier = read_matrix(resolve(spec.classifier_features));
  for (const auto& f : spec.foundation_features) {
    d.foundation.push_back({f.model_id, read_matrix(resolve(f.path))});
  }
  if (spec.logits) d.logits = read_matrix(resolve(*spec.logits));
  d.labels = read_labels(resolve(spec.labels));
  d.split = spec.split;
  d.seed = spec.seed;
  validate_dataset(d);
  return d;
}

}  // namespace lata

namespace lata {

fs::path write_dataset(const Dataset& dataset, const fs::path& dir) {
  validate_dataset(dataset);
  fs::create_directories(dir);
  ManifestSpec spec;
  spec.classifier_features = "classifier.latc";
  write_container(dataset.classifier, dir / spec.classifier_features);
  for (const auto& f : dataset.foundation) {
    const fs::path name = "foundation_" + f.model_id + ".latc";
    write_container(f.features, dir / name);
    spec.foundation_features.push_back({f.model_id, name});
  }
  if (dataset.logits) {
    spec.logits = "logits.latc";
    write_container(*dataset.logits, dir / *spec.logits);
  }
  spec.labels = "labels.latc";
  write_container(dataset.labels, dir / spec.labels);
  spec.split = dataset.split;
  spec.seed = dataset.seed;
  const fs::path manifest = dir / "manifest.json";
  save_manifest(spec, manifest);
  return manifest;
}

}  // namespace lata
