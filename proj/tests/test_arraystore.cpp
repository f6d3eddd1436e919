#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "lata/arraystore.hpp"
#include "lata/csv.hpp"
#include "support.hpp"

using namespace lata;
using lata::testing::TempDir;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void put_u64(std::vector<unsigned char>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f32(std::vector<unsigned char>& b, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(u >> (8 * i)));
}

std::vector<unsigned char> header(std::uint8_t version, std::uint8_t dtype, std::uint64_t rows, std::uint64_t cols) {
  std::vector<unsigned char> b = {'L', 'A', 'T', 'C', version, dtype, 0, 0};
  put_u64(b, rows);
  put_u64(b, cols);
  return b;
}

Dataset small_dataset(std::size_t n, std::size_t d, std::size_t classes, std::size_t models, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset ds;
  ds.classifier = lata::testing::random_matrix(n, d, rng);
  for (std::size_t m = 0; m < models; ++m) {
    ds.foundation.push_back({"fm" + std::to_string(m), lata::testing::random_matrix(n, d + 2, rng)});
  }
  ds.logits = lata::testing::random_matrix(n, classes, rng);
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<std::int32_t>(i % classes));
  ds.split = Split::test;
  ds.seed = seed;
  return ds;
}

}  // namespace

TEST_CASE("1x1 container is a 24-byte header plus one element") {
  TempDir dir;
  FeatureMatrix m(1, 1, {0.0f});
  write_container(m, dir / "a.latc");
  const auto bytes = read_bytes(dir / "a.latc");
  CHECK(bytes.size() == 28);
  CHECK(bytes == [] {
    auto b = header(1, 1, 1, 1);
    put_f32(b, 0.0f);
    return b;
  }());
}

TEST_CASE("3x2 matrix round-trips") {
  TempDir dir;
  FeatureMatrix m(3, 2, {1.5f, -2.0f, 3.25f, 0.0f, -0.0f, 1e-30f});
  write_container(m, dir / "m.latc");
  const auto back = read_matrix(dir / "m.latc");
  CHECK(back == m);
  CHECK(std::signbit(back(2, 0)));
}

TEST_CASE("non-finite elements are rejected on write") {
  TempDir dir;
  FeatureMatrix m(2, 2, {1, 2, std::numeric_limits<float>::quiet_NaN(), 4});
  LATA_CHECK_ERRC(write_container(m, dir / "nan.latc"), NonFiniteElement);
  FeatureMatrix inf(1, 1, {std::numeric_limits<float>::infinity()});
  LATA_CHECK_ERRC(write_container(inf, dir / "inf.latc"), NonFiniteElement);
}

TEST_CASE("hand-built 2x3 file reads in row-major order") {
  TempDir dir;
  auto b = header(1, 1, 2, 3);
  for (float v : {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f}) put_f32(b, v);
  write_bytes(dir / "h.latc", b);
  const auto m = read_matrix(dir / "h.latc");
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 3);
  CHECK(m(0, 0) == 1.0f);
  CHECK(m(0, 2) == 3.0f);
  CHECK(m(1, 0) == 4.0f);
  CHECK(m(1, 2) == 6.0f);
}

TEST_CASE("malformed containers map to their errors") {
  TempDir dir;
  SUBCASE("bad magic") {
    auto b = header(1, 1, 1, 1);
    b[0] = 'X', b[1] = 'X', b[2] = 'X', b[3] = 'X';
    put_f32(b, 1.0f);
    write_bytes(dir / "f", b);
    LATA_CHECK_ERRC(read_container(dir / "f"), BadMagic);
  }
  SUBCASE("truncated payload") {
    auto b = header(1, 1, 2, 2);
    put_f32(b, 1.0f);
    put_f32(b, 2.0f);
    write_bytes(dir / "f", b);
    LATA_CHECK_ERRC(read_container(dir / "f"), TruncatedPayload);
  }
  SUBCASE("truncated header") {
    write_bytes(dir / "f", {'L', 'A', 'T', 'C', 1, 1});
    LATA_CHECK_ERRC(read_container(dir / "f"), TruncatedPayload);
  }
  SUBCASE("version") {
    auto b = header(2, 1, 1, 1);
    put_f32(b, 1.0f);
    write_bytes(dir / "f", b);
    LATA_CHECK_ERRC(read_container(dir / "f"), UnsupportedVersion);
  }
  SUBCASE("dtype") {
    auto b = header(1, 9, 1, 1);
    put_f32(b, 1.0f);
    write_bytes(dir / "f", b);
    LATA_CHECK_ERRC(read_container(dir / "f"), UnsupportedDtype);
  }
  SUBCASE("nan payload") {
    auto b = header(1, 1, 1, 1);
    put_f32(b, std::numeric_limits<float>::quiet_NaN());
    write_bytes(dir / "f", b);
    LATA_CHECK_ERRC(read_container(dir / "f"), NonFiniteElement);
  }
  SUBCASE("missing") { LATA_CHECK_ERRC(read_container(dir / "absent.latc"), MissingFile); }
}

TEST_CASE("labels round-trip as a single i32 column") {
  TempDir dir;
  LabelVector labels = {0, 3, 1, 2, 9};
  write_container(labels, dir / "l.latc");
  CHECK(read_labels(dir / "l.latc") == labels);
  LATA_CHECK_ERRC(read_matrix(dir / "l.latc"), UnsupportedDtype);
}

TEST_CASE("random matrices round-trip element-exactly") {
  TempDir dir;
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> shape(1, 17);
  std::uniform_int_distribution<std::uint32_t> bits;
  for (int trial = 0; trial < 100; ++trial) {
    FeatureMatrix m(shape(rng), shape(rng));
    for (std::size_t i = 0; i < m.size(); ++i) {
      float v;
      do {
        std::uint32_t u = bits(rng);
        std::memcpy(&v, &u, 4);
      } while (!std::isfinite(v));
      m.data()[i] = v;
    }
    write_container(m, dir / "r.latc");
    const auto back = read_matrix(dir / "r.latc");
    REQUIRE(back.rows() == m.rows());
    REQUIRE(std::memcmp(back.data(), m.data(), m.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("manifest validation") {
  TempDir dir;
  SUBCASE("well-formed bundle loads with both foundation spaces") {
    const auto ds = small_dataset(100, 16, 10, 2, 3);
    const auto manifest = write_dataset(ds, dir.path());
    const auto back = load_manifest(manifest);
    CHECK(back.size() == 100);
    CHECK(back.foundation.size() == 2);
    CHECK(back.space("fm1").features == ds.foundation[1].features);
    CHECK(*back.logits == *ds.logits);
    CHECK(back.labels == ds.labels);
    CHECK(back.split == Split::test);
  }
  SUBCASE("row count mismatch between logits and labels") {
    auto ds = small_dataset(100, 16, 10, 1, 3);
    write_dataset(ds, dir.path());
    LabelVector short_labels(ds.labels.begin(), ds.labels.end() - 1);
    write_container(short_labels, dir / "labels.latc");
    LATA_CHECK_ERRC(load_manifest(dir / "manifest.json"), RowCountMismatch);
  }
  SUBCASE("label equal to the class count") {
    auto ds = small_dataset(20, 4, 10, 1, 3);
    ds.labels[5] = 10;
    LATA_CHECK_ERRC(validate_dataset(ds), LabelOutOfRange);
    ds.labels[5] = -1;
    LATA_CHECK_ERRC(validate_dataset(ds), LabelOutOfRange);
  }
  SUBCASE("test split without logits") {
    auto ds = small_dataset(20, 4, 10, 1, 3);
    write_dataset(ds, dir.path());
    std::ifstream f(dir / "manifest.json");
    auto spec = parse_manifest_json(std::string(std::istreambuf_iterator<char>(f), {}));
    spec.logits.reset();
    LATA_CHECK_ERRC(parse_manifest_json(manifest_to_json(spec)), ManifestInvalid);
  }
  SUBCASE("pool split may omit logits") {
    auto ds = small_dataset(20, 4, 10, 1, 3);
    ds.logits.reset();
    ds.split = Split::pool;
    const auto back = load_manifest(write_dataset(ds, dir.path()));
    CHECK_FALSE(back.logits.has_value());
  }
  SUBCASE("garbage json") { LATA_CHECK_ERRC(parse_manifest_json("{not json"), ManifestInvalid); }
  SUBCASE("missing manifest") { LATA_CHECK_ERRC(load_manifest(dir / "none.json"), MissingFile); }
  SUBCASE("missing referenced array") {
    auto ds = small_dataset(20, 4, 10, 1, 3);
    write_dataset(ds, dir.path());
    std::filesystem::remove(dir / "classifier.latc");
    LATA_CHECK_ERRC(load_manifest(dir / "manifest.json"), MissingFile);
  }
}

TEST_CASE("csv import") {
  TempDir dir;
  SUBCASE("header is skipped") {
    write_text_file(dir / "a.csv", "x,y\n1,2\n3.5,-4\n");
    const auto m = read_csv_matrix(dir / "a.csv");
    CHECK(m == FeatureMatrix(2, 2, {1, 2, 3.5f, -4}));
  }
  SUBCASE("ragged rows name the line") {
    write_text_file(dir / "r.csv", "1,2\n3,4\n5\n");
    try {
      read_csv_matrix(dir / "r.csv");
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ParseError);
      CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
  }
  SUBCASE("labels") {
    write_text_file(dir / "l.csv", "label\n0\n2\n1\n");
    CHECK(read_csv_labels(dir / "l.csv") == LabelVector{0, 2, 1});
  }
  SUBCASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 0.0}) CHECK(std::stod(format_double(v)) == v);
  }
}
