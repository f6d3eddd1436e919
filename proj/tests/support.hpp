#pragma once

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "lata/error.hpp"
#include "lata/matrix.hpp"

namespace lata::testing {

/// Directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("lata_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Name of the Errc thrown by fn, or a description of whatever else happened.
inline std::string thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return std::string(to_string(e.code()));
  } catch (const std::exception& e) {
    return std::string("std::exception: ") + e.what();
  }
  return "no exception";
}

#define LATA_CHECK_ERRC(expr, errc) \
  CHECK(::lata::testing::thrown_code([&] { (void)(expr); }) == ::lata::to_string(::lata::Errc::errc))

inline FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, float scale = 1.0f) {
  std::normal_distribution<float> dist(0.0f, scale);
  FeatureMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace lata::testing
