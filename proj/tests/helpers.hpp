#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "oracles.hpp"
#include "tea/embedding.hpp"
#include "tea/error.hpp"

namespace testing {

template <class F>
std::optional<tea::ErrorCode> code_of(F&& fn) {
  try {
    fn();
  } catch (const tea::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline tea::EmbeddingMatrix to_matrix(const oracle::Mat& rows) {
  return tea::EmbeddingMatrix::from_rows(rows);
}

inline oracle::Mat to_rows(const tea::EmbeddingMatrix& m) {
  oracle::Mat out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("tea_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
