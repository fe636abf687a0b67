#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "allabel/corpus.hpp"
#include "allabel/similarity.hpp"
#include "allabel/util.hpp"

namespace fixture {

/// Ids "s0", "s1", ...
inline std::vector<std::string> ids(std::size_t n, const std::string& prefix = "s") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Normalized N x N matrix with uniform [0, 1) cells. With `coarse`, cells
/// are multiples of 0.1 so ties are common.
inline allabel::SimilarityMatrix random_square(std::size_t n, std::uint64_t seed, bool coarse = false) {
  std::mt19937_64 rng(seed);
  std::vector<double> cells(n * n);
  for (auto& c : cells) {
    const double u = allabel::unit_interval(rng());
    c = coarse ? static_cast<double>(static_cast<int>(u * 10.0)) / 10.0 : u;
  }
  return allabel::SimilarityMatrix(ids(n), ids(n), std::move(cells), true);
}

inline allabel::Dataset id_dataset(const std::vector<std::string>& sample_ids) {
  std::vector<allabel::Sample> samples;
  for (const auto& id : sample_ids) samples.push_back({id, "text of " + id, std::nullopt});
  return allabel::Dataset(allabel::DatasetSchema({allabel::EntityType{"Thing", {"name"}}}), std::move(samples));
}

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("allabel-test-" + allabel::hex64(rng()));
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

inline void write(const std::filesystem::path& p, const std::string& text) { allabel::write_file(p, text); }

}  // namespace fixture
