#pragma once

// Shared fixtures for the test binaries.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "slim/slim.hpp"

namespace testing_support {

inline slim::Matrix random_matrix(std::mt19937_64& rng, slim::Index rows, slim::Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  slim::Matrix m(rows, cols);
  for (slim::Index i = 0; i < rows; ++i) {
    for (slim::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  }
  return m;
}

inline slim::Vector random_vector(std::mt19937_64& rng, slim::Index n) {
  return random_matrix(rng, n, 1).col(0);
}

/// Dense design with an intercept column followed by `cols - 1` normals.
inline slim::Matrix random_design(std::mt19937_64& rng, slim::Index rows, slim::Index cols) {
  slim::Matrix x = random_matrix(rng, rows, cols);
  x.col(0).setOnes();
  return x;
}

/// `p` uniform(-1, 1) continuous features named x1..xp plus optional
/// categorical columns c1..; response is a smooth additive part plus an
/// x1-driven interaction and Gaussian noise.
inline slim::SurrogateDataset random_dataset(std::uint64_t seed, std::size_t n, int p,
                                             int categorical = 0, int levels = 4,
                                             double noise = 0.1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  slim::SurrogateDataset d;
  for (int j = 0; j < p; ++j) {
    slim::FeatureColumn c;
    c.name = "x" + std::to_string(j + 1);
    for (std::size_t i = 0; i < n; ++i) c.numeric.push_back(u(rng));
    d.features.push_back(std::move(c));
  }
  std::uniform_int_distribution<int> lv(0, levels - 1);
  for (int j = 0; j < categorical; ++j) {
    slim::FeatureColumn c;
    c.name = "c" + std::to_string(j + 1);
    c.kind = slim::FeatureKind::categorical;
    for (std::size_t i = 0; i < n; ++i) c.labels.push_back("L" + std::to_string(lv(rng)));
    d.features.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double y = 0.0;
    for (int j = 0; j < p; ++j) y += std::sin(2.0 * (j + 1) * d.features[static_cast<std::size_t>(j)].numeric[i]);
    if (p >= 2) {
      const double x1 = d.features[0].numeric[i], x2 = d.features[1].numeric[i];
      y += (x1 > 0.0 ? 2.0 : -1.0) * x2;
    }
    for (int j = 0; j < categorical; ++j) {
      const auto& lab = d.features[static_cast<std::size_t>(p + j)].labels[i];
      y += 0.5 * (lab.back() - '0');
      if (p >= 1) y += (lab == "L1" ? 1.5 : 0.0) * d.features[0].numeric[i];
    }
    d.response.push_back(y + noise * g(rng));
  }
  return d;
}

/// Dense copy of a design matrix.
inline slim::Matrix dense(const slim::DesignMatrix& dm) { return dm.to_dense(); }

/// Fresh temporary directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("slim_test_" + std::to_string(rd()) + "_" + std::to_string(++counter));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
