#pragma once

// Synthetic benchmarks: an additive function of ten uniform predictors (two
// of them inert) and the same function plus two- and three-way interactions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "slim/dataset.hpp"
#include "slim/error.hpp"

namespace slim::sim {

inline constexpr int kNumPredictors = 10;
inline constexpr double kTrainFraction = 2.0 / 3.0;

using Point = std::array<double, kNumPredictors>;

/// 3x1 + x2^3 - pi x3 + exp(-2 x4^2) + 1/(2+|x5|) + x6 log|x6|
///   + sqrt(2|x7|) + max(0, x7) + x8^4 + 2 cos(pi x8); x9, x10 unused.
inline double f1(const Point& x) {
  using std::numbers::pi;
  const double x6_term = x[5] == 0.0 ? 0.0 : x[5] * std::log(std::abs(x[5]));
  return 3.0 * x[0] + x[1] * x[1] * x[1] - pi * x[2] + std::exp(-2.0 * x[3] * x[3]) +
         1.0 / (2.0 + std::abs(x[4])) + x6_term + std::sqrt(2.0 * std::abs(x[6])) +
         std::max(0.0, x[6]) + std::pow(x[7], 4) + 2.0 * std::cos(pi * x[7]);
}

/// f1 + 2 I(x1>0) I(x2>0) x3 + 2 I(x1>0) x4 + 4 (x5 I(x5>0))^|x6| + |x7 + x8|,
/// with the power term taken as 0 whenever x5 <= 0.
inline double f2(const Point& x) {
  const double a = x[0] > 0.0 ? 1.0 : 0.0;
  const double b = x[1] > 0.0 ? 1.0 : 0.0;
  const double power = x[4] > 0.0 ? 4.0 * std::pow(x[4], std::abs(x[5])) : 0.0;
  return f1(x) + 2.0 * a * b * x[2] + 2.0 * a * x[3] + power + std::abs(x[6] + x[7]);
}

enum class Kind { f1, f2 };

inline Kind kind_from_string(const std::string& s) {
  if (s == "f1") return Kind::f1;
  if (s == "f2") return Kind::f2;
  throw ArgumentError("unknown simulation kind '" + s + "' (expected f1 or f2)");
}

inline double evaluate(Kind k, const Point& x) { return k == Kind::f1 ? f1(x) : f2(x); }

struct SimSample {
  Point x{};
  double f = 0.0;
  double y = 0.0;
};

struct Simulation {
  std::vector<SimSample> samples;
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// n draws of x ~ U(-1,1)^10 with y = f(x) + N(0, sigma^2), split into
/// round(2n/3) training rows and the rest for testing by a seeded
/// permutation. io::split_rows draws the same permutation for a given seed.
inline Simulation simulate(Kind kind, std::int64_t n, double sigma, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("simulate: n must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ArgumentError("simulate: sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  Simulation out;
  out.samples.resize(static_cast<std::size_t>(n));
  for (auto& s : out.samples) {
    for (double& v : s.x) v = unif(rng);
    s.f = evaluate(kind, s.x);
    s.y = s.f + (sigma > 0.0 ? sigma * noise(rng) : 0.0);
  }
  std::vector<std::size_t> perm(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::mt19937_64 split_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(perm.begin(), perm.end(), split_rng);
  const auto n_train = static_cast<std::size_t>(std::llround(kTrainFraction * static_cast<double>(n)));
  const std::size_t n_test = static_cast<std::size_t>(n) - n_train;
  out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

/// Dataset with features x1..x10, the noiseless f as surrogate response,
/// y as original response and the train/test tags.
inline SurrogateDataset to_dataset(const Simulation& sim) {
  SurrogateDataset d;
  for (int j = 0; j < kNumPredictors; ++j) {
    FeatureColumn c;
    c.name = "x" + std::to_string(j + 1);
    c.kind = FeatureKind::continuous;
    c.numeric.reserve(sim.samples.size());
    for (const auto& s : sim.samples) c.numeric.push_back(s.x[static_cast<std::size_t>(j)]);
    d.features.push_back(std::move(c));
  }
  std::vector<double> y;
  std::vector<Partition> tags(sim.samples.size(), Partition::train);
  for (const auto& s : sim.samples) {
    d.response.push_back(s.f);
    y.push_back(s.y);
  }
  for (auto i : sim.test) tags[i] = Partition::test;
  d.original = std::move(y);
  d.tags = std::move(tags);
  return d;
}

}  // namespace slim::sim
