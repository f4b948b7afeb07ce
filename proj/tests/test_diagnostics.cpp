#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "slim/diagnostics.hpp"
#include "support.hpp"

using namespace slim;

namespace {

struct Fixture {
  SurrogateDataset data;
  DesignSpec spec;
  Tree tree;
  Matrix x;
};

Fixture make_fixture(std::uint64_t seed, int depth = 2) {
  Fixture f;
  f.data = testing_support::random_dataset(seed, 2500, 3, 1, 4);
  f.spec = make_design_spec(f.data, {});
  GrowConfig cfg;
  cfg.max_depth = depth;
  f.tree = grow(f.data, f.spec, cfg);
  f.x = build_design(f.data, f.spec).to_dense();
  return f;
}

std::vector<std::vector<std::size_t>> rows_by_node(const Tree& t, const SurrogateDataset& d) {
  TreeEvaluator ev(t, d);
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(t.nodes.back().id + 1));
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int id : ev.path(i)) out[static_cast<std::size_t>(id)].push_back(i);
  }
  return out;
}

double block_value(const Fixture& f, const Vector& beta, std::size_t row, std::size_t feature) {
  const auto& b = f.spec.blocks[feature];
  return f.x.row(static_cast<Index>(row)).segment(b.first_column, b.width).dot(beta.segment(b.first_column, b.width));
}

double pop_variance(const std::vector<double>& v) {
  const Vector e = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
  return (e.array() - e.mean()).square().mean();
}

}  // namespace

TEST(Effects, ReassembleThePrediction) {
  const auto f = make_fixture(1);
  ASSERT_GT(f.tree.size(), 1u);
  const auto pred = predict(f.tree, f.data);
  TreeEvaluator ev(f.tree, f.data);
  for (std::size_t i = 0; i < f.data.size(); i += 7) {
    const auto& leaf = f.tree.node(ev.leaf(i));
    const auto vals = ev.values(i);
    double s = leaf.model.coefficients[0];
    for (std::size_t j = 0; j < f.spec.features.size(); ++j) {
      s += effect_eval(f.tree, leaf.id, static_cast<int>(j), vals[j]) + leaf.effect_means[j];
    }
    EXPECT_NEAR(s, pred[i], 1e-10 * std::max(1.0, std::abs(pred[i])));
  }
}

TEST(Effects, CenteredOverNodeTrainingRows) {
  const auto f = make_fixture(2);
  const auto members = rows_by_node(f.tree, f.data);
  TreeEvaluator ev(f.tree, f.data);
  for (const auto& node : f.tree.nodes) {
    for (std::size_t j = 0; j < f.spec.features.size(); ++j) {
      double s = 0.0;
      for (auto i : members[static_cast<std::size_t>(node.id)]) {
        s += effect_eval(f.tree, node.id, static_cast<int>(j), ev.value(i, static_cast<int>(j)));
      }
      EXPECT_NEAR(s / static_cast<double>(node.count), 0.0, 1e-10);
    }
  }
}

TEST(Effects, CurvesCoverRangeAndLevels) {
  const auto f = make_fixture(3);
  const auto curves = leaf_effect_curves(f.tree, 25);
  ASSERT_EQ(curves.size(), f.tree.leaf_ids().size() * f.spec.features.size());
  for (const auto& c : curves) {
    const auto& feat = f.spec.features[static_cast<std::size_t>(c.feature)];
    if (feat.kind == FeatureKind::continuous) {
      ASSERT_EQ(c.grid.size(), 25u);
      EXPECT_EQ(c.grid.front(), feat.min);
      EXPECT_EQ(c.grid.back(), feat.max);
      EXPECT_TRUE(std::is_sorted(c.grid.begin(), c.grid.end()));
      for (std::size_t k = 0; k < c.grid.size(); ++k) {
        EXPECT_DOUBLE_EQ(c.values[k], effect_eval(f.tree, c.node, c.feature, c.grid[k]));
      }
    } else {
      EXPECT_EQ(c.levels, feat.levels);
      EXPECT_EQ(c.values.size(), feat.levels.size());
    }
  }
  EXPECT_THROW(effect_curve(f.tree, 0, 0, 1), ArgumentError);
  EXPECT_THROW(effect_curve(f.tree, 0, 99), ArgumentError);
}

TEST(Importance, MatchesDirectVarianceOfBlockEffects) {
  const auto f = make_fixture(4);
  const auto table = leaf_importance(f.tree, f.data);
  const auto members = rows_by_node(f.tree, f.data);
  const auto leaves = f.tree.leaf_ids();
  ASSERT_EQ(table.entries.size(), leaves.size() * f.spec.features.size());
  EXPECT_TRUE(table.small_leaves.empty());
  std::size_t e = 0;
  for (int leaf : leaves) {
    const Vector& beta = f.tree.node(leaf).model.coefficients;
    for (std::size_t j = 0; j < f.spec.features.size(); ++j, ++e) {
      std::vector<double> h;
      for (auto i : members[static_cast<std::size_t>(leaf)]) h.push_back(block_value(f, beta, i, j));
      const double ref = pop_variance(h);
      EXPECT_EQ(table.entries[e].leaf, leaf);
      EXPECT_EQ(table.entries[e].feature, static_cast<int>(j));
      EXPECT_NEAR(table.entries[e].v, ref, 1e-10 * std::max(1.0, ref));
      EXPECT_GE(table.entries[e].v, 0.0);
    }
  }
}

TEST(Importance, SmallLeavesAreFlagged) {
  const auto f = make_fixture(5, 1);
  SurrogateDataset one = f.data;
  for (auto& c : one.features) {
    if (c.kind == FeatureKind::continuous) c.numeric.resize(1);
    else c.labels.resize(1);
  }
  one.response.resize(1);
  const auto table = leaf_importance(f.tree, one);
  EXPECT_EQ(table.small_leaves, f.tree.leaf_ids());
  for (const auto& e : table.entries) EXPECT_EQ(e.v, 0.0);
}

TEST(Contributions, MatchDirectRecomputation) {
  const auto f = make_fixture(6, 3);
  const auto members = rows_by_node(f.tree, f.data);
  const auto all = all_split_contributions(f.tree, f.data);
  ASSERT_EQ(all.size(), f.tree.internal_ids().size());
  for (const auto& sc : all) {
    const auto& parent = f.tree.node(sc.node);
    std::vector<double> ref(f.spec.features.size(), 0.0);
    for (int child : {parent.left, parent.right}) {
      const auto& rows = members[static_cast<std::size_t>(child)];
      const Vector& bc = f.tree.node(child).model.coefficients;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        std::vector<double> d;
        for (auto i : rows) d.push_back(block_value(f, parent.model.coefficients, i, j) - block_value(f, bc, i, j));
        ref[j] += static_cast<double>(rows.size()) * pop_variance(d);
      }
    }
    double total = 0.0;
    for (auto& r : ref) {
      r /= static_cast<double>(parent.count);
      total += r;
    }
    ASSERT_FALSE(sc.no_interaction);
    double psum = 0.0;
    for (std::size_t j = 0; j < ref.size(); ++j) {
      EXPECT_NEAR(sc.c[j], ref[j], 1e-10 * std::max(1.0, ref[j]));
      EXPECT_NEAR(sc.p[j], ref[j] / total, 1e-10);
      EXPECT_GE(sc.p[j], 0.0);
      psum += sc.p[j];
    }
    EXPECT_NEAR(psum, 1.0, 1e-12);
  }
}

TEST(Contributions, IdenticalChildModelsMeanNoInteraction) {
  auto f = make_fixture(7, 1);
  ASSERT_FALSE(f.tree.root().is_leaf());
  Tree t = f.tree;
  for (int child : {t.root().left, t.root().right}) t.node(child).model = t.root().model;
  const auto sc = split_contribution(t, 0, f.data);
  EXPECT_TRUE(sc.no_interaction);
  for (double p : sc.p) EXPECT_EQ(p, 0.0);
  EXPECT_THROW(split_contribution(t, t.root().left, f.data), ArgumentError);
}

TEST(Contributions, InvariantToShiftingAChildBlock) {
  const auto f = make_fixture(8, 1);
  ASSERT_FALSE(f.tree.root().is_leaf());
  const auto base = split_contribution(f.tree, 0, f.data);
  Tree t = f.tree;
  // Spline rows sum to one, so adding a constant to every coefficient of a
  // block shifts that block's effect by the constant.
  const auto& b = t.spec.blocks[0];
  ASSERT_EQ(b.kind, BasisKind::spline);
  t.node(t.root().left).model.coefficients.segment(b.first_column, b.width).array() += 3.7;
  const auto shifted = split_contribution(t, 0, f.data);
  for (std::size_t j = 0; j < base.c.size(); ++j) {
    EXPECT_NEAR(shifted.c[j], base.c[j], 1e-9 * std::max(1.0, base.c[j]));
  }
}

TEST(Metrics, FidelityAgainstCorrelation) {
  std::mt19937_64 rng(9);
  const Vector a = testing_support::random_vector(rng, 500);
  const Vector b = a + 0.5 * testing_support::random_vector(rng, 500);
  const std::vector<double> va(a.data(), a.data() + a.size()), vb(b.data(), b.data() + b.size());
  const auto m = fidelity(va, vb);
  const double cor = ((a.array() - a.mean()) * (b.array() - b.mean())).sum() /
                     std::sqrt((a.array() - a.mean()).square().sum() * (b.array() - b.mean()).square().sum());
  EXPECT_NEAR(m.r2, cor * cor, 1e-12);
  EXPECT_NEAR(m.mse, (a - b).squaredNorm() / 500.0, 1e-12);
  EXPECT_TRUE(m.r2_defined);
  EXPECT_NEAR(fidelity(va, va).r2, 1.0, 1e-12);
  EXPECT_EQ(fidelity(va, va).mse, 0.0);
  const std::vector<double> flat(500, 1.0);
  EXPECT_FALSE(fidelity(flat, vb).r2_defined);
  EXPECT_THROW(fidelity(std::vector<double>{1.0}, std::vector<double>{1.0}), ArgumentError);
  EXPECT_THROW(fidelity(va, std::vector<double>(10, 0.0)), ArgumentError);
}

TEST(Metrics, AucAgainstPairwiseCount) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> coarse(0, 9);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> s, l;
    for (int i = 0; i < 200; ++i) {
      s.push_back(t % 2 ? coarse(rng) : std::normal_distribution<double>()(rng));
      l.push_back(rng() % 3 == 0 ? 1.0 : 0.0);
    }
    EXPECT_NEAR(auc_midrank(s, l), oracle::pairwise_auc(s, l), 1e-12);
  }
  EXPECT_EQ(auc_midrank(std::vector<double>{0.9, 0.1}, std::vector<double>{1.0, 0.0}), 1.0);
  EXPECT_EQ(auc_midrank(std::vector<double>{0.1, 0.9}, std::vector<double>{1.0, 0.0}), 0.0);
  EXPECT_EQ(auc_midrank(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}), 0.5);
  bool defined = true;
  auc_midrank(std::vector<double>{0.5, 0.7}, std::vector<double>{1.0, 1.0}, &defined);
  EXPECT_FALSE(defined);
}

TEST(Metrics, BinaryAccuracyOnLogitScale) {
  const std::vector<double> z{2.0, -1.0, 0.5, -3.0};
  const std::vector<double> y{1.0, 0.0, 0.0, 1.0};
  const auto m = accuracy(z, y, TaskKind::binary);
  EXPECT_TRUE(m.auc_defined);
  EXPECT_NEAR(m.auc, oracle::pairwise_auc(z, y), 1e-12);
  double ll = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-z[i]));
    ll -= y[i] * std::log(p) + (1 - y[i]) * std::log(1 - p);
  }
  EXPECT_NEAR(m.log_loss, ll / 4.0, 1e-12);
  const std::vector<double> probs{0.9, 0.2, 0.6, 0.05};
  const auto mp = accuracy(probs, y, TaskKind::binary, false);
  EXPECT_NEAR(mp.auc, m.auc, 1e-15);
  EXPECT_THROW(accuracy(z, std::vector<double>{1.0, 0.0, 2.0, 1.0}, TaskKind::binary), DataError);
  EXPECT_THROW(accuracy(std::vector<double>{1.5, 0.2, 0.1, 0.3}, y, TaskKind::binary, false), DataError);
}

TEST(Metrics, ContinuousAccuracyIsFidelityAgainstOriginal) {
  const std::vector<double> pred{1.0, 2.0, 3.0, 4.5};
  const std::vector<double> orig{1.2, 1.9, 3.3, 4.0};
  const auto a = accuracy(pred, orig, TaskKind::continuous);
  const auto f = fidelity(pred, orig);
  EXPECT_EQ(a.regression.mse, f.mse);
  EXPECT_EQ(a.regression.r2, f.r2);
  EXPECT_NEAR(logistic(0.0), 0.5, 0.0);
  EXPECT_NEAR(logistic(-800.0), 0.0, 1e-300);
  EXPECT_NEAR(logistic(800.0), 1.0, 0.0);
}
