#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "dot_grammar.hpp"
#include "slim/slim.hpp"
#include "support.hpp"

using namespace slim;
using namespace slim::io;
using testing_support::TempDir;

namespace {

SurrogateDataset read_text(const std::string& text, const CsvSchema& schema) {
  std::istringstream in(text);
  return read_csv(in, schema, "mem.csv");
}

CsvSchema schema_for(std::string response = "y_s") {
  CsvSchema s;
  s.response = std::move(response);
  return s;
}

template <class F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

Tree small_tree(std::uint64_t seed, int depth, int categorical = 1) {
  const auto d = testing_support::random_dataset(seed, 1500, 3, categorical, 4);
  GrowConfig cfg;
  cfg.max_depth = depth;
  return grow(d, make_design_spec(d, {}), cfg);
}

void expect_same_tree(const Tree& a, const Tree& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.spec.total_columns, b.spec.total_columns);
  ASSERT_EQ(a.spec.features.size(), b.spec.features.size());
  for (std::size_t j = 0; j < a.spec.features.size(); ++j) {
    EXPECT_EQ(a.spec.features[j].name, b.spec.features[j].name);
    EXPECT_EQ(a.spec.features[j].knots.knots, b.spec.features[j].knots.knots);
    EXPECT_EQ(a.spec.features[j].levels, b.spec.features[j].levels);
    EXPECT_EQ(a.spec.blocks[j].first_column, b.spec.blocks[j].first_column);
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& x = a.nodes[k];
    const auto& y = b.nodes[k];
    EXPECT_EQ(x.id, y.id);
    EXPECT_EQ(x.depth, y.depth);
    EXPECT_EQ(x.count, y.count);
    EXPECT_EQ(x.left, y.left);
    EXPECT_EQ(x.right, y.right);
    EXPECT_EQ(x.dsse, y.dsse);
    EXPECT_EQ(x.model.coefficients, y.model.coefficients);
    EXPECT_EQ(x.model.sse, y.model.sse);
    EXPECT_EQ(x.model.r2, y.model.r2);
    EXPECT_EQ(x.model.effective_df, y.model.effective_df);
    EXPECT_EQ(x.effect_means, y.effect_means);
    ASSERT_EQ(x.split.has_value(), y.split.has_value());
    if (x.split) {
      EXPECT_EQ(x.split->feature, y.split->feature);
      EXPECT_EQ(x.split->threshold, y.split->threshold);
      EXPECT_EQ(x.split->left_levels, y.split->left_levels);
    }
  }
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1e3);
  for (int t = 0; t < 1000; ++t) {
    const double v = g(rng);
    EXPECT_EQ(*parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(*parse_double(" +2.5 "), 2.5);
  EXPECT_FALSE(parse_double("2.5x").has_value());
  EXPECT_FALSE(parse_double("").has_value());
}

TEST(Csv, SmokeFileWithQuotesBomAndCrlf) {
  const std::string text =
      "\xEF\xBB\xBF"
      "x1,\"col, b\",y_s,y,split\r\n"
      "1.5,\"a\",0.25,1,train\r\n"
      "-2,\"b \"\"q\"\"\",0.75,0,TEST\r\n";
  auto schema = schema_for();
  schema.original = "y";
  schema.tag = "split";
  schema.categorical = {"col, b"};
  const auto d = read_text(text, schema);
  ASSERT_EQ(d.size(), 2u);
  ASSERT_EQ(d.features.size(), 2u);
  EXPECT_EQ(d.features[0].numeric, (std::vector<double>{1.5, -2.0}));
  EXPECT_EQ(d.features[1].labels, (std::vector<std::string>{"a", "b \"q\""}));
  EXPECT_EQ(d.response, (std::vector<double>{0.25, 0.75}));
  EXPECT_EQ(*d.original, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(*d.tags, (std::vector<Partition>{Partition::train, Partition::test}));
}

TEST(Csv, WriteThenReadRoundTrips) {
  auto d = testing_support::random_dataset(2, 50, 2, 1, 3);
  d.features[2].labels[4] = "with,comma";
  d.original = d.response;
  d.tags = std::vector<Partition>(50, Partition::test);
  (*d.tags)[0] = Partition::train;
  std::ostringstream out;
  write_csv(out, d);
  auto schema = schema_for();
  schema.original = "y";
  schema.tag = "split";
  schema.categorical = {"c1"};
  const auto back = read_text(out.str(), schema);
  ASSERT_EQ(back.features.size(), 3u);
  EXPECT_EQ(back.features[0].numeric, d.features[0].numeric);
  EXPECT_EQ(back.features[2].labels, d.features[2].labels);
  EXPECT_EQ(back.response, d.response);
  EXPECT_EQ(*back.tags, *d.tags);
}

TEST(Csv, LogitTransform) {
  EXPECT_EQ(logit(0.5), 0.0);
  EXPECT_NEAR(logit(0.75), std::log(3.0), 1e-15);
  EXPECT_TRUE(std::isfinite(logit(0.0)));
  EXPECT_TRUE(std::isfinite(logit(1.0)));
  auto schema = schema_for("p");
  schema.transform = ResponseTransform::logit;
  const auto d = read_text("x,p\n1,0.5\n2,0.75\n", schema);
  EXPECT_EQ(d.response[0], 0.0);
  EXPECT_NEAR(d.response[1], std::log(3.0), 1e-15);
}

TEST(Csv, SelectedFeaturesOnly) {
  auto schema = schema_for();
  schema.features = {"b"};
  const auto d = read_text("a,b,y_s\n1,2,3\n4,5,6\n", schema);
  ASSERT_EQ(d.features.size(), 1u);
  EXPECT_EQ(d.features[0].name, "b");
}

TEST(Csv, ErrorsNameTheProblem) {
  EXPECT_NE(error_of([] { read_text("a,b\n1,2\n", schema_for()); }).find("missing response column 'y_s'"),
            std::string::npos);
  EXPECT_NE(error_of([] { read_text("", schema_for()); }).find("empty file"), std::string::npos);
  EXPECT_NE(error_of([] { read_text("a,y_s\n1,2,3\n", schema_for()); }).find("line 2 has 3 fields"),
            std::string::npos);
  const auto bad = error_of([] { read_text("a,y_s\n1,2\nx,3\n4,nan\n", schema_for()); });
  EXPECT_NE(bad.find("line(s) 3 4"), std::string::npos) << bad;
  EXPECT_NE(error_of([] { read_text("a,y_s\n", schema_for()); }).find("no data rows"), std::string::npos);
  auto tagged = schema_for();
  tagged.tag = "t";
  EXPECT_NE(error_of([&] { read_text("a,y_s,t\n1,2,maybe\n", tagged); }).find("neither train nor test"),
            std::string::npos);
  EXPECT_THROW(load_csv("/nonexistent/file.csv", schema_for()), DataError);
}

TEST(Csv, OptionalResponseMayBeAbsent) {
  auto schema = schema_for();
  schema.response_optional = true;
  schema.transform = ResponseTransform::logit;
  const auto d = read_text("a\n1\n2\n", schema);
  EXPECT_EQ(d.response, (std::vector<double>{0.0, 0.0}));
}

TEST(TreeJson, SaveLoadPreservesEverything) {
  for (int depth : {0, 1, 3}) {
    const Tree t = small_tree(3, depth);
    RunConfig run;
    run.grow = t.config;
    run.prune_r2 = 0.95;
    run.categorical = {"c1"};
    const auto saved = tree_from_string(tree_to_string(t, run));
    expect_same_tree(t, saved.tree);
    EXPECT_EQ(settings_of(saved.run), settings_of(run));
    if (depth == 0) {
      EXPECT_EQ(saved.tree.size(), 1u);
    }
  }
}

TEST(TreeJson, PredictionsSurviveRoundTrip) {
  const Tree t = small_tree(4, 3);
  TempDir dir;
  write_tree_file(dir.file("m.json"), t, RunConfig{});
  const auto loaded = read_tree_file(dir.file("m.json"));
  const auto probe = testing_support::random_dataset(99, 500, 3, 1, 4);
  EXPECT_EQ(predict(t, probe), predict(loaded.tree, probe));
}

TEST(TreeJson, NonFiniteValuesRoundTrip) {
  Tree t = small_tree(5, 1);
  t.nodes[0].loss = std::numeric_limits<double>::infinity();
  t.nodes[0].model.r2 = std::nan("");
  const auto back = tree_from_string(tree_to_string(t, RunConfig{}));
  EXPECT_TRUE(std::isinf(back.tree.nodes[0].loss));
  EXPECT_TRUE(std::isnan(back.tree.nodes[0].model.r2));
}

TEST(TreeJson, CorruptDocumentsAreRejected) {
  const Tree t = small_tree(6, 2);
  ASSERT_GT(t.size(), 1u);
  const auto doc = save_tree(t, RunConfig{});

  auto counts = doc;
  counts["nodes"][1]["count"] = counts["nodes"][1]["count"].get<int>() + 1;
  EXPECT_NE(error_of([&] { load_tree(counts); }).find("child counts do not sum to the parent count"),
            std::string::npos);

  auto version = doc;
  version["version"] = 99;
  EXPECT_NE(error_of([&] { load_tree(version); }).find("version 99"), std::string::npos);

  auto format = doc;
  format["format"] = "other";
  EXPECT_THROW(load_tree(format), DataError);

  auto coefs = doc;
  coefs["nodes"][0]["coefficients"].erase(0);
  EXPECT_THROW(load_tree(coefs), DataError);

  auto orphan = doc;
  orphan["nodes"][0]["left"] = orphan["nodes"][0]["right"];
  EXPECT_THROW(load_tree(orphan), DataError);

  auto missing = doc;
  missing.erase("design");
  EXPECT_THROW(load_tree(missing), DataError);

  EXPECT_THROW(tree_from_string("{not json"), DataError);
  EXPECT_THROW(read_tree_file("/nonexistent/model.json"), DataError);
}

TEST(Dot, ParsesAndMirrorsTheTree) {
  const Tree t = small_tree(7, 3);
  const std::string text = export_dot(t);
  const auto g = dot_grammar::parse(text);
  EXPECT_TRUE(g.directed);
  EXPECT_EQ(g.nodes.size(), t.size());
  EXPECT_EQ(g.edges.size(), 2 * t.internal_ids().size());
  for (const auto& n : t.nodes) {
    const std::string id = "n" + std::to_string(n.id);
    ASSERT_TRUE(g.nodes.count(id)) << id;
    const std::string label = g.node_attrs.at(id).at("label");
    EXPECT_EQ(label.rfind("N" + std::to_string(n.id) + "\\nsize = " + std::to_string(n.count), 0), 0u) << label;
    EXPECT_NE(label.find("R2 = "), std::string::npos);
    EXPECT_EQ(label.find("dsse = ") != std::string::npos, !n.is_leaf());
  }
  for (const auto& [from, to] : g.edges) {
    EXPECT_TRUE(g.nodes.count(from));
    EXPECT_TRUE(g.nodes.count(to));
  }
}

TEST(Dot, EscapesAwkwardNames) {
  SurrogateDataset d = testing_support::random_dataset(8, 2000, 2, 1, 3);
  d.features[0].name = "x \"one\"\\";
  for (auto& l : d.features[2].labels) l = "lv\"" + l;
  GrowConfig cfg;
  cfg.max_depth = 2;
  const Tree t = grow(d, make_design_spec(d, {}), cfg);
  const auto g = dot_grammar::parse(export_dot(t));
  EXPECT_EQ(g.nodes.size(), t.size());
  EXPECT_THROW(dot_grammar::parse("digraph { a -> }"), std::runtime_error);
  EXPECT_THROW(dot_grammar::parse("digraph { a -- b }"), std::runtime_error);
}

TEST(DiagnosticsCsv, TablesHaveHeadersAndReload) {
  const auto d = testing_support::random_dataset(9, 1500, 3, 1, 4);
  GrowConfig cfg;
  cfg.max_depth = 2;
  const Tree t = grow(d, make_design_spec(d, {}), cfg);
  const auto tables = compute_diagnostics(t, d, 10);
  TempDir dir;
  const auto out = (dir.path() / "nested" / "diag").string();
  export_diagnostics(out, t.spec, tables);

  CsvSchema curves_schema;
  curves_schema.response = "effect";
  curves_schema.categorical = {"feature", "grid_value_or_level"};
  const auto curves = load_csv(out + "/curves.csv", curves_schema);
  std::size_t expected_rows = 0;
  for (const auto& c : tables.curves) expected_rows += c.values.size();
  ASSERT_EQ(curves.size(), expected_rows);
  std::size_t row = 0;
  for (const auto& c : tables.curves) {
    for (double v : c.values) EXPECT_EQ(curves.response[row++], v);
  }

  CsvSchema imp_schema;
  imp_schema.response = "v";
  imp_schema.categorical = {"feature"};
  const auto imp = load_csv(out + "/importance.csv", imp_schema);
  ASSERT_EQ(imp.size(), tables.importance.entries.size());
  EXPECT_EQ(imp.features[1].labels[0], "x1");

  CsvSchema con_schema;
  con_schema.response = "p";
  con_schema.categorical = {"feature"};
  const auto con = load_csv(out + "/contributions.csv", con_schema);
  EXPECT_EQ(con.size(), tables.contributions.size() * t.spec.features.size());
}

TEST(DiagnosticsCsv, RootOnlyTreeHasHeaderOnlyContributions) {
  const Tree t = small_tree(10, 0);
  std::ostringstream con, imp;
  write_contributions_csv(con, t.spec, all_split_contributions(t, testing_support::random_dataset(10, 100, 3, 1, 4)));
  EXPECT_EQ(con.str(), "node_id,feature,c,p\n");
  write_importance_csv(imp, t.spec, ImportanceTable{});
  EXPECT_EQ(imp.str(), "leaf_id,feature,v\n");
}

TEST(RunConfigIo, KeysRoundTripThroughSettings) {
  RunConfig c;
  apply_setting(c, "max_depth", "5");
  apply_setting(c, "lambda", "0.01, 0.1,1");
  apply_setting(c, "knots_per_feature", "x1:4,x2:7");
  apply_setting(c, "categorical", "c1,c2");
  apply_setting(c, "prune_dsse_fraction", "0.02");
  apply_setting(c, "seed", "12345678901234");
  apply_setting(c, "loss", "sse");
  apply_setting(c, "task", "binary");
  EXPECT_EQ(c.grow.max_depth, 5);
  EXPECT_EQ(c.grow.lambdas, (std::vector<double>{0.01, 0.1, 1.0}));
  EXPECT_EQ(c.knots_per_feature.at("x2"), 7);
  EXPECT_EQ(c.seed, 12345678901234ULL);
  RunConfig back;
  for (const auto& [k, v] : settings_of(c)) apply_setting(back, k, v);
  EXPECT_EQ(settings_of(back), settings_of(c));
  for (const auto& [key, help] : run_config_keys()) {
    EXPECT_FALSE(help.empty());
    EXPECT_NO_THROW(apply_setting(back, key, settings_of(c).count(key) ? settings_of(c).at(key) : "0.5")) << key;
  }
}

TEST(RunConfigIo, BadValuesAreArgumentErrors) {
  RunConfig c;
  EXPECT_THROW(apply_setting(c, "nope", "1"), ArgumentError);
  EXPECT_THROW(apply_setting(c, "max_depth", "two"), ArgumentError);
  EXPECT_THROW(apply_setting(c, "seed", "1e3"), ArgumentError);
  EXPECT_THROW(apply_setting(c, "seed", "-1"), ArgumentError);
  EXPECT_THROW(apply_setting(c, "loss", "mae"), ArgumentError);
  EXPECT_THROW(apply_setting(c, "knots_per_feature", "x1=3"), ArgumentError);
  c.knots = 1;
  EXPECT_THROW(c.validate(), ArgumentError);
}

TEST(RunConfigIo, ConfigFileWithComments) {
  TempDir dir;
  {
    std::ofstream f(dir.file("run.cfg"));
    f << "# growth\nmax-depth = 4   # inline\n\nlambda=0.5\nresponse = target\n";
  }
  RunConfig c;
  apply_config_file(c, dir.file("run.cfg"));
  EXPECT_EQ(c.grow.max_depth, 4);
  EXPECT_EQ(c.grow.lambdas, std::vector<double>{0.5});
  EXPECT_EQ(c.response, "target");
  {
    std::ofstream f(dir.file("bad.cfg"));
    f << "max_depth 4\n";
  }
  EXPECT_NE(error_of([&] { apply_config_file(c, dir.file("bad.cfg")); }).find("bad.cfg:1"), std::string::npos);
  EXPECT_THROW(apply_config_file(c, dir.file("missing.cfg")), ArgumentError);
}

TEST(RunConfigIo, SplitRowsUsesTagsOrSeed) {
  auto d = testing_support::random_dataset(11, 30, 1);
  const auto a = split_rows(d, 0.5, 3), b = split_rows(d, 0.5, 3), c = split_rows(d, 0.5, 4);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(a.train, c.train);
  EXPECT_EQ(a.train.size(), 15u);
  EXPECT_EQ(split_rows(d, 1.0, 3).test.size(), 0u);
  d.tags = std::vector<Partition>(30, Partition::train);
  (*d.tags)[7] = Partition::test;
  const auto tagged = split_rows(d, 0.5, 3);
  EXPECT_EQ(tagged.test, std::vector<std::size_t>{7});
  EXPECT_EQ(tagged.train.size(), 29u);
}
