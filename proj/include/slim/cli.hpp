#pragma once

// Command-line driver: simulate, fit, predict, evaluate, diagnose, export.
// Exit codes: 0 success, 2 argument error, 3 data error, 4 numerical
// failure, 1 anything else.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slim/slim.hpp"

namespace slim::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kArgumentError = 2,
  kDataError = 3,
  kNumericalError = 4,
};

namespace detail {

inline std::string flag_of(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

inline std::string cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Train/test table with MSE and R2 rows for fidelity (against the surrogate
/// response) and accuracy (against the original response, when present).
inline std::string report(const Tree& tree, const SurrogateDataset& data, const io::RowSplit& split,
                          const io::RunConfig& run) {
  const auto pred = predict(tree, data);
  auto pick = [](const std::vector<double>& v, const std::vector<std::size_t>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (auto i : rows) out.push_back(v[i]);
    return out;
  };
  struct Column {
    bool present = false;
    RegressionMetrics fid;
    AccuracyMetrics acc;
  };
  const bool has_original = data.original.has_value();
  auto column = [&](const std::vector<std::size_t>& rows) {
    Column c;
    if (rows.size() < 2) return c;
    c.present = true;
    const auto p = pick(pred, rows);
    c.fid = fidelity(p, pick(data.response, rows));
    if (has_original) c.acc = accuracy(p, pick(*data.original, rows), run.task);
    return c;
  };
  const Column train = column(split.train);
  const Column test = column(split.test);

  std::ostringstream out;
  int max_depth = 0;
  for (const auto& n : tree.nodes) max_depth = std::max(max_depth, n.depth);
  out << "tree: " << tree.size() << " nodes, " << tree.leaf_ids().size() << " leaves, depth "
      << max_depth << "\n";
  out << "rows: " << split.train.size() << " train, " << split.test.size() << " test\n\n";
  char line[128];
  std::snprintf(line, sizeof line, "%-10s %-8s %14s %14s\n", "", "", "Train", "Test");
  out << line;
  auto row = [&](const char* group, const char* name, auto get, bool defined_train,
                 bool defined_test) {
    const std::string a = train.present && defined_train ? cell(get(train)) : "-";
    const std::string b = test.present && defined_test ? cell(get(test)) : "-";
    std::snprintf(line, sizeof line, "%-10s %-8s %14s %14s\n", group, name, a.c_str(), b.c_str());
    out << line;
  };
  row("Fidelity", "MSE", [](const Column& c) { return c.fid.mse; }, true, true);
  row("", "R2", [](const Column& c) { return c.fid.r2; }, train.fid.r2_defined, test.fid.r2_defined);
  if (has_original) {
    if (run.task == TaskKind::continuous) {
      row("Accuracy", "MSE", [](const Column& c) { return c.acc.regression.mse; }, true, true);
      row("", "R2", [](const Column& c) { return c.acc.regression.r2; },
          train.acc.regression.r2_defined, test.acc.regression.r2_defined);
    } else {
      row("Accuracy", "AUC", [](const Column& c) { return c.acc.auc; }, train.acc.auc_defined,
          test.acc.auc_defined);
      row("", "LogLoss", [](const Column& c) { return c.acc.log_loss; }, true, true);
    }
  }
  return out.str();
}

inline SurrogateDataset load_for_model(const std::string& path, const Tree& tree,
                                       const io::RunConfig& run, bool need_response,
                                       bool with_labels) {
  io::CsvSchema s;
  s.response = run.response;
  s.response_optional = !need_response;
  s.transform = run.transform;
  if (with_labels) {
    s.original = run.original;
    s.tag = run.tag;
  }
  for (const auto& f : tree.spec.features) {
    s.features.push_back(f.name);
    if (f.kind == FeatureKind::categorical) s.categorical.push_back(f.name);
  }
  return io::load_csv(path, s);
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw DataError("cannot write '" + path + "'");
      out_ = file_.get();
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
};

}  // namespace detail

/// Runs the CLI with the given streams; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Surrogate locally-interpretable models: model-based trees with spline leaves"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Write a synthetic benchmark dataset as CSV");
  std::string sim_kind = "f1", sim_out;
  std::int64_t sim_n = 1000;
  double sim_sigma = 0.0;
  std::uint64_t sim_seed = 1;
  sim->add_option("--kind", sim_kind, "Generating function: f1 | f2")->capture_default_str();
  sim->add_option("--n", sim_n, "Number of observations")->capture_default_str();
  sim->add_option("--sigma", sim_sigma, "Noise standard deviation")->capture_default_str();
  sim->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  sim->add_option("--out", sim_out, "Output CSV (default: stdout)");

  // fit
  auto* fit = app.add_subcommand("fit", "Grow, prune and optionally refit a tree; write it as JSON");
  std::string fit_data, fit_model, fit_config;
  std::map<std::string, std::string> fit_flags;
  fit->add_option("--data", fit_data, "Dataset CSV")->required();
  fit->add_option("--model", fit_model, "Output model JSON")->required();
  fit->add_option("--config", fit_config, "Config file of key = value lines");
  for (const auto& [key, desc] : io::run_config_keys()) {
    fit->add_option(detail::flag_of(key), fit_flags[key], desc);
  }

  // predict
  auto* pred = app.add_subcommand("predict", "Predict a dataset with a saved model");
  std::string pred_model, pred_data, pred_out;
  pred->add_option("--model", pred_model, "Model JSON")->required();
  pred->add_option("--data", pred_data, "Dataset CSV")->required();
  pred->add_option("--out", pred_out, "Output CSV (default: stdout)");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Fidelity and accuracy report for a saved model");
  std::string eval_model, eval_data;
  eval->add_option("--model", eval_model, "Model JSON")->required();
  eval->add_option("--data", eval_data, "Dataset CSV")->required();

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "Write importance, split-contribution and effect-curve CSVs");
  std::string diag_model, diag_data, diag_dir, diag_rows = "train";
  int diag_grid = 100;
  diag->add_option("--model", diag_model, "Model JSON")->required();
  diag->add_option("--data", diag_data, "Dataset CSV")->required();
  diag->add_option("--out-dir", diag_dir, "Output directory")->required();
  diag->add_option("--rows", diag_rows, "Rows used: train | test | all")
      ->check(CLI::IsMember({"train", "test", "all"}))
      ->capture_default_str();
  diag->add_option("--grid", diag_grid, "Grid points per continuous effect curve")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();

  // export
  auto* exp = app.add_subcommand("export", "Render a saved model");
  std::string exp_model, exp_format = "dot", exp_out;
  exp->add_option("--model", exp_model, "Model JSON")->required();
  exp->add_option("--format", exp_format, "Output format")
      ->check(CLI::IsMember({"dot"}))
      ->capture_default_str();
  exp->add_option("--out", exp_out, "Output file (default: stdout)");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n";
      return kArgumentError;
    }

    if (sim->parsed()) {
      const auto kind = sim::kind_from_string(sim_kind);
      if (sim_n < 1) throw ArgumentError("--n must be >= 1");
      if (!(sim_sigma >= 0.0) || !std::isfinite(sim_sigma)) throw ArgumentError("--sigma must be >= 0");
      const auto s = sim::simulate(kind, sim_n, sim_sigma, sim_seed);
      auto d = sim::to_dataset(s);
      d.tags.reset();
      detail::Output o(sim_out, out);
      io::write_csv(o.stream(), d, io::CsvNames{"f", "y", "split"});
      return kOk;
    }

    if (fit->parsed()) {
      io::RunConfig run;
      if (!fit_config.empty()) io::apply_config_file(run, fit_config);
      for (const auto& [key, desc] : io::run_config_keys()) {
        if (fit->count(detail::flag_of(key)) > 0) io::apply_setting(run, key, fit_flags[key]);
      }
      run.validate();
      const auto data = io::load_csv(fit_data, run.schema());
      const auto split = io::split_rows(data, run.train_fraction, run.seed);
      if (split.train.empty()) throw DataError(fit_data + ": no training rows");
      const auto train = data.subset(split.train);
      const auto spec = make_design_spec(train, run.design_options());
      Tree tree = grow(train, spec, run.grow);
      const std::size_t grown = tree.size();
      if (run.prunes()) {
        tree = prune(tree, run.prune_r2.value_or(1.0), run.prune_dsse_fraction.value_or(0.0));
      }
      if (run.l1_lambda > 0.0) tree = refit_l1(tree, train, run.l1_lambda);
      io::write_tree_file(fit_model, tree, run);
      if (!spec.dropped.empty()) {
        out << "dropped constant features:";
        for (const auto& f : spec.dropped) out << ' ' << f;
        out << "\n";
      }
      out << "grown tree: " << grown << " nodes\n";
      out << detail::report(tree, data, split, run);
      return kOk;
    }

    if (pred->parsed()) {
      const auto model = io::read_tree_file(pred_model);
      const auto data = detail::load_for_model(pred_data, model.tree, model.run, false, false);
      TreeEvaluator ev(model.tree, data);
      detail::Output o(pred_out, out);
      o.stream() << "leaf_id,prediction\n";
      for (std::size_t i = 0; i < data.size(); ++i) {
        const int leaf = ev.leaf(i);
        o.stream() << leaf << ',' << io::format_double(ev.predict_with(model.tree.node(leaf).model, i))
                   << '\n';
      }
      return kOk;
    }

    if (eval->parsed()) {
      const auto model = io::read_tree_file(eval_model);
      const auto data = detail::load_for_model(eval_data, model.tree, model.run, true, true);
      const auto split = io::split_rows(data, model.run.train_fraction, model.run.seed);
      out << detail::report(model.tree, data, split, model.run);
      return kOk;
    }

    if (diag->parsed()) {
      const auto model = io::read_tree_file(diag_model);
      const auto data = detail::load_for_model(diag_data, model.tree, model.run, false, true);
      const auto split = io::split_rows(data, model.run.train_fraction, model.run.seed);
      std::vector<std::size_t> rows;
      if (diag_rows == "train") {
        rows = split.train;
      } else if (diag_rows == "test") {
        rows = split.test;
      } else {
        rows.resize(data.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      }
      const auto subset = data.subset(rows);
      const auto tables = io::compute_diagnostics(model.tree, subset, diag_grid);
      io::export_diagnostics(diag_dir, model.tree.spec, tables);
      for (int leaf : tables.importance.small_leaves) {
        err << "warning: leaf " << leaf << " has fewer than 2 rows; importance set to 0\n";
      }
      return kOk;
    }

    if (exp->parsed()) {
      const auto model = io::read_tree_file(exp_model);
      detail::Output o(exp_out, out);
      o.stream() << io::export_dot(model.tree);
      return kOk;
    }
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kArgumentError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

inline int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace slim::cli
