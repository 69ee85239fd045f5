// lanca: generate data, train, evaluate, verify and sweep from a JSON config.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lanca/experiment/experiment.hpp"

namespace ex = lanca::experiment;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
  std::string checkpoint;
  std::string resume;
  std::string metric;
  std::string which;
};

ex::ExperimentConfig load(const Options& o) {
  if (o.config.empty()) {
    ex::ExperimentConfig c;
    c.validate();
    return c;
  }
  return ex::load_config(o.config);
}

std::uint64_t seed_of(const Options& o, const ex::ExperimentConfig& c) {
  return o.seed.value_or(c.seeds.front());
}

void emit(const nlohmann::json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
  std::cerr << "wrote " << path << "\n";
}

int cmd_config(const Options& o) {
  emit(load(o), o.out);
  return 0;
}

int cmd_generate(const Options& o) {
  const auto cfg = load(o);
  const std::uint64_t seed = seed_of(o, cfg);
  const fs::path dir = o.out.empty() ? fs::path(cfg.output_dir) / ("data-s" + std::to_string(seed)) : fs::path(o.out);
  const auto data = ex::generate_dataset(cfg, seed);
  ex::write_dataset(data, dir);
  std::cerr << "wrote " << data.x_train.rows() << " train / " << data.x_test.rows()
            << " test rows to " << dir.string() << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  const auto cfg = load(o);
  const std::uint64_t seed = seed_of(o, cfg);
  if (o.data.empty()) throw CLI::ValidationError("--data", "train needs a dataset directory");
  const auto data = ex::read_dataset(o.data);
  const fs::path dir = o.out.empty() ? fs::path(cfg.output_dir) / ex::run_name(cfg, seed) : fs::path(o.out);
  std::optional<fs::path> resume;
  if (!o.resume.empty()) resume = o.resume;
  ex::save_config(cfg, dir / "config.json");
  const auto t = ex::run_training(cfg, seed, data, dir, resume);
  if (t.diverged) {
    std::cerr << "diverged: " << t.message << "\n";
    return 1;
  }
  std::cerr << "trained " << t.epochs_run << " epochs (best " << t.best_epoch << ", val "
            << t.best_val << "); checkpoint " << t.checkpoint.string() << "\n";
  return 0;
}

int cmd_evaluate(const Options& o) {
  if (o.checkpoint.empty()) throw CLI::ValidationError("--checkpoint", "evaluate needs a checkpoint");
  if (o.data.empty()) throw CLI::ValidationError("--data", "evaluate needs a dataset directory");
  const auto model = ex::load_model(o.checkpoint);
  const auto data = ex::read_dataset(o.data);
  const auto report = ex::evaluate(model, data);
  for (const auto& note : report.at("skipped")) std::cerr << "skipped " << note.get<std::string>() << "\n";
  emit(report, o.out);
  return 0;
}

int cmd_verify(const Options& o) {
  const auto cfg = load(o);
  const auto r = ex::run_verify(o.which, cfg, seed_of(o, cfg));
  emit(r.report, o.out);
  std::cerr << o.which << ": " << (r.expected_pattern ? "expected pattern observed" : "UNEXPECTED pattern")
            << "\n";
  return r.expected_pattern ? 0 : 1;
}

int cmd_sweep(const Options& o) {
  auto cfg = load(o);
  if (!o.out.empty()) cfg.output_dir = o.out;
  const std::string metric = o.metric.empty() ? cfg.selection_metric : o.metric;
  const auto rows = ex::run_sweep(cfg, metric);
  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (r.seed != "summary" && r.status != "ok") ++failed;
    if (r.rank == 1) std::cerr << "best point " << r.point << ": " << r.overrides.dump() << "\n";
  }
  std::cerr << "wrote " << (fs::path(cfg.output_dir) / "sweep.csv").string() << " (" << failed
            << " failed runs)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lanca: latent causal structure learning experiments"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON experiment config (defaults if omitted)")->check(CLI::ExistingFile);
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "seed (default: first of config.seeds)"); };

  auto* config = app.add_subcommand("config", "print the effective config as JSON");
  add_config(config);
  config->add_option("--out", o.out, "write to this file instead of stdout");

  auto* generate = app.add_subcommand("generate", "write a synthetic dataset (CSV + JSON sidecar)");
  add_config(generate);
  add_seed(generate);
  generate->add_option("--out", o.out, "dataset directory");

  auto* train = app.add_subcommand("train", "train on a dataset; writes checkpoint.json and history.csv");
  add_config(train);
  add_seed(train);
  train->add_option("--data", o.data, "dataset directory")->required();
  train->add_option("--out", o.out, "run directory (default: <output_dir>/<hash>-s<seed>)");
  train->add_option("--resume", o.resume, "continue from a state.json")->check(CLI::ExistingFile);

  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on the dataset's test split");
  evaluate->add_option("--checkpoint", o.checkpoint, "checkpoint.json")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--data", o.data, "dataset directory")->required();
  evaluate->add_option("--out", o.out, "report path (stdout if omitted)");

  auto* verify = app.add_subcommand("verify", "run an identifiability verifier");
  verify->add_option("which", o.which, "theorem1 | prop1")->required()->check(CLI::IsMember({"theorem1", "prop1"}));
  add_config(verify);
  add_seed(verify);
  verify->add_option("--out", o.out, "report path (stdout if omitted)");

  auto* sweep = app.add_subcommand("sweep", "grid x seeds sweep with aggregated CSV");
  add_config(sweep);
  sweep->add_option("--metric", o.metric, "selection metric: mmi, mig, shd, sid, val")
      ->check(CLI::IsMember({"mmi", "mig", "shd", "sid", "val"}));
  sweep->add_option("--out", o.out, "output directory (overrides config.output_dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (config->parsed()) return cmd_config(o);
    if (generate->parsed()) return cmd_generate(o);
    if (train->parsed()) return cmd_train(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (verify->parsed()) return cmd_verify(o);
    if (sweep->parsed()) return cmd_sweep(o);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
