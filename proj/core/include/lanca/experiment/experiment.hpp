#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lanca/metrics/verify.hpp"
#include "lanca/scm/synthetic.hpp"
#include "lanca/train/trainer.hpp"

namespace lanca::experiment {

namespace fs = std::filesystem;

struct GeneratorConfig {
  std::string kind = "pendulum";  // pendulum | flow | random_anm
  // 0 picks the per-generator default (pendulum 5899/1409, flow 6533/1567,
  // random_anm 5000/1000).
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double eta = 0.1;
  std::size_t anm_nodes = 4;
  double anm_edge_prob = 0.5;

  std::size_t resolved_train() const;
  std::size_t resolved_test() const;
  std::size_t n_factors() const;
};

struct MixerConfig {
  std::string kind = "random_smooth_mlp";  // identity | affine | random_smooth_mlp
  std::size_t output_dim = 10;
};

struct VerifyConfig {
  std::size_t n_samples = 5000;
  std::array<double, 3> psi = {1.0, 0.0, 0.3};
  std::size_t distorted_factor = 1;
  std::size_t shuffles = 500;
  double alpha = 0.01;
};

struct ExperimentConfig {
  GeneratorConfig generator;
  MixerConfig mixer;
  train::ModelConfig model;
  objective::LossWeights weights;
  train::TrainConfig train;
  VerifyConfig verify;
  std::vector<std::uint64_t> seeds = {0};
  std::string output_dir = "runs";
  std::string selection_metric = "mmi";
  // Sweep grid: dotted config path -> list of values, e.g.
  // {"weights.gamma1": [0.01, 0.05]}. Empty means a single point.
  nlohmann::json grid = nlohmann::json::object();

  // Throws std::invalid_argument describing the first problem found.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const fs::path& path);
void save_config(const ExperimentConfig& config, const fs::path& path);

// 64-bit FNV-1a of the canonical JSON dump.
std::uint64_t config_hash(const ExperimentConfig& config);
// "<16 hex digits>-s<seed>".
std::string run_name(const ExperimentConfig& config, std::uint64_t seed);

struct Dataset {
  Matrix x_train, s_train, x_test, s_test;  // s_* empty when unknown
  std::optional<scm::GroundTruthSCM> scm;
  nlohmann::json meta;
};

Dataset generate_dataset(const ExperimentConfig& config, std::uint64_t seed);
// Writes train.csv, test.csv and dataset.json into dir.
void write_dataset(const Dataset& data, const fs::path& dir);
Dataset read_dataset(const fs::path& dir);

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

struct TrainOutcome {
  bool diverged = false;
  std::string message;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
  fs::path checkpoint;
};

// Trains on data.x_train and writes checkpoint.json, state.json and
// history.csv into run_dir. With `resume`, continues from a state.json.
TrainOutcome run_training(const ExperimentConfig& config, std::uint64_t seed, const Dataset& data,
                          const fs::path& run_dir,
                          const std::optional<fs::path>& resume = std::nullopt);

train::LancaModel load_model(const fs::path& checkpoint);

struct GraphScores {
  std::size_t shd = 0;
  std::optional<std::size_t> sid;  // absent if the estimate is cyclic
};

GraphScores score_graph(const Matrix& a_true, const Matrix& a_est);

// Metric report for a trained model on the test split.
nlohmann::json evaluate(const train::LancaModel& model, const Dataset& data);

struct VerifyOutcome {
  nlohmann::json report;
  bool expected_pattern = false;
};

// which = "theorem1" | "prop1".
VerifyOutcome run_verify(const std::string& which, const ExperimentConfig& config,
                         std::uint64_t seed);

// Expands the grid into one config per point, in lexicographic path order.
std::vector<std::pair<nlohmann::json, ExperimentConfig>> expand_grid(const ExperimentConfig& base);

struct SweepRow {
  std::size_t point = 0;
  std::string seed;  // number, or "summary"
  std::string status;
  nlohmann::json overrides;
  double mmi = 0.0, mig = 0.0, shd = 0.0, sid = 0.0, best_val = 0.0;
  double mmi_std = 0.0, mig_std = 0.0, shd_std = 0.0, sid_std = 0.0, best_val_std = 0.0;
  std::size_t rank = 0;  // summary rows only
};

// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(const std::vector<double>& v);

// Runs every (grid point, seed), writes sweep.csv into config.output_dir and
// returns the rows (per-run rows first, then summaries ordered by rank).
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::string& metric);

}  // namespace lanca::experiment
