#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lanca/anm/mechanisms.hpp"
#include "lanca/dag/structure.hpp"
#include "lanca/objective/wae.hpp"

namespace lanca::train {

struct ModelConfig {
  std::size_t latent_dim = 4;
  std::vector<std::size_t> hidden = {32};
  ad::Activation ae_activation = ad::Activation::kSilu;
  std::size_t mech_hidden = 16;
  std::size_t mech_layers = 2;
  ad::Activation mech_activation = ad::Activation::kTanh;
  double tau_perm = 0.5;
  double perm_score_std = 0.1;
  double edge_logit_mean = 1.0;
  double edge_logit_std = 0.1;

  void validate() const;
};

struct TrainConfig {
  double lr_main = 1e-3;
  double lr_edge = 0.005;
  double lr_perm = 0.01;
  double tau_edges_start = 5.0;
  double tau_edges_end = 0.2;
  double anneal_fraction = 0.5;  // of max_epochs
  std::size_t warmup_epochs = 30;
  double sparsity_delay = 0.2;   // fraction of max_epochs added to the warmup
  std::size_t max_epochs = 1000;
  std::size_t patience = 50;
  std::size_t batch_size = 64;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t anneal_epochs() const;
  double warmup_end() const;
  // First epoch at which neither tau_edges nor gamma1 changes any more.
  std::size_t stationary_epoch() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// A non-finite loss during fit, tagged with the epoch it happened in.
class EpochDivergence : public objective::DivergenceError {
 public:
  EpochDivergence(const objective::DivergenceError& cause, std::size_t epoch);
  std::size_t epoch() const { return epoch_; }
  const char* what() const noexcept override { return message_.c_str(); }

 private:
  std::size_t epoch_;
  std::string message_;
};

struct ScheduleValues {
  double tau_edges;
  double gamma1_effective;
};

ScheduleValues schedule(std::size_t epoch, const TrainConfig& config, double gamma1);

struct LancaModel {
  objective::Autoencoder ae;
  anm::MechanismSet mechanisms;
  dag::DagParams dag;

  static LancaModel create(std::size_t input_dim, const ModelConfig& config, std::uint64_t seed);

  std::vector<ad::Tensor> main_parameters() const;
  std::vector<ad::Tensor> edge_parameters() const { return dag.edge_parameters(); }
  std::vector<ad::Tensor> perm_parameters() const { return dag.perm_parameters(); }
  std::vector<ad::Tensor> all_parameters() const;

  Matrix encode(const Matrix& x) const;
  dag::LearnedGraph graph() const { return dag::export_graph(dag); }
};

void to_json(nlohmann::json& j, const LancaModel& m);
void from_json(const nlohmann::json& j, LancaModel& m);

struct StepLosses {
  objective::LossComponents parts;
  ad::Tensor total;
  ad::Tensor adjacency;
};

// One forward pass of the full objective on a batch. `prior` holds N(0, I)
// draws of the same shape as the latent batch.
StepLosses compute_losses(const LancaModel& model, const ad::Tensor& x, const ad::Tensor& prior,
                          const objective::LossWeights& weights, double gamma1_effective);

// Adam with per-group learning rates.
class Adam {
 public:
  struct Group {
    std::string name;
    std::vector<ad::Tensor> params;
    double lr = 0.0;
    std::vector<std::vector<double>> m, v;
  };

  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void add_group(std::string name, std::vector<ad::Tensor> params, double lr);
  // Throws std::runtime_error naming the group if any gradient is not finite.
  void step();
  void zero_grad();

  std::size_t steps() const { return step_; }
  const std::vector<Group>& groups() const { return groups_; }
  std::vector<Group>& groups() { return groups_; }

  nlohmann::json state() const;
  void load_state(const nlohmann::json& j);

 private:
  double beta1_, beta2_, eps_;
  std::size_t step_ = 0;
  std::vector<Group> groups_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double tau_edges = 0.0;
  double gamma1_effective = 0.0;
  double recon = 0.0;
  double indep = 0.0;
  double sparse = 0.0;
  double ent = 0.0;
  double total = 0.0;
  double val_total = 0.0;
  std::size_t n_edges = 0;
};

std::string history_csv_header();
std::string history_csv_row(const EpochRecord& r);

class Trainer {
 public:
  // `x` holds the whole training split; a val_fraction of it is held out.
  Trainer(LancaModel& model, Matrix x, TrainConfig config, objective::LossWeights weights);

  // Runs the next epoch. Throws EpochDivergence on a non-finite loss.
  EpochRecord run_epoch();
  // Runs until max_epochs or early stopping, then restores the best-validation
  // parameters (tracked once the schedule is stationary).
  std::vector<EpochRecord> fit(const std::function<void(const EpochRecord&)>& on_epoch = {});

  bool finished() const;
  std::size_t epoch() const { return epoch_; }
  const std::vector<EpochRecord>& history() const { return history_; }
  std::optional<double> best_val() const { return best_val_; }
  std::size_t best_epoch() const { return best_epoch_; }

  // Model, configs and every piece of loop state needed to resume.
  nlohmann::json checkpoint() const;
  // Restores model and loop state from checkpoint(); data is supplied again.
  static Trainer resume(LancaModel& model, Matrix x, const nlohmann::json& checkpoint);

 private:
  void split();
  double validation_total(double gamma1_effective) const;
  std::vector<double> snapshot() const;
  void restore(const std::vector<double>& values);

  LancaModel& model_;
  Matrix x_train_, x_val_;
  Matrix val_prior_;
  TrainConfig config_;
  objective::LossWeights weights_;
  Adam adam_;
  Rng rng_;
  std::size_t epoch_ = 0;
  std::vector<EpochRecord> history_;
  std::optional<double> best_val_;
  std::size_t best_epoch_ = 0;
  std::size_t since_improvement_ = 0;
  bool stopped_early_ = false;
  std::vector<double> best_snapshot_;
};

}  // namespace lanca::train
