#include "lanca/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "lanca/matrix_json.hpp"

namespace lanca::train {

namespace {

constexpr std::uint64_t kInitStream = 5;
constexpr std::uint64_t kSplitStream = 11;
constexpr std::uint64_t kValPriorStream = 12;
constexpr std::uint64_t kLoopStream = 13;

Matrix normal_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  return Matrix(rows, cols, normal_vector(rng, rows * cols));
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return m.select_rows(idx);
}

void require_positive_lr(double lr, const char* name) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw std::invalid_argument(std::string("TrainConfig: ") + name + " must be >= 0");
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (latent_dim == 0) throw std::invalid_argument("ModelConfig: latent_dim must be >= 1");
  if (mech_layers > 0 && mech_hidden == 0) {
    throw std::invalid_argument("ModelConfig: mech_hidden must be >= 1");
  }
  if (!(tau_perm > 0.0)) throw std::invalid_argument("ModelConfig: tau_perm must be > 0");
  if (!(perm_score_std >= 0.0) || !(edge_logit_std >= 0.0)) {
    throw std::invalid_argument("ModelConfig: init std must be >= 0");
  }
}

void TrainConfig::validate() const {
  require_positive_lr(lr_main, "lr_main");
  require_positive_lr(lr_edge, "lr_edge");
  require_positive_lr(lr_perm, "lr_perm");
  if (!(tau_edges_end > 0.0) || !(tau_edges_start >= tau_edges_end)) {
    throw std::invalid_argument("TrainConfig: need tau_edges_start >= tau_edges_end > 0");
  }
  if (!(anneal_fraction > 0.0 && anneal_fraction <= 1.0)) {
    throw std::invalid_argument("TrainConfig: anneal_fraction must lie in (0, 1]");
  }
  if (max_epochs == 0) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  if (warmup_epochs >= max_epochs) {
    throw std::invalid_argument("TrainConfig: warmup_epochs (" + std::to_string(warmup_epochs) +
                                ") must be < max_epochs (" + std::to_string(max_epochs) + ")");
  }
  if (!(sparsity_delay >= 0.0 && sparsity_delay < 1.0)) {
    throw std::invalid_argument("TrainConfig: sparsity_delay must lie in [0, 1)");
  }
  if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("TrainConfig: val_fraction must lie in [0, 1)");
  }
}

std::size_t TrainConfig::anneal_epochs() const {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(anneal_fraction * static_cast<double>(max_epochs))));
}

double TrainConfig::warmup_end() const {
  return static_cast<double>(warmup_epochs) + sparsity_delay * static_cast<double>(max_epochs);
}

std::size_t TrainConfig::stationary_epoch() const {
  return std::max(anneal_epochs(), static_cast<std::size_t>(std::ceil(warmup_end())));
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"latent_dim", c.latent_dim},
                     {"hidden", c.hidden},
                     {"ae_activation", ad::to_string(c.ae_activation)},
                     {"mech_hidden", c.mech_hidden},
                     {"mech_layers", c.mech_layers},
                     {"mech_activation", ad::to_string(c.mech_activation)},
                     {"tau_perm", c.tau_perm},
                     {"perm_score_std", c.perm_score_std},
                     {"edge_logit_mean", c.edge_logit_mean},
                     {"edge_logit_std", c.edge_logit_std}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  const ModelConfig d;
  c.latent_dim = j.value("latent_dim", d.latent_dim);
  c.hidden = j.value("hidden", d.hidden);
  c.ae_activation =
      ad::activation_from_string(j.value("ae_activation", ad::to_string(d.ae_activation)));
  c.mech_hidden = j.value("mech_hidden", d.mech_hidden);
  c.mech_layers = j.value("mech_layers", d.mech_layers);
  c.mech_activation =
      ad::activation_from_string(j.value("mech_activation", ad::to_string(d.mech_activation)));
  c.tau_perm = j.value("tau_perm", d.tau_perm);
  c.perm_score_std = j.value("perm_score_std", d.perm_score_std);
  c.edge_logit_mean = j.value("edge_logit_mean", d.edge_logit_mean);
  c.edge_logit_std = j.value("edge_logit_std", d.edge_logit_std);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lr_main", c.lr_main},
                     {"lr_edge", c.lr_edge},
                     {"lr_perm", c.lr_perm},
                     {"tau_edges_start", c.tau_edges_start},
                     {"tau_edges_end", c.tau_edges_end},
                     {"anneal_fraction", c.anneal_fraction},
                     {"warmup_epochs", c.warmup_epochs},
                     {"sparsity_delay", c.sparsity_delay},
                     {"max_epochs", c.max_epochs},
                     {"patience", c.patience},
                     {"batch_size", c.batch_size},
                     {"val_fraction", c.val_fraction},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.lr_main = j.value("lr_main", d.lr_main);
  c.lr_edge = j.value("lr_edge", d.lr_edge);
  c.lr_perm = j.value("lr_perm", d.lr_perm);
  c.tau_edges_start = j.value("tau_edges_start", d.tau_edges_start);
  c.tau_edges_end = j.value("tau_edges_end", d.tau_edges_end);
  c.anneal_fraction = j.value("anneal_fraction", d.anneal_fraction);
  c.warmup_epochs = j.value("warmup_epochs", d.warmup_epochs);
  c.sparsity_delay = j.value("sparsity_delay", d.sparsity_delay);
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.patience = j.value("patience", d.patience);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.val_fraction = j.value("val_fraction", d.val_fraction);
  c.seed = j.value("seed", d.seed);
}

EpochDivergence::EpochDivergence(const objective::DivergenceError& cause, std::size_t epoch)
    : objective::DivergenceError(cause),
      epoch_(epoch),
      message_("epoch " + std::to_string(epoch) + ": " + cause.what()) {}

ScheduleValues schedule(std::size_t epoch, const TrainConfig& config, double gamma1) {
  const std::size_t horizon = config.anneal_epochs();
  double tau = config.tau_edges_end;
  if (epoch < horizon) {
    const double frac = static_cast<double>(epoch) / static_cast<double>(horizon);
    tau = config.tau_edges_start * std::pow(config.tau_edges_end / config.tau_edges_start, frac);
  }
  const double g = static_cast<double>(epoch) < config.warmup_end() ? 0.0 : gamma1;
  return {tau, g};
}

LancaModel LancaModel::create(std::size_t input_dim, const ModelConfig& config,
                              std::uint64_t seed) {
  config.validate();
  Rng rng = derive_rng(seed, kInitStream);
  LancaModel m;
  m.ae = objective::Autoencoder(input_dim, config.latent_dim, config.hidden, config.ae_activation,
                                rng);
  m.mechanisms = anm::MechanismSet(config.latent_dim, config.mech_hidden, config.mech_activation,
                                   rng, config.mech_layers);
  m.dag = dag::DagParams::init(config.latent_dim, rng, config.tau_perm, 1.0,
                               config.perm_score_std, config.edge_logit_mean,
                               config.edge_logit_std);
  return m;
}

std::vector<ad::Tensor> LancaModel::main_parameters() const {
  auto out = ae.parameters();
  auto mech = mechanisms.parameters();
  out.insert(out.end(), mech.begin(), mech.end());
  return out;
}

std::vector<ad::Tensor> LancaModel::all_parameters() const {
  auto out = main_parameters();
  out.push_back(dag.edge_logits);
  out.push_back(dag.perm_scores);
  return out;
}

Matrix LancaModel::encode(const Matrix& x) const {
  return ae.encode(ad::Tensor::constant(x)).to_matrix();
}

void to_json(nlohmann::json& j, const LancaModel& m) {
  j = nlohmann::json{{"autoencoder", m.ae}, {"mechanisms", m.mechanisms}, {"dag", m.dag}};
}

void from_json(const nlohmann::json& j, LancaModel& m) {
  j.at("autoencoder").get_to(m.ae);
  j.at("mechanisms").get_to(m.mechanisms);
  dag::from_json(j.at("dag"), m.dag);
  if (m.mechanisms.n_nodes() != m.ae.latent_dim() || m.dag.n_nodes() != m.ae.latent_dim()) {
    throw std::invalid_argument("LancaModel: component latent dimensions disagree");
  }
}

StepLosses compute_losses(const LancaModel& model, const ad::Tensor& x, const ad::Tensor& prior,
                          const objective::LossWeights& weights, double gamma1_effective) {
  const ad::Tensor z = model.ae.encode(x);
  const dag::DagState state = dag::forward(model.dag, true);
  const ad::Tensor eps = anm::abduct(z, model.mechanisms.predict(z, state.adjacency));
  const ad::Tensor z_scm = model.mechanisms.regenerate(eps, state.adjacency, z);
  const auto bw = weights.resolved_bandwidths(z.cols());

  objective::LossComponents parts;
  parts.recon = objective::recon_loss(x, z, z_scm, model.ae, weights.lambda_scm);
  parts.indep = objective::mmd_loss(eps, prior, weights.kernel, bw);
  parts.sparse = dag::sparsity_loss(state.edges_soft, weights.sparsity_prior);
  parts.ent = dag::permutation_entropy(state.perm_soft);
  ad::Tensor total = objective::total_loss(parts, weights, gamma1_effective);
  return {parts, total, state.adjacency};
}

Adam::Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::add_group(std::string name, std::vector<ad::Tensor> params, double lr) {
  Group g;
  g.name = std::move(name);
  g.lr = lr;
  for (const auto& p : params) {
    if (!p.requires_grad()) {
      throw std::invalid_argument("Adam: group '" + g.name + "' holds a non-parameter tensor");
    }
    for (const auto& other : groups_)
      for (const auto& q : other.params)
        if (q.node() == p.node()) {
          throw std::invalid_argument("Adam: parameter shared between groups '" + other.name +
                                      "' and '" + g.name + "'");
        }
    g.m.emplace_back(p.size(), 0.0);
    g.v.emplace_back(p.size(), 0.0);
  }
  g.params = std::move(params);
  groups_.push_back(std::move(g));
}

void Adam::zero_grad() {
  for (auto& g : groups_)
    for (auto& p : g.params) p.zero_grad();
}

void Adam::step() {
  for (const auto& g : groups_)
    for (const auto& p : g.params) {
      if (!p.has_grad()) continue;
      for (double d : p.grad())
        if (!std::isfinite(d)) {
          throw std::runtime_error("non-finite gradient in parameter group '" + g.name + "'");
        }
    }
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  for (auto& g : groups_) {
    for (std::size_t k = 0; k < g.params.size(); ++k) {
      auto& p = g.params[k];
      if (!p.has_grad()) continue;
      auto grad = p.grad();
      auto value = p.mutable_values();
      auto& m = g.m[k];
      auto& v = g.v[k];
      for (std::size_t i = 0; i < value.size(); ++i) {
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
        if (g.lr == 0.0) continue;
        value[i] -= g.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      }
    }
  }
}

nlohmann::json Adam::state() const {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : groups_) {
    groups.push_back({{"name", g.name}, {"lr", g.lr}, {"m", g.m}, {"v", g.v}});
  }
  return {{"step", step_}, {"groups", groups}};
}

void Adam::load_state(const nlohmann::json& j) {
  const auto& groups = j.at("groups");
  if (groups.size() != groups_.size()) throw std::invalid_argument("Adam: group count mismatch");
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    auto& g = groups_[i];
    if (groups[i].at("name").get<std::string>() != g.name) {
      throw std::invalid_argument("Adam: group name mismatch for '" + g.name + "'");
    }
    auto m = groups[i].at("m").get<std::vector<std::vector<double>>>();
    auto v = groups[i].at("v").get<std::vector<std::vector<double>>>();
    if (m.size() != g.params.size() || v.size() != g.params.size()) {
      throw std::invalid_argument("Adam: moment count mismatch in group '" + g.name + "'");
    }
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (m[k].size() != g.params[k].size() || v[k].size() != g.params[k].size()) {
        throw std::invalid_argument("Adam: moment shape mismatch in group '" + g.name + "'");
      }
    }
    g.m = std::move(m);
    g.v = std::move(v);
  }
  step_ = j.at("step").get<std::size_t>();
}

std::string history_csv_header() {
  return "epoch,tau_edges,gamma1_eff,L_recon,L_indep,L_sparse,L_ent,total,val_total,n_edges";
}

std::string history_csv_row(const EpochRecord& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.epoch << ',' << r.tau_edges << ',' << r.gamma1_effective << ',' << r.recon << ','
     << r.indep << ',' << r.sparse << ',' << r.ent << ',' << r.total << ',' << r.val_total << ','
     << r.n_edges;
  return os.str();
}

namespace {

nlohmann::json record_to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},   {"tau_edges", r.tau_edges}, {"gamma1_eff", r.gamma1_effective},
          {"recon", r.recon},   {"indep", r.indep},         {"sparse", r.sparse},
          {"ent", r.ent},       {"total", r.total},         {"val_total", r.val_total},
          {"n_edges", r.n_edges}};
}

EpochRecord record_from_json(const nlohmann::json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.tau_edges = j.at("tau_edges").get<double>();
  r.gamma1_effective = j.at("gamma1_eff").get<double>();
  r.recon = j.at("recon").get<double>();
  r.indep = j.at("indep").get<double>();
  r.sparse = j.at("sparse").get<double>();
  r.ent = j.at("ent").get<double>();
  r.total = j.at("total").get<double>();
  r.val_total = j.at("val_total").get<double>();
  r.n_edges = j.at("n_edges").get<std::size_t>();
  return r;
}

}  // namespace

Trainer::Trainer(LancaModel& model, Matrix x, TrainConfig config, objective::LossWeights weights)
    : model_(model),
      config_(config),
      weights_(std::move(weights)),
      rng_(derive_rng(config.seed, kLoopStream)) {
  config_.validate();
  weights_.validate();
  if (x.cols() != model_.ae.input_dim()) {
    throw std::invalid_argument("Trainer: data has " + std::to_string(x.cols()) +
                                " columns, model expects " +
                                std::to_string(model_.ae.input_dim()));
  }
  x_train_ = std::move(x);
  split();
  adam_.add_group("main", model_.main_parameters(), config_.lr_main);
  adam_.add_group("edge", model_.edge_parameters(), config_.lr_edge);
  adam_.add_group("perm", model_.perm_parameters(), config_.lr_perm);
}

void Trainer::split() {
  const std::size_t n = x_train_.rows();
  std::size_t n_val = 0;
  if (config_.val_fraction > 0.0) {
    n_val = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(config_.val_fraction * static_cast<double>(n))));
  }
  if (n < n_val + 2) {
    throw std::invalid_argument("Trainer: " + std::to_string(n) +
                                " rows are too few for a training split");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng split_rng = derive_rng(config_.seed, kSplitStream);
  std::shuffle(idx.begin(), idx.end(), split_rng);
  const std::span<const std::size_t> all(idx);
  Matrix data = std::move(x_train_);
  x_val_ = data.select_rows(all.first(n_val));
  x_train_ = data.select_rows(all.subspan(n_val));
  Rng prior_rng = derive_rng(config_.seed, kValPriorStream);
  val_prior_ = normal_matrix(prior_rng, n_val, model_.ae.latent_dim());
}

double Trainer::validation_total(double gamma1_effective) const {
  const std::size_t n = x_val_.rows();
  const std::size_t chunks = std::max<std::size_t>(1, n / config_.batch_size);
  double total = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t b = c * n / chunks, e = (c + 1) * n / chunks;
    const StepLosses l = compute_losses(model_, ad::Tensor::constant(slice_rows(x_val_, b, e)),
                                        ad::Tensor::constant(slice_rows(val_prior_, b, e)),
                                        weights_, gamma1_effective);
    total += l.total.item();
  }
  return total / static_cast<double>(chunks);
}

bool Trainer::finished() const { return stopped_early_ || epoch_ >= config_.max_epochs; }

EpochRecord Trainer::run_epoch() {
  if (finished()) throw std::logic_error("Trainer: training already finished");
  const ScheduleValues sched = schedule(epoch_, config_, weights_.gamma1);
  model_.dag.tau_edges = sched.tau_edges;

  const std::size_t n = x_train_.rows();
  const std::size_t latent = model_.ae.latent_dim();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng_);

  EpochRecord rec;
  rec.epoch = epoch_;
  rec.tau_edges = sched.tau_edges;
  rec.gamma1_effective = sched.gamma1_effective;
  std::size_t batches = 0;
  try {
    for (std::size_t b = 0; b < n; b += config_.batch_size) {
      const std::size_t e = std::min(n, b + config_.batch_size);
      if (e - b < 2) break;
      const std::span<const std::size_t> rows(idx.data() + b, e - b);
      const ad::Tensor x = ad::Tensor::constant(x_train_.select_rows(rows));
      const ad::Tensor prior = ad::Tensor::constant(normal_matrix(rng_, e - b, latent));
      const StepLosses l = compute_losses(model_, x, prior, weights_, sched.gamma1_effective);
      adam_.zero_grad();
      ad::backward(l.total);
      adam_.step();
      rec.recon += l.parts.recon.item();
      rec.indep += l.parts.indep.item();
      rec.sparse += l.parts.sparse.item();
      rec.ent += l.parts.ent.item();
      rec.total += l.total.item();
      ++batches;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    rec.recon *= inv;
    rec.indep *= inv;
    rec.sparse *= inv;
    rec.ent *= inv;
    rec.total *= inv;
    rec.val_total = x_val_.rows() > 0 ? validation_total(sched.gamma1_effective) : rec.total;
    if (!std::isfinite(rec.val_total)) throw objective::DivergenceError("val_total", rec.val_total);
  } catch (const EpochDivergence&) {
    throw;
  } catch (const objective::DivergenceError& err) {
    throw EpochDivergence(err, epoch_);
  }

  const Matrix adj = model_.graph().adjacency;
  rec.n_edges = static_cast<std::size_t>(
      std::count_if(adj.data().begin(), adj.data().end(), [](double v) { return v != 0.0; }));

  // Model selection only compares epochs run under the final schedule.
  const std::size_t track_from = std::min(config_.stationary_epoch(), config_.max_epochs - 1);
  if (epoch_ >= track_from) {
    if (!best_val_ || rec.val_total < *best_val_) {
      best_val_ = rec.val_total;
      best_epoch_ = epoch_;
      best_snapshot_ = snapshot();
      since_improvement_ = 0;
    } else if (++since_improvement_ >= config_.patience) {
      stopped_early_ = true;
    }
  }
  history_.push_back(rec);
  ++epoch_;
  return rec;
}

std::vector<EpochRecord> Trainer::fit(const std::function<void(const EpochRecord&)>& on_epoch) {
  while (!finished()) {
    const EpochRecord rec = run_epoch();
    if (on_epoch) on_epoch(rec);
  }
  if (!best_snapshot_.empty()) restore(best_snapshot_);
  return history_;
}

std::vector<double> Trainer::snapshot() const {
  std::vector<double> out;
  for (const auto& p : model_.all_parameters()) {
    auto v = p.values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

void Trainer::restore(const std::vector<double>& values) {
  std::size_t off = 0;
  for (auto p : model_.all_parameters()) {
    auto v = p.mutable_values();
    if (off + v.size() > values.size()) throw std::invalid_argument("Trainer: snapshot too short");
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(off), v.size(), v.begin());
    off += v.size();
  }
  if (off != values.size()) throw std::invalid_argument("Trainer: snapshot size mismatch");
}

nlohmann::json Trainer::checkpoint() const {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& r : history_) hist.push_back(record_to_json(r));
  nlohmann::json state{{"epoch", epoch_},
                       {"rng", rng_state(rng_)},
                       {"adam", adam_.state()},
                       {"history", hist},
                       {"best_val", best_val_ ? nlohmann::json(*best_val_) : nlohmann::json()},
                       {"best_epoch", best_epoch_},
                       {"since_improvement", since_improvement_},
                       {"stopped_early", stopped_early_},
                       {"best_snapshot", best_snapshot_}};
  return {{"model", model_},
          {"train_config", config_},
          {"weights", weights_},
          {"state", state}};
}

Trainer Trainer::resume(LancaModel& model, Matrix x, const nlohmann::json& checkpoint) {
  model = checkpoint.at("model").get<LancaModel>();
  Trainer t(model, std::move(x), checkpoint.at("train_config").get<TrainConfig>(),
            checkpoint.at("weights").get<objective::LossWeights>());
  const auto& s = checkpoint.at("state");
  t.epoch_ = s.at("epoch").get<std::size_t>();
  restore_rng_state(t.rng_, s.at("rng").get<std::string>());
  t.adam_.load_state(s.at("adam"));
  for (const auto& r : s.at("history")) t.history_.push_back(record_from_json(r));
  if (!s.at("best_val").is_null()) t.best_val_ = s.at("best_val").get<double>();
  t.best_epoch_ = s.at("best_epoch").get<std::size_t>();
  t.since_improvement_ = s.at("since_improvement").get<std::size_t>();
  t.stopped_early_ = s.at("stopped_early").get<bool>();
  t.best_snapshot_ = s.at("best_snapshot").get<std::vector<double>>();
  if (t.epoch_ > 0) model.dag.tau_edges = schedule(t.epoch_ - 1, t.config_, 0.0).tau_edges;
  return t;
}

}  // namespace lanca::train
