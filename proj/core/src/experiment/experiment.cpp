#include "lanca/experiment/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "lanca/matrix_json.hpp"
#include "lanca/metrics/graph.hpp"
#include "lanca/metrics/information.hpp"

namespace lanca::experiment {

namespace {

constexpr std::uint64_t kMixerSalt = 0x9E3779B97F4A7C15ULL;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + " is empty");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad number '" +
                                 cell + "'");
      }
    }
    if (row.size() != t.header.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(t.header.size()) + " fields, got " +
                               std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Matrix row_block(const Matrix& m, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return m.select_rows(idx);
}

Matrix column_block(const CsvTable& t, std::size_t begin, std::size_t end) {
  Matrix out(t.rows.size(), end - begin);
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = t.rows[r][c];
  return out;
}

void write_split(const fs::path& path, const Matrix& x, const Matrix& s,
                 const std::vector<std::string>& factor_names) {
  std::vector<std::string> header;
  for (std::size_t c = 0; c < x.cols(); ++c) header.push_back("x" + std::to_string(c));
  for (const auto& name : factor_names) header.push_back("s_" + name);
  std::vector<std::vector<double>> rows(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    rows[r].assign(x.row(r).begin(), x.row(r).end());
    if (!s.empty()) rows[r].insert(rows[r].end(), s.row(r).begin(), s.row(r).end());
  }
  write_csv(path, header, rows);
}

}  // namespace

std::size_t GeneratorConfig::resolved_train() const {
  if (n_train > 0) return n_train;
  if (kind == "pendulum") return 5899;
  if (kind == "flow") return 6533;
  return 5000;
}

std::size_t GeneratorConfig::resolved_test() const {
  if (n_test > 0) return n_test;
  if (kind == "pendulum") return 1409;
  if (kind == "flow") return 1567;
  return 1000;
}

std::size_t GeneratorConfig::n_factors() const {
  return kind == "random_anm" ? anm_nodes : 4;
}

void ExperimentConfig::validate() const {
  if (generator.kind != "pendulum" && generator.kind != "flow" && generator.kind != "random_anm") {
    throw std::invalid_argument("generator.kind must be pendulum, flow or random_anm, got '" +
                                generator.kind + "'");
  }
  if (!(generator.eta >= 0.0)) throw std::invalid_argument("generator.eta must be >= 0");
  if (generator.kind == "random_anm" && (generator.anm_nodes < 2 || generator.anm_nodes > 16)) {
    throw std::invalid_argument("generator.anm_nodes must lie in [2, 16]");
  }
  if (!(generator.anm_edge_prob >= 0.0 && generator.anm_edge_prob <= 1.0)) {
    throw std::invalid_argument("generator.anm_edge_prob must lie in [0, 1]");
  }
  const auto mk = scm::mixer_kind_from_string(mixer.kind);
  if (mk == scm::MixerKind::kComponentwiseDistortion) {
    throw std::invalid_argument("mixer.kind componentwise_distortion is reserved for the verifiers");
  }
  if (mk != scm::MixerKind::kIdentity && mixer.output_dim < generator.n_factors()) {
    throw std::invalid_argument("mixer.output_dim must be >= the number of factors");
  }
  model.validate();
  weights.validate();
  train.validate();
  if (verify.n_samples < 10) throw std::invalid_argument("verify.n_samples must be >= 10");
  if (verify.distorted_factor > 1) throw std::invalid_argument("verify.distorted_factor must be 0 or 1");
  if (verify.shuffles == 0) throw std::invalid_argument("verify.shuffles must be >= 1");
  if (!(verify.alpha > 0.0 && verify.alpha < 1.0)) {
    throw std::invalid_argument("verify.alpha must lie in (0, 1)");
  }
  if (seeds.empty()) throw std::invalid_argument("seeds must not be empty");
  static const std::vector<std::string> metrics = {"mmi", "mig", "shd", "sid", "val"};
  if (std::find(metrics.begin(), metrics.end(), selection_metric) == metrics.end()) {
    throw std::invalid_argument("selection_metric must be one of mmi, mig, shd, sid, val");
  }
  if (!grid.is_object()) throw std::invalid_argument("grid must be an object");
  for (const auto& [key, values] : grid.items()) {
    if (!values.is_array() || values.empty()) {
      throw std::invalid_argument("grid entry '" + key + "' must be a non-empty list");
    }
  }
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{
      {"generator",
       {{"kind", c.generator.kind},
        {"n_train", c.generator.n_train},
        {"n_test", c.generator.n_test},
        {"eta", c.generator.eta},
        {"anm_nodes", c.generator.anm_nodes},
        {"anm_edge_prob", c.generator.anm_edge_prob}}},
      {"mixer", {{"kind", c.mixer.kind}, {"output_dim", c.mixer.output_dim}}},
      {"model", c.model},
      {"weights", c.weights},
      {"train", c.train},
      {"verify",
       {{"n_samples", c.verify.n_samples},
        {"psi", c.verify.psi},
        {"distorted_factor", c.verify.distorted_factor},
        {"shuffles", c.verify.shuffles},
        {"alpha", c.verify.alpha}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
      {"selection_metric", c.selection_metric},
      {"grid", c.grid}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  const ExperimentConfig d;
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  static const std::vector<std::string> known = {"generator", "mixer",      "model",
                                                 "weights",   "train",      "verify",
                                                 "seeds",     "output_dir", "selection_metric",
                                                 "grid"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument("unknown config section '" + key + "'");
    }
  }
  const auto g = j.value("generator", nlohmann::json::object());
  c.generator.kind = g.value("kind", d.generator.kind);
  c.generator.n_train = g.value("n_train", d.generator.n_train);
  c.generator.n_test = g.value("n_test", d.generator.n_test);
  c.generator.eta = g.value("eta", d.generator.eta);
  c.generator.anm_nodes = g.value("anm_nodes", d.generator.anm_nodes);
  c.generator.anm_edge_prob = g.value("anm_edge_prob", d.generator.anm_edge_prob);
  const auto m = j.value("mixer", nlohmann::json::object());
  c.mixer.kind = m.value("kind", d.mixer.kind);
  c.mixer.output_dim = m.value("output_dim", d.mixer.output_dim);
  c.model = j.value("model", nlohmann::json::object()).get<train::ModelConfig>();
  c.weights = j.value("weights", nlohmann::json::object()).get<objective::LossWeights>();
  c.train = j.value("train", nlohmann::json::object()).get<train::TrainConfig>();
  const auto v = j.value("verify", nlohmann::json::object());
  c.verify.n_samples = v.value("n_samples", d.verify.n_samples);
  c.verify.psi = v.value("psi", d.verify.psi);
  c.verify.distorted_factor = v.value("distorted_factor", d.verify.distorted_factor);
  c.verify.shuffles = v.value("shuffles", d.verify.shuffles);
  c.verify.alpha = v.value("alpha", d.verify.alpha);
  c.seeds = j.value("seeds", d.seeds);
  c.output_dir = j.value("output_dir", d.output_dir);
  c.selection_metric = j.value("selection_metric", d.selection_metric);
  c.grid = j.value("grid", d.grid);
}

ExperimentConfig load_config(const fs::path& path) {
  const ExperimentConfig c = read_json(path).get<ExperimentConfig>();
  c.validate();
  return c;
}

void save_config(const ExperimentConfig& config, const fs::path& path) {
  write_json(path, nlohmann::json(config));
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string text = nlohmann::json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string run_name(const ExperimentConfig& config, std::uint64_t seed) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(config)));
  return std::string(buf) + "-s" + std::to_string(seed);
}

Dataset generate_dataset(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const auto& g = config.generator;
  const std::size_t n_train = g.resolved_train(), n_test = g.resolved_test();
  const std::size_t total = n_train + n_test;
  const scm::MixerSpec mixer = scm::MixerSpec::make(scm::mixer_kind_from_string(config.mixer.kind),
                                                    g.n_factors(), config.mixer.output_dim,
                                                    seed ^ kMixerSalt);
  scm::Generated gen;
  if (g.kind == "pendulum") {
    gen = scm::gen_pendulum(total, g.eta, seed, mixer);
  } else if (g.kind == "flow") {
    gen = scm::gen_flow(total, g.eta, seed, mixer);
  } else {
    gen = scm::gen_random_anm(g.anm_nodes, g.anm_edge_prob, total, g.eta, seed, mixer);
  }
  Dataset d;
  d.x_train = row_block(gen.batch.x, 0, n_train);
  d.x_test = row_block(gen.batch.x, n_train, total);
  d.s_train = row_block(gen.batch.s, 0, n_train);
  d.s_test = row_block(gen.batch.s, n_train, total);
  d.scm = gen.scm;
  d.meta = {{"generator", g.kind},
            {"seed", seed},
            {"eta", g.eta},
            {"n_train", n_train},
            {"n_test", n_test},
            {"x_dim", gen.batch.x.cols()},
            {"factor_names", gen.scm.factor_names},
            {"scm", gen.scm},
            {"mixer", gen.mixer}};
  return d;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string text;
  for (std::size_t c = 0; c < header.size(); ++c) text += (c ? "," : "") + header[c];
  text += "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) text += (c ? "," : "") + format_double(row[c]);
    text += "\n";
  }
  write_text(path, text);
}

void write_dataset(const Dataset& data, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::string> names;
  if (data.meta.contains("factor_names")) {
    names = data.meta.at("factor_names").get<std::vector<std::string>>();
  }
  write_split(dir / "train.csv", data.x_train, data.s_train, names);
  write_split(dir / "test.csv", data.x_test, data.s_test, names);
  nlohmann::json meta = data.meta;
  meta["files"] = {{"train", "train.csv"}, {"test", "test.csv"}};
  write_json(dir / "dataset.json", meta);
}

Dataset read_dataset(const fs::path& dir) {
  Dataset d;
  d.meta = read_json(dir / "dataset.json");
  const auto x_dim = d.meta.at("x_dim").get<std::size_t>();
  std::size_t n_factors = 0;
  if (d.meta.contains("factor_names")) {
    n_factors = d.meta.at("factor_names").size();
  }
  if (d.meta.contains("scm")) d.scm = d.meta.at("scm").get<scm::GroundTruthSCM>();
  const auto load = [&](const char* name, Matrix& x, Matrix& s) {
    const CsvTable t = read_csv(dir / name);
    if (t.header.size() != x_dim + n_factors) {
      throw std::runtime_error(std::string(name) + ": expected " +
                               std::to_string(x_dim + n_factors) + " columns, got " +
                               std::to_string(t.header.size()));
    }
    x = column_block(t, 0, x_dim);
    if (n_factors > 0) s = column_block(t, x_dim, x_dim + n_factors);
  };
  load("train.csv", d.x_train, d.s_train);
  load("test.csv", d.x_test, d.s_test);
  return d;
}

TrainOutcome run_training(const ExperimentConfig& config, std::uint64_t seed, const Dataset& data,
                          const fs::path& run_dir, const std::optional<fs::path>& resume) {
  config.validate();
  if (data.x_train.empty()) throw std::invalid_argument("training split is empty");
  fs::create_directories(run_dir);

  train::TrainConfig tc = config.train;
  tc.seed = seed;
  train::LancaModel model;
  std::optional<train::Trainer> trainer;
  if (resume) {
    trainer.emplace(train::Trainer::resume(model, data.x_train, read_json(*resume)));
  } else {
    model = train::LancaModel::create(data.x_train.cols(), config.model, seed);
    trainer.emplace(model, data.x_train, tc, config.weights);
  }

  TrainOutcome out;
  const fs::path state_path = run_dir / "state.json";
  try {
    trainer->fit([&](const train::EpochRecord& r) {
      if (r.epoch % 10 == 9 || trainer->finished()) write_json(state_path, trainer->checkpoint());
    });
  } catch (const train::EpochDivergence& e) {
    out.diverged = true;
    out.message = e.what();
  }

  std::string history = train::history_csv_header() + "\n";
  for (const auto& r : trainer->history()) history += train::history_csv_row(r) + "\n";
  write_text(run_dir / "history.csv", history);

  out.epochs_run = trainer->history().size();
  out.best_epoch = trainer->best_epoch();
  out.best_val = trainer->best_val().value_or(std::numeric_limits<double>::quiet_NaN());
  if (out.diverged) return out;

  out.checkpoint = run_dir / "checkpoint.json";
  write_json(out.checkpoint, {{"model", model},
                              {"model_config", config.model},
                              {"train_config", tc},
                              {"weights", config.weights},
                              {"seed", seed},
                              {"best_epoch", out.best_epoch},
                              {"best_val", out.best_val},
                              {"epochs_run", out.epochs_run}});
  return out;
}

train::LancaModel load_model(const fs::path& checkpoint) {
  return read_json(checkpoint).at("model").get<train::LancaModel>();
}

GraphScores score_graph(const Matrix& a_true, const Matrix& a_est) {
  GraphScores g;
  g.shd = metrics::shd(a_true, a_est);
  if (dag::topological_order(a_est)) g.sid = metrics::sid(a_true, a_est);
  return g;
}

nlohmann::json evaluate(const train::LancaModel& model, const Dataset& data) {
  if (data.x_test.cols() != model.ae.input_dim()) {
    throw std::invalid_argument("evaluate: dataset has " + std::to_string(data.x_test.cols()) +
                                " columns, model expects " + std::to_string(model.ae.input_dim()));
  }
  nlohmann::json report;
  nlohmann::json skipped = nlohmann::json::array();
  const Matrix z = model.encode(data.x_test);
  const ad::Tensor zt = ad::Tensor::constant(z);
  const Matrix xhat = model.ae.decode(zt).to_matrix();
  double mse = 0.0;
  for (std::size_t k = 0; k < xhat.size(); ++k) {
    mse += std::pow(xhat.data()[k] - data.x_test.data()[k], 2);
  }
  report["n_test"] = data.x_test.rows();
  report["recon_mse"] = mse / static_cast<double>(xhat.size());
  const dag::LearnedGraph graph = model.graph();
  report["learned_graph"] = graph;

  if (data.s_test.empty()) {
    skipped.push_back("mi/mmi/mig/shd/sid: dataset has no ground-truth factors");
    report["skipped"] = skipped;
    return report;
  }
  if (z.cols() < data.s_test.cols()) {
    skipped.push_back("alignment: fewer latents than factors");
    report["skipped"] = skipped;
    return report;
  }
  const metrics::AlignmentResult al = metrics::align(z, data.s_test);
  const metrics::MigResult mg = metrics::mig(z, data.s_test);
  report["alignment"] = al;
  report["mmi"] = al.mmi;
  report["mig"] = mg.value;
  report["mig_excluded_factors"] = mg.excluded_factors;

  if (!data.scm) {
    skipped.push_back("shd/sid: dataset has no ground-truth graph");
  } else {
    const Matrix& truth = data.scm->adjacency;
    const Matrix aligned = metrics::relabel(graph.adjacency, al.latent_of_factor);
    const GraphScores scores = score_graph(truth, aligned);
    report["aligned_adjacency"] = aligned;
    report["shd"] = scores.shd;
    report["sid"] = scores.sid ? nlohmann::json(*scores.sid) : nlohmann::json();
    report["baselines"] = {{"empty_shd", metrics::shd(truth, Matrix(truth.rows(), truth.cols()))},
                           {"random_dag_shd", metrics::random_dag_shd(truth, 100, 0)}};
  }
  report["skipped"] = skipped;
  return report;
}

VerifyOutcome run_verify(const std::string& which, const ExperimentConfig& config,
                         std::uint64_t seed) {
  config.validate();
  metrics::IndependenceConfig test;
  test.shuffles = config.verify.shuffles;
  test.alpha = config.verify.alpha;
  test.seed = seed;
  VerifyOutcome out;
  if (which == "theorem1") {
    metrics::Theorem1Config tc;
    tc.n_samples = config.verify.n_samples;
    tc.seed = seed;
    tc.psi = config.verify.psi;
    tc.distorted_factor = config.verify.distorted_factor;
    tc.test = test;
    const auto r = metrics::verify_theorem1(tc);
    // Only a nonlinear distortion of the effect must break independence.
    const bool expect_independent = config.verify.psi[2] == 0.0 || tc.distorted_factor == 0;
    out.expected_pattern = r.residual_vs_parent.independent == expect_independent;
    out.report = r;
    out.report["expected"] = expect_independent ? "independent" : "dependent";
    out.report["observed"] = r.residual_vs_parent.independent ? "independent" : "dependent";
  } else if (which == "prop1") {
    metrics::Prop1Config pc;
    pc.n_samples = config.verify.n_samples;
    pc.seed = seed;
    pc.test = test;
    const auto r = metrics::verify_prop1(pc);
    out.expected_pattern = r.expected_pattern();
    out.report = r;
  } else {
    throw std::invalid_argument("unknown verifier '" + which + "' (expected theorem1 or prop1)");
  }
  out.report["verifier"] = which;
  out.report["seed"] = seed;
  return out;
}

std::vector<std::pair<nlohmann::json, ExperimentConfig>> expand_grid(const ExperimentConfig& base) {
  base.validate();
  nlohmann::json root = base;
  root["grid"] = nlohmann::json::object();
  std::vector<std::pair<std::string, nlohmann::json>> named;
  for (const auto& [key, values] : base.grid.items()) named.emplace_back(key, values);

  std::vector<std::pair<nlohmann::json, ExperimentConfig>> out;
  std::vector<std::size_t> pos(named.size(), 0);
  while (true) {
    nlohmann::json cfg = root;
    nlohmann::json overrides = nlohmann::json::object();
    for (std::size_t a = 0; a < named.size(); ++a) {
      const auto& [key, values] = named[a];
      std::string pointer = "/" + key;
      std::replace(pointer.begin(), pointer.end(), '.', '/');
      const nlohmann::json::json_pointer ptr(pointer);
      if (!cfg.contains(ptr)) throw std::invalid_argument("grid key '" + key + "' is not a config field");
      cfg[ptr] = values[pos[a]];
      overrides[key] = values[pos[a]];
    }
    ExperimentConfig c = cfg.get<ExperimentConfig>();
    c.validate();
    out.emplace_back(overrides, std::move(c));
    std::size_t a = 0;
    for (; a < named.size(); ++a) {
      if (++pos[a] < named[a].second.size()) break;
      pos[a] = 0;
    }
    if (a == named.size()) break;
  }
  return out;
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::string& metric) {
  ExperimentConfig checked = config;
  checked.selection_metric = metric;
  checked.validate();
  const auto points = expand_grid(checked);
  const fs::path root = config.output_dir;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<SweepRow> rows;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto& [overrides, cfg] = points[p];
    for (std::uint64_t seed : cfg.seeds) {
      SweepRow row;
      row.point = p;
      row.seed = std::to_string(seed);
      row.overrides = overrides;
      row.mmi = row.mig = row.shd = row.sid = row.best_val = nan;
      try {
        const Dataset data = generate_dataset(cfg, seed);
        const fs::path run_dir = root / run_name(cfg, seed);
        save_config(cfg, run_dir / "config.json");
        const TrainOutcome t = run_training(cfg, seed, data, run_dir);
        row.best_val = t.best_val;
        if (t.diverged) {
          row.status = "diverged: " + t.message;
        } else {
          const nlohmann::json report = evaluate(load_model(t.checkpoint), data);
          write_json(run_dir / "report.json", report);
          row.status = "ok";
          row.mmi = report.value("mmi", nan);
          row.mig = report.value("mig", nan);
          row.shd = report.contains("shd") ? report["shd"].get<double>() : nan;
          row.sid = report.contains("sid") && !report["sid"].is_null() ? report["sid"].get<double>() : nan;
        }
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      rows.push_back(std::move(row));
    }
  }

  const bool higher_better = metric == "mmi" || metric == "mig";
  auto pick = [&](const SweepRow& r) {
    if (metric == "mmi") return r.mmi;
    if (metric == "mig") return r.mig;
    if (metric == "shd") return r.shd;
    if (metric == "sid") return r.sid;
    return r.best_val;
  };
  std::vector<SweepRow> summaries;
  for (std::size_t p = 0; p < points.size(); ++p) {
    SweepRow s;
    s.point = p;
    s.seed = "summary";
    s.overrides = points[p].first;
    std::vector<double> mmi, mig, shd, sid, val;
    std::size_t ok = 0, total = 0;
    for (const auto& r : rows) {
      if (r.point != p) continue;
      ++total;
      if (r.status != "ok") continue;
      ++ok;
      mmi.push_back(r.mmi);
      mig.push_back(r.mig);
      if (!std::isnan(r.shd)) shd.push_back(r.shd);
      if (!std::isnan(r.sid)) sid.push_back(r.sid);
      val.push_back(r.best_val);
    }
    auto mean = [&](const std::vector<double>& v) {
      return v.empty() ? nan : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    s.mmi = mean(mmi), s.mig = mean(mig), s.shd = mean(shd), s.sid = mean(sid), s.best_val = mean(val);
    s.mmi_std = sample_std(mmi), s.mig_std = sample_std(mig), s.shd_std = sample_std(shd);
    s.sid_std = sample_std(sid), s.best_val_std = sample_std(val);
    s.status = std::to_string(ok) + "/" + std::to_string(total) + " ok";
    summaries.push_back(std::move(s));
  }
  std::stable_sort(summaries.begin(), summaries.end(), [&](const SweepRow& a, const SweepRow& b) {
    const double va = pick(a), vb = pick(b);
    if (std::isnan(va) != std::isnan(vb)) return std::isnan(vb);
    if (std::isnan(va)) return false;
    return higher_better ? va > vb : va < vb;
  });
  for (std::size_t k = 0; k < summaries.size(); ++k) summaries[k].rank = k + 1;
  rows.insert(rows.end(), summaries.begin(), summaries.end());

  std::string text =
      "point,seed,status,mmi,mig,shd,sid,best_val,mmi_std,mig_std,shd_std,sid_std,best_val_std,"
      "rank,overrides\n";
  for (const auto& r : rows) {
    text += std::to_string(r.point) + "," + r.seed + "," + csv_quote(r.status);
    for (double v : {r.mmi, r.mig, r.shd, r.sid, r.best_val, r.mmi_std, r.mig_std, r.shd_std,
                     r.sid_std, r.best_val_std}) {
      text += "," + format_double(v);
    }
    text += "," + (r.rank ? std::to_string(r.rank) : std::string()) + "," + csv_quote(r.overrides.dump());
    text += "\n";
  }
  write_text(root / "sweep.csv", text);
  return rows;
}

}  // namespace lanca::experiment
