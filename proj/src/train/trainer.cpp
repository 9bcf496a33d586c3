// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/train/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "tlsqkt/common/hash.hpp"
#include "tlsqkt/common/random.hpp"
#include "tlsqkt/train/metrics.hpp"

namespace tlsqkt::train {
namespace {

using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

template <class T> T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || value.empty()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, ptr);
}

const std::vector<std::string>& TrainConfig::keys() {
  static const std::vector<std::string> k = {
      "adam_eps",   "batch_size", "beta1",       "beta2",      "data_path",   "dropout",
      "embed_dim",  "hidden_dim", "learning_rate", "max_epochs", "max_seq_len", "model_dim",
      "n_heads",    "patience",   "seed",        "split_seed", "subsample",   "train_ratio",
      "train_share", "variant"};
  return k;
}

void TrainConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  auto i64 = [&] { return parse_number<std::int64_t>(key, value); };
  auto u64 = [&] { return parse_number<std::uint64_t>(key, value); };
  auto f64 = [&] { return parse_number<double>(key, value); };
  if (key == "variant") {
    try {
      variant = model::parse_variant(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "max_seq_len") max_seq_len = i64();
  else if (key == "embed_dim") embed_dim = i64();
  else if (key == "hidden_dim") hidden_dim = i64();
  else if (key == "model_dim") model_dim = i64();
  else if (key == "n_heads") n_heads = i64();
  else if (key == "batch_size") batch_size = i64();
  else if (key == "learning_rate") learning_rate = f64();
  else if (key == "beta1") beta1 = f64();
  else if (key == "beta2") beta2 = f64();
  else if (key == "adam_eps") adam_eps = f64();
  else if (key == "dropout") dropout = f64();
  else if (key == "patience") patience = i64();
  else if (key == "max_epochs") max_epochs = i64();
  else if (key == "seed") seed = u64();
  else if (key == "split_seed") split_seed = u64();
  else if (key == "train_ratio") train_ratio = f64();
  else if (key == "train_share") train_share = f64();
  else if (key == "subsample") subsample = i64();
  else if (key == "data_path") data_path = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

void TrainConfig::validate() const {
  auto at_least = [](std::int64_t v, std::int64_t lo, const char* name) {
    if (v < lo) throw ConfigError(std::string(name) + " must be >= " + std::to_string(lo));
  };
  at_least(max_seq_len, 2, "max_seq_len");
  at_least(embed_dim, 1, "embed_dim");
  at_least(hidden_dim, 1, "hidden_dim");
  at_least(model_dim, 1, "model_dim");
  at_least(n_heads, 1, "n_heads");
  at_least(batch_size, 1, "batch_size");
  at_least(patience, 1, "patience");
  at_least(max_epochs, 1, "max_epochs");
  at_least(subsample, 0, "subsample");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("train_ratio must be in (0, 1)");
  if (!(train_share > 0.0 && train_share < 1.0)) throw ConfigError("train_share must be in (0, 1)");
  if (model_dim != hidden_dim) throw ConfigError("model_dim must equal hidden_dim");
  if (model_dim % n_heads != 0) throw ConfigError("model_dim must be divisible by n_heads");
}

ConfigMap TrainConfig::to_map() const {
  return {
      {"adam_eps", format_double(adam_eps)},
      {"batch_size", std::to_string(batch_size)},
      {"beta1", format_double(beta1)},
      {"beta2", format_double(beta2)},
      {"data_path", data_path},
      {"dropout", format_double(dropout)},
      {"embed_dim", std::to_string(embed_dim)},
      {"hidden_dim", std::to_string(hidden_dim)},
      {"learning_rate", format_double(learning_rate)},
      {"max_epochs", std::to_string(max_epochs)},
      {"max_seq_len", std::to_string(max_seq_len)},
      {"model_dim", std::to_string(model_dim)},
      {"n_heads", std::to_string(n_heads)},
      {"patience", std::to_string(patience)},
      {"seed", std::to_string(seed)},
      {"split_seed", std::to_string(split_seed)},
      {"subsample", std::to_string(subsample)},
      {"train_ratio", format_double(train_ratio)},
      {"train_share", format_double(train_share)},
      {"variant", model::to_string(variant)},
  };
}

TrainConfig TrainConfig::from_map(const ConfigMap& values) {
  TrainConfig c;
  for (const auto& [k, v] : values) c.set(k, v);
  return c;
}

model::ModelDims TrainConfig::dims_for(const data::Dataset& dataset) const {
  model::ModelDims d;
  d.n_questions = dataset.questions.size();
  d.n_kcs = dataset.kcs.size();
  d.n_literacy = dataset.n_literacy_ids();
  d.max_seq_len = max_seq_len;
  d.embed_dim = embed_dim;
  d.hidden_dim = hidden_dim;
  d.model_dim = model_dim;
  d.n_heads = n_heads;
  return d;
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::string config_hash(const ConfigMap& config) {
  std::string text;
  for (const auto& [k, v] : config) text += k + "=" + v + "\n";
  return git_blob_hash(text);
}

EarlyStopping::EarlyStopping(std::int64_t patience) : patience_(patience) {
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

bool EarlyStopping::update(std::int64_t epoch, double metric) {
  if (best_epoch_ == 0 || metric > best_) {
    best_ = metric;
    best_epoch_ = epoch;
    epochs_since_best_ = 0;
    return true;
  }
  ++epochs_since_best_;
  return false;
}

TrainingDiverged::TrainingDiverged(std::int64_t e, std::int64_t b, double g, double l)
    : std::runtime_error("training diverged at epoch " + std::to_string(e) + ", batch " +
                         std::to_string(b) + ": loss " + format_double(l) + ", grad norm " +
                         format_double(g)),
      epoch(e),
      batch(b),
      grad_norm(g),
      loss(l) {}

EvalResult evaluate(const model::Model& model, const std::vector<data::Batch>& batches) {
  std::vector<double> scores;
  std::vector<std::int32_t> labels;
  double loss_sum = 0.0;
  for (const data::Batch& batch : batches) {
    ad::Tape tape(false);
    const ad::Tensor probs = model::forward(tape, model, batch).probs;
    const ad::Vector& p = probs.data();
    for (std::size_t i = 0; i < batch.valid_mask.size(); ++i) {
      if (!batch.valid_mask[i]) continue;
      const double q = p[static_cast<ad::Index>(i)];
      scores.push_back(q);
      labels.push_back(static_cast<std::int32_t>(batch.targets[i]));
      const double c = std::clamp(q, 1e-7, 1.0 - 1e-7);
      loss_sum -= batch.targets[i] * std::log(c) + (1.0 - batch.targets[i]) * std::log(1.0 - c);
    }
  }
  if (scores.empty()) throw std::runtime_error("evaluate: no prediction positions");
  EvalResult r;
  r.auc = auc(scores, labels);
  r.acc = accuracy(scores, labels);
  r.predictions = static_cast<std::int64_t>(scores.size());
  r.loss = loss_sum / static_cast<double>(scores.size());
  return r;
}

data::Dataset apply_subsample(const TrainConfig& config, const data::Dataset& dataset) {
  if (config.subsample > 0) {
    return data::subsample_students(dataset, static_cast<std::size_t>(config.subsample),
                                    config.split_seed);
  }
  return dataset;
}

Splits prepare_splits(const TrainConfig& config, const data::Dataset& dataset) {
  Splits s;
  s.indices = data::split_students(dataset.sequences, config.train_ratio, config.split_seed,
                                   config.train_share);
  s.train = data::select_sequences(dataset, s.indices.train);
  s.validation = data::select_sequences(dataset, s.indices.validation);
  s.test = data::select_sequences(dataset, s.indices.test);
  return s;
}

TrainResult train(const TrainConfig& config, const data::Dataset& input, const EpochCallback& on_epoch) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  const data::Dataset dataset = apply_subsample(config, input);
  const Splits splits = prepare_splits(config, dataset);

  model::Model model = model::Model::create(config.variant, config.dims_for(dataset), config.seed);
  std::vector<data::Window> windows =
      data::trainable_windows(data::make_windows(splits.train.sequences, config.max_seq_len));
  if (windows.empty()) throw std::runtime_error("training split has no windows with a prediction");
  const auto val_batches = data::window_and_pad(splits.validation, config.max_seq_len, config.batch_size);
  const auto test_batches = data::window_and_pad(splits.test, config.max_seq_len, config.batch_size);

  auto shuffle_rng = make_stream(config.seed, "shuffle");
  auto dropout_rng = make_stream(config.seed, "dropout");
  const nn::ForwardContext ctx{true, config.dropout, &dropout_rng};
  const std::vector<ad::Parameter*> params = model.parameters();
  const AdamConfig adam = config.adam();
  AdamState state;

  RunReport report;
  report.variant = model::to_string(config.variant);
  report.n_parameters = model.parameter_count();
  report.n_train_students = static_cast<std::int64_t>(splits.train.sequences.size());
  report.n_validation_students = static_cast<std::int64_t>(splits.validation.sequences.size());
  report.n_test_students = static_cast<std::int64_t>(splits.test.sequences.size());
  report.config = config.to_map();
  report.config_hash = config_hash(report.config);

  EarlyStopping stopper(config.patience);
  model::Model best = model;
  std::vector<ad::Vector> grads(params.size());
  const auto B = static_cast<std::size_t>(config.batch_size);

  for (std::int64_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = windows.size(); i > 1; --i) {
      std::swap(windows[i - 1], windows[uniform_below(shuffle_rng, i)]);
    }
    double loss_sum = 0.0;
    double count = 0.0;
    std::int64_t batch_index = 0;
    for (std::size_t start = 0; start < windows.size(); start += B, ++batch_index) {
      const std::size_t n = std::min(B, windows.size() - start);
      const data::Batch batch =
          data::collate(splits.train, std::span<const data::Window>(windows.data() + start, n));
      ad::Tape tape;
      const model::TraceOutput out = model::forward(tape, model, batch, ctx);
      const ad::Tensor loss = bce_loss_masked(out.probs, batch.targets, batch.valid_mask);
      tape.backward(loss);
      double sq = 0.0;
      for (std::size_t k = 0; k < params.size(); ++k) {
        grads[k] = tape.gradient(*params[k]);
        sq += grads[k].squaredNorm();
      }
      const double value = loss.item();
      if (!std::isfinite(value) || !std::isfinite(sq)) {
        throw TrainingDiverged(epoch, batch_index + 1, std::sqrt(sq), value);
      }
      adam_step(params, grads, state, adam);
      const auto preds = static_cast<double>(batch.prediction_count());
      loss_sum += value * preds;
      count += preds;
    }

    const EvalResult val = evaluate(model, val_batches);
    EpochRecord rec{epoch, loss_sum / count, val.auc, val.acc};
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (stopper.update(epoch, val.auc)) best = model;
    report.stopped_epoch = epoch;
    if (stopper.should_stop()) break;
  }

  report.best_epoch = stopper.best_epoch();
  const EvalResult test = evaluate(best, test_batches);
  report.test_auc = test.auc;
  report.test_acc = test.acc;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  model::CheckpointMeta meta{config.seed, report.config, report.config_hash};
  return TrainResult{std::move(report), std::move(best), std::move(meta)};
}

std::string report_json(const RunReport& report) {
  json j;
  j["variant"] = report.variant;
  j["best_epoch"] = report.best_epoch;
  j["stopped_epoch"] = report.stopped_epoch;
  j["test_auc"] = report.test_auc;
  j["test_acc"] = report.test_acc;
  j["n_parameters"] = report.n_parameters;
  j["students"] = {{"train", report.n_train_students},
                   {"validation", report.n_validation_students},
                   {"test", report.n_test_students}};
  json epochs = json::array();
  for (const EpochRecord& e : report.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_auc", e.val_auc},
                      {"val_acc", e.val_acc}});
  }
  j["epochs"] = std::move(epochs);
  j["seed"] = report.config.count("seed") ? report.config.at("seed") : "";
  j["config"] = report.config;
  j["config_hash"] = report.config_hash;
  return j.dump(2) + "\n";
}

std::vector<AblationRow> run_ablation_suite(const TrainConfig& base, const data::Dataset& dataset,
                                            const std::vector<model::VariantKind>& variants,
                                            const EpochCallback& on_epoch) {
  std::vector<AblationRow> rows;
  for (model::VariantKind v : variants) {
    TrainConfig c = base;
    c.variant = v;
    const TrainResult r = train(c, dataset, on_epoch);
    rows.push_back({v, r.report.test_auc, r.report.test_acc, r.report.best_epoch,
                    r.report.n_parameters});
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "variant,auc,acc,best_epoch\n";
  for (const AblationRow& r : rows) {
    os << model::to_string(r.variant) << ',' << format_double(r.auc) << ',' << format_double(r.acc)
       << ',' << r.best_epoch << '\n';
  }
  return os.str();
}

}  // namespace tlsqkt::train
