// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tlsqkt/data/batching.hpp"
#include "tlsqkt/data/dataset.hpp"
#include "tlsqkt/data/split.hpp"
#include "tlsqkt/model/checkpoint.hpp"
#include "tlsqkt/model/model.hpp"
#include "tlsqkt/train/optim.hpp"

namespace tlsqkt::train {

using ConfigMap = std::map<std::string, std::string>;

/// Rejected configuration: unknown key, unparseable value or broken invariant.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
  model::VariantKind variant = model::VariantKind::full;
  std::int64_t max_seq_len = 200;
  std::int64_t embed_dim = 64;
  std::int64_t hidden_dim = 64;
  std::int64_t model_dim = 64;
  std::int64_t n_heads = 4;
  std::int64_t batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double dropout = 0.2;
  std::int64_t patience = 10;
  std::int64_t max_epochs = 200;
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 1;
  double train_ratio = 0.8;
  double train_share = 0.9;
  std::int64_t subsample = 0;  // 0 keeps every student
  std::string data_path;

  /// Throws ConfigError for an unknown key or bad value.
  void set(const std::string& key, const std::string& value);
  /// Throws ConfigError when an invariant fails.
  void validate() const;
  /// Every key with its effective value, in a fixed order (sorted by key).
  ConfigMap to_map() const;
  static TrainConfig from_map(const ConfigMap& values);
  static const std::vector<std::string>& keys();

  AdamConfig adam() const { return {learning_rate, beta1, beta2, adam_eps}; }
  model::ModelDims dims_for(const data::Dataset& dataset) const;
};

/// Shortest text that parses back to the same double.
std::string format_double(double value);

/// Flat "key = value" text, one pair per line, '#' starts a comment.
/// Throws ConfigError naming the line on a malformed entry.
ConfigMap parse_config_text(const std::string& text);

/// Git-style blob SHA-1 of the canonical "key=value\n" rendering of `config`.
std::string config_hash(const ConfigMap& config);

/// Validation-metric patience tracker. Epochs are 1-based.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::int64_t patience);
  /// Records the metric for `epoch`; true when it strictly beats the best so far.
  bool update(std::int64_t epoch, double metric);
  /// True once `patience` epochs have passed without improvement.
  bool should_stop() const { return epochs_since_best_ >= patience_; }
  std::int64_t best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_; }

 private:
  std::int64_t patience_;
  std::int64_t best_epoch_ = 0;
  std::int64_t epochs_since_best_ = 0;
  double best_ = 0.0;
};

struct EpochRecord {
  std::int64_t epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.0;
  double val_acc = 0.0;
};

struct EvalResult {
  double auc = 0.0;
  double acc = 0.0;
  double loss = 0.0;
  std::int64_t predictions = 0;
};

struct RunReport {
  std::string variant;
  std::vector<EpochRecord> epochs;
  std::int64_t best_epoch = 0;
  std::int64_t stopped_epoch = 0;
  double test_auc = 0.0;
  double test_acc = 0.0;
  std::size_t n_parameters = 0;
  std::int64_t n_train_students = 0;
  std::int64_t n_validation_students = 0;
  std::int64_t n_test_students = 0;
  ConfigMap config;
  std::string config_hash;
  double wall_time = 0.0;  // seconds
};

/// Deterministic JSON. Wall time is left out so reruns compare byte-equal.
std::string report_json(const RunReport& report);

/// Training run diverged (non-finite loss or gradient).
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::int64_t epoch, std::int64_t batch, double grad_norm, double loss);
  std::int64_t epoch;
  std::int64_t batch;
  double grad_norm;
  double loss;
};

/// Evaluation over every valid prediction cell of `batches`, flattened.
EvalResult evaluate(const model::Model& model, const std::vector<data::Batch>& batches);

/// Split datasets built by prepare_splits.
struct Splits {
  data::StudentSplit indices;
  data::Dataset train;
  data::Dataset validation;
  data::Dataset test;
};

/// Applies subsampling (if configured) and the student split.
Splits prepare_splits(const TrainConfig& config, const data::Dataset& dataset);

/// Applies subsampling (if configured); the result is what train() splits.
data::Dataset apply_subsample(const TrainConfig& config, const data::Dataset& dataset);

struct TrainResult {
  RunReport report;
  model::Model model;
  model::CheckpointMeta meta;
};

/// Called after every epoch; useful for progress output.
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Full protocol: split, seeded shuffling, minibatch Adam on masked BCE,
/// early stopping on validation AUC, best-checkpoint restore, one test pass.
TrainResult train(const TrainConfig& config, const data::Dataset& dataset,
                  const EpochCallback& on_epoch = {});

struct AblationRow {
  model::VariantKind variant;
  double auc = 0.0;
  double acc = 0.0;
  std::int64_t best_epoch = 0;
  std::size_t n_parameters = 0;
};

/// Trains each variant with the base config's seeds and split.
std::vector<AblationRow> run_ablation_suite(
    const TrainConfig& base, const data::Dataset& dataset,
    const std::vector<model::VariantKind>& variants = {model::VariantKind::full,
                                                       model::VariantKind::wo_output,
                                                       model::VariantKind::wo_head,
                                                       model::VariantKind::wo_add},
    const EpochCallback& on_epoch = {});

/// variant,auc,acc,best_epoch
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace tlsqkt::train
