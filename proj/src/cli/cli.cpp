// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tlsqkt/data/assist09.hpp"
#include "tlsqkt/data/csv.hpp"
#include "tlsqkt/data/dataset.hpp"
#include "tlsqkt/data/synthetic.hpp"
#include "tlsqkt/model/checkpoint.hpp"
#include "tlsqkt/model/trajectories.hpp"
#include "tlsqkt/train/trainer.hpp"

namespace tlsqkt::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using train::ConfigError;
using train::ConfigMap;

/// Bad input that maps to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json stats_json(const data::DatasetStats& s) {
  json j;
  j["n_students"] = s.n_students;
  j["n_questions"] = s.n_questions;
  j["n_kcs"] = s.n_kcs;
  j["n_interactions"] = s.n_interactions;
  j["n_literacy"] = s.n_literacy ? json(*s.n_literacy) : json(nullptr);
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_marker(const fs::path& dir, const std::string& command, const std::string& cause) {
  if (dir.empty()) return;
  try {
    data::write_text(dir / (command + ".failed"), cause + "\n");
  } catch (...) {
    // Nothing more to report than the original failure.
  }
}

void clear_marker(const fs::path& dir, const std::string& command) {
  std::error_code ec;
  fs::remove(dir / (command + ".failed"), ec);
}

/// Config file values overlaid with flag overrides.
ConfigMap effective_config(const std::string& config_path, const ConfigMap& overrides) {
  ConfigMap values;
  if (!config_path.empty()) values = train::parse_config_text(data::read_text(config_path));
  for (const auto& [k, v] : overrides) values[k] = v;
  return values;
}

// ---- synth ------------------------------------------------------------------

ConfigMap synthetic_map(const data::SyntheticConfig& c) {
  using train::format_double;
  return {{"ability_sd", format_double(c.ability_sd)},
          {"difficulty_sd", format_double(c.difficulty_sd)},
          {"dimension_sd", format_double(c.dimension_sd)},
          {"growing_dimension", std::to_string(c.growing_dimension)},
          {"growth", format_double(c.growth)},
          {"growth_sd", format_double(c.growth_sd)},
          {"n_kcs", std::to_string(c.n_kcs)},
          {"n_literacy", std::to_string(c.n_literacy)},
          {"n_questions", std::to_string(c.n_questions)},
          {"n_students", std::to_string(c.n_students)},
          {"seed", std::to_string(c.seed)},
          {"seq_len", std::to_string(c.seq_len)}};
}

const std::vector<std::string>& synthetic_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, v] : synthetic_map({})) k.push_back(key);
    return k;
  }();
  return keys;
}

data::SyntheticConfig synthetic_config(const ConfigMap& values) {
  data::SyntheticConfig c;
  for (const auto& [key, value] : values) {
    auto fail = [&] { throw ConfigError("synth key '" + key + "': cannot parse '" + value + "'"); };
    try {
      std::size_t used = 0;
      auto i64 = [&] { auto v = std::stoll(value, &used); if (used != value.size()) fail(); return v; };
      auto f64 = [&] { auto v = std::stod(value, &used); if (used != value.size()) fail(); return v; };
      if (key == "n_students") c.n_students = i64();
      else if (key == "n_questions") c.n_questions = i64();
      else if (key == "n_kcs") c.n_kcs = i64();
      else if (key == "n_literacy") c.n_literacy = i64();
      else if (key == "seq_len") c.seq_len = i64();
      else if (key == "seed") {
        c.seed = std::stoull(value, &used);
        if (used != value.size()) fail();
      }
      else if (key == "ability_sd") c.ability_sd = f64();
      else if (key == "dimension_sd") c.dimension_sd = f64();
      else if (key == "difficulty_sd") c.difficulty_sd = f64();
      else if (key == "growth") c.growth = f64();
      else if (key == "growth_sd") c.growth_sd = f64();
      else if (key == "growing_dimension") c.growing_dimension = static_cast<std::int32_t>(i64());
      else throw ConfigError("unknown synth key '" + key + "'");
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ConfigError*>(&e)) throw;
      fail();
    }
  }
  return c;
}

int cmd_synth(const ConfigMap& values, const fs::path& out_dir, std::ostream& out) {
  const data::SyntheticConfig config = synthetic_config(values);
  const data::SyntheticData synth = data::generate_synthetic_literacy(config);
  const data::Dataset ds = data::build_dataset(synth.rows);
  data::write_text(out_dir / "interactions.csv", data::canonical_csv(ds));
  data::write_text(out_dir / "ground_truth.csv", data::ground_truth_csv(synth));
  data::write_text(out_dir / "id_map.csv", data::id_map_csv(ds));
  const ConfigMap echo = synthetic_map(config);
  json j;
  j["stats"] = stats_json(ds.stats);
  j["seed"] = config.seed;
  j["config"] = echo;
  j["config_hash"] = train::config_hash(echo);
  data::write_text(out_dir / "stats.json", dump(j));
  out << dump(j["stats"]);
  return kExitOk;
}

// ---- prep -------------------------------------------------------------------

int cmd_prep(const std::string& input, const std::string& format, const fs::path& out_dir,
             std::ostream& out) {
  const std::string raw = data::read_text(input);
  json j;
  data::Dataset ds;
  if (format == "assist09") {
    data::Assist09Result r = data::adapt_assist09(raw);
    ds = std::move(r.dataset);
    j["adapter"] = {{"data_rows", r.report.data_rows},
                    {"kept", r.report.kept},
                    {"dropped_null_skill", r.report.dropped_null_skill},
                    {"dropped_duplicate", r.report.dropped_duplicate},
                    {"unparseable", r.report.unparseable}};
  } else {
    ds = data::parse_canonical(raw);
  }
  data::write_text(out_dir / "interactions.csv", data::canonical_csv(ds));
  data::write_text(out_dir / "id_map.csv", data::id_map_csv(ds));
  const ConfigMap echo = {{"format", format}, {"input", fs::path(input).filename().string()}};
  json doc;
  doc["stats"] = stats_json(ds.stats);
  if (j.contains("adapter")) doc["adapter"] = j["adapter"];
  doc["seed"] = nullptr;
  doc["config"] = echo;
  doc["config_hash"] = train::config_hash(echo);
  data::write_text(out_dir / "stats.json", dump(doc));
  out << dump(doc["stats"]);
  return kExitOk;
}

// ---- train / ablate ---------------------------------------------------------

struct TrainSetup {
  train::TrainConfig config;
  data::Dataset dataset;
};

TrainSetup load_for_training(const ConfigMap& values) {
  TrainSetup s;
  s.config = train::TrainConfig::from_map(values);
  s.config.validate();
  if (s.config.data_path.empty()) throw ConfigError("data_path is required");
  s.dataset = data::load_canonical(s.config.data_path);
  return s;
}

train::EpochCallback progress(std::ostream& err, const std::string& label) {
  return [&err, label](const train::EpochRecord& e) {
    err << label << " epoch " << e.epoch << ": train_loss " << train::format_double(e.train_loss)
        << " val_auc " << train::format_double(e.val_auc) << '\n';
  };
}

int cmd_train(const ConfigMap& values, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  TrainSetup s = load_for_training(values);
  const train::TrainResult r = train::train(s.config, s.dataset, progress(err, "train"));
  model::save_checkpoint(out_dir / "checkpoint.json", r.model, r.meta);
  data::write_text(out_dir / "report.json", train::report_json(r.report));
  out << "best_epoch " << r.report.best_epoch << " test_auc " << train::format_double(r.report.test_auc)
      << " test_acc " << train::format_double(r.report.test_acc) << '\n';
  err << "wall time " << train::format_double(r.report.wall_time) << " s\n";
  return kExitOk;
}

int cmd_ablate(const ConfigMap& values, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  TrainSetup s = load_for_training(values);
  const auto rows = train::run_ablation_suite(s.config, s.dataset,
                                              {model::VariantKind::full, model::VariantKind::wo_output,
                                               model::VariantKind::wo_head, model::VariantKind::wo_add},
                                              progress(err, "ablate"));
  const std::string csv = train::ablation_csv(rows);
  data::write_text(out_dir / "ablation.csv", csv);
  ConfigMap echo = s.config.to_map();
  echo.erase("variant");
  json j;
  json table = json::array();
  for (const auto& row : rows) {
    table.push_back({{"variant", model::to_string(row.variant)},
                     {"auc", row.auc},
                     {"acc", row.acc},
                     {"best_epoch", row.best_epoch},
                     {"n_parameters", row.n_parameters}});
  }
  j["rows"] = table;
  j["seed"] = s.config.seed;
  j["config"] = echo;
  j["config_hash"] = train::config_hash(echo);
  data::write_text(out_dir / "ablation.json", dump(j));
  out << csv;
  return kExitOk;
}

// ---- eval / trace -----------------------------------------------------------

/// Applies the checkpoint's subsampling so dense ids line up with training,
/// then checks every vocabulary the model embeds.
data::Dataset dataset_for_checkpoint(const model::LoadedCheckpoint& ckpt, const std::string& data_path) {
  const train::TrainConfig config = train::TrainConfig::from_map(ckpt.meta.config);
  data::Dataset ds = train::apply_subsample(config, data::load_canonical(data_path));
  const model::ModelDims& d = ckpt.model.dims();
  auto check = [](const char* table, std::int64_t model_n, std::int64_t data_n) {
    if (model_n != data_n) {
      throw InputError(std::string("vocabulary mismatch in ") + table + ": checkpoint has " +
                       std::to_string(model_n) + " ids, data has " + std::to_string(data_n));
    }
  };
  if (ckpt.model.is_dkt()) {
    check("dkt.input_table (kc ids)", d.n_kcs, ds.kcs.size());
  } else {
    check("q_table (question ids)", d.n_questions, ds.questions.size());
    check("l_table (literacy ids)", d.n_literacy, ds.n_literacy_ids());
  }
  return ds;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path, const std::string& split,
             const fs::path& out_dir, std::ostream& out) {
  const model::LoadedCheckpoint ckpt = model::load_checkpoint(checkpoint);
  const train::TrainConfig config = train::TrainConfig::from_map(ckpt.meta.config);
  const data::Dataset ds = dataset_for_checkpoint(ckpt, data_path);
  data::Dataset target;
  if (split == "all") {
    target = ds;
  } else {
    const train::Splits s = train::prepare_splits(config, ds);
    target = split == "test" ? s.test : split == "validation" ? s.validation : s.train;
  }
  const auto batches = data::window_and_pad(target, config.max_seq_len, config.batch_size);
  const train::EvalResult r = train::evaluate(ckpt.model, batches);
  json j;
  j["split"] = split;
  j["auc"] = r.auc;
  j["acc"] = r.acc;
  j["loss"] = r.loss;
  j["predictions"] = r.predictions;
  j["students"] = target.sequences.size();
  j["seed"] = ckpt.meta.seed;
  j["config"] = ckpt.meta.config;
  j["config_hash"] = ckpt.meta.config_hash;
  data::write_text(out_dir / "eval.json", dump(j));
  out << "auc " << train::format_double(r.auc) << " acc " << train::format_double(r.acc) << '\n';
  return kExitOk;
}

std::string states_csv(const model::Trajectories& t, const data::Dataset& ds) {
  std::ostringstream os;
  os << "student_id,step,unit,value\n";
  for (std::size_t s = 0; s < t.states.size(); ++s) {
    const std::string sid = data::quote_csv_field(ds.sequences[s].student_id);
    for (std::size_t step = 0; step < t.states[s].size(); ++step) {
      for (std::size_t u = 0; u < t.states[s][step].size(); ++u) {
        os << sid << ',' << step + 1 << ',' << u << ',' << train::format_double(t.states[s][step][u])
           << '\n';
      }
    }
  }
  return os.str();
}

int cmd_trace(const std::string& checkpoint, const std::string& data_path,
              const std::vector<std::int64_t>& literacy, bool with_states, const fs::path& out_dir,
              std::ostream& out) {
  const model::LoadedCheckpoint ckpt = model::load_checkpoint(checkpoint);
  const data::Dataset ds = dataset_for_checkpoint(ckpt, data_path);
  const data::IdMap& dims = ds.has_literacy ? ds.literacies : ds.kcs;
  std::vector<std::int32_t> dense;
  for (std::int64_t l : literacy) {
    try {
      dense.push_back(dims.dense(l));
    } catch (const std::out_of_range&) {
      throw InputError("unknown literacy id " + std::to_string(l));
    }
  }
  const model::Trajectories t = model::extract_trajectories(ckpt.model, ds, dense, with_states);
  data::write_text(out_dir / "trajectories.csv", model::trajectories_csv(t, ds));
  if (with_states) data::write_text(out_dir / "states.csv", states_csv(t, ds));
  json j;
  j["rows"] = t.points.size();
  j["literacy_ids"] = literacy;
  j["seed"] = ckpt.meta.seed;
  j["config"] = ckpt.meta.config;
  j["config_hash"] = ckpt.meta.config_hash;
  data::write_text(out_dir / "trace.json", dump(j));
  out << "wrote " << t.points.size() << " trajectory rows\n";
  return kExitOk;
}

void add_key_options(CLI::App* sub, const std::vector<std::string>& keys, ConfigMap& overrides) {
  for (const std::string& key : keys) {
    sub->add_option_function<std::string>(
        "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; },
        "override config key " + key);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-channel literacy tracing: data preparation, training, evaluation, trajectories", "tlsqkt"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  ConfigMap overrides;

  auto* prep = app.add_subcommand("prep", "Convert a raw export to canonical CSV plus stats");
  std::string input;
  std::string format = "canonical";
  prep->add_option("--input", input, "raw CSV")->required();
  prep->add_option("--format", format, "input format")->check(CLI::IsMember({"assist09", "canonical"}));
  prep->add_option("--out", out_dir, "output directory")->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic literacy dataset with ground truth");
  synth->add_option("--config", config_path, "flat key=value file");
  synth->add_option("--out", out_dir, "output directory")->required();
  add_key_options(synth, synthetic_keys(), overrides);

  auto* trn = app.add_subcommand("train", "Train one model variant");
  trn->add_option("--config", config_path, "flat key=value file");
  trn->add_option("--out", out_dir, "output directory")->required();
  add_key_options(trn, train::TrainConfig::keys(), overrides);

  auto* abl = app.add_subcommand("ablate", "Train full, wo_output, wo_head and wo_add");
  abl->add_option("--config", config_path, "flat key=value file");
  abl->add_option("--out", out_dir, "output directory")->required();
  add_key_options(abl, train::TrainConfig::keys(), overrides);

  std::string checkpoint;
  std::string data_path;
  std::string split = "test";
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", checkpoint)->required();
  ev->add_option("--data", data_path, "canonical CSV the checkpoint was trained on")->required();
  ev->add_option("--split", split)->check(CLI::IsMember({"train", "validation", "test", "all"}));
  ev->add_option("--out", out_dir, "output directory")->required();

  std::vector<std::int64_t> literacy;
  bool with_states = false;
  auto* tr = app.add_subcommand("trace", "Export per-literacy trajectories");
  tr->add_option("--checkpoint", checkpoint)->required();
  tr->add_option("--data", data_path, "canonical CSV")->required();
  tr->add_option("--literacy", literacy, "original literacy ids (default: all)")->delimiter(',');
  tr->add_flag("--states", with_states, "also write the raw ability states");
  tr->add_option("--out", out_dir, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  }

  CLI::App* used = app.get_subcommands().front();
  const std::string command = used->get_name();
  const fs::path dir(out_dir);
  try {
    clear_marker(dir, command);
    if (command == "prep") return cmd_prep(input, format, dir, out);
    if (command == "synth") return cmd_synth(effective_config(config_path, overrides), dir, out);
    if (command == "train") return cmd_train(effective_config(config_path, overrides), dir, out, err);
    if (command == "ablate") return cmd_ablate(effective_config(config_path, overrides), dir, out, err);
    if (command == "eval") return cmd_eval(checkpoint, data_path, split, dir, out);
    if (command == "trace") return cmd_trace(checkpoint, data_path, literacy, with_states, dir, out);
  } catch (const data::LoadError& e) {
    err << "error: " << e.what() << '\n';
    write_marker(dir, command, e.what());
    return kExitBadInput;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    write_marker(dir, command, e.what());
    return kExitBadInput;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    write_marker(dir, command, e.what());
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    write_marker(dir, command, e.what());
    return kExitFailure;
  }
  return kExitBadInput;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace tlsqkt::cli
