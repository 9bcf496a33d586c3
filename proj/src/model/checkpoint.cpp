// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/model/checkpoint.hpp"

#include <json.hpp>
#include <stdexcept>

#include "tlsqkt/data/dataset.hpp"

namespace tlsqkt::model {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "tlsqkt-checkpoint-1";

json dims_json(const ModelDims& d) {
  return {{"n_questions", d.n_questions}, {"n_kcs", d.n_kcs},         {"n_literacy", d.n_literacy},
          {"max_seq_len", d.max_seq_len}, {"embed_dim", d.embed_dim}, {"hidden_dim", d.hidden_dim},
          {"model_dim", d.model_dim},     {"n_heads", d.n_heads}};
}

ModelDims dims_from(const json& j) {
  ModelDims d;
  d.n_questions = j.at("n_questions").get<Index>();
  d.n_kcs = j.at("n_kcs").get<Index>();
  d.n_literacy = j.at("n_literacy").get<Index>();
  d.max_seq_len = j.at("max_seq_len").get<Index>();
  d.embed_dim = j.at("embed_dim").get<Index>();
  d.hidden_dim = j.at("hidden_dim").get<Index>();
  d.model_dim = j.at("model_dim").get<Index>();
  d.n_heads = j.at("n_heads").get<Index>();
  return d;
}

}  // namespace

std::string checkpoint_json(const Model& model, const CheckpointMeta& meta) {
  json params = json::object();
  model.for_each_parameter([&](const Parameter& p) {
    params[p.name] = {{"shape", p.shape},
                      {"data", std::vector<double>(p.value.data(), p.value.data() + p.value.size())}};
  });
  json doc;
  doc["metadata"] = {{"format", kFormat},
                     {"variant", to_string(model.variant())},
                     {"dims", dims_json(model.dims())},
                     {"seed", meta.seed},
                     {"config", meta.config},
                     {"config_hash", meta.config_hash}};
  doc["parameters"] = std::move(params);
  return doc.dump() + "\n";
}

LoadedCheckpoint parse_checkpoint(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  const json& meta_j = doc.at("metadata");
  if (meta_j.at("format") != kFormat) throw std::runtime_error("unsupported checkpoint format");
  Model model = Model::create(parse_variant(meta_j.at("variant").get<std::string>()),
                              dims_from(meta_j.at("dims")), 0);
  const json& params = doc.at("parameters");
  std::size_t matched = 0;
  model.for_each_parameter([&](Parameter& p) {
    auto it = params.find(p.name);
    if (it == params.end()) throw std::runtime_error("checkpoint lacks parameter '" + p.name + "'");
    if (it->at("shape").get<ad::Shape>() != p.shape) {
      throw std::runtime_error("checkpoint parameter '" + p.name + "' has shape " +
                               ad::to_string(it->at("shape").get<ad::Shape>()) + ", expected " +
                               ad::to_string(p.shape));
    }
    const auto values = it->at("data").get<std::vector<double>>();
    if (static_cast<Index>(values.size()) != p.size()) {
      throw std::runtime_error("checkpoint parameter '" + p.name + "' has wrong length");
    }
    p.value = Eigen::Map<const ad::Vector>(values.data(), p.size());
    ++matched;
  });
  if (matched != params.size()) throw std::runtime_error("checkpoint has unexpected parameters");

  CheckpointMeta meta;
  meta.seed = meta_j.at("seed").get<std::uint64_t>();
  meta.config = meta_j.at("config").get<std::map<std::string, std::string>>();
  meta.config_hash = meta_j.at("config_hash").get<std::string>();
  return {std::move(model), std::move(meta)};
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const CheckpointMeta& meta) {
  data::write_text(path, checkpoint_json(model, meta));
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(data::read_text(path));
}

}  // namespace tlsqkt::model
