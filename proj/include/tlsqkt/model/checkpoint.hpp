// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON checkpoints:
//
//   {"metadata": {"format", "variant", "dims", "seed", "config", "config_hash"},
//    "parameters": {"<name>": {"shape": [...], "data": [...]}}}
//
// Doubles are written in shortest round-trip form, so save/load is bit-exact.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "tlsqkt/model/model.hpp"

namespace tlsqkt::model {

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;
  std::string config_hash;
};

struct LoadedCheckpoint {
  Model model;
  CheckpointMeta meta;
};

std::string checkpoint_json(const Model& model, const CheckpointMeta& meta);
/// Throws std::runtime_error on a missing/extra parameter or a shape mismatch.
LoadedCheckpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Model& model, const CheckpointMeta& meta);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tlsqkt::model
