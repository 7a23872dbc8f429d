// Copyright 2026 the gtm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Binary checkpoint container.
//
// Layout (little endian):
//   8 bytes   magic "GTMCKPT\0"
//   u32       format version (1)
//   u64 + n   model config as JSON text
//   u64 + n   metadata as JSON text (step, epoch, ...)
//   u64       tensor count
//   per tensor: u32 name length, name bytes, u32 rank, u64 dims[rank],
//               float32 values[product(dims)]
// Model parameters use their stable names; optimizer moments, when present,
// are stored as "adam.m.<name>" and "adam.v.<name>".

#include <map>
#include <string>

#include "gtm/model.hpp"
#include "json.hpp"

namespace gtm {

nlohmann::json config_to_json(const ModelConfig& config);

/// Missing keys keep their defaults; unknown keys are a ConfigError.
ModelConfig config_from_json(const nlohmann::json& j);

struct Checkpoint {
    ModelConfig config;
    nlohmann::json meta = nlohmann::json::object();
    std::map<std::string, Tensor<float>> tensors;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const Model<float>& model, nlohmann::json meta = nlohmann::json::object());

/// Rebuilds the model; every parameter must be present with its exact shape.
Model<float> model_from_checkpoint(const Checkpoint& ckpt);

/// Throws DataError when the checkpoint cannot serve a run that expects
/// the given width and patch length.
void require_compatible(const ModelConfig& stored, std::size_t d_model, std::size_t patch_len);

}  // namespace gtm
