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

#include "gtm/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace gtm {

namespace {

constexpr char kMagic[8] = {'G', 'T', 'M', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

const char* scaling_name(GranularityScaling s) { return s == GranularityScaling::log1p ? "log1p" : "raw"; }

template <typename V>
void put(std::ostream& os, V v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

void put_string(std::ostream& os, const std::string& s) {
    put<std::uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename V>
V get(std::istream& is, const std::string& path) {
    V v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(V));
    if (!is) throw DataError(path + ": truncated checkpoint");
    return v;
}

std::string get_bytes(std::istream& is, std::uint64_t n, const std::string& path) {
    if (n > (1ULL << 32)) throw DataError(path + ": corrupt checkpoint (field length " + std::to_string(n) + ")");
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw DataError(path + ": truncated checkpoint");
    return s;
}

}  // namespace

nlohmann::json config_to_json(const ModelConfig& c) {
    return {{"d_model", c.d_model}, {"n_layers", c.n_layers}, {"patch_len", c.patch_len},
            {"n_heads", c.n_heads}, {"d_fk", c.d_fk},         {"maxpos", c.maxpos},
            {"maxspan", c.maxspan}, {"granularity_scaling", scaling_name(c.scaling)},
            {"norm_eps", c.norm_eps}, {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("model config must be an object");
    ModelConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "d_model") c.d_model = value.get<std::size_t>();
            else if (key == "n_layers") c.n_layers = value.get<std::size_t>();
            else if (key == "patch_len") c.patch_len = value.get<std::size_t>();
            else if (key == "n_heads") c.n_heads = value.get<std::size_t>();
            else if (key == "d_fk") c.d_fk = value.get<std::size_t>();
            else if (key == "maxpos") c.maxpos = value.get<std::size_t>();
            else if (key == "maxspan") c.maxspan = value.get<std::size_t>();
            else if (key == "norm_eps") c.norm_eps = value.get<double>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "granularity_scaling") {
                const auto s = value.get<std::string>();
                if (s == "log1p") c.scaling = GranularityScaling::log1p;
                else if (s == "raw") c.scaling = GranularityScaling::raw;
                else throw ConfigError("granularity_scaling must be \"log1p\" or \"raw\", got \"" + s + "\"");
            } else {
                throw ConfigError("unknown model config key \"" + key + "\"");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model config: ") + e.what());
    }
    c.validate();
    return c;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open " + path + " for writing");
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kVersion);
    put_string(os, config_to_json(ckpt.config).dump());
    put_string(os, ckpt.meta.dump());
    put<std::uint64_t>(os, ckpt.tensors.size());
    for (const auto& [name, t] : ckpt.tensors) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(t.dim()));
        for (const auto d : t.shape()) put<std::uint64_t>(os, d);
        os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
    }
    if (!os) throw DataError("failed writing " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError(path + ": not a checkpoint file");
    const auto version = get<std::uint32_t>(is, path);
    if (version != kVersion) throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    try {
        ckpt.config = config_from_json(nlohmann::json::parse(get_bytes(is, get<std::uint64_t>(is, path), path)));
        ckpt.meta = nlohmann::json::parse(get_bytes(is, get<std::uint64_t>(is, path), path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": corrupt checkpoint header: " + e.what());
    } catch (const ConfigError& e) {
        throw DataError(path + ": " + e.what());
    }
    const auto count = get<std::uint64_t>(is, path);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string name = get_bytes(is, get<std::uint32_t>(is, path), path);
        const auto rank = get<std::uint32_t>(is, path);
        if (rank > 8) throw DataError(path + ": corrupt tensor rank for " + name);
        std::vector<std::size_t> shape(rank);
        std::uint64_t n = 1;
        for (auto& d : shape) {
            d = get<std::uint64_t>(is, path);
            n *= d;
        }
        std::string raw = get_bytes(is, n * sizeof(float), path);
        std::vector<float> data(n);
        std::memcpy(data.data(), raw.data(), raw.size());
        ckpt.tensors.emplace(std::move(name), Tensor<float>(std::move(shape), std::move(data)));
    }
    return ckpt;
}

Checkpoint make_checkpoint(const Model<float>& model, nlohmann::json meta) {
    Checkpoint ckpt;
    ckpt.config = model.config;
    ckpt.meta = std::move(meta);
    for (const auto* p : model.parameters()) ckpt.tensors.emplace(p->name, p->value);
    return ckpt;
}

Model<float> model_from_checkpoint(const Checkpoint& ckpt) {
    Model<float> model = Model<float>::init(ckpt.config);
    for (auto* p : model.parameters()) {
        const auto it = ckpt.tensors.find(p->name);
        if (it == ckpt.tensors.end()) throw DataError("checkpoint is missing parameter " + p->name);
        if (!it->second.same_shape(p->value)) {
            throw DataError("checkpoint parameter " + p->name + " has shape " + shape_string(it->second.shape()) +
                            ", model expects " + shape_string(p->value.shape()));
        }
        p->value = it->second;
        p->zero_grad();
    }
    return model;
}

void require_compatible(const ModelConfig& stored, std::size_t d_model, std::size_t patch_len) {
    if (stored.d_model != d_model || stored.patch_len != patch_len) {
        throw DataError("incompatible checkpoint: it was trained with d_model=" + std::to_string(stored.d_model) +
                        ", patch_len=" + std::to_string(stored.patch_len) + " but the run requests d_model=" +
                        std::to_string(d_model) + ", patch_len=" + std::to_string(patch_len));
    }
}

}  // namespace gtm
