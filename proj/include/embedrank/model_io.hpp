#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "embedrank/errors.hpp"
#include "embedrank/model.hpp"

namespace embedrank {

// Model file layout (one JSON document):
//
//   {
//     "format_version": 1,
//     "model_kind": "embednet" | "mlp",
//     "dims": [in, hidden1, hidden2, out],
//     "seed": <uint64>,
//     "config": { ... snapshot of the configuration that produced the model ... },
//     "layers": [ {"weights": [row-major doubles], "bias": [...], "prelu_slopes": [...]}, x3 ]
//   }
//
// Doubles are emitted in shortest round-trip decimal form, so save followed by
// load reproduces every parameter bit-exactly.

inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
  int format_version = kModelFormatVersion;
  std::string model_kind;  // "embednet" or "mlp"
  std::vector<int> dims;
  uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<DenseLayer> layers;

  EmbedNetParams as_embednet() const {
    if (model_kind != "embednet") {
      throw ConfigError("model file holds a '" + model_kind + "' model, expected 'embednet'");
    }
    return EmbedNetParams{layers, seed};
  }

  MlpParams as_mlp() const {
    if (model_kind != "mlp") {
      throw ConfigError("model file holds a '" + model_kind + "' model, expected 'mlp'");
    }
    return MlpParams{layers, seed};
  }
};

inline std::vector<int> model_dims(const std::vector<DenseLayer>& layers) {
  std::vector<int> dims;
  dims.push_back(layers.front().in_dim());
  for (const DenseLayer& l : layers) dims.push_back(l.out_dim());
  return dims;
}

inline ModelFile to_model_file(const EmbedNetParams& p,
                               const nlohmann::json& config = nlohmann::json::object()) {
  return ModelFile{kModelFormatVersion, "embednet", model_dims(p.layers), p.seed, config,
                   p.layers};
}

inline ModelFile to_model_file(const MlpParams& p,
                               const nlohmann::json& config = nlohmann::json::object()) {
  return ModelFile{kModelFormatVersion, "mlp", model_dims(p.layers), p.seed, config, p.layers};
}

inline void save_model(const ModelFile& m, const std::string& path) {
  nlohmann::json doc;
  doc["format_version"] = m.format_version;
  doc["model_kind"] = m.model_kind;
  doc["dims"] = m.dims;
  doc["seed"] = m.seed;
  doc["config"] = m.config;
  nlohmann::json layers = nlohmann::json::array();
  for (const DenseLayer& l : m.layers) {
    layers.push_back({{"weights", l.weights.data},
                      {"bias", l.bias},
                      {"prelu_slopes", l.prelu_slopes},
                      {"out_dim", l.out_dim()},
                      {"in_dim", l.in_dim()}});
  }
  doc["layers"] = std::move(layers);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open model file for writing: " + path);
  out << doc.dump() << '\n';
  if (!out) throw IoError("failed writing model file: " + path);
}

inline void save_model(const EmbedNetParams& p, const std::string& path,
                       const nlohmann::json& config = nlohmann::json::object()) {
  save_model(to_model_file(p, config), path);
}

inline void save_model(const MlpParams& p, const std::string& path,
                       const nlohmann::json& config = nlohmann::json::object()) {
  save_model(to_model_file(p, config), path);
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": not a valid model file: " + e.what());
  }

  ModelFile m;
  try {
    m.format_version = doc.at("format_version").get<int>();
    if (m.format_version != kModelFormatVersion) {
      throw FormatError(path + ": unsupported format_version " +
                        std::to_string(m.format_version));
    }
    m.model_kind = doc.at("model_kind").get<std::string>();
    if (m.model_kind != "embednet" && m.model_kind != "mlp") {
      throw FormatError(path + ": unknown model_kind '" + m.model_kind + "'");
    }
    m.dims = doc.at("dims").get<std::vector<int>>();
    m.seed = doc.at("seed").get<uint64_t>();
    m.config = doc.value("config", nlohmann::json::object());

    const auto& layers = doc.at("layers");
    if (!layers.is_array() || layers.size() + 1 != m.dims.size()) {
      throw FormatError(path + ": layer count does not match dims");
    }
    for (size_t i = 0; i < layers.size(); ++i) {
      const auto& jl = layers[i];
      DenseLayer l;
      const int in_dim = jl.at("in_dim").get<int>();
      const int out_dim = jl.at("out_dim").get<int>();
      if (in_dim != m.dims[i] || out_dim != m.dims[i + 1]) {
        throw FormatError(path + ": layer " + std::to_string(i) + " dims disagree with header");
      }
      l.weights = Matrix(out_dim, in_dim);
      l.weights.data = jl.at("weights").get<std::vector<double>>();
      l.bias = jl.at("bias").get<std::vector<double>>();
      l.prelu_slopes = jl.at("prelu_slopes").get<std::vector<double>>();
      if (l.weights.data.size() != static_cast<size_t>(in_dim) * out_dim ||
          l.bias.size() != static_cast<size_t>(out_dim) ||
          l.prelu_slopes.size() != static_cast<size_t>(out_dim)) {
        throw FormatError(path + ": layer " + std::to_string(i) + " payload size mismatch");
      }
      if (!all_finite(l.weights.data) || !all_finite(l.bias) || !all_finite(l.prelu_slopes)) {
        throw FormatError(path + ": layer " + std::to_string(i) + " holds non-finite values");
      }
      m.layers.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": malformed model file: " + e.what());
  }
  return m;
}

}  // namespace embedrank
