#pragma once

// JSON checkpoint container: model config, vocabulary, named tensors, seed,
// training step and the training options that produced it.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "dialsum/corpus.hpp"
#include "dialsum/error.hpp"
#include "dialsum/model.hpp"
#include "dialsum/vocabulary.hpp"

namespace dialsum {

inline constexpr const char* kCheckpointFormat = "dialsum-checkpoint";
inline constexpr int kCheckpointVersion = 1;

template <typename T>
struct Checkpoint {
  ModelConfig config;
  Vocabulary vocab;
  ModelParameters<T> params;
  std::uint64_t seed = 0;
  long step = 0;
  nlohmann::json train_config = nlohmann::json::object();
};

template <typename T>
std::string serialize_checkpoint(const Checkpoint<T>& ckpt) {
  nlohmann::ordered_json tensors = nlohmann::ordered_json::object();
  for (const auto& [name, m] : ckpt.params.tensors()) {
    std::vector<double> data(static_cast<std::size_t>(m->size()));
    for (Eigen::Index i = 0; i < m->size(); ++i) data[static_cast<std::size_t>(i)] = static_cast<double>(m->data()[i]);
    tensors[name] = {{"rows", m->rows()}, {"cols", m->cols()}, {"data", std::move(data)}};
  }
  nlohmann::json config = ckpt.config;
  nlohmann::ordered_json doc = {{"format", kCheckpointFormat},
                                {"version", kCheckpointVersion},
                                {"config", nlohmann::ordered_json::parse(config.dump())},
                                {"train_config", nlohmann::ordered_json::parse(ckpt.train_config.dump())},
                                {"seed", ckpt.seed},
                                {"step", ckpt.step},
                                {"vocab", ckpt.vocab.tokens()},
                                {"tensors", std::move(tensors)}};
  return doc.dump() + "\n";
}

// Rejects containers whose tensors disagree with their own config, and, when
// `expected` is given, configs that differ from it.
template <typename T>
Checkpoint<T> parse_checkpoint(const std::string& content, const std::optional<ModelConfig>& expected = std::nullopt) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kCheckpointFormat) {
    throw DataError("checkpoint: not a dialsum checkpoint");
  }
  if (doc.value("version", 0) != kCheckpointVersion) throw DataError("checkpoint: unsupported version");
  Checkpoint<T> ckpt;
  try {
    ckpt.config = doc.at("config").get<ModelConfig>();
    ckpt.seed = doc.at("seed").get<std::uint64_t>();
    ckpt.step = doc.at("step").get<long>();
    ckpt.train_config = doc.value("train_config", nlohmann::json::object());
    ckpt.vocab = Vocabulary::from_tokens(doc.at("vocab").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  ckpt.config.validate();
  if (expected && !(*expected == ckpt.config)) {
    throw DataError("checkpoint: model config does not match the expected config");
  }
  if (static_cast<std::size_t>(ckpt.config.vocab_size) != ckpt.vocab.size()) {
    throw DataError("checkpoint: vocabulary size does not match config");
  }
  // Allocate the expected shapes from the config, then fill.
  ModelConfig shape_config = ckpt.config;
  ckpt.params = init_parameters<T>(shape_config);
  const auto& tensors = doc.at("tensors");
  auto named = ckpt.params.tensors();
  if (tensors.size() != named.size()) throw DataError("checkpoint: tensor count does not match config");
  for (auto& [name, m] : named) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("checkpoint: missing tensor " + name);
    if (it->at("rows").template get<long>() != m->rows() || it->at("cols").template get<long>() != m->cols()) {
      throw DataError("checkpoint: tensor " + name + " has a shape that does not match config");
    }
    const auto& data = it->at("data");
    if (static_cast<Eigen::Index>(data.size()) != m->size()) throw DataError("checkpoint: tensor " + name + " size mismatch");
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = static_cast<T>(data[static_cast<std::size_t>(i)].template get<double>());
  }
  if (!ckpt.params.all_finite()) throw DataError("checkpoint: non-finite parameter values");
  return ckpt;
}

template <typename T>
void save_checkpoint(const Checkpoint<T>& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path,
                              const std::optional<ModelConfig>& expected = std::nullopt) {
  return parse_checkpoint<T>(detail::read_file(path), expected);
}

}  // namespace dialsum
