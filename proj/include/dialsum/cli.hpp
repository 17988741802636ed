#pragma once

// Command implementations behind the `dialsum` binary. Each command takes a
// fully resolved JSON config, named input paths and an output directory,
// writes its artifacts plus manifest.json, and reports to `log`.

#include <array>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "dialsum/checkpoint.hpp"
#include "dialsum/corpus.hpp"
#include "dialsum/error.hpp"
#include "dialsum/inference.hpp"
#include "dialsum/metrics.hpp"
#include "dialsum/preprocess.hpp"
#include "dialsum/style.hpp"
#include "dialsum/tagger.hpp"
#include "dialsum/trainer.hpp"

namespace dialsum::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kBadArguments = 2, kDataError = 3, kNumericError = 4 };

inline std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

inline std::string file_sha256(const fs::path& p) { return sha256_hex(detail::read_file(p)); }

// Inputs are (role, path) pairs; several paths may share a role.
using Inputs = std::vector<std::pair<std::string, fs::path>>;

struct RunManifest {
  std::string command;
  json config;
  std::uint64_t seed = 0;
  Inputs inputs;
  fs::path out;
  std::vector<std::string> outputs;  // file names inside `out`

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json in = nlohmann::ordered_json::array();
    for (const auto& [role, path] : inputs) {
      in.push_back({{"role", role}, {"path", path.generic_string()}, {"sha256", file_sha256(path)}});
    }
    nlohmann::ordered_json outs = nlohmann::ordered_json::object();
    for (const auto& name : outputs) outs[name] = file_sha256(out / name);
    return {{"command", command},
            {"config", nlohmann::ordered_json::parse(config.dump())},
            {"seed", seed},
            {"inputs", std::move(in)},
            {"out", out.generic_string()},
            {"outputs", std::move(outs)}};
  }

  void write() const { write_file_atomic(out / "manifest.json", to_json().dump(2) + "\n"); }
};

// A manifest passed as --config contributes its config and its inputs.
struct ConfigFile {
  json config = json::object();
  Inputs inputs;
};

inline ConfigFile read_config_file(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(detail::read_file(path));
  } catch (const json::parse_error& e) {
    throw ArgumentError("config " + path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ArgumentError(e.what());
  }
  if (!doc.is_object()) throw ArgumentError("config " + path.string() + ": expected a JSON object");
  ConfigFile cf;
  if (doc.contains("command") && doc.contains("config")) {
    cf.config = doc.at("config");
    for (const auto& i : doc.value("inputs", json::array())) {
      cf.inputs.emplace_back(i.at("role").get<std::string>(), i.at("path").get<std::string>());
    }
  } else {
    cf.config = std::move(doc);
  }
  return cf;
}

// defaults <- config file <- flag overrides (JSON merge patch, nulls ignored).
inline json resolve_config(json defaults, const json& file, const json& overrides) {
  auto patch = [](json& into, const json& from) {
    for (auto it = from.begin(); it != from.end(); ++it) {
      if (it.value().is_null()) continue;
      if (it.value().is_object() && into.contains(it.key()) && into[it.key()].is_object()) {
        into[it.key()].merge_patch(it.value());
      } else {
        into[it.key()] = it.value();
      }
    }
  };
  patch(defaults, file);
  patch(defaults, overrides);
  return defaults;
}

inline std::vector<fs::path> paths_for(const Inputs& inputs, const std::string& role) {
  std::vector<fs::path> out;
  for (const auto& [r, p] : inputs) {
    if (r == role) out.push_back(p);
  }
  return out;
}

inline fs::path require_input(const Inputs& inputs, const std::string& role) {
  const auto ps = paths_for(inputs, role);
  if (ps.size() != 1) throw ArgumentError("expected exactly one --" + role + " path");
  return ps.front();
}

inline Split split_from_name(const fs::path& p) {
  const std::string stem = ascii_lower(p.stem().string());
  if (stem.find("test") != std::string::npos) return Split::Test;
  if (stem.find("dev") != std::string::npos || stem.find("val") != std::string::npos) return Split::Dev;
  return Split::Train;
}

inline Corpus load_tagged(const fs::path& path, Split split) {
  Corpus c = load_corpus(path, split);
  if (!fully_tagged(c)) tag_corpus(c, LexiconRuleTagger());
  return c;
}

template <typename T>
void write_output(RunManifest& m, const std::string& name, const T& content) {
  write_file_atomic(m.out / name, content);
  m.outputs.push_back(name);
}

// --- stats ---

inline json stats_defaults() { return {{"bin_width", 5}}; }

inline void cmd_stats(const json& config, const Inputs& inputs, const fs::path& out, std::ostream& log) {
  const auto paths = paths_for(inputs, "corpus");
  if (paths.empty()) throw ArgumentError("stats: no corpus files given");
  const long bin_width = config.at("bin_width").get<long>();
  std::vector<CorpusStats> rows;
  std::ostringstream density;
  density << "split,bin_start,count\n";
  for (const auto& p : paths) {
    const Corpus c = load_corpus(p, split_from_name(p));
    rows.push_back(compute_stats(c));
    for (const auto& [bin, count] : utterance_density(c, bin_width)) {
      density << to_string(c.split) << ',' << bin << ',' << count << '\n';
    }
  }
  std::ostringstream table;
  write_stats_table(table, rows);
  log << table.str();
  RunManifest m{"stats", config, 0, inputs, out, {}};
  write_output(m, "stats.txt", table.str());
  write_output(m, "stats.csv", stats_csv(rows));
  write_output(m, "density.csv", density.str());
  m.write();
}

// --- preprocess ---

inline json preprocess_defaults() { return {{"tagger", "lexicon"}}; }

inline void cmd_preprocess(const json& config, const Inputs& inputs, const fs::path& out, std::ostream& log) {
  const auto paths = paths_for(inputs, "corpus");
  if (paths.empty()) throw ArgumentError("preprocess: no corpus files given");
  const std::string tagger_name = config.at("tagger").get<std::string>();
  if (tagger_name != "lexicon" && tagger_name != "import") {
    throw ArgumentError("preprocess: tagger must be 'lexicon' or 'import'");
  }
  const auto lex = paths_for(inputs, "lexicons");
  const LexiconRuleTagger tagger(lex.empty() ? builtin_lexicons() : load_lexicons(lex.front()));
  const auto imports = paths_for(inputs, "tags");
  if (tagger_name == "import" && imports.size() != paths.size()) {
    throw ArgumentError("preprocess: import needs one --tags file per corpus");
  }
  RunManifest m{"preprocess", config, 0, inputs, out, {}};
  for (std::size_t i = 0; i < paths.size(); ++i) {
    Corpus c = load_corpus(paths[i], split_from_name(paths[i]));
    if (tagger_name == "import") c = import_tags(c, imports[i]);
    else tag_corpus(c, tagger);
    const std::string name = paths[i].stem().string() + ".jsonl";
    write_output(m, name, serialize_annotated(c));
    log << paths[i].generic_string() << " -> " << (out / name).generic_string() << " (" << c.dialogues.size()
        << " dialogues)\n";
  }
  m.write();
}

// --- train ---

inline json train_defaults() {
  TrainConfig t;
  json j = to_json(t);
  ModelConfig mc;
  json model = mc;
  model.erase("vocab_size");
  model.erase("seed");
  model.erase("max_len");
  model.erase("n_tags");
  j["model"] = model;
  return j;
}

inline TrainConfig train_config_from(const json& config) {
  TrainConfig t;
  apply_json(t, config);
  t.validate();
  return t;
}

inline ModelConfig model_config_from(const json& config) {
  ModelConfig mc;
  try {
    if (config.contains("model")) from_json(config.at("model"), mc);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("model config: ") + e.what());
  }
  return mc;
}

inline void cmd_train(const json& config, const Inputs& inputs, const fs::path& out, std::ostream& log) {
  const TrainConfig tc = train_config_from(config);
  ModelConfig mc = model_config_from(config);
  const fs::path train_path = require_input(inputs, "train");
  const fs::path dev_path = require_input(inputs, "dev");
  const Corpus train_corpus = load_tagged(train_path, Split::Train);
  const Corpus dev_corpus = load_tagged(dev_path, Split::Dev);

  std::string log_lines;
  auto on_epoch = [&](const LossReport& r, double r1) {
    nlohmann::ordered_json line = {{"epoch", r.epoch}, {"step", r.step},       {"l_ds", r.l_ds},
                                   {"l_pos", r.l_pos}, {"l_total", r.l_total}, {"dev_rouge1", r1}};
    log_lines += line.dump() + "\n";
    log << line.dump() << "\n";
  };
  const TrainResult<double> result = train<double>(train_corpus, dev_corpus, mc, tc, on_epoch);
  if (result.skipped_train || result.skipped_dev) {
    log << "skipped " << result.skipped_train << " train and " << result.skipped_dev
        << " dev dialogues longer than max_len\n";
  }
  Checkpoint<double> final_ckpt = result.best;
  final_ckpt.params = result.final_params;
  final_ckpt.step = result.epochs.empty() ? 0 : result.epochs.back().step;

  RunManifest m{"train", config, tc.seed, inputs, out, {}};
  write_output(m, "train_log.jsonl", log_lines);
  write_output(m, "checkpoint.json", serialize_checkpoint(result.best));
  write_output(m, "checkpoint_final.json", serialize_checkpoint(final_ckpt));
  m.write();
  log << "best epoch " << result.best_epoch << "\n";
}

// --- generate ---

// input_type, n and max_len default to the checkpoint's training options.
inline json generate_defaults() {
  return {{"beam", 4}, {"max_tokens", 64}, {"input_type", nullptr}, {"n", nullptr}, {"max_len", nullptr}};
}

inline void cmd_generate(const json& config_in, const Inputs& inputs, const fs::path& out, std::ostream& log) {
  const auto ckpt = load_checkpoint<double>(require_input(inputs, "checkpoint"));
  json config = config_in;
  for (const char* key : {"input_type", "n", "max_len"}) {
    if (!config.contains(key) || config[key].is_null()) {
      if (!ckpt.train_config.contains(key)) throw DataError(std::string("checkpoint lacks training option ") + key);
      config[key] = ckpt.train_config.at(key);
    }
  }
  const int beam = config.at("beam").get<int>();
  const int max_tokens = config.at("max_tokens").get<int>();
  if (beam < 1) throw ArgumentError("beam must be >= 1");
  if (max_tokens < 1) throw ArgumentError("max_tokens must be >= 1");
  const SelectionStrategy sel =
      make_strategy(parse_selection_kind(config.at("input_type").get<std::string>()), config.at("n").get<std::size_t>());
  const auto max_len = std::min<std::size_t>(config.at("max_len").get<std::size_t>(),
                                             static_cast<std::size_t>(ckpt.config.max_len));

  const Corpus corpus = load_tagged(require_input(inputs, "input"), Split::Test);
  const Seq2SeqModel<double> model(ckpt.config, ckpt.params);
  std::string lines;
  std::vector<std::vector<std::string>> summaries;
  std::size_t skipped = 0;
  for (const auto& d : corpus.dialogues) {
    std::vector<std::string> hyp;
    double logprob = 0.0;
    try {
      const EncodedInput input = build_input(d, select(d, sel), ckpt.vocab, max_len);
      hyp = decode_summary(model, ckpt.vocab, input, static_cast<std::size_t>(beam),
                           static_cast<std::size_t>(max_tokens), &logprob);
    } catch (const InputTooLong&) {
      ++skipped;
    }
    const std::string text = join_tokens(hyp);
    nlohmann::ordered_json rec = {
        {"id", d.id}, {"summary", text}, {"logprob", logprob}, {"n_words", split_whitespace(text).size()}};
    lines += rec.dump() + "\n";
    summaries.push_back(std::move(hyp));
  }
  RunManifest m{"generate", config, ckpt.seed, inputs, out, {}};
  write_output(m, "generated.jsonl", lines);
  m.write();
  log << "generated " << summaries.size() << " summaries, avg " << avg_generated_words(summaries) << " words";
  if (skipped) log << ", " << skipped << " inputs too long (empty summary)";
  log << "\n";
}

// --- evaluate ---

inline json evaluate_defaults() { return {{"system", "dialsum"}, {"type", "-"}}; }

inline std::map<std::string, std::string> read_generated(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(detail::read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (detail::trim(line).empty()) continue;
    try {
      const json rec = json::parse(line);
      const auto id = rec.at("id").get<std::string>();
      if (!out.emplace(id, rec.at("summary").get<std::string>()).second) {
        throw DataError(path.string() + " line " + std::to_string(n) + ": duplicate id " + id);
      }
    } catch (const json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

inline void cmd_evaluate(const json& config, const Inputs& inputs, const fs::path& out, std::ostream& log) {
  const auto generated = read_generated(require_input(inputs, "generated"));
  Corpus refs = load_corpus(require_input(inputs, "references"), Split::Test);
  tokenize_corpus(refs);
  std::vector<TokenPair> pairs;
  std::vector<std::vector<std::string>> hyps;
  for (const auto& d : refs.dialogues) {
    auto it = generated.find(d.id);
    if (it == generated.end()) throw DataError("no generated summary for dialogue " + d.id);
    pairs.emplace_back(rouge_tokens(it->second), rouge_tokens(join_tokens(*d.summary_tokens)));
    hyps.push_back(split_whitespace(it->second));
  }
  if (generated.size() != refs.dialogues.size()) {
    throw DataError("generated file has " + std::to_string(generated.size()) + " entries for " +
                    std::to_string(refs.dialogues.size()) + " references");
  }
  const std::vector<SystemReport> rows{
      {config.at("system").get<std::string>(), config.at("type").get<std::string>(), corpus_rouge(pairs)}};
  std::ostringstream table;
  write_rouge_table(table, rows);
  table << "avg generated words: " << avg_generated_words(hyps) << "\n";
  log << table.str();
  RunManifest m{"evaluate", config, 0, inputs, out, {}};
  write_output(m, "rouge.txt", table.str());
  write_output(m, "rouge.csv", rouge_csv(rows));
  m.write();
}

// --- analyze-styles ---

inline json styles_defaults() { return {{"k", 3}, {"seed", 0}, {"max_iter", 100}, {"top_k", 6}}; }

inline void cmd_analyze_styles(const json& config, const Inputs& inputs, const fs::path& out, std::ostream& log) {
  const auto k = config.at("k").get<int>();
  const auto seed = config.at("seed").get<std::uint64_t>();
  const auto top_k = config.at("top_k").get<std::size_t>();
  const Corpus corpus = load_tagged(require_input(inputs, "corpus"), Split::Test);
  const auto styles = build_styles(corpus);
  const Eigen::MatrixXd w = tfidf(styles);
  const ClusterAssignment clusters = kmeans(w, k, seed, config.at("max_iter").get<int>());
  const Projection2D proj = pca_2d(w);
  const auto ranks = rank_features_by_std(clusters.cluster, k, w, top_k);

  json resolved = config;
  resolved["pca_explained"] = {proj.explained[0], proj.explained[1]};
  RunManifest m{"analyze-styles", resolved, seed, inputs, out, {}};
  write_output(m, "styles.csv", styles_csv(styles));
  write_output(m, "tfidf.csv", tfidf_csv(styles, w));
  write_output(m, "clusters.csv", clusters_csv(styles, clusters.cluster));
  write_output(m, "pca.csv", pca_csv(styles, proj));
  write_output(m, "feature_rank.csv", feature_rank_csv(ranks, k));
  m.write();
  log << styles.size() << " speaker styles, " << k << " clusters; top features:";
  for (const auto& f : ranks) log << ' ' << tag_symbol(f.tag);
  log << "\n";
}

// Maps an exception thrown by a command to its exit code.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return kNumericError;
  if (dynamic_cast<const ArgumentError*>(&e)) return kBadArguments;
  if (dynamic_cast<const DataError*>(&e)) return kDataError;
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return kBadArguments;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kDataError;
  return kDataError;
}

}  // namespace dialsum::cli
