#pragma once

// Joint training of the summarization and tagging objectives:
//
//   L = lambda * L_pos + (1 - lambda) * L_ds
//
// Both losses are mean negative log-likelihoods over contributing positions
// (summary tokens plus [EOS] for L_ds, non-ignored input tokens for L_pos).
// Optimization is Adam with global-norm gradient clipping; after every epoch
// the dev split is decoded with beam search and the checkpoint with the best
// dev ROUGE-1 F1 is kept.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialsum/checkpoint.hpp"
#include "dialsum/corpus.hpp"
#include "dialsum/error.hpp"
#include "dialsum/inference.hpp"
#include "dialsum/input_selection.hpp"
#include "dialsum/metrics.hpp"
#include "dialsum/model.hpp"
#include "dialsum/preprocess.hpp"
#include "dialsum/rng.hpp"
#include "dialsum/vocabulary.hpp"

namespace dialsum {

struct TrainConfig {
  double lambda = 0.1;
  double learning_rate = 3e-4;
  int epochs = 20;
  int batch_size = 1;
  int beam_size = 4;
  int patience = 5;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 1.0;
  SelectionStrategy selection{SelectionKind::Longest, 10};
  int max_len = 512;         // encoder input length
  int decode_max_len = 64;   // generated tokens during dev decoding
  int min_freq = 1;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("lambda must be in [0, 1]");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
    if (epochs < 0) throw ArgumentError("epochs must be >= 0");
    if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
    if (beam_size < 1) throw ArgumentError("beam must be >= 1");
    if (patience < 0) throw ArgumentError("patience must be >= 0");
    if (max_len < 4) throw ArgumentError("max_len must be >= 4");
    if (decode_max_len < 1) throw ArgumentError("decode_max_len must be >= 1");
    if (min_freq < 1) throw ArgumentError("min_freq must be >= 1");
    if (selection.kind != SelectionKind::Full && selection.n < 1) throw ArgumentError("n must be >= 1");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"lambda", c.lambda},
          {"lr", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"beam", c.beam_size},
          {"patience", c.patience},
          {"seed", c.seed},
          {"input_type", to_string(c.selection.kind)},
          {"n", c.selection.n},
          {"max_len", c.max_len},
          {"decode_max_len", c.decode_max_len},
          {"min_freq", c.min_freq},
          {"clip_norm", c.clip_norm}};
}

// Missing keys keep their current values.
inline void apply_json(TrainConfig& c, const nlohmann::json& j) {
  try {
    c.lambda = j.value("lambda", c.lambda);
    c.learning_rate = j.value("lr", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.beam_size = j.value("beam", c.beam_size);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    if (j.contains("input_type")) c.selection.kind = parse_selection_kind(j.at("input_type").get<std::string>());
    c.selection.n = j.value("n", c.selection.n);
    c.max_len = j.value("max_len", c.max_len);
    c.decode_max_len = j.value("decode_max_len", c.decode_max_len);
    c.min_freq = j.value("min_freq", c.min_freq);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
}

struct LossReport {
  double l_ds = 0.0;
  double l_pos = 0.0;
  double l_total = 0.0;
  long step = 0;
  int epoch = 0;
};

// Mean -log p(target) over rows whose target is not [PAD].
template <typename T>
double ds_loss(const Matrix<T>& lm_logits, const std::vector<TokenId>& targets) {
  if (static_cast<std::size_t>(lm_logits.rows()) != targets.size()) {
    throw ArgumentError("ds_loss: " + std::to_string(lm_logits.rows()) + " logit rows for " +
                        std::to_string(targets.size()) + " targets");
  }
  std::vector<int> t(targets.begin(), targets.end());
  std::size_t count = 0;
  for (auto& v : t) {
    if (v == Vocabulary::kPad) v = -1;
    else ++count;
  }
  if (count == 0) return 0.0;
  Tape<T> tape(false);
  const T sum = tape.value(nn::nll_sum(tape, tape.constant(lm_logits), std::span<const int>(t)))(0, 0);
  return static_cast<double>(sum) / static_cast<double>(count);
}

// Mean -log p(tag) over rows whose label is not kIgnoreLabel; 0 if none.
template <typename T>
double pos_loss(const Matrix<T>& pos_logits, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(pos_logits.rows()) != labels.size()) {
    throw ArgumentError("pos_loss: logits and labels differ in length");
  }
  const auto count = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int l) { return l >= 0; }));
  if (count == 0) return 0.0;
  Tape<T> tape(false);
  const T sum = tape.value(nn::nll_sum(tape, tape.constant(pos_logits), std::span<const int>(labels)))(0, 0);
  return static_cast<double>(sum) / static_cast<double>(count);
}

inline double combined_loss(double l_pos, double l_ds, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("combined_loss: lambda must be in [0, 1]");
  if (lambda == 0.0) return l_ds;
  if (lambda == 1.0) return l_pos;
  return lambda * l_pos + (1.0 - lambda) * l_ds;
}

template <typename T>
struct AdamState {
  ModelParameters<T> m;
  ModelParameters<T> v;
  long step = 0;

  static AdamState zeros_for(const ModelParameters<T>& params) {
    return {params.zeros_like(), params.zeros_like(), 0};
  }
};

// Bias-corrected Adam update applied elementwise to every tensor.
template <typename T>
void adam_step(ModelParameters<T>& params, const ModelParameters<T>& grads, AdamState<T>& state,
               const TrainConfig& config) {
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw ArgumentError("adam_step: parameter structure mismatch");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& P = *p[i].second;
    if (g[i].second->rows() != P.rows() || g[i].second->cols() != P.cols() ||
        m[i].second->rows() != P.rows() || m[i].second->cols() != P.cols() ||
        v[i].second->rows() != P.rows() || v[i].second->cols() != P.cols()) {
      throw ArgumentError("adam_step: shape mismatch for " + p[i].first);
    }
  }
  ++state.step;
  const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
  const T lr = static_cast<T>(config.learning_rate), eps = static_cast<T>(config.epsilon);
  const T c1 = T(1) - std::pow(b1, static_cast<T>(state.step));
  const T c2 = T(1) - std::pow(b2, static_cast<T>(state.step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto& P = *p[i].second;
    const auto& G = *g[i].second;
    auto& M = *m[i].second;
    auto& V = *v[i].second;
    M = b1 * M + (T(1) - b1) * G;
    V = b2 * V + (T(1) - b2) * G.cwiseProduct(G);
    P.array() -= lr * (M.array() / c1) / ((V.array() / c2).sqrt() + eps);
  }
}

template <typename T>
T global_norm(const ModelParameters<T>& grads) {
  T sq = 0;
  for (const auto& [name, g] : grads.tensors()) sq += g->squaredNorm();
  return std::sqrt(sq);
}

// Encodes every dialogue of a tagged corpus. Dialogues whose first selected
// turn does not fit in max_len are skipped and counted.
struct ExampleSet {
  std::vector<TrainingExample> examples;
  std::vector<std::string> references;  // detokenized reference summaries
  std::size_t skipped = 0;
};

inline ExampleSet make_examples(const Corpus& corpus, const Vocabulary& vocab, const SelectionStrategy& selection,
                                std::size_t max_len) {
  ExampleSet out;
  for (const auto& d : corpus.dialogues) {
    if (!d.summary_tokens) throw PreconditionError("dialogue " + d.id + " summary is not tokenized");
    TrainingExample ex;
    ex.id = d.id;
    try {
      ex.input = build_input(d, select(d, selection), vocab, max_len);
    } catch (const InputTooLong&) {
      ++out.skipped;
      continue;
    }
    ex.summary_ids = vocab.encode(*d.summary_tokens);
    if (ex.summary_ids.size() + 1 > max_len) ex.summary_ids.resize(max_len - 1);
    out.examples.push_back(std::move(ex));
    out.references.push_back(join_tokens(*d.summary_tokens));
  }
  return out;
}

template <typename T>
std::vector<std::string> decode_summary(const Seq2SeqModel<T>& model, const Vocabulary& vocab,
                                        const EncodedInput& input, std::size_t beam, std::size_t max_tokens,
                                        double* logprob = nullptr) {
  ModelStepper<T> stepper(model, input);
  const std::size_t limit = std::min(max_tokens, stepper.max_prefix());
  const DecodeResult r = beam == 1 ? greedy_decode(stepper, limit) : beam_search(stepper, beam, limit);
  if (logprob) *logprob = r.logprob;
  return vocab.decode(r.ids);
}

template <typename T>
double dev_rouge1(const Seq2SeqModel<T>& model, const Vocabulary& vocab, const ExampleSet& dev,
                  std::size_t beam, std::size_t max_tokens) {
  std::vector<TokenPair> pairs;
  for (std::size_t i = 0; i < dev.examples.size(); ++i) {
    const auto hyp = decode_summary(model, vocab, dev.examples[i].input, beam, max_tokens);
    pairs.emplace_back(rouge_tokens(join_tokens(hyp)), rouge_tokens(dev.references[i]));
  }
  return corpus_rouge(pairs).rouge1.f1;
}

template <typename T>
struct TrainResult {
  Checkpoint<T> best;                 // best dev ROUGE-1
  ModelParameters<T> final_params;    // after the last epoch run
  std::vector<LossReport> epochs;
  std::vector<double> dev_rouge1;
  int best_epoch = 0;
  bool stopped_early = false;
  std::size_t skipped_train = 0;
  std::size_t skipped_dev = 0;
};

// Fixed-order batches: shuffle, stable-sort by input length, chunk, then
// shuffle the chunk order.
inline std::vector<std::vector<std::size_t>> make_batches(const std::vector<TrainingExample>& examples,
                                                          std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return examples[a].input.size() < examples[b].input.size();
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  }
  rng.shuffle(batches);
  return batches;
}

struct BatchLoss {
  double l_ds = 0.0;
  double l_pos = 0.0;
  double ds_sum = 0.0;
  double pos_sum = 0.0;
  std::size_t ds_count = 0;
  std::size_t pos_count = 0;
};

// Accumulates the gradient of the batch objective into `grads` (which the
// caller zeroes) and returns the batch losses.
template <typename T>
BatchLoss batch_gradients(const Seq2SeqModel<T>& model, const std::vector<TrainingExample>& examples,
                          const std::vector<std::size_t>& batch, double lambda, ModelParameters<T>& grads,
                          Rng* dropout_rng = nullptr) {
  BatchLoss out;
  for (std::size_t i : batch) {
    out.ds_count += examples[i].summary_ids.size() + 1;
    for (int l : examples[i].input.label_ids) out.pos_count += l >= 0 ? 1 : 0;
  }
  const T ds_w = out.ds_count ? static_cast<T>((1.0 - lambda) / static_cast<double>(out.ds_count)) : T(0);
  const T pos_w = out.pos_count ? static_cast<T>(lambda / static_cast<double>(out.pos_count)) : T(0);
  for (std::size_t i : batch) {
    const auto sums = model.accumulate_gradients(examples[i], ds_w, pos_w, grads, dropout_rng);
    out.ds_sum += static_cast<double>(sums.ds_sum);
    out.pos_sum += static_cast<double>(sums.pos_sum);
  }
  out.l_ds = out.ds_count ? out.ds_sum / static_cast<double>(out.ds_count) : 0.0;
  out.l_pos = out.pos_count ? out.pos_sum / static_cast<double>(out.pos_count) : 0.0;
  return out;
}

using EpochCallback = std::function<void(const LossReport&, double dev_rouge1)>;

template <typename T = double>
TrainResult<T> train(const Corpus& train_corpus, const Corpus& dev_corpus, ModelConfig model_config,
                     const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  config.validate();
  if (!fully_tagged(train_corpus)) throw PreconditionError("train: training corpus is not tagged");
  if (!fully_tagged(dev_corpus)) throw PreconditionError("train: dev corpus is not tagged");
  if (dev_corpus.dialogues.empty()) throw PreconditionError("train: dev split is empty");

  const Vocabulary vocab = build_vocab(train_corpus, config.min_freq);
  model_config.vocab_size = static_cast<int>(vocab.size());
  model_config.max_len = config.max_len;
  model_config.seed = config.seed;
  Seq2SeqModel<T> model(model_config);

  const auto max_len = static_cast<std::size_t>(config.max_len);
  const ExampleSet train_set = make_examples(train_corpus, vocab, config.selection, max_len);
  const ExampleSet dev_set = make_examples(dev_corpus, vocab, config.selection, max_len);
  if (train_set.examples.empty()) throw DataError("train: no usable training dialogues");
  if (dev_set.examples.empty()) throw DataError("train: no usable dev dialogues");

  Rng order_rng(config.seed ^ 0x5851F42D4C957F2DULL);
  Rng dropout_rng(config.seed ^ 0x14057B7EF767814FULL);
  AdamState<T> adam = AdamState<T>::zeros_for(model.params());
  ModelParameters<T> grads = model.params().zeros_like();

  TrainResult<T> result;
  result.skipped_train = train_set.skipped;
  result.skipped_dev = dev_set.skipped;
  result.best = {model.config(), vocab, model.params(), config.seed, 0, to_json(config)};
  double best_rouge = -1.0;
  int bad_epochs = 0;
  long step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double ds_sum = 0.0, pos_sum = 0.0;
    std::size_t ds_count = 0, pos_count = 0;
    for (const auto& batch : make_batches(train_set.examples, static_cast<std::size_t>(config.batch_size), order_rng)) {
      ++step;
      for (auto& [name, g] : grads.tensors()) g->setZero();
      const BatchLoss bl = batch_gradients(model, train_set.examples, batch, config.lambda, grads,
                                           model_config.dropout > 0.0 ? &dropout_rng : nullptr);
      if (!std::isfinite(bl.l_ds) || !std::isfinite(bl.l_pos)) {
        throw NumericError("non-finite loss at step " + std::to_string(step) + " (epoch " +
                           std::to_string(epoch) + ")");
      }
      const T norm = global_norm(grads);
      if (!std::isfinite(static_cast<double>(norm))) {
        throw NumericError("non-finite gradient at step " + std::to_string(step));
      }
      if (config.clip_norm > 0.0 && norm > static_cast<T>(config.clip_norm)) {
        const T s = static_cast<T>(config.clip_norm) / norm;
        for (auto& [name, g] : grads.tensors()) *g *= s;
      }
      adam_step(model.params(), grads, adam, config);
      ds_sum += bl.ds_sum;
      pos_sum += bl.pos_sum;
      ds_count += bl.ds_count;
      pos_count += bl.pos_count;
    }
    LossReport report;
    report.epoch = epoch;
    report.step = step;
    report.l_ds = ds_count ? ds_sum / static_cast<double>(ds_count) : 0.0;
    report.l_pos = pos_count ? pos_sum / static_cast<double>(pos_count) : 0.0;
    report.l_total = combined_loss(report.l_pos, report.l_ds, config.lambda);
    result.epochs.push_back(report);

    const double r1 = dev_rouge1(model, vocab, dev_set, static_cast<std::size_t>(config.beam_size),
                                 static_cast<std::size_t>(config.decode_max_len));
    result.dev_rouge1.push_back(r1);
    if (on_epoch) on_epoch(report, r1);
    if (r1 > best_rouge) {
      best_rouge = r1;
      bad_epochs = 0;
      result.best_epoch = epoch;
      result.best.params = model.params();
      result.best.step = step;
    } else if (++bad_epochs > config.patience) {
      result.stopped_early = epoch < config.epochs;
      break;
    }
  }
  result.final_params = model.params();
  return result;
}

}  // namespace dialsum
