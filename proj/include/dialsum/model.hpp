#pragma once

// Shared-encoder sequence-to-sequence transformer with two heads:
//   - a per-position tagging head on the final encoder states
//   - a language-model head on the autoregressive decoder states
// Both heads read the same encoder pass; there is one encoder parameter set.
//
// Layers use pre-layer normalization and learned positional embeddings. The
// token embedding table is shared by encoder and decoder inputs; the LM head
// has its own weight matrix.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialsum/autodiff.hpp"
#include "dialsum/error.hpp"
#include "dialsum/input_selection.hpp"
#include "dialsum/rng.hpp"
#include "dialsum/tagset.hpp"
#include "dialsum/vocabulary.hpp"

namespace dialsum {

struct ModelConfig {
  int d_model = 64;
  int n_enc_layers = 2;
  int n_dec_layers = 2;
  int n_heads = 4;
  int d_ff = 256;
  double dropout = 0.0;
  int max_len = 512;
  int vocab_size = 0;
  int n_tags = kNumTags;
  std::uint64_t seed = 0;

  void validate() const {
    auto positive = [](int v, const char* name) {
      if (v <= 0) throw ArgumentError(std::string("ModelConfig: ") + name + " must be positive");
    };
    positive(d_model, "d_model");
    positive(n_enc_layers, "n_enc_layers");
    positive(n_dec_layers, "n_dec_layers");
    positive(n_heads, "n_heads");
    positive(d_ff, "d_ff");
    positive(max_len, "max_len");
    positive(vocab_size, "vocab_size");
    if (d_model % n_heads != 0) throw ArgumentError("ModelConfig: d_model must be divisible by n_heads");
    if (n_tags != kNumTags) throw ArgumentError("ModelConfig: n_tags must be 25");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ArgumentError("ModelConfig: dropout must be in [0, 1)");
  }

  bool operator==(const ModelConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"d_model", c.d_model},     {"n_enc_layers", c.n_enc_layers},
                     {"n_dec_layers", c.n_dec_layers}, {"n_heads", c.n_heads},
                     {"d_ff", c.d_ff},           {"dropout", c.dropout},
                     {"max_len", c.max_len},     {"vocab_size", c.vocab_size},
                     {"n_tags", c.n_tags},       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.d_model = j.value("d_model", c.d_model);
  c.n_enc_layers = j.value("n_enc_layers", c.n_enc_layers);
  c.n_dec_layers = j.value("n_dec_layers", c.n_dec_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.dropout = j.value("dropout", c.dropout);
  c.max_len = j.value("max_len", c.max_len);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.n_tags = j.value("n_tags", c.n_tags);
  c.seed = j.value("seed", c.seed);
}

template <typename T>
struct AttentionParams {
  Matrix<T> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename T>
struct LayerNormParams {
  Matrix<T> gain, bias;
};

template <typename T>
struct FeedForwardParams {
  Matrix<T> w1, b1, w2, b2;
};

template <typename T>
struct EncoderLayerParams {
  LayerNormParams<T> ln_attn;
  AttentionParams<T> self_attn;
  LayerNormParams<T> ln_ff;
  FeedForwardParams<T> ff;
};

template <typename T>
struct DecoderLayerParams {
  LayerNormParams<T> ln_self;
  AttentionParams<T> self_attn;
  LayerNormParams<T> ln_cross;
  AttentionParams<T> cross_attn;
  LayerNormParams<T> ln_ff;
  FeedForwardParams<T> ff;
};

template <typename T>
struct ModelParameters {
  Matrix<T> token_embedding;   // vocab x d
  Matrix<T> encoder_position;  // max_len x d
  Matrix<T> decoder_position;  // max_len x d
  std::vector<EncoderLayerParams<T>> encoder;
  LayerNormParams<T> encoder_norm;
  std::vector<DecoderLayerParams<T>> decoder;
  LayerNormParams<T> decoder_norm;
  Matrix<T> pos_head_w, pos_head_b;  // d x n_tags, 1 x n_tags
  Matrix<T> lm_head_w, lm_head_b;    // d x vocab, 1 x vocab

  // Every tensor with a stable dotted name, in a fixed order.
  std::vector<std::pair<std::string, Matrix<T>*>> tensors() {
    std::vector<std::pair<std::string, Matrix<T>*>> out;
    auto ln = [&](const std::string& p, LayerNormParams<T>& l) {
      out.emplace_back(p + ".gain", &l.gain);
      out.emplace_back(p + ".bias", &l.bias);
    };
    auto attn = [&](const std::string& p, AttentionParams<T>& a) {
      out.emplace_back(p + ".wq", &a.wq);
      out.emplace_back(p + ".bq", &a.bq);
      out.emplace_back(p + ".wk", &a.wk);
      out.emplace_back(p + ".bk", &a.bk);
      out.emplace_back(p + ".wv", &a.wv);
      out.emplace_back(p + ".bv", &a.bv);
      out.emplace_back(p + ".wo", &a.wo);
      out.emplace_back(p + ".bo", &a.bo);
    };
    auto ff = [&](const std::string& p, FeedForwardParams<T>& f) {
      out.emplace_back(p + ".w1", &f.w1);
      out.emplace_back(p + ".b1", &f.b1);
      out.emplace_back(p + ".w2", &f.w2);
      out.emplace_back(p + ".b2", &f.b2);
    };
    out.emplace_back("token_embedding", &token_embedding);
    out.emplace_back("encoder.position", &encoder_position);
    out.emplace_back("decoder.position", &decoder_position);
    for (std::size_t l = 0; l < encoder.size(); ++l) {
      const std::string p = "encoder.layers." + std::to_string(l);
      ln(p + ".ln_attn", encoder[l].ln_attn);
      attn(p + ".self_attn", encoder[l].self_attn);
      ln(p + ".ln_ff", encoder[l].ln_ff);
      ff(p + ".ff", encoder[l].ff);
    }
    ln("encoder.norm", encoder_norm);
    for (std::size_t l = 0; l < decoder.size(); ++l) {
      const std::string p = "decoder.layers." + std::to_string(l);
      ln(p + ".ln_self", decoder[l].ln_self);
      attn(p + ".self_attn", decoder[l].self_attn);
      ln(p + ".ln_cross", decoder[l].ln_cross);
      attn(p + ".cross_attn", decoder[l].cross_attn);
      ln(p + ".ln_ff", decoder[l].ln_ff);
      ff(p + ".ff", decoder[l].ff);
    }
    ln("decoder.norm", decoder_norm);
    out.emplace_back("pos_head.weight", &pos_head_w);
    out.emplace_back("pos_head.bias", &pos_head_b);
    out.emplace_back("lm_head.weight", &lm_head_w);
    out.emplace_back("lm_head.bias", &lm_head_b);
    return out;
  }

  std::vector<std::pair<std::string, const Matrix<T>*>> tensors() const {
    std::vector<std::pair<std::string, const Matrix<T>*>> out;
    for (auto& [name, ptr] : const_cast<ModelParameters*>(this)->tensors()) out.emplace_back(name, ptr);
    return out;
  }

  // Same structure with every tensor zeroed.
  ModelParameters zeros_like() const {
    ModelParameters z = *this;
    for (auto& [name, m] : z.tensors()) m->setZero();
    return z;
  }

  bool all_finite() const {
    for (const auto& [name, m] : tensors()) {
      if (!m->allFinite()) return false;
    }
    return true;
  }
};

namespace detail {

template <typename T>
Matrix<T> uniform_matrix(Rng& rng, int rows, int cols, double bound) {
  Matrix<T> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
  return m;
}

template <typename T>
LayerNormParams<T> init_layer_norm(int d) {
  return {Matrix<T>::Ones(1, d), Matrix<T>::Zero(1, d)};
}

template <typename T>
AttentionParams<T> init_attention(Rng& rng, int d, double bound) {
  AttentionParams<T> a;
  a.wq = uniform_matrix<T>(rng, d, d, bound);
  a.bq = Matrix<T>::Zero(1, d);
  a.wk = uniform_matrix<T>(rng, d, d, bound);
  a.bk = Matrix<T>::Zero(1, d);
  a.wv = uniform_matrix<T>(rng, d, d, bound);
  a.bv = Matrix<T>::Zero(1, d);
  a.wo = uniform_matrix<T>(rng, d, d, bound);
  a.bo = Matrix<T>::Zero(1, d);
  return a;
}

template <typename T>
FeedForwardParams<T> init_ff(Rng& rng, int d, int d_ff, double bound) {
  return {uniform_matrix<T>(rng, d, d_ff, bound), Matrix<T>::Zero(1, d_ff),
          uniform_matrix<T>(rng, d_ff, d, bound), Matrix<T>::Zero(1, d)};
}

}  // namespace detail

// Matrices uniform in (-0.08, 0.08), biases zero, layer-norm gains one.
template <typename T>
ModelParameters<T> init_parameters(const ModelConfig& config) {
  config.validate();
  constexpr double kBound = 0.08;
  Rng rng(config.seed);
  const int d = config.d_model;
  ModelParameters<T> p;
  p.token_embedding = detail::uniform_matrix<T>(rng, config.vocab_size, d, kBound);
  p.encoder_position = detail::uniform_matrix<T>(rng, config.max_len, d, kBound);
  p.decoder_position = detail::uniform_matrix<T>(rng, config.max_len, d, kBound);
  for (int l = 0; l < config.n_enc_layers; ++l) {
    EncoderLayerParams<T> e;
    e.ln_attn = detail::init_layer_norm<T>(d);
    e.self_attn = detail::init_attention<T>(rng, d, kBound);
    e.ln_ff = detail::init_layer_norm<T>(d);
    e.ff = detail::init_ff<T>(rng, d, config.d_ff, kBound);
    p.encoder.push_back(std::move(e));
  }
  p.encoder_norm = detail::init_layer_norm<T>(d);
  for (int l = 0; l < config.n_dec_layers; ++l) {
    DecoderLayerParams<T> e;
    e.ln_self = detail::init_layer_norm<T>(d);
    e.self_attn = detail::init_attention<T>(rng, d, kBound);
    e.ln_cross = detail::init_layer_norm<T>(d);
    e.cross_attn = detail::init_attention<T>(rng, d, kBound);
    e.ln_ff = detail::init_layer_norm<T>(d);
    e.ff = detail::init_ff<T>(rng, d, config.d_ff, kBound);
    p.decoder.push_back(std::move(e));
  }
  p.decoder_norm = detail::init_layer_norm<T>(d);
  p.pos_head_w = detail::uniform_matrix<T>(rng, d, config.n_tags, kBound);
  p.pos_head_b = Matrix<T>::Zero(1, config.n_tags);
  p.lm_head_w = detail::uniform_matrix<T>(rng, d, config.vocab_size, kBound);
  p.lm_head_b = Matrix<T>::Zero(1, config.vocab_size);
  return p;
}

// Last-layer encoder states, one row per input position.
template <typename T>
struct EncoderOutput {
  Matrix<T> hidden;
  std::vector<char> mask;  // 1 for real tokens, 0 for padding
};

// Tokens, labels and teacher-forcing targets for one dialogue.
struct TrainingExample {
  std::string id;
  EncodedInput input;
  std::vector<TokenId> summary_ids;  // reference summary without BOS/EOS

  // [BOS] y_1 .. y_k
  std::vector<TokenId> decoder_input() const {
    std::vector<TokenId> out{Vocabulary::kBos};
    out.insert(out.end(), summary_ids.begin(), summary_ids.end());
    return out;
  }
  // y_1 .. y_k [EOS]
  std::vector<TokenId> decoder_target() const {
    std::vector<TokenId> out(summary_ids);
    out.push_back(Vocabulary::kEos);
    return out;
  }
};

// Equal-length rows of encoder inputs and decoder inputs, padded with [PAD].
struct PaddedBatch {
  std::vector<std::vector<TokenId>> inputs;
  std::vector<std::vector<TokenId>> decoder_inputs;
};

inline PaddedBatch pad_batch(const std::vector<std::vector<TokenId>>& inputs,
                             const std::vector<std::vector<TokenId>>& decoder_inputs) {
  PaddedBatch b{inputs, decoder_inputs};
  std::size_t li = 0, ld = 0;
  for (const auto& r : b.inputs) li = std::max(li, r.size());
  for (const auto& r : b.decoder_inputs) ld = std::max(ld, r.size());
  for (auto& r : b.inputs) r.resize(li, Vocabulary::kPad);
  for (auto& r : b.decoder_inputs) r.resize(ld, Vocabulary::kPad);
  return b;
}

template <typename T>
struct MultitaskLogits {
  Matrix<T> lm;   // decoder length x vocab
  Matrix<T> pos;  // input length x n_tags
};

// Per-example loss sums and their contributing position counts.
template <typename T>
struct LossSums {
  T ds_sum = 0;
  std::size_t ds_count = 0;
  T pos_sum = 0;
  std::size_t pos_count = 0;
};

template <typename T>
class Seq2SeqModel {
 public:
  Seq2SeqModel(ModelConfig config, ModelParameters<T> params)
      : config_(std::move(config)), params_(std::move(params)) {
    config_.validate();
  }

  explicit Seq2SeqModel(const ModelConfig& config)
      : Seq2SeqModel(config, init_parameters<T>(config)) {}

  Seq2SeqModel(const Seq2SeqModel& o) : config_(o.config_), params_(o.params_) {}
  Seq2SeqModel& operator=(const Seq2SeqModel& o) {
    config_ = o.config_;
    params_ = o.params_;
    return *this;
  }

  const ModelConfig& config() const { return config_; }
  const ModelParameters<T>& params() const { return params_; }
  ModelParameters<T>& params() { return params_; }

  // Number of encoder passes run since construction.
  std::size_t encoder_evaluations() const { return encoder_evaluations_.load(); }

  EncoderOutput<T> encode(const EncodedInput& input) const { return encode(input.token_ids); }

  EncoderOutput<T> encode(std::span<const TokenId> ids) const {
    Tape<T> tape(false);
    EncoderOutput<T> out;
    out.mask = key_mask(ids);
    out.hidden = tape.value(encoder_graph(tape, ids, out.mask, nullptr, nullptr));
    return out;
  }

  // Row-wise tag distributions.
  Matrix<T> pos_head(const EncoderOutput<T>& enc) const {
    return nn::softmax_rows(pos_logits(enc.hidden));
  }

  // Next-token distribution after `prefix`, which must start with [BOS].
  std::vector<T> decode_step(std::span<const TokenId> prefix, const EncoderOutput<T>& enc) const {
    if (prefix.empty() || prefix.front() != Vocabulary::kBos) {
      throw ArgumentError("decode_step: prefix must start with [BOS]");
    }
    if (static_cast<int>(prefix.size()) >= config_.max_len) {
      throw ArgumentError("decode_step: prefix length must be below max_len");
    }
    Tape<T> tape(false);
    const NodeId h = tape.constant(enc.hidden);
    const NodeId y = decoder_graph(tape, prefix, h, enc.mask, nullptr, nullptr);
    const Matrix<T>& states = tape.value(y);
    Matrix<T> last = states.row(states.rows() - 1);
    Matrix<T> logits = last * params_.lm_head_w;
    logits += params_.lm_head_b;
    Matrix<T> p = nn::softmax_rows(logits);
    return std::vector<T>(p.data(), p.data() + p.size());
  }

  // Decoder logits for every position of `decoder_input` (teacher forcing).
  Matrix<T> decoder_logits(std::span<const TokenId> decoder_input, const EncoderOutput<T>& enc) const {
    Tape<T> tape(false);
    const NodeId h = tape.constant(enc.hidden);
    const NodeId y = decoder_graph(tape, decoder_input, h, enc.mask, nullptr, nullptr);
    Matrix<T> logits = tape.value(y) * params_.lm_head_w;
    logits.rowwise() += params_.lm_head_b.row(0);
    return logits;
  }

  // Both heads over one encoder pass per example.
  std::vector<MultitaskLogits<T>> forward_multitask(const PaddedBatch& batch) const {
    if (batch.inputs.size() != batch.decoder_inputs.size()) {
      throw ArgumentError("forward_multitask: inputs and decoder inputs differ in count");
    }
    auto homogeneous = [](const std::vector<std::vector<TokenId>>& rows) {
      for (const auto& r : rows) {
        if (r.size() != rows.front().size()) return false;
      }
      return true;
    };
    if (batch.inputs.empty()) return {};
    if (!homogeneous(batch.inputs) || !homogeneous(batch.decoder_inputs)) {
      throw ArgumentError("forward_multitask: ragged batch; pad it first");
    }
    std::vector<MultitaskLogits<T>> out;
    out.reserve(batch.inputs.size());
    for (std::size_t b = 0; b < batch.inputs.size(); ++b) {
      const EncoderOutput<T> enc = encode(batch.inputs[b]);
      out.push_back({decoder_logits(batch.decoder_inputs[b], enc), pos_logits(enc.hidden)});
    }
    return out;
  }

  // Forward and backward for one example. Gradients of
  //   ds_weight * sum(-log p(summary)) + pos_weight * sum(-log p(tags))
  // are added into `grads`. A zero weight skips that head's backward pass.
  LossSums<T> accumulate_gradients(const TrainingExample& ex, T ds_weight, T pos_weight,
                                   ModelParameters<T>& grads, Rng* dropout_rng = nullptr) const {
    Tape<T> tape(true);
    const auto& ids = ex.input.token_ids;
    const auto mask = key_mask(ids);
    const NodeId h = encoder_graph(tape, ids, mask, &grads, dropout_rng);
    const NodeId pos_w = tape.parameter(params_.pos_head_w, &grads.pos_head_w);
    const NodeId pos_b = tape.parameter(params_.pos_head_b, &grads.pos_head_b);
    const NodeId pos_logits_node = nn::linear(tape, h, pos_w, pos_b);
    const NodeId pos_loss = nn::nll_sum(tape, pos_logits_node, std::span<const int>(ex.input.label_ids));

    const auto dec_in = ex.decoder_input();
    const auto dec_tgt = ex.decoder_target();
    const NodeId y = decoder_graph(tape, dec_in, h, mask, &grads, dropout_rng);
    const NodeId lm_w = tape.parameter(params_.lm_head_w, &grads.lm_head_w);
    const NodeId lm_b = tape.parameter(params_.lm_head_b, &grads.lm_head_b);
    const NodeId lm_logits = nn::linear(tape, y, lm_w, lm_b);
    const NodeId ds_loss = nn::nll_sum(tape, lm_logits, std::span<const int>(dec_tgt));

    LossSums<T> sums;
    sums.ds_sum = tape.value(ds_loss)(0, 0);
    sums.ds_count = dec_tgt.size();
    sums.pos_sum = tape.value(pos_loss)(0, 0);
    for (int l : ex.input.label_ids) sums.pos_count += l >= 0 ? 1 : 0;
    if (ds_weight != T(0)) tape.seed(ds_loss, ds_weight);
    if (pos_weight != T(0)) tape.seed(pos_loss, pos_weight);
    tape.backward();
    return sums;
  }

  // Loss sums without gradients (dropout off).
  LossSums<T> evaluate_loss(const TrainingExample& ex) const {
    const EncoderOutput<T> enc = encode(ex.input);
    LossSums<T> sums;
    const Matrix<T> pl = pos_logits(enc.hidden);
    const Matrix<T> ll = decoder_logits(ex.decoder_input(), enc);
    Tape<T> tape(false);
    const auto dec_tgt = ex.decoder_target();
    sums.pos_sum = tape.value(nn::nll_sum(tape, tape.constant(pl), std::span<const int>(ex.input.label_ids)))(0, 0);
    sums.ds_sum = tape.value(nn::nll_sum(tape, tape.constant(ll), std::span<const int>(dec_tgt)))(0, 0);
    sums.ds_count = dec_tgt.size();
    for (int l : ex.input.label_ids) sums.pos_count += l >= 0 ? 1 : 0;
    return sums;
  }

 private:
  static std::vector<char> key_mask(std::span<const TokenId> ids) {
    std::vector<char> mask(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) mask[i] = ids[i] != Vocabulary::kPad;
    return mask;
  }

  Matrix<T> pos_logits(const Matrix<T>& hidden) const {
    Matrix<T> logits = hidden * params_.pos_head_w;
    logits.rowwise() += params_.pos_head_b.row(0);
    return logits;
  }

  template <typename P>
  static NodeId bind(Tape<T>& tape, const P& p, P* g, Matrix<T> P::*field) {
    return tape.parameter(p.*field, g ? &(g->*field) : nullptr);
  }

  NodeId layer_norm(Tape<T>& tape, NodeId x, const LayerNormParams<T>& p, LayerNormParams<T>* g) const {
    using LN = LayerNormParams<T>;
    return nn::layer_norm(tape, x, bind(tape, p, g, &LN::gain), bind(tape, p, g, &LN::bias));
  }

  NodeId mha(Tape<T>& tape, NodeId query_in, NodeId kv_in, const AttentionParams<T>& p,
             AttentionParams<T>* g, std::span<const char> key_valid, bool causal) const {
    using A = AttentionParams<T>;
    const NodeId q = nn::linear(tape, query_in, bind(tape, p, g, &A::wq), bind(tape, p, g, &A::bq));
    const NodeId k = nn::linear(tape, kv_in, bind(tape, p, g, &A::wk), bind(tape, p, g, &A::bk));
    const NodeId v = nn::linear(tape, kv_in, bind(tape, p, g, &A::wv), bind(tape, p, g, &A::bv));
    const NodeId a = nn::attention(tape, q, k, v, config_.n_heads, key_valid, causal);
    return nn::linear(tape, a, bind(tape, p, g, &A::wo), bind(tape, p, g, &A::bo));
  }

  NodeId feed_forward(Tape<T>& tape, NodeId x, const FeedForwardParams<T>& p, FeedForwardParams<T>* g,
                      Rng* rng) const {
    using F = FeedForwardParams<T>;
    NodeId h = nn::linear(tape, x, bind(tape, p, g, &F::w1), bind(tape, p, g, &F::b1));
    h = nn::gelu(tape, h);
    h = nn::dropout(tape, h, config_.dropout, rng);
    return nn::linear(tape, h, bind(tape, p, g, &F::w2), bind(tape, p, g, &F::b2));
  }

  NodeId encoder_graph(Tape<T>& tape, std::span<const TokenId> ids, std::span<const char> mask,
                       ModelParameters<T>* g, Rng* rng) const {
    if (ids.empty()) throw ArgumentError("encode: empty input");
    if (static_cast<int>(ids.size()) > config_.max_len) {
      throw ArgumentError("encode: input length " + std::to_string(ids.size()) + " exceeds max_len " +
                          std::to_string(config_.max_len));
    }
    ++encoder_evaluations_;
    using MP = ModelParameters<T>;
    NodeId x = nn::embed(tape, bind(tape, params_, g, &MP::token_embedding),
                         bind(tape, params_, g, &MP::encoder_position), ids);
    x = nn::dropout(tape, x, config_.dropout, rng);
    for (std::size_t l = 0; l < params_.encoder.size(); ++l) {
      const auto& p = params_.encoder[l];
      auto* gl = g ? &g->encoder[l] : nullptr;
      NodeId n1 = layer_norm(tape, x, p.ln_attn, gl ? &gl->ln_attn : nullptr);
      NodeId a = mha(tape, n1, n1, p.self_attn, gl ? &gl->self_attn : nullptr, mask, false);
      x = nn::add(tape, x, nn::dropout(tape, a, config_.dropout, rng));
      NodeId n2 = layer_norm(tape, x, p.ln_ff, gl ? &gl->ln_ff : nullptr);
      NodeId f = feed_forward(tape, n2, p.ff, gl ? &gl->ff : nullptr, rng);
      x = nn::add(tape, x, nn::dropout(tape, f, config_.dropout, rng));
    }
    return layer_norm(tape, x, params_.encoder_norm, g ? &g->encoder_norm : nullptr);
  }

  NodeId decoder_graph(Tape<T>& tape, std::span<const TokenId> ids, NodeId enc_hidden,
                       std::span<const char> enc_mask, ModelParameters<T>* g, Rng* rng) const {
    if (ids.empty()) throw ArgumentError("decoder: empty input");
    if (static_cast<int>(ids.size()) > config_.max_len) {
      throw ArgumentError("decoder: input length exceeds max_len");
    }
    using MP = ModelParameters<T>;
    NodeId x = nn::embed(tape, bind(tape, params_, g, &MP::token_embedding),
                         bind(tape, params_, g, &MP::decoder_position), ids);
    x = nn::dropout(tape, x, config_.dropout, rng);
    const std::vector<char> self_mask(ids.size(), 1);
    for (std::size_t l = 0; l < params_.decoder.size(); ++l) {
      const auto& p = params_.decoder[l];
      auto* gl = g ? &g->decoder[l] : nullptr;
      NodeId n1 = layer_norm(tape, x, p.ln_self, gl ? &gl->ln_self : nullptr);
      NodeId a = mha(tape, n1, n1, p.self_attn, gl ? &gl->self_attn : nullptr, self_mask, true);
      x = nn::add(tape, x, nn::dropout(tape, a, config_.dropout, rng));
      NodeId n2 = layer_norm(tape, x, p.ln_cross, gl ? &gl->ln_cross : nullptr);
      NodeId c = mha(tape, n2, enc_hidden, p.cross_attn, gl ? &gl->cross_attn : nullptr, enc_mask, false);
      x = nn::add(tape, x, nn::dropout(tape, c, config_.dropout, rng));
      NodeId n3 = layer_norm(tape, x, p.ln_ff, gl ? &gl->ln_ff : nullptr);
      NodeId f = feed_forward(tape, n3, p.ff, gl ? &gl->ff : nullptr, rng);
      x = nn::add(tape, x, nn::dropout(tape, f, config_.dropout, rng));
    }
    return layer_norm(tape, x, params_.decoder_norm, g ? &g->decoder_norm : nullptr);
  }

  ModelConfig config_;
  ModelParameters<T> params_;
  mutable std::atomic<std::size_t> encoder_evaluations_{0};
};

}  // namespace dialsum
