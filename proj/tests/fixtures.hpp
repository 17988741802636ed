#pragma once

// Small models and synthetic examples shared by the tests.

#include <string>
#include <vector>

#include "dialsum/model.hpp"
#include "dialsum/rng.hpp"
#include "dialsum/trainer.hpp"

namespace fixture {

inline dialsum::ModelConfig tiny_config(int vocab = 12, std::uint64_t seed = 3) {
  dialsum::ModelConfig c;
  c.d_model = 8;
  c.n_enc_layers = 1;
  c.n_dec_layers = 1;
  c.n_heads = 2;
  c.d_ff = 16;
  c.max_len = 16;
  c.vocab_size = vocab;
  c.seed = seed;
  return c;
}

// Speaker, [SEP], words with random tags, [EOU]; repeated `turns` times.
inline dialsum::TrainingExample random_example(dialsum::Rng& rng, int vocab, std::size_t turns = 2,
                                               std::size_t summary_len = 3) {
  using dialsum::Vocabulary;
  dialsum::TrainingExample ex;
  ex.id = "x" + std::to_string(rng.below(1000));
  auto word = [&] { return static_cast<dialsum::TokenId>(Vocabulary::kNumSpecial + rng.below(vocab - Vocabulary::kNumSpecial)); };
  for (std::size_t t = 0; t < turns; ++t) {
    ex.input.token_ids.push_back(word());
    ex.input.label_ids.push_back(dialsum::kIgnoreLabel);
    ex.input.token_ids.push_back(Vocabulary::kSep);
    ex.input.label_ids.push_back(dialsum::kIgnoreLabel);
    for (std::size_t w = 0, n = 1 + rng.below(3); w < n; ++w) {
      ex.input.token_ids.push_back(word());
      ex.input.label_ids.push_back(static_cast<int>(rng.below(dialsum::kNumTags)));
    }
    ex.input.turn_boundaries.push_back(ex.input.token_ids.size());
    ex.input.token_ids.push_back(Vocabulary::kEou);
    ex.input.label_ids.push_back(dialsum::kIgnoreLabel);
  }
  for (std::size_t i = 0; i < summary_len; ++i) ex.summary_ids.push_back(word());
  return ex;
}

// The training objective for one example: λ·mean POS NLL + (1−λ)·mean summary NLL.
template <typename T>
T combined_objective(const dialsum::Seq2SeqModel<T>& model, const dialsum::TrainingExample& ex, double lambda) {
  const auto s = model.evaluate_loss(ex);
  const T l_ds = s.ds_sum / static_cast<T>(s.ds_count);
  const T l_pos = s.pos_count ? s.pos_sum / static_cast<T>(s.pos_count) : T(0);
  return static_cast<T>(dialsum::combined_loss(static_cast<double>(l_pos), static_cast<double>(l_ds), lambda));
}

// Analytic gradient of combined_objective.
template <typename T>
dialsum::ModelParameters<T> combined_gradient(const dialsum::Seq2SeqModel<T>& model,
                                              const dialsum::TrainingExample& ex, double lambda) {
  auto grads = model.params().zeros_like();
  const auto s = model.evaluate_loss(ex);
  const T ds_w = static_cast<T>(1.0 - lambda) / static_cast<T>(s.ds_count);
  const T pos_w = s.pos_count ? static_cast<T>(lambda) / static_cast<T>(s.pos_count) : T(0);
  model.accumulate_gradients(ex, ds_w, pos_w, grads);
  return grads;
}

}  // namespace fixture
