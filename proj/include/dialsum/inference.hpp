#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "dialsum/error.hpp"
#include "dialsum/model.hpp"
#include "dialsum/tokenizer.hpp"
#include "dialsum/vocabulary.hpp"

namespace dialsum {

// Anything that yields a next-token distribution for a [BOS]-initial prefix.
template <typename S>
concept NextTokenModel = requires(const S& s, std::span<const TokenId> prefix) {
  { s.next(prefix) } -> std::convertible_to<std::vector<double>>;
};

// A trained model bound to one encoded input.
template <typename T>
class ModelStepper {
 public:
  ModelStepper(const Seq2SeqModel<T>& model, const EncodedInput& input)
      : model_(model), enc_(model.encode(input)) {}

  std::vector<double> next(std::span<const TokenId> prefix) const {
    auto p = model_.decode_step(prefix, enc_);
    return std::vector<double>(p.begin(), p.end());
  }

  // Longest prefix the positional table allows.
  std::size_t max_prefix() const { return static_cast<std::size_t>(model_.config().max_len) - 1; }

 private:
  const Seq2SeqModel<T>& model_;
  EncoderOutput<T> enc_;
};

struct Hypothesis {
  std::vector<TokenId> ids;  // starts with [BOS]
  double logprob = 0.0;
  bool finished = false;
};

struct DecodeResult {
  std::vector<TokenId> ids;  // generated tokens, without [BOS] and [EOS]
  double logprob = 0.0;
  bool ended_with_eos = false;
};

namespace detail {

inline DecodeResult to_result(const Hypothesis& h) {
  DecodeResult r;
  r.logprob = h.logprob;
  r.ids.assign(h.ids.begin() + 1, h.ids.end());
  if (!r.ids.empty() && r.ids.back() == Vocabulary::kEos) {
    r.ids.pop_back();
    r.ended_with_eos = true;
  }
  return r;
}

// Higher score first; equal scores ordered by token sequence.
inline bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.ids < b.ids;
}

}  // namespace detail

// Argmax at every step, ties toward the lower id. Generates at most
// max_len tokens including [EOS].
template <NextTokenModel M>
DecodeResult greedy_decode(const M& model, std::size_t max_len) {
  Hypothesis h{{Vocabulary::kBos}, 0.0, false};
  for (std::size_t step = 0; step < max_len; ++step) {
    const std::vector<double> p = model.next(h.ids);
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (p[i] > p[best]) best = i;
    }
    h.ids.push_back(static_cast<TokenId>(best));
    h.logprob += std::log(p[best]);
    if (static_cast<TokenId>(best) == Vocabulary::kEos) break;
  }
  return detail::to_result(h);
}

// Beam search over raw summed log-probabilities (no length normalization).
//
// Each step extends every live hypothesis by every token. A finished
// candidate (ending in [EOS] or reaching max_len) is set aside when it ranks
// within the top `beam` extensions of its own parent, so the hypothesis greedy
// would finish on is never dropped while its parent is live. The live set is
// refilled with the best `beam` unfinished candidates overall. Search stops
// once the best finished score beats every live score, since extensions can
// only lower a score.
template <NextTokenModel M>
DecodeResult beam_search(const M& model, std::size_t beam, std::size_t max_len) {
  if (beam == 0) throw ArgumentError("beam_search: beam must be >= 1");
  std::vector<Hypothesis> live{{{Vocabulary::kBos}, 0.0, false}};
  std::vector<Hypothesis> finished;
  for (std::size_t step = 1; step <= max_len && !live.empty(); ++step) {
    std::vector<Hypothesis> candidates;
    for (const auto& h : live) {
      const std::vector<double> p = model.next(h.ids);
      std::vector<Hypothesis> ext;
      ext.reserve(p.size());
      for (std::size_t tok = 0; tok < p.size(); ++tok) {
        Hypothesis c{h.ids, h.logprob + std::log(p[tok]), false};
        c.ids.push_back(static_cast<TokenId>(tok));
        c.finished = static_cast<TokenId>(tok) == Vocabulary::kEos || step == max_len;
        ext.push_back(std::move(c));
      }
      std::sort(ext.begin(), ext.end(), detail::better);
      for (std::size_t r = 0; r < ext.size(); ++r) {
        if (!ext[r].finished) {
          candidates.push_back(std::move(ext[r]));
        } else if (r < beam) {
          finished.push_back(std::move(ext[r]));
        }
      }
    }
    std::sort(candidates.begin(), candidates.end(), detail::better);
    if (candidates.size() > beam) candidates.resize(beam);
    live = std::move(candidates);
    if (!finished.empty() && !live.empty()) {
      const auto best_finished = std::min_element(finished.begin(), finished.end(), detail::better);
      if (best_finished->logprob > live.front().logprob) break;
    }
  }
  if (finished.empty()) {
    if (live.empty()) return {};
    return detail::to_result(*std::min_element(live.begin(), live.end(), detail::better));
  }
  return detail::to_result(*std::min_element(finished.begin(), finished.end(), detail::better));
}

// Mean whitespace word count after joining tokens with single spaces.
inline double avg_generated_words(const std::vector<std::vector<std::string>>& summaries) {
  if (summaries.empty()) throw ArgumentError("avg_generated_words: empty list");
  double total = 0.0;
  for (const auto& s : summaries) total += static_cast<double>(split_whitespace(join_tokens(s)).size());
  return total / static_cast<double>(summaries.size());
}

}  // namespace dialsum
