#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "dialsum/corpus.hpp"
#include "dialsum/error.hpp"
#include "dialsum/tagset.hpp"
#include "dialsum/tokenizer.hpp"
#include "dialsum/vocabulary.hpp"

namespace dialsum {

enum class SelectionKind { Lead, Middle, Longest, Full };

struct SelectionStrategy {
  SelectionKind kind = SelectionKind::Full;
  std::size_t n = 0;  // ignored for Full
};

inline std::string to_string(SelectionKind k) {
  switch (k) {
    case SelectionKind::Lead: return "lead";
    case SelectionKind::Middle: return "middle";
    case SelectionKind::Longest: return "longest";
    case SelectionKind::Full: return "full";
  }
  return "full";
}

inline SelectionKind parse_selection_kind(const std::string& s) {
  if (s == "lead") return SelectionKind::Lead;
  if (s == "middle") return SelectionKind::Middle;
  if (s == "longest") return SelectionKind::Longest;
  if (s == "full") return SelectionKind::Full;
  throw ArgumentError("unknown input type '" + s + "' (expected lead, middle, longest or full)");
}

inline SelectionStrategy make_strategy(SelectionKind kind, std::size_t n) {
  if (kind != SelectionKind::Full && n < 1) throw ArgumentError("selection size n must be >= 1");
  return {kind, n};
}

// Turn indices picked from turns with the given token lengths, ascending.
inline std::vector<std::size_t> select_by_lengths(const std::vector<std::size_t>& lengths,
                                                  const SelectionStrategy& strategy) {
  const std::size_t total = lengths.size();
  std::vector<std::size_t> all(total);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (strategy.kind == SelectionKind::Full || strategy.n >= total) return all;
  const std::size_t n = strategy.n;
  switch (strategy.kind) {
    case SelectionKind::Lead:
      return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n)};
    case SelectionKind::Middle: {
      const std::size_t start = (total - n) / 2;
      return {all.begin() + static_cast<std::ptrdiff_t>(start),
              all.begin() + static_cast<std::ptrdiff_t>(start + n)};
    }
    case SelectionKind::Longest: {
      // Stable sort keeps earlier turns first among equal lengths.
      std::stable_sort(all.begin(), all.end(),
                       [&](std::size_t a, std::size_t b) { return lengths[a] > lengths[b]; });
      all.resize(n);
      std::sort(all.begin(), all.end());
      return all;
    }
    case SelectionKind::Full: break;
  }
  return all;
}

inline std::vector<std::size_t> turn_lengths(const Dialogue& dialogue) {
  std::vector<std::size_t> lengths;
  lengths.reserve(dialogue.turns.size());
  for (const auto& u : dialogue.turns) {
    lengths.push_back(u.tokens ? u.tokens->size() : tokenize(u.raw_text).size());
  }
  return lengths;
}

inline std::vector<std::size_t> select(const Dialogue& dialogue, const SelectionStrategy& strategy) {
  return select_by_lengths(turn_lengths(dialogue), strategy);
}

// Flattened encoder input: per turn, speaker-name tokens, [SEP], utterance
// tokens, [EOU]. The label channel carries a tag id on utterance tokens and
// kIgnoreLabel on every structural position.
struct EncodedInput {
  std::vector<TokenId> token_ids;
  std::vector<int> label_ids;
  std::vector<std::size_t> turn_boundaries;  // positions of [EOU]

  std::size_t size() const { return token_ids.size(); }
  bool operator==(const EncodedInput&) const = default;
};

class InputTooLong : public DataError {
 public:
  using DataError::DataError;
};

// Truncation only ever drops whole trailing turns. Throws InputTooLong when
// not even the first selected turn fits in max_len.
inline EncodedInput build_input(const Dialogue& dialogue, const std::vector<std::size_t>& selected,
                                const Vocabulary& vocab, std::size_t max_len) {
  EncodedInput out;
  for (std::size_t idx : selected) {
    if (idx >= dialogue.turns.size()) {
      throw ArgumentError("build_input: turn index " + std::to_string(idx) + " out of range");
    }
    const auto& u = dialogue.turns[idx];
    if (!u.tokens || !u.pos_tags) {
      throw PreconditionError("build_input: dialogue " + dialogue.id + " turn " + std::to_string(idx) +
                              " is not tagged");
    }
    const auto name = tokenize(dialogue.speaker_name(u));
    const std::size_t turn_size = name.size() + 1 + u.tokens->size() + 1;
    if (out.size() + turn_size > max_len) break;
    for (const auto& t : name) {
      out.token_ids.push_back(vocab.id(t));
      out.label_ids.push_back(kIgnoreLabel);
    }
    out.token_ids.push_back(Vocabulary::kSep);
    out.label_ids.push_back(kIgnoreLabel);
    for (std::size_t i = 0; i < u.tokens->size(); ++i) {
      auto tag = tag_id((*u.pos_tags)[i]);
      if (!tag) throw DataError("dialogue " + dialogue.id + ": unknown tag '" + (*u.pos_tags)[i] + "'");
      out.token_ids.push_back(vocab.id((*u.tokens)[i]));
      out.label_ids.push_back(*tag);
    }
    out.turn_boundaries.push_back(out.size());
    out.token_ids.push_back(Vocabulary::kEou);
    out.label_ids.push_back(kIgnoreLabel);
  }
  if (out.token_ids.empty() && !selected.empty()) {
    throw InputTooLong("dialogue " + dialogue.id + ": first selected turn exceeds max_len " +
                       std::to_string(max_len));
  }
  return out;
}

}  // namespace dialsum
