#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dialsum/corpus.hpp"
#include "dialsum/error.hpp"
#include "dialsum/tokenizer.hpp"

namespace dialsum {

using TokenId = int;

// Word-level token <-> id bijection. Ids 0..5 are reserved.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr TokenId kEou = 4;
  static constexpr TokenId kSep = 5;
  static constexpr int kNumSpecial = 6;

  Vocabulary() {
    for (const char* s : {"[PAD]", "[BOS]", "[EOS]", "[UNK]", "[EOU]", "[SEP]"}) add(s);
  }

  // Rebuilds from an id-ordered token list (as stored in checkpoints).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens) {
    Vocabulary v;
    if (tokens.size() < kNumSpecial) throw DataError("vocabulary is missing special tokens");
    for (int i = 0; i < kNumSpecial; ++i) {
      if (tokens[static_cast<std::size_t>(i)] != v.tokens_[static_cast<std::size_t>(i)]) {
        throw DataError("vocabulary special token mismatch at id " + std::to_string(i));
      }
    }
    for (std::size_t i = kNumSpecial; i < tokens.size(); ++i) {
      if (v.ids_.count(tokens[i])) throw DataError("duplicate vocabulary token '" + tokens[i] + "'");
      v.add(tokens[i]);
    }
    return v;
  }

  TokenId id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const { return ids_.count(token) != 0; }

  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  std::size_t size() const { return tokens_.size(); }

  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<TokenId> encode(const std::vector<std::string>& tokens) const {
    std::vector<TokenId> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(id(t));
    return out;
  }

  // Drops BOS/EOS/PAD.
  std::vector<std::string> decode(const std::vector<TokenId>& ids) const {
    std::vector<std::string> out;
    for (TokenId i : ids) {
      if (i == kPad || i == kBos || i == kEos) continue;
      out.push_back(token(i));
    }
    return out;
  }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  void add(const std::string& token) {
    ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(token);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Counts utterance tokens, speaker-name tokens and summary tokens. Tokens with
// count >= min_freq get ids by descending count, ties broken lexicographically.
inline Vocabulary build_vocab(const Corpus& corpus, int min_freq = 1) {
  if (min_freq < 1) throw ArgumentError("build_vocab: min_freq must be >= 1");
  std::map<std::string, long> counts;
  for (const auto& d : corpus.dialogues) {
    for (const auto& u : d.turns) {
      if (!u.tokens) throw PreconditionError("build_vocab: dialogue " + d.id + " is not tokenized");
      for (const auto& t : tokenize(d.speaker_name(u))) ++counts[t];
      for (const auto& t : *u.tokens) ++counts[t];
    }
    if (!d.summary_tokens) throw PreconditionError("build_vocab: summary of " + d.id + " is not tokenized");
    for (const auto& t : *d.summary_tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = Vocabulary().tokens();
  for (const auto& [tok, n] : ranked) {
    if (n < min_freq) break;
    if (std::find(tokens.begin(), tokens.begin() + Vocabulary::kNumSpecial, tok) !=
        tokens.begin() + Vocabulary::kNumSpecial) {
      continue;
    }
    tokens.push_back(tok);
  }
  return Vocabulary::from_tokens(tokens);
}

}  // namespace dialsum
