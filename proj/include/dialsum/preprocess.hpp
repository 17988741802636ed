#pragma once

#include <filesystem>
#include <string>

#include "dialsum/corpus.hpp"
#include "dialsum/tagger.hpp"
#include "dialsum/tokenizer.hpp"

namespace dialsum {

// Tokenizes every turn and summary that has no tokens yet.
inline void tokenize_corpus(Corpus& corpus) {
  for (auto& d : corpus.dialogues) {
    for (auto& u : d.turns) {
      if (!u.tokens) u.tokens = tokenize(u.raw_text);
    }
    if (!d.summary_tokens) d.summary_tokens = tokenize(d.summary);
  }
}

// Tags every untagged turn. Turns that already carry tags are kept, so
// re-processing an annotated corpus is the identity.
inline void tag_corpus(Corpus& corpus, const Tagger& tagger) {
  tokenize_corpus(corpus);
  for (auto& d : corpus.dialogues) {
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      auto& u = d.turns[t];
      if (u.pos_tags) continue;
      try {
        u.pos_tags = tag(*u.tokens, tagger).tags;
      } catch (const TaggingError& e) {
        throw DataError("dialogue " + d.id + " turn " + std::to_string(t) + ": " + e.what());
      }
    }
  }
}

inline bool fully_tagged(const Corpus& corpus) {
  for (const auto& d : corpus.dialogues) {
    for (const auto& u : d.turns) {
      if (!u.tokens || !u.pos_tags) return false;
    }
  }
  return true;
}

// Attaches tags from an annotated corpus produced offline (for example by a
// stronger external tagger). Records are matched by position and id; every
// turn's token count must agree. Nothing is attached unless all records match.
inline Corpus import_tags(const Corpus& corpus, const Corpus& annotations) {
  Corpus out = corpus;
  tokenize_corpus(out);
  if (annotations.dialogues.size() != out.dialogues.size()) {
    throw DataError("annotation has " + std::to_string(annotations.dialogues.size()) +
                    " records, corpus has " + std::to_string(out.dialogues.size()));
  }
  for (std::size_t i = 0; i < out.dialogues.size(); ++i) {
    const auto& d = out.dialogues[i];
    const auto& a = annotations.dialogues[i];
    if (a.id != d.id) {
      throw DataError("annotation record " + std::to_string(i) + " has id '" + a.id +
                      "', expected '" + d.id + "'");
    }
    if (a.turns.size() != d.turns.size()) {
      throw DataError("dialogue " + d.id + ": annotation has " + std::to_string(a.turns.size()) +
                      " turns, corpus has " + std::to_string(d.turns.size()));
    }
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      const auto& at = a.turns[t];
      if (!at.pos_tags) throw DataError("dialogue " + d.id + " turn " + std::to_string(t) + ": annotation has no tags");
      if (at.pos_tags->size() != d.turns[t].tokens->size()) {
        throw DataError("dialogue " + d.id + " turn " + std::to_string(t) + ": token count mismatch (corpus " +
                        std::to_string(d.turns[t].tokens->size()) + ", annotation " +
                        std::to_string(at.pos_tags->size()) + ")");
      }
    }
  }
  for (std::size_t i = 0; i < out.dialogues.size(); ++i) {
    for (std::size_t t = 0; t < out.dialogues[i].turns.size(); ++t) {
      out.dialogues[i].turns[t].pos_tags = annotations.dialogues[i].turns[t].pos_tags;
    }
  }
  return out;
}

inline Corpus import_tags(const Corpus& corpus, const std::filesystem::path& annotated_file) {
  return import_tags(corpus, load_corpus(annotated_file, CorpusFormat::Annotated, corpus.split));
}

}  // namespace dialsum
