#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dialsum/error.hpp"
#include "dialsum/tagset.hpp"
#include "dialsum/tokenizer.hpp"

namespace dialsum {

struct TaggedUtterance {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

// Raised when a tagger cannot label a token; carries the token position.
class TaggingError : public DataError {
 public:
  TaggingError(std::size_t token_index, const std::string& what)
      : DataError("tagging failed at token " + std::to_string(token_index) + ": " + what),
        token_index_(token_index) {}
  std::size_t token_index() const { return token_index_; }

 private:
  std::size_t token_index_;
};

class Tagger {
 public:
  virtual ~Tagger() = default;
  // Returns one tag symbol per token.
  virtual std::vector<std::string> tag_tokens(const std::vector<std::string>& tokens) const = 0;
};

// Closed-class word lists, keyed by tag symbol, in lookup order.
using Lexicons = std::vector<std::pair<std::string, std::vector<std::string>>>;

inline constexpr std::array<std::string_view, 10> kLexiconTags = {"O", "D", "P", "&", "T",
                                                                  "X", "L", "!", "~", "G"};

inline Lexicons builtin_lexicons() {
  return {
      {"O", {"i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself", "we", "us",
             "our", "ours", "he", "him", "his", "she", "her", "hers", "it", "its", "they",
             "them", "their", "theirs", "this", "that", "these", "those", "what", "who", "whom",
             "which", "someone", "something", "anyone", "anything", "everyone", "everything",
             "nobody", "nothing", "u", "ur"}},
      {"D", {"the", "a", "an", "some", "any", "every", "each", "no", "another", "other"}},
      {"P", {"of", "in", "on", "at", "for", "with", "from", "to", "by", "about", "into",
             "over", "under", "after", "before", "since", "until", "during", "through",
             "between", "without", "against", "than", "if", "because", "while", "as", "like",
             "near", "via"}},
      {"&", {"and", "but", "or", "nor", "so", "yet", "plus", "n"}},
      {"T", {"up", "out", "off", "down", "away", "back", "around"}},
      {"X", {"there", "both", "all", "half", "such"}},
      {"L", {"i'm", "you're", "we're", "they're", "he's", "she's", "it's", "that's", "what's",
             "who's", "there's", "here's", "i'll", "you'll", "we'll", "they'll", "he'll",
             "she'll", "it'll", "i'd", "you'd", "we'd", "they'd", "i've", "you've", "we've",
             "they've", "im", "ill", "youre", "thats", "lets", "let's"}},
      {"!", {"oh", "ah", "hey", "hi", "hello", "yes", "yeah", "yep", "no", "nope", "ok",
             "okay", "lol", "haha", "hahaha", "wow", "oops", "ugh", "hmm", "yay", "please",
             "thanks", "thx", "ty", "sure", "cool", "great", "bye", "omg"}},
      {"~", {"rt", "<file_photo>", "<file_other>", "<file_gif>", "<file_video>",
             "<file_picture>", "<photo_file>"}},
      {"G", {"btw", "idk", "imo", "imho", "tbh", "fyi", "asap", "np", "pls", "plz", "brb",
             "ttyl", "afaik", "irl", "jk", "smh", "nvm"}},
  };
}

// Reads one file per lexicon tag from `dir`; each file lists one token per line.
inline Lexicons load_lexicons(const std::filesystem::path& dir) {
  Lexicons out;
  for (std::string_view tag : kLexiconTags) {
    const auto path = dir / std::string(tag);
    std::ifstream in(path);
    if (!in) throw DataError("missing lexicon file " + path.string());
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty()) words.push_back(line);
    }
    out.emplace_back(std::string(tag), std::move(words));
  }
  return out;
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Deterministic rule tagger over the Twitter tag set.
//
// Priority: emoticon E, URL/e-mail U, mention @, hashtag #, number $,
// punctuation ",", closed-class lexicons (first list containing the
// lowercased token wins), capitalized non-initial token ^, suffixes
// (-ly R, -ed/-ing V, -ous/-ful A), otherwise N.
class LexiconRuleTagger : public Tagger {
 public:
  LexiconRuleTagger() : LexiconRuleTagger(builtin_lexicons()) {}

  explicit LexiconRuleTagger(const Lexicons& lexicons) {
    for (const auto& [tag, words] : lexicons) {
      if (!is_tag(tag)) throw ArgumentError("unknown lexicon tag '" + tag + "'");
      for (const auto& w : words) lookup_.try_emplace(ascii_lower(w), tag);
    }
  }

  std::vector<std::string> tag_tokens(const std::vector<std::string>& tokens) const override {
    std::vector<std::string> tags;
    tags.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) tags.push_back(tag_one(tokens[i], i));
    return tags;
  }

  std::string tag_one(const std::string& token, std::size_t position) const {
    if (token.empty()) throw TaggingError(position, "empty token");
    if (is_emoticon(token)) return "E";
    if (is_url(token)) return "U";
    if (is_mention(token)) return "@";
    if (is_hashtag(token)) return "#";
    if (is_number(token)) return "$";
    if (is_punctuation(token)) return ",";
    std::string lower = ascii_lower(token);
    for (std::string::size_type p; (p = lower.find("\xE2\x80\x99")) != std::string::npos;) {
      lower.replace(p, 3, "'");
    }
    if (auto it = lookup_.find(lower); it != lookup_.end()) return it->second;
    if (position > 0 && std::isupper(static_cast<unsigned char>(token[0]))) return "^";
    auto ends_with = [&](std::string_view suffix) {
      return lower.size() > suffix.size() + 1 &&
             lower.compare(lower.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with("ly")) return "R";
    if (ends_with("ed") || ends_with("ing")) return "V";
    if (ends_with("ous") || ends_with("ful")) return "A";
    return "N";
  }

 private:
  std::unordered_map<std::string, std::string> lookup_;
};

inline TaggedUtterance tag(const std::vector<std::string>& tokens, const Tagger& tagger) {
  TaggedUtterance out{tokens, tagger.tag_tokens(tokens)};
  if (out.tags.size() != tokens.size()) {
    throw TaggingError(std::min(out.tags.size(), tokens.size()),
                       "tagger returned " + std::to_string(out.tags.size()) + " tags for " +
                           std::to_string(tokens.size()) + " tokens");
  }
  for (std::size_t i = 0; i < out.tags.size(); ++i) {
    if (!is_tag(out.tags[i])) throw TaggingError(i, "unknown tag '" + out.tags[i] + "'");
  }
  return out;
}

}  // namespace dialsum
