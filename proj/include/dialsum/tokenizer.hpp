#pragma once

// Chat-text tokenizer.
//
// An ordered cascade of pattern rules is tried at each token start; the first
// rule that matches wins:
//
//   1. URLs (http://, https://, www.), e-mail addresses, and attachment
//      placeholders such as <file_photo>
//   2. emoticons
//        western  [>}]? [:;=] [']? [-o^]? MOUTH+   e.g. :)  ;-)  :'(  :D  =P  :/
//        letter   [xX] [DdPp]+                     e.g. xD  XD  xP
//        hearts   <3  </3
//        eastern  EYE MOUTH? EYE                   e.g. ^_^  ^^  -_-  >_<  o_O  T_T
//   3. @-mentions
//   4. hashtags
//   5. numbers, optionally with a currency prefix, decimal/time/date
//      separators and a trailing percent sign: 4  10:30  $3.50  2:1  20%
//   6. punctuation runs: two or more of [!?.] mixed, or a repeat of one
//      punctuation character (!!  ?!  ...  --)
//   7. words with internal apostrophes (don't, i'll, rock'n'roll)
//   8. fallback: a run of word characters, else a single character
//
// Emoticons whose last character is alphanumeric must not be followed by an
// alphanumeric character (":D" is an emoticon, ":Dear" is not).

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dialsum {

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Bytes of multi-byte UTF-8 sequences count as word characters.
inline bool is_word(char c) {
  return is_alnum(c) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}

inline bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

inline bool in_set(char c, std::string_view set) { return set.find(c) != std::string_view::npos; }

inline bool starts_with_icase(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (s.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != prefix[i]) return false;
  }
  return true;
}

inline bool alnum_boundary(std::string_view s, std::size_t end) {
  return end >= s.size() || !is_alnum(s[end]);
}

inline std::size_t match_url(std::string_view s, std::size_t pos) {
  std::size_t prefix = 0;
  if (starts_with_icase(s, pos, "http://")) prefix = 7;
  else if (starts_with_icase(s, pos, "https://")) prefix = 8;
  else if (starts_with_icase(s, pos, "www.")) prefix = 4;
  if (prefix == 0) return 0;
  std::size_t end = pos + prefix;
  while (end < s.size() && !is_space(s[end])) ++end;
  while (end > pos + prefix && in_set(s[end - 1], ".,!?;:)\"'")) --end;
  if (end == pos + prefix) return 0;
  return end - pos;
}

inline std::size_t match_email(std::string_view s, std::size_t pos) {
  auto local_char = [](char c) { return is_alnum(c) || in_set(c, "._%+-"); };
  auto domain_char = [](char c) { return is_alnum(c) || c == '-'; };
  if (!is_alnum(s[pos])) return 0;
  std::size_t i = pos;
  while (i < s.size() && local_char(s[i])) ++i;
  if (i >= s.size() || s[i] != '@') return 0;
  ++i;
  std::size_t labels = 0;
  std::size_t end = 0;
  while (true) {
    std::size_t start = i;
    while (i < s.size() && domain_char(s[i])) ++i;
    if (i == start) break;
    ++labels;
    end = i;
    if (i < s.size() && s[i] == '.' && i + 1 < s.size() && domain_char(s[i + 1])) {
      ++i;
      continue;
    }
    break;
  }
  if (labels < 2) return 0;
  return end - pos;
}

// <file_photo>, <file_other>, ...
inline std::size_t match_placeholder(std::string_view s, std::size_t pos) {
  if (s[pos] != '<') return 0;
  std::size_t i = pos + 1;
  bool underscore = false;
  while (i < s.size() && (std::islower(static_cast<unsigned char>(s[i])) || s[i] == '_')) {
    underscore = underscore || s[i] == '_';
    ++i;
  }
  if (i >= s.size() || s[i] != '>' || i == pos + 1 || !underscore) return 0;
  return i + 1 - pos;
}

inline constexpr std::string_view kWesternEyes = ":;=";
inline constexpr std::string_view kWesternNoses = "-o^";
inline constexpr std::string_view kWesternMouths = ")(][DPpbOo/\\|*3$@}{<>xXSs";
inline constexpr std::string_view kEasternEyes = "^-oOT><;=@*xuU";
inline constexpr std::string_view kEasternMouths = "_.~w";

inline std::size_t match_western(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  if (i < s.size() && in_set(s[i], ">}") && i + 1 < s.size() && in_set(s[i + 1], kWesternEyes)) ++i;
  if (i >= s.size() || !in_set(s[i], kWesternEyes)) return 0;
  ++i;
  if (i < s.size() && (s[i] == '\'' || s[i] == '"')) ++i;
  auto mouth_run = [&](std::size_t from) -> std::size_t {
    if (from >= s.size() || !in_set(s[from], kWesternMouths)) return 0;
    std::size_t j = from + 1;
    while (j < s.size() && s[j] == s[from]) ++j;
    if (is_alnum(s[j - 1]) && !alnum_boundary(s, j)) return 0;
    return j;
  };
  if (i < s.size() && in_set(s[i], kWesternNoses)) {
    if (std::size_t end = mouth_run(i + 1)) return end - pos;
  }
  if (std::size_t end = mouth_run(i)) return end - pos;
  return 0;
}

inline std::size_t match_letter_face(std::string_view s, std::size_t pos) {
  if (s[pos] != 'x' && s[pos] != 'X') return 0;
  std::size_t i = pos + 1;
  if (i >= s.size() || !in_set(s[i], "DdPp")) return 0;
  const char mouth = s[i];
  while (i < s.size() && s[i] == mouth) ++i;
  if (!alnum_boundary(s, i)) return 0;
  return i - pos;
}

inline std::size_t match_heart(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  if (s[i] != '<') return 0;
  ++i;
  if (i < s.size() && s[i] == '/') ++i;
  if (i >= s.size() || s[i] != '3') return 0;
  while (i < s.size() && s[i] == '3') ++i;
  if (!alnum_boundary(s, i)) return 0;
  return i - pos;
}

inline bool eastern_pair(char left, char right) {
  if (left == right) return true;
  return (left == '>' && right == '<') || (left == 'o' && right == 'O') ||
         (left == 'O' && right == 'o');
}

inline std::size_t match_eastern(std::string_view s, std::size_t pos) {
  const char left = s[pos];
  if (!in_set(left, kEasternEyes)) return 0;
  std::size_t i = pos + 1;
  if (i >= s.size()) return 0;
  // Mouthless form: ^^ only.
  if (left == '^' && s[i] == '^') {
    return 2;
  }
  const char mouth = s[i];
  if (!in_set(mouth, kEasternMouths) || mouth == left) return 0;
  ++i;
  if (i >= s.size()) return 0;
  const char right = s[i];
  if (!in_set(right, kEasternEyes) || !eastern_pair(left, right)) return 0;
  ++i;
  if (is_alnum(right) && !alnum_boundary(s, i)) return 0;
  return i - pos;
}

inline std::size_t match_emoticon(std::string_view s, std::size_t pos) {
  if (std::size_t n = match_western(s, pos)) return n;
  if (std::size_t n = match_heart(s, pos)) return n;
  if (std::size_t n = match_eastern(s, pos)) return n;
  if (std::size_t n = match_letter_face(s, pos)) return n;
  return 0;
}

inline std::size_t match_prefixed_word(std::string_view s, std::size_t pos, char sigil) {
  if (s[pos] != sigil) return 0;
  std::size_t i = pos + 1;
  while (i < s.size() && (is_alnum(s[i]) || s[i] == '_')) ++i;
  return i > pos + 1 ? i - pos : 0;
}

inline std::size_t match_currency(std::string_view s, std::size_t pos) {
  if (s[pos] == '$') return 1;
  if (s.compare(pos, 3, "\xE2\x82\xAC") == 0) return 3;  // euro
  if (s.compare(pos, 2, "\xC2\xA3") == 0) return 2;      // pound
  return 0;
}

inline std::size_t match_number(std::string_view s, std::size_t pos) {
  std::size_t i = pos + match_currency(s, pos);
  if (i >= s.size() || !is_digit(s[i])) return 0;
  while (i < s.size() && is_digit(s[i])) ++i;
  while (i + 1 < s.size() && in_set(s[i], ".,:/") && is_digit(s[i + 1])) {
    i += 1;
    while (i < s.size() && is_digit(s[i])) ++i;
  }
  if (i < s.size() && s[i] == '%') ++i;
  return i - pos;
}

inline std::size_t match_punct_run(std::string_view s, std::size_t pos) {
  if (in_set(s[pos], "!?.")) {
    std::size_t i = pos;
    while (i < s.size() && in_set(s[i], "!?.")) ++i;
    if (i - pos >= 2) return i - pos;
  }
  if (!is_ascii_punct(s[pos])) return 0;
  std::size_t i = pos + 1;
  while (i < s.size() && s[i] == s[pos]) ++i;
  return i - pos >= 2 ? i - pos : 0;
}

inline std::size_t match_contraction(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  while (i < s.size() && is_word(s[i])) ++i;
  if (i == pos) return 0;
  std::size_t end = 0;
  while (i + 1 < s.size() && s[i] == '\'' && is_word(s[i + 1])) {
    ++i;
    while (i < s.size() && is_word(s[i])) ++i;
    end = i;
  }
  return end == 0 ? 0 : end - pos;
}

inline std::size_t match_fallback(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  while (i < s.size() && is_word(s[i])) ++i;
  return i > pos ? i - pos : 1;
}

inline bool whole(std::string_view token, std::size_t (*matcher)(std::string_view, std::size_t)) {
  return !token.empty() && matcher(token, 0) == token.size();
}

}  // namespace detail

inline std::vector<std::string> tokenize(std::string_view text) {
  using namespace detail;
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (is_space(text[pos])) {
      ++pos;
      continue;
    }
    std::size_t n = 0;
    if (!n) n = match_url(text, pos);
    if (!n) n = match_email(text, pos);
    if (!n) n = match_placeholder(text, pos);
    if (!n) n = match_emoticon(text, pos);
    if (!n) n = match_prefixed_word(text, pos, '@');
    if (!n) n = match_prefixed_word(text, pos, '#');
    if (!n) n = match_number(text, pos);
    if (!n) n = match_punct_run(text, pos);
    if (!n) n = match_contraction(text, pos);
    if (!n) n = match_fallback(text, pos);
    tokens.emplace_back(text.substr(pos, n));
    pos += n;
  }
  return tokens;
}

// Whole-token classifiers shared with the rule tagger.
inline bool is_emoticon(std::string_view token) { return detail::whole(token, detail::match_emoticon); }

inline bool is_url(std::string_view token) {
  return detail::whole(token, detail::match_url) || detail::whole(token, detail::match_email);
}

inline bool is_mention(std::string_view token) {
  return !token.empty() && token[0] == '@' && detail::match_prefixed_word(token, 0, '@') == token.size();
}

inline bool is_hashtag(std::string_view token) {
  return !token.empty() && token[0] == '#' && detail::match_prefixed_word(token, 0, '#') == token.size();
}

inline bool is_number(std::string_view token) { return detail::whole(token, detail::match_number); }

inline bool is_punctuation(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token) {
    if (!detail::is_ascii_punct(c)) return false;
  }
  return true;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

inline std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !detail::is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

}  // namespace dialsum
