#pragma once

// Dialogue data model, corpus file formats and corpus statistics.
//
// Two on-disk formats are supported:
//   raw-chat   JSON array of {"id", "dialogue", "summary"}; the dialogue is a
//              block of newline-separated "Name: message" lines
//   annotated  JSON Lines, one dialogue per line:
//              {"id", "turns": [{"speaker", "tokens", "tags"}], "summary_tokens"}
//              with optional "text" per turn and "summary" per dialogue.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialsum/error.hpp"
#include "dialsum/tagset.hpp"
#include "dialsum/tokenizer.hpp"

namespace dialsum {

struct Speaker {
  int id = 0;
  std::string name;
  bool operator==(const Speaker&) const = default;
};

struct Utterance {
  int speaker_id = 0;
  std::string raw_text;
  std::optional<std::vector<std::string>> tokens;
  std::optional<std::vector<std::string>> pos_tags;
  bool operator==(const Utterance&) const = default;
};

struct Dialogue {
  std::string id;
  std::vector<Speaker> speakers;  // scoped to this dialogue
  std::vector<Utterance> turns;
  std::string summary;
  std::optional<std::vector<std::string>> summary_tokens;

  const std::string& speaker_name(const Utterance& u) const {
    return speakers.at(static_cast<std::size_t>(u.speaker_id)).name;
  }

  // Returns the id for `name`, registering a new speaker on first sight.
  int intern_speaker(const std::string& name) {
    for (const auto& s : speakers) {
      if (s.name == name) return s.id;
    }
    speakers.push_back({static_cast<int>(speakers.size()), name});
    return speakers.back().id;
  }

  bool operator==(const Dialogue&) const = default;
};

enum class Split { Train, Dev, Test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "train";
}

struct Corpus {
  Split split = Split::Train;
  std::vector<Dialogue> dialogues;
  bool operator==(const Corpus&) const = default;
};

enum class CorpusFormat { RawChat, Annotated };

// .jsonl is annotated, everything else raw-chat.
inline CorpusFormat guess_format(const std::filesystem::path& path) {
  return path.extension() == ".jsonl" ? CorpusFormat::Annotated : CorpusFormat::RawChat;
}

namespace detail {

inline std::string record_error(std::size_t index, const std::string& field, const std::string& what) {
  return "record " + std::to_string(index) + ", field '" + field + "': " + what;
}

inline const nlohmann::json& require_field(const nlohmann::json& obj, std::size_t index,
                                           const std::string& field) {
  if (!obj.is_object()) throw DataError(record_error(index, "<record>", "expected an object"));
  auto it = obj.find(field);
  if (it == obj.end()) throw DataError(record_error(index, field, "missing"));
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, std::size_t index, const std::string& field) {
  const auto& v = require_field(obj, index, field);
  if (!v.is_string()) throw DataError(record_error(index, field, "expected a string"));
  return v.get<std::string>();
}

inline std::vector<std::string> require_string_list(const nlohmann::json& v, std::size_t index,
                                                    const std::string& field) {
  if (!v.is_array()) throw DataError(record_error(index, field, "expected an array of strings"));
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_string()) throw DataError(record_error(index, field, "expected an array of strings"));
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline void check_unique_ids(const Corpus& c) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < c.dialogues.size(); ++i) {
    if (!seen.insert(c.dialogues[i].id).second) {
      throw DataError(record_error(i, "id", "duplicate dialogue id '" + c.dialogues[i].id + "'"));
    }
  }
}

}  // namespace detail

// Parses the "Name: message" block of one raw-chat record. Each nonblank line
// is split at the first ": "; a line without the separator continues the
// previous utterance.
inline std::vector<std::pair<std::string, std::string>> parse_chat_lines(const std::string& text,
                                                                         std::size_t record) {
  std::vector<std::pair<std::string, std::string>> turns;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto sep = line.find(": ");
    if (sep == std::string::npos) {
      if (turns.empty()) {
        throw DataError(detail::record_error(record, "dialogue", "first line has no 'Name: ' prefix"));
      }
      turns.back().second += "\n" + line;
      continue;
    }
    std::string name = detail::trim(line.substr(0, sep));
    if (name.empty()) throw DataError(detail::record_error(record, "dialogue", "empty speaker name"));
    turns.emplace_back(std::move(name), line.substr(sep + 2));
  }
  return turns;
}

inline Corpus parse_raw_chat(const std::string& content, Split split = Split::Train) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw DataError("raw-chat corpus must be a JSON array");
  if (doc.empty()) throw DataError("empty corpus");
  Corpus corpus{split, {}};
  corpus.dialogues.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    Dialogue d;
    const auto& id = detail::require_field(rec, i, "id");
    if (id.is_string()) d.id = id.get<std::string>();
    else if (id.is_number_integer()) d.id = std::to_string(id.get<long long>());
    else throw DataError(detail::record_error(i, "id", "expected a string"));
    for (auto& [name, text] : parse_chat_lines(detail::require_string(rec, i, "dialogue"), i)) {
      Utterance u;
      u.speaker_id = d.intern_speaker(name);
      u.raw_text = std::move(text);
      d.turns.push_back(std::move(u));
    }
    if (d.turns.empty()) throw DataError(detail::record_error(i, "dialogue", "no turns"));
    d.summary = detail::require_string(rec, i, "summary");
    corpus.dialogues.push_back(std::move(d));
  }
  detail::check_unique_ids(corpus);
  return corpus;
}

inline Corpus parse_annotated(const std::string& content, Split split = Split::Train) {
  Corpus corpus{split, {}};
  std::istringstream in(content);
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(detail::record_error(index, "<record>", std::string("invalid JSON: ") + e.what()));
    }
    Dialogue d;
    d.id = detail::require_string(rec, index, "id");
    const auto& turns = detail::require_field(rec, index, "turns");
    if (!turns.is_array() || turns.empty()) {
      throw DataError(detail::record_error(index, "turns", "expected a non-empty array"));
    }
    for (std::size_t t = 0; t < turns.size(); ++t) {
      const std::string prefix = "turns[" + std::to_string(t) + "].";
      const auto& turn = turns[t];
      if (!turn.is_object()) throw DataError(detail::record_error(index, "turns[" + std::to_string(t) + "]", "expected an object"));
      auto sp = turn.find("speaker");
      if (sp == turn.end() || !sp->is_string() || sp->get<std::string>().empty()) {
        throw DataError(detail::record_error(index, prefix + "speaker", "expected a non-empty string"));
      }
      auto tk = turn.find("tokens");
      if (tk == turn.end()) throw DataError(detail::record_error(index, prefix + "tokens", "missing"));
      Utterance u;
      u.speaker_id = d.intern_speaker(sp->get<std::string>());
      u.tokens = detail::require_string_list(*tk, index, prefix + "tokens");
      if (u.tokens->empty()) throw DataError(detail::record_error(index, prefix + "tokens", "empty"));
      if (auto tg = turn.find("tags"); tg != turn.end()) {
        u.pos_tags = detail::require_string_list(*tg, index, prefix + "tags");
        if (u.pos_tags->size() != u.tokens->size()) {
          throw DataError(detail::record_error(index, prefix + "tags", "length differs from tokens"));
        }
        for (const auto& tag : *u.pos_tags) {
          if (!is_tag(tag)) throw DataError(detail::record_error(index, prefix + "tags", "unknown tag '" + tag + "'"));
        }
      }
      if (auto tx = turn.find("text"); tx != turn.end() && tx->is_string()) {
        u.raw_text = tx->get<std::string>();
      } else {
        u.raw_text = join_tokens(*u.tokens);
      }
      d.turns.push_back(std::move(u));
    }
    d.summary_tokens = detail::require_string_list(detail::require_field(rec, index, "summary_tokens"),
                                                   index, "summary_tokens");
    if (auto sm = rec.find("summary"); sm != rec.end() && sm->is_string()) {
      d.summary = sm->get<std::string>();
    } else {
      d.summary = join_tokens(*d.summary_tokens);
    }
    corpus.dialogues.push_back(std::move(d));
    ++index;
  }
  if (corpus.dialogues.empty()) throw DataError("empty corpus");
  detail::check_unique_ids(corpus);
  return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                          Split split = Split::Train) {
  const std::string content = detail::read_file(path);
  return format == CorpusFormat::RawChat ? parse_raw_chat(content, split)
                                         : parse_annotated(content, split);
}

inline Corpus load_corpus(const std::filesystem::path& path, Split split = Split::Train) {
  return load_corpus(path, guess_format(path), split);
}

inline std::string serialize_raw_chat(const Corpus& corpus) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& d : corpus.dialogues) {
    std::string text;
    for (std::size_t i = 0; i < d.turns.size(); ++i) {
      if (i) text += '\n';
      text += d.speaker_name(d.turns[i]) + ": " + d.turns[i].raw_text;
    }
    doc.push_back({{"id", d.id}, {"dialogue", text}, {"summary", d.summary}});
  }
  return doc.dump(2) + "\n";
}

inline nlohmann::ordered_json annotated_record(const Dialogue& d) {
  nlohmann::ordered_json turns = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < d.turns.size(); ++t) {
    const auto& u = d.turns[t];
    if (!u.tokens) {
      throw PreconditionError("dialogue " + d.id + " turn " + std::to_string(t) + " is not tokenized");
    }
    nlohmann::ordered_json turn = {{"speaker", d.speaker_name(u)}, {"tokens", *u.tokens}};
    if (u.pos_tags) turn["tags"] = *u.pos_tags;
    turn["text"] = u.raw_text;
    turns.push_back(std::move(turn));
  }
  if (!d.summary_tokens) throw PreconditionError("dialogue " + d.id + " summary is not tokenized");
  return {{"id", d.id}, {"turns", turns}, {"summary_tokens", *d.summary_tokens}, {"summary", d.summary}};
}

inline std::string serialize_annotated(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus.dialogues) out += annotated_record(d).dump() + "\n";
  return out;
}

// Writes to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format) {
  write_file_atomic(path, format == CorpusFormat::RawChat ? serialize_raw_chat(corpus)
                                                          : serialize_annotated(corpus));
}

// ---------------------------------------------------------------------------
// Statistics

struct RangeStat {
  double mean = 0.0;
  long min = 0;
  long max = 0;
};

struct CorpusStats {
  Split split = Split::Train;
  std::size_t conversations = 0;
  RangeStat summary_length;
  RangeStat speakers;
  RangeStat turns;
};

namespace detail {

inline RangeStat range_of(const std::vector<long>& xs) {
  RangeStat r;
  if (xs.empty()) return r;
  long double sum = 0;
  for (long x : xs) sum += x;
  r.mean = static_cast<double>(sum / static_cast<long double>(xs.size()));
  auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  r.min = *lo;
  r.max = *hi;
  return r;
}

}  // namespace detail

// Summary length counts whitespace-separated words of the raw summary.
inline CorpusStats compute_stats(const Corpus& corpus) {
  if (corpus.dialogues.empty()) throw ArgumentError("compute_stats: empty corpus");
  std::vector<long> lengths, speakers, turns;
  for (const auto& d : corpus.dialogues) {
    const std::string summary = d.summary.empty() && d.summary_tokens ? join_tokens(*d.summary_tokens) : d.summary;
    lengths.push_back(static_cast<long>(split_whitespace(summary).size()));
    std::set<std::string> names;
    for (const auto& u : d.turns) names.insert(d.speaker_name(u));
    speakers.push_back(static_cast<long>(names.size()));
    turns.push_back(static_cast<long>(d.turns.size()));
  }
  return {corpus.split, corpus.dialogues.size(), detail::range_of(lengths),
          detail::range_of(speakers), detail::range_of(turns)};
}

// Number of dialogues per turn-count bin, keyed by the bin's lower bound.
inline std::map<long, std::size_t> utterance_density(const Corpus& corpus, long bin_width) {
  if (bin_width < 1) throw ArgumentError("utterance_density: bin_width must be >= 1");
  std::map<long, std::size_t> bins;
  for (const auto& d : corpus.dialogues) {
    const long n = static_cast<long>(d.turns.size());
    ++bins[(n / bin_width) * bin_width];
  }
  return bins;
}

inline void write_stats_table(std::ostream& os, const std::vector<CorpusStats>& rows) {
  auto range = [](const RangeStat& r) {
    return "[" + std::to_string(r.min) + ", " + std::to_string(r.max) + "]";
  };
  os << std::left << std::setw(7) << "split" << std::right << std::setw(8) << "# Conv"
     << std::setw(9) << "S.L" << std::setw(11) << "range" << std::setw(9) << "# Spk"
     << std::setw(11) << "range" << std::setw(9) << "# Turns" << std::setw(11) << "range" << "\n";
  os << std::fixed << std::setprecision(2);
  for (const auto& s : rows) {
    os << std::left << std::setw(7) << to_string(s.split) << std::right << std::setw(8)
       << s.conversations << std::setw(9) << s.summary_length.mean << std::setw(11)
       << range(s.summary_length) << std::setw(9) << s.speakers.mean << std::setw(11)
       << range(s.speakers) << std::setw(9) << s.turns.mean << std::setw(11) << range(s.turns)
       << "\n";
  }
  os.unsetf(std::ios::floatfield);
}

inline std::string stats_csv(const std::vector<CorpusStats>& rows) {
  std::ostringstream os;
  os << "split,n_conv,sl_mean,sl_min,sl_max,spk_mean,spk_min,spk_max,turn_mean,turn_min,turn_max\n";
  os << std::setprecision(6);
  for (const auto& s : rows) {
    os << to_string(s.split) << ',' << s.conversations << ',' << s.summary_length.mean << ','
       << s.summary_length.min << ',' << s.summary_length.max << ',' << s.speakers.mean << ','
       << s.speakers.min << ',' << s.speakers.max << ',' << s.turns.mean << ',' << s.turns.min
       << ',' << s.turns.max << '\n';
  }
  return os.str();
}

}  // namespace dialsum
