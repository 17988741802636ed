#pragma once

// ROUGE-N and ROUGE-L with precision, recall and F1.
//
// Texts are compared after lowercasing and whitespace tokenization; corpus
// scores are unweighted means of per-pair scores.

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dialsum/error.hpp"
#include "dialsum/tagger.hpp"
#include "dialsum/tokenizer.hpp"

namespace dialsum {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline RougeScore make_score(double precision, double recall) {
  RougeScore s{precision, recall, 0.0};
  if (precision + recall > 0.0) s.f1 = 2.0 * precision * recall / (precision + recall);
  return s;
}

// Lowercased whitespace tokens.
inline std::vector<std::string> rouge_tokens(std::string_view text) {
  return split_whitespace(ascii_lower(text));
}

inline std::map<std::vector<std::string>, long> ngram_counts(const std::vector<std::string>& tokens,
                                                             std::size_t n) {
  std::map<std::vector<std::string>, long> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

inline RougeScore rouge_n(const std::vector<std::string>& candidate,
                          const std::vector<std::string>& reference, std::size_t n) {
  if (n < 1) throw ArgumentError("rouge_n: n must be >= 1");
  const auto cand = ngram_counts(candidate, n);
  const auto ref = ngram_counts(reference, n);
  long cand_total = 0, ref_total = 0, overlap = 0;
  for (const auto& [g, c] : cand) cand_total += c;
  for (const auto& [g, c] : ref) {
    ref_total += c;
    if (auto it = cand.find(g); it != cand.end()) overlap += std::min(c, it->second);
  }
  if (cand_total == 0 || ref_total == 0) return {};
  return make_score(static_cast<double>(overlap) / static_cast<double>(cand_total),
                    static_cast<double>(overlap) / static_cast<double>(ref_total));
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline RougeScore rouge_l(const std::vector<std::string>& candidate,
                          const std::vector<std::string>& reference) {
  if (candidate.empty() || reference.empty()) return {};
  const double l = static_cast<double>(lcs_length(candidate, reference));
  return make_score(l / static_cast<double>(candidate.size()), l / static_cast<double>(reference.size()));
}

struct CorpusRouge {
  RougeScore rouge1, rouge2, rougeL;
};

using TokenPair = std::pair<std::vector<std::string>, std::vector<std::string>>;

inline CorpusRouge corpus_rouge(const std::vector<TokenPair>& pairs) {
  if (pairs.empty()) throw ArgumentError("corpus_rouge: no pairs");
  CorpusRouge acc;
  auto add = [](RougeScore& into, const RougeScore& s) {
    into.precision += s.precision;
    into.recall += s.recall;
    into.f1 += s.f1;
  };
  for (const auto& [cand, ref] : pairs) {
    add(acc.rouge1, rouge_n(cand, ref, 1));
    add(acc.rouge2, rouge_n(cand, ref, 2));
    add(acc.rougeL, rouge_l(cand, ref));
  }
  const double n = static_cast<double>(pairs.size());
  for (RougeScore* s : {&acc.rouge1, &acc.rouge2, &acc.rougeL}) {
    s->precision /= n;
    s->recall /= n;
    s->f1 /= n;
  }
  return acc;
}

struct SystemReport {
  std::string system;
  std::string type;
  CorpusRouge scores;
};

// Rows are systems; columns are R-1, R-2, R-L each as F/P/R. BertScore needs
// pretrained embeddings and is always reported as "-".
inline void write_rouge_table(std::ostream& os, const std::vector<SystemReport>& rows) {
  os << std::left << std::setw(24) << "Model" << std::setw(10) << "Type" << std::right;
  for (const char* m : {"R1-F", "R1-P", "R1-R", "R2-F", "R2-P", "R2-R", "RL-F", "RL-P", "RL-R"}) {
    os << std::setw(7) << m;
  }
  os << std::setw(11) << "BertScore" << "\n";
  os << std::fixed << std::setprecision(3);
  for (const auto& r : rows) {
    os << std::left << std::setw(24) << r.system << std::setw(10) << (r.type.empty() ? "-" : r.type)
       << std::right;
    for (const RougeScore* s : {&r.scores.rouge1, &r.scores.rouge2, &r.scores.rougeL}) {
      os << std::setw(7) << s->f1 << std::setw(7) << s->precision << std::setw(7) << s->recall;
    }
    os << std::setw(11) << "-" << "\n";
  }
  os.unsetf(std::ios::floatfield);
}

inline std::string rouge_csv(const std::vector<SystemReport>& rows) {
  std::ostringstream os;
  os << "system,type,r1_f,r1_p,r1_r,r2_f,r2_p,r2_r,rl_f,rl_p,rl_r,bertscore\n";
  os << std::setprecision(6);
  for (const auto& r : rows) {
    os << r.system << ',' << r.type;
    for (const RougeScore* s : {&r.scores.rouge1, &r.scores.rouge2, &r.scores.rougeL}) {
      os << ',' << s->f1 << ',' << s->precision << ',' << s->recall;
    }
    os << ",\n";
  }
  return os.str();
}

}  // namespace dialsum
