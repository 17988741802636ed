#pragma once

// Independent reference implementations used by the unit tests and the
// acceptance binary. Each one is deliberately naive: enumeration over
// subsets, subsequences or whole output sequences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dialsum/inference.hpp"
#include "dialsum/model.hpp"
#include "dialsum/rng.hpp"

namespace oracle {

// --- input selection ---

// All k-subsets of 0..n-1 in lexicographic order.
inline std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (cur.size() == k) {
      out.push_back(cur);
      return;
    }
    for (std::size_t i = start; i < n; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// kind: "lead", "middle", "longest". Longest maximizes the summed length
// over every n-subset; the first maximizer in lexicographic order wins,
// which is the earlier-index tie-break.
inline std::vector<std::size_t> select(const std::vector<std::size_t>& lengths, const std::string& kind,
                                       std::size_t n) {
  const std::size_t L = lengths.size();
  std::vector<std::size_t> out;
  if (n >= L) {
    for (std::size_t i = 0; i < L; ++i) out.push_back(i);
    return out;
  }
  if (kind == "lead") {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
  } else if (kind == "middle") {
    const std::size_t start = static_cast<std::size_t>(std::floor((static_cast<double>(L) - static_cast<double>(n)) / 2.0));
    for (std::size_t i = start; i < start + n; ++i) out.push_back(i);
  } else {
    long best = -1;
    for (const auto& s : subsets(L, n)) {
      long sum = 0;
      for (std::size_t i : s) sum += static_cast<long>(lengths[i]);
      if (sum > best) {
        best = sum;
        out = s;
      }
    }
  }
  return out;
}

// --- ROUGE ---

// Counts every n-gram by direct comparison against every window.
inline double clipped_overlap(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                              std::size_t n, double& cand_total, double& ref_total) {
  auto windows = [n](const std::vector<std::string>& x) {
    std::vector<std::vector<std::string>> w;
    for (std::size_t i = 0; i + n <= x.size(); ++i) w.emplace_back(x.begin() + i, x.begin() + i + n);
    return w;
  };
  const auto cw = windows(cand), rw = windows(ref);
  cand_total = static_cast<double>(cw.size());
  ref_total = static_cast<double>(rw.size());
  std::vector<bool> used(rw.size(), false);
  double overlap = 0;
  // Greedy matching of windows is exact for multiset intersection.
  for (const auto& g : cw) {
    for (std::size_t j = 0; j < rw.size(); ++j) {
      if (!used[j] && rw[j] == g) {
        used[j] = true;
        overlap += 1;
        break;
      }
    }
  }
  return overlap;
}

struct PRF {
  double p = 0, r = 0, f = 0;
};

inline PRF prf(double overlap, double cand_total, double ref_total) {
  PRF s;
  if (cand_total == 0 || ref_total == 0) return s;
  s.p = overlap / cand_total;
  s.r = overlap / ref_total;
  if (s.p + s.r > 0) s.f = 2 * s.p * s.r / (s.p + s.r);
  return s;
}

inline PRF rouge_n(const std::vector<std::string>& cand, const std::vector<std::string>& ref, std::size_t n) {
  double ct = 0, rt = 0;
  const double o = clipped_overlap(cand, ref, n, ct, rt);
  return prf(o, ct, rt);
}

// Longest common subsequence by enumerating every subsequence of `a`
// (|a| <= 16) and testing whether it is a subsequence of `b`.
inline std::size_t lcs_brute(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t best = 0;
  const std::uint32_t limit = 1u << a.size();
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    const auto bits = static_cast<std::size_t>(__builtin_popcount(mask));
    if (bits <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else ++j;
    }
    if (ok) best = bits;
  }
  return best;
}

inline PRF rouge_l(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return {};
  const double l = static_cast<double>(lcs_brute(cand, ref));
  return prf(l, static_cast<double>(cand.size()), static_cast<double>(ref.size()));
}

inline std::vector<std::string> random_tokens(dialsum::Rng& rng, std::size_t max_len, std::size_t alphabet) {
  std::vector<std::string> out;
  const std::size_t n = rng.below(max_len + 1);
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(1, static_cast<char>('a' + rng.below(alphabet))));
  return out;
}

// --- decoding ---

// A fixed random next-token table indexed by the whole prefix, so every
// prefix gets its own distribution.
class TableModel {
 public:
  TableModel(std::size_t vocab, std::uint64_t seed, double eos_bias = 0.0)
      : vocab_(vocab), seed_(seed), eos_bias_(eos_bias) {}

  std::vector<double> next(std::span<const dialsum::TokenId> prefix) const {
    std::vector<dialsum::TokenId> key(prefix.begin(), prefix.end());
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::uint64_t h = seed_;
    for (auto t : key) h = h * 1000003u + static_cast<std::uint64_t>(t) + 1;
    dialsum::Rng rng(h);
    std::vector<double> p(vocab_);
    double z = 0;
    for (std::size_t i = 0; i < vocab_; ++i) {
      // quantized weights make exact ties common
      p[i] = 1.0 + static_cast<double>(rng.below(4));
      if (static_cast<dialsum::TokenId>(i) == dialsum::Vocabulary::kEos) p[i] += eos_bias_;
      z += p[i];
    }
    for (auto& v : p) v /= z;
    cache_.emplace(key, p);
    return p;
  }

 private:
  std::size_t vocab_;
  std::uint64_t seed_;
  double eos_bias_;
  mutable std::map<std::vector<dialsum::TokenId>, std::vector<double>> cache_;
};

struct Scored {
  std::vector<dialsum::TokenId> ids;  // generated tokens including a final EOS if present
  double logprob = -INFINITY;
};

// Highest-scoring complete sequence: ends in EOS within max_len tokens, or
// reaches max_len without EOS. Ties go to the smaller token sequence.
template <typename M>
Scored exhaustive_best(const M& model, std::size_t max_len) {
  Scored best;
  std::vector<dialsum::TokenId> prefix{dialsum::Vocabulary::kBos};
  std::function<void(double)> rec = [&](double lp) {
    const std::size_t generated = prefix.size() - 1;
    const bool ended = generated > 0 && prefix.back() == dialsum::Vocabulary::kEos;
    if (ended || generated == max_len) {
      std::vector<dialsum::TokenId> full(prefix.begin(), prefix.end());
      if (lp > best.logprob || (lp == best.logprob && full < best.ids)) {
        best.logprob = lp;
        best.ids = full;
      }
      return;
    }
    const auto p = model.next(prefix);
    for (std::size_t t = 0; t < p.size(); ++t) {
      prefix.push_back(static_cast<dialsum::TokenId>(t));
      rec(lp + std::log(p[t]));
      prefix.pop_back();
    }
  };
  rec(0.0);
  return best;
}

// --- Adam ---

struct ScalarAdam {
  double m = 0, v = 0, p = 0;
  long t = 0;
  void step(double g, double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, static_cast<double>(t)));
    const double vh = v / (1 - std::pow(b2, static_cast<double>(t)));
    p -= lr * mh / (std::sqrt(vh) + eps);
  }
};

// --- gradients ---

// Central finite differences of f with respect to every entry of every
// parameter tensor, compared with `analytic` via
// ||a - n|| / max(||a||, ||n||, floor) per tensor. The floor keeps tensors
// whose true gradient is identically zero (attention key biases) from
// turning rounding noise into a relative error of 1. Returns the worst
// tensor's error.
struct GradCheck {
  double worst = 0.0;
  std::string worst_tensor;
};

template <typename F>
GradCheck finite_difference_check(dialsum::ModelParameters<double>& params,
                                  const dialsum::ModelParameters<double>& analytic, F&& loss, double h,
                                  double norm_floor = 1e-8) {
  GradCheck out;
  auto p = params.tensors();
  auto a = analytic.tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto& m = *p[k].second;
    dialsum::Matrix<double> numeric(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double orig = m.data()[i];
      m.data()[i] = orig + h;
      const double up = loss();
      m.data()[i] = orig - h;
      const double down = loss();
      m.data()[i] = orig;
      numeric.data()[i] = (up - down) / (2 * h);
    }
    const double na = a[k].second->norm(), nn = numeric.norm();
    const double err = (*a[k].second - numeric).norm() / std::max({na, nn, norm_floor});
    if (err > out.worst) {
      out.worst = err;
      out.worst_tensor = p[k].first;
    }
  }
  return out;
}

}  // namespace oracle
