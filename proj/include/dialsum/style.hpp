#pragma once

// Speaker styles: per-speaker tag documents, tf-idf weighting, K-means
// grouping, a 2-D PCA projection and std-ranked tag features.

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dialsum/corpus.hpp"
#include "dialsum/error.hpp"
#include "dialsum/rng.hpp"
#include "dialsum/tagset.hpp"

namespace dialsum {

using TagCounts = std::array<long, kNumTags>;

struct StyleDocument {
  std::string speaker;
  TagCounts counts{};
  long total = 0;
};

// One document per speaker name over the whole corpus, sorted by name.
inline std::vector<StyleDocument> build_styles(const Corpus& corpus) {
  std::map<std::string, StyleDocument> by_name;
  for (const auto& d : corpus.dialogues) {
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      const auto& u = d.turns[t];
      if (!u.pos_tags) {
        throw PreconditionError("build_styles: dialogue " + d.id + " turn " + std::to_string(t) + " is not tagged");
      }
      const std::string& name = d.speaker_name(u);
      auto& doc = by_name[name];
      doc.speaker = name;
      for (const auto& sym : *u.pos_tags) {
        const auto id = tag_id(sym);
        if (!id) continue;  // structural or unknown labels carry no style signal
        ++doc.counts[static_cast<std::size_t>(*id)];
        ++doc.total;
      }
    }
  }
  std::vector<StyleDocument> out;
  for (auto& [name, doc] : by_name) {
    if (doc.total > 0) out.push_back(std::move(doc));
  }
  return out;
}

inline std::array<double, kNumTags> idf(const std::vector<StyleDocument>& styles) {
  std::array<double, kNumTags> out{};
  const double n = static_cast<double>(styles.size());
  for (int j = 0; j < kNumTags; ++j) {
    long df = 0;
    for (const auto& s : styles) df += s.counts[static_cast<std::size_t>(j)] > 0 ? 1 : 0;
    out[static_cast<std::size_t>(j)] = std::max(0.0, std::log(n / (1.0 + static_cast<double>(df))));
  }
  return out;
}

// W_ij = (count_ij / T_i) * max(0, ln(n / (1 + df_j))).
// Rows follow the style list, columns the tag set order.
inline Eigen::MatrixXd tfidf(const std::vector<StyleDocument>& styles) {
  if (styles.empty()) throw ArgumentError("tfidf: no styles");
  const auto w = idf(styles);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(styles.size()), kNumTags);
  for (std::size_t i = 0; i < styles.size(); ++i) {
    if (styles[i].total < 1) throw ArgumentError("tfidf: style " + styles[i].speaker + " has no tags");
    for (int j = 0; j < kNumTags; ++j) {
      const double tf = static_cast<double>(styles[i].counts[static_cast<std::size_t>(j)]) /
                        static_cast<double>(styles[i].total);
      m(static_cast<Eigen::Index>(i), j) = tf * w[static_cast<std::size_t>(j)];
    }
  }
  return m;
}

struct ClusterAssignment {
  std::vector<int> cluster;  // per row
  Eigen::MatrixXd centroids;  // K x columns
  std::vector<double> distortion;  // after each assignment step
  int iterations = 0;
};

namespace detail {

inline int nearest(const Eigen::MatrixXd& centroids, const Eigen::RowVectorXd& x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
    const double dist = (centroids.row(k) - x).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best = static_cast<int>(k);
    }
  }
  return best;
}

inline double distortion(const Eigen::MatrixXd& x, const Eigen::MatrixXd& c, const std::vector<int>& a) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) s += (x.row(i) - c.row(a[static_cast<std::size_t>(i)])).squaredNorm();
  return s;
}

}  // namespace detail

// Lloyd's algorithm from K distinct seeded rows. An empty cluster keeps its
// previous centroid.
inline ClusterAssignment kmeans(const Eigen::MatrixXd& x, int k, std::uint64_t seed, int max_iter = 100) {
  const auto n = static_cast<int>(x.rows());
  if (k < 1) throw ArgumentError("kmeans: K must be >= 1");
  if (k > n) throw ArgumentError("kmeans: K=" + std::to_string(k) + " exceeds " + std::to_string(n) + " rows");
  if (max_iter < 1) throw ArgumentError("kmeans: max_iter must be >= 1");

  std::vector<int> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng(seed);
  rng.shuffle(rows);
  ClusterAssignment out;
  out.centroids.resize(k, x.cols());
  for (int c = 0; c < k; ++c) out.centroids.row(c) = x.row(rows[static_cast<std::size_t>(c)]);

  out.cluster.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const int c = detail::nearest(out.centroids, x.row(i));
      if (c != out.cluster[static_cast<std::size_t>(i)]) {
        out.cluster[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    out.distortion.push_back(detail::distortion(x, out.centroids, out.cluster));
    out.iterations = it + 1;
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      sums.row(out.cluster[static_cast<std::size_t>(i)]) += x.row(i);
      ++sizes[static_cast<std::size_t>(out.cluster[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) out.centroids.row(c) = sums.row(c) / sizes[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

struct Projection2D {
  Eigen::MatrixXd coords;      // rows x 2
  Eigen::MatrixXd components;  // columns x 2, orthonormal
  std::array<double, 2> explained{};
};

// Top-2 principal directions of the mean-centered rows via SVD.
inline Projection2D pca_2d(const Eigen::MatrixXd& x) {
  if (x.rows() < 3) throw ArgumentError("pca_2d: need at least 3 rows");
  if (x.cols() < 2) throw ArgumentError("pca_2d: need at least 2 columns");
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const double total = s.squaredNorm();
  if (!(total > 1e-24)) throw DegenerateDataError("pca_2d: zero variance");
  Projection2D p;
  p.components = svd.matrixV().leftCols(2);
  for (int c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    p.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (p.components(arg, c) < 0) p.components.col(c) *= -1.0;
    p.explained[static_cast<std::size_t>(c)] = c < s.size() ? s(c) * s(c) / total : 0.0;
  }
  p.coords = centered * p.components;
  return p;
}

struct FeatureRank {
  int tag = 0;
  std::vector<double> cluster_means;
  double stdev = 0.0;
};

// Per tag: mean weight within each cluster, then the sample std of the K
// means. Sorted by std descending, ties by tag order.
inline std::vector<FeatureRank> rank_features_by_std(const std::vector<int>& cluster, int k,
                                                     const Eigen::MatrixXd& w, std::size_t top_k) {
  if (cluster.size() != static_cast<std::size_t>(w.rows())) {
    throw ArgumentError("rank_features_by_std: assignment does not cover the matrix rows");
  }
  if (k < 1) throw ArgumentError("rank_features_by_std: K must be >= 1");
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int c : cluster) {
    if (c < 0 || c >= k) throw ArgumentError("rank_features_by_std: cluster id out of range");
    ++sizes[static_cast<std::size_t>(c)];
  }
  std::vector<FeatureRank> out;
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    FeatureRank f;
    f.tag = static_cast<int>(j);
    f.cluster_means.assign(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < cluster.size(); ++i) {
      f.cluster_means[static_cast<std::size_t>(cluster[i])] += w(static_cast<Eigen::Index>(i), j);
    }
    std::vector<double> present;
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] == 0) continue;
      f.cluster_means[static_cast<std::size_t>(c)] /= sizes[static_cast<std::size_t>(c)];
      present.push_back(f.cluster_means[static_cast<std::size_t>(c)]);
    }
    if (present.size() > 1) {
      const double mean = std::accumulate(present.begin(), present.end(), 0.0) / static_cast<double>(present.size());
      double ss = 0.0;
      for (double v : present) ss += (v - mean) * (v - mean);
      f.stdev = std::sqrt(ss / static_cast<double>(present.size() - 1));
    }
    out.push_back(std::move(f));
  }
  std::stable_sort(out.begin(), out.end(), [](const FeatureRank& a, const FeatureRank& b) { return a.stdev > b.stdev; });
  if (out.size() > top_k) out.resize(top_k);
  return out;
}

// CSV writers for the analyze-styles outputs.

namespace detail {
inline std::ostringstream csv_stream() {
  std::ostringstream os;
  os << std::setprecision(10);
  return os;
}

// Speaker names may contain commas or quotes.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void tag_header(std::ostream& os) {
  for (auto sym : kTagSymbols) os << ',' << csv_field(std::string(sym));
  os << '\n';
}
}  // namespace detail

inline std::string styles_csv(const std::vector<StyleDocument>& styles) {
  auto os = detail::csv_stream();
  os << "speaker,T";
  detail::tag_header(os);
  for (const auto& s : styles) {
    os << detail::csv_field(s.speaker) << ',' << s.total;
    for (long c : s.counts) os << ',' << c;
    os << '\n';
  }
  return os.str();
}

inline std::string tfidf_csv(const std::vector<StyleDocument>& styles, const Eigen::MatrixXd& w) {
  auto os = detail::csv_stream();
  os << "speaker";
  detail::tag_header(os);
  for (std::size_t i = 0; i < styles.size(); ++i) {
    os << detail::csv_field(styles[i].speaker);
    for (Eigen::Index j = 0; j < w.cols(); ++j) os << ',' << w(static_cast<Eigen::Index>(i), j);
    os << '\n';
  }
  return os.str();
}

inline std::string clusters_csv(const std::vector<StyleDocument>& styles, const std::vector<int>& cluster) {
  auto os = detail::csv_stream();
  os << "speaker,cluster\n";
  for (std::size_t i = 0; i < styles.size(); ++i) os << detail::csv_field(styles[i].speaker) << ',' << cluster[i] << '\n';
  return os.str();
}

inline std::string pca_csv(const std::vector<StyleDocument>& styles, const Projection2D& p) {
  auto os = detail::csv_stream();
  os << "speaker,x,y\n";
  for (std::size_t i = 0; i < styles.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    os << detail::csv_field(styles[i].speaker) << ',' << p.coords(r, 0) << ',' << p.coords(r, 1) << '\n';
  }
  return os.str();
}

inline std::string feature_rank_csv(const std::vector<FeatureRank>& ranks, int k) {
  auto os = detail::csv_stream();
  os << "tag";
  for (int c = 0; c < k; ++c) os << ",cluster_" << c << "_mean";
  os << ",std\n";
  for (const auto& f : ranks) {
    os << detail::csv_field(std::string(tag_symbol(f.tag)));
    for (double m : f.cluster_means) os << ',' << m;
    os << ',' << f.stdev << '\n';
  }
  return os.str();
}

}  // namespace dialsum
