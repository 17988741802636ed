#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dialsum/inference.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace dialsum {
namespace {

// Generated ids of a DecodeResult with [BOS] and a trailing [EOS] restored,
// in the oracle's layout.
std::vector<TokenId> full_ids(const DecodeResult& r) {
  std::vector<TokenId> ids{Vocabulary::kBos};
  ids.insert(ids.end(), r.ids.begin(), r.ids.end());
  if (r.ended_with_eos) ids.push_back(Vocabulary::kEos);
  return ids;
}

TEST(Greedy, PicksArgmaxAndStopsAtEos) {
  // EOS dominates from the start
  const oracle::TableModel m(4, 1, 100.0);
  const DecodeResult r = greedy_decode(m, 5);
  EXPECT_TRUE(r.ended_with_eos);
  EXPECT_TRUE(r.ids.empty());
  const double p = m.next(std::vector<TokenId>{Vocabulary::kBos})[Vocabulary::kEos];
  EXPECT_NEAR(r.logprob, std::log(p), 1e-15);
}

TEST(Greedy, RespectsMaxLen) {
  const oracle::TableModel m(6, 2, -0.999);
  const DecodeResult r = greedy_decode(m, 3);
  EXPECT_LE(r.ids.size() + (r.ended_with_eos ? 1 : 0), 3u);
}

TEST(Beam, ZeroWidthThrows) {
  const oracle::TableModel m(4, 1);
  EXPECT_THROW(beam_search(m, 0, 3), ArgumentError);
}

TEST(Beam, WidthOneIsGreedy) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const oracle::TableModel m(5, seed, static_cast<double>(seed % 3));
    const DecodeResult g = greedy_decode(m, 6);
    const DecodeResult b = beam_search(m, 1, 6);
    EXPECT_EQ(b.ids, g.ids) << seed;
    EXPECT_EQ(b.logprob, g.logprob) << seed;
    EXPECT_EQ(b.ended_with_eos, g.ended_with_eos) << seed;
  }
}

// With beam >= vocab^max_len nothing is ever pruned, so beam search must
// return the exhaustive optimum, ties included.
TEST(Beam, WideBeamMatchesExhaustiveOracle) {
  for (std::size_t vocab : {3u, 4u}) {
    for (std::size_t max_len = 1; max_len <= 5; ++max_len) {
      for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const oracle::TableModel m(vocab, seed * 31 + vocab, static_cast<double>(seed % 2));
        const auto best = oracle::exhaustive_best(m, max_len);
        const std::size_t width = static_cast<std::size_t>(std::pow(vocab, max_len)) + 1;
        const DecodeResult r = beam_search(m, width, max_len);
        EXPECT_EQ(full_ids(r), best.ids) << "vocab " << vocab << " len " << max_len << " seed " << seed;
        EXPECT_NEAR(r.logprob, best.logprob, 1e-12);
      }
    }
  }
}

TEST(Beam, NeverExceedsOracle) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const oracle::TableModel m(4, seed + 500);
    const auto best = oracle::exhaustive_best(m, 5);
    for (std::size_t width : {1u, 2u, 4u}) EXPECT_LE(beam_search(m, width, 5).logprob, best.logprob + 1e-12);
  }
}

TEST(Beam, WiderIsAtLeastGreedyOnModel) {
  Rng rng(21);
  const ModelConfig c = fixture::tiny_config(10, 5);
  const Seq2SeqModel<double> model(c);
  for (int i = 0; i < 20; ++i) {
    const auto ex = fixture::random_example(rng, c.vocab_size);
    const ModelStepper<double> s(model, ex.input);
    const DecodeResult g = greedy_decode(s, 6);
    const DecodeResult b1 = beam_search(s, 1, 6);
    EXPECT_EQ(g.ids, b1.ids);
    EXPECT_EQ(g.logprob, b1.logprob);
    EXPECT_GE(beam_search(s, 4, 6).logprob, g.logprob - 1e-12) << i;
  }
}

TEST(Beam, StepperEncodesOnce) {
  Rng rng(22);
  const ModelConfig c = fixture::tiny_config(10, 5);
  const Seq2SeqModel<double> model(c);
  const auto ex = fixture::random_example(rng, c.vocab_size);
  const std::size_t before = model.encoder_evaluations();
  const ModelStepper<double> s(model, ex.input);
  beam_search(s, 3, 5);
  EXPECT_EQ(model.encoder_evaluations() - before, 1u);
}

TEST(AvgWords, CountsJoinedWords) {
  EXPECT_DOUBLE_EQ(avg_generated_words({{"a", "b"}, {"c"}, {}}), 1.0);
  EXPECT_DOUBLE_EQ(avg_generated_words({{"hi", "there", "!"}}), 3.0);
  EXPECT_THROW(avg_generated_words({}), ArgumentError);
}

}  // namespace
}  // namespace dialsum
