#include <cgnmt/inference.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "../common/support.hpp"

namespace cgnmt {
namespace {

constexpr GateVariant kVariants[] = {GateVariant::none, GateVariant::source, GateVariant::target,
                                     GateVariant::both, GateVariant::gating_scalar};

Model random_model(std::uint64_t seed, GateVariant v = GateVariant::both, int vocab = 11,
                   double init = 0.8) {
  ModelConfig c = test::small_config(seed % 2 ? CellKind::gru : CellKind::vanilla, v, seed, vocab);
  c.init_scale = init;
  return init_model(c);
}

Sentence random_source(Rng& rng, int vocab, int max_len) {
  Sentence s;
  const int len = 1 + static_cast<int>(rng.below(max_len));
  for (int j = 0; j < len; ++j) s.push_back(kFirstContentId + static_cast<int>(rng.below(vocab - 3)));
  return s;
}

// Log probability of a token sequence, chained step by step from the
// encoded source.
double chain_score(const Sentence& source, const Sentence& tokens, const Model& m) {
  const EncodedSource enc = encode_source(source, m);
  Vector t = enc.t0;
  TokenId prev = kBos;
  double total = 0.0;
  for (TokenId y : tokens) {
    const StepCache s = decode_step(m, enc, t, prev);
    total += std::log(s.probs(y));
    t = s.state();
    prev = y;
  }
  return total;
}

TEST(LengthCap, ThreeTimesSource) {
  EXPECT_EQ(length_cap(5, {}), 15);
  EXPECT_EQ(length_cap(1, {}), 3);
  DecodeOptions o;
  o.max_length = 2;
  EXPECT_EQ(length_cap(7, o), 2);
}

TEST(Greedy, NeverExceedsCap) {
  Rng rng(1);
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const Model m = random_model(seed, kVariants[seed % 5], 11, 2.0);
    const Sentence src = random_source(rng, 11, 6);
    const Translation tr = greedy_decode(src, m);
    EXPECT_LE(tr.hypothesis.tokens.size(), 3 * src.size());
    EXPECT_EQ(tr.trace.steps(), tr.hypothesis.tokens.size());
    EXPECT_EQ(tr.trace.alpha.size(), tr.trace.steps());
  }
}

TEST(Greedy, SourceLengthFiveCapsAtFifteen) {
  // zero readout weights: argmax ties to id 0, which is never EOS
  const ModelConfig c = test::small_config(CellKind::gru, GateVariant::none, 1);
  const Model m{c, ModelParams(c)};
  const Translation tr = greedy_decode(Sentence{3, 4, 5, 6, 7}, m);
  EXPECT_EQ(tr.hypothesis.tokens.size(), 15u);
  EXPECT_TRUE(tr.hypothesis.live);
  for (TokenId y : tr.hypothesis.tokens) EXPECT_EQ(y, 0);
}

TEST(Greedy, RiggedEosGivesEmptyTranslation) {
  const ModelConfig c = test::small_config(CellKind::gru, GateVariant::both, 1);
  Model m{c, ModelParams(c)};
  m.params.target_embedding.value(kBos, 0) = 1.0;
  m.params.V_o.value(kEos, 0) = 50.0;
  const Translation tr = greedy_decode(Sentence{3, 4}, m);
  EXPECT_TRUE(tr.surface.empty());
  EXPECT_EQ(tr.hypothesis.tokens, Sentence{kEos});
  EXPECT_FALSE(tr.hypothesis.live);
  EXPECT_EQ(tr.trace.steps(), 1u);
}

TEST(Greedy, StoredScoreMatchesRescoring) {
  Rng rng(2);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Model m = random_model(seed, kVariants[seed % 5]);
    const Sentence src = random_source(rng, 11, 5);
    const Translation tr = greedy_decode(src, m);
    EXPECT_NEAR(tr.hypothesis.log_prob, chain_score(src, tr.hypothesis.tokens, m), 1e-10);
    EXPECT_NEAR(tr.hypothesis.log_prob, score_tokens(src, tr.hypothesis.tokens, m), 1e-10);
    if (!tr.hypothesis.live) {
      SequencePair pair{src, tr.hypothesis.tokens};
      EXPECT_NEAR(tr.hypothesis.log_prob, -forward(pair, m).loss, 1e-10);
    }
  }
}

TEST(Beam, WidthOneIsGreedy) {
  Rng rng(3);
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const Model m = random_model(seed, kVariants[seed % 5]);
    const Sentence src = random_source(rng, 11, 6);
    const Translation g = greedy_decode(src, m);
    const Translation b = beam_decode(src, m, 1);
    EXPECT_EQ(b.hypothesis.tokens, g.hypothesis.tokens) << seed;
    EXPECT_EQ(b.hypothesis.log_prob, g.hypothesis.log_prob) << seed;
  }
}

TEST(Beam, StoredScoreMatchesRescoring) {
  Rng rng(4);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Model m = random_model(seed, kVariants[seed % 5]);
    const Sentence src = random_source(rng, 11, 5);
    const Translation b = beam_decode(src, m, 4);
    EXPECT_NEAR(b.hypothesis.log_prob, chain_score(src, b.hypothesis.tokens, m), 1e-10);
    EXPECT_LE(b.hypothesis.tokens.size(), 3 * src.size());
    if (!b.hypothesis.live) EXPECT_EQ(b.hypothesis.tokens.back(), kEos);
  }
}

TEST(Beam, DominatesGreedyOnFrozenSeeds) {
  Rng rng(5);
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const Model m = random_model(seed, kVariants[seed % 5]);
    const Sentence src = random_source(rng, 11, 5);
    const Translation g = greedy_decode(src, m);
    const Translation b = beam_decode(src, m, 6);
    if (g.hypothesis.live || b.hypothesis.live) continue;
    EXPECT_GE(b.hypothesis.log_prob, g.hypothesis.log_prob - 1e-12) << seed;
  }
}

// Brute force over every outcome of a two-step decode on a five-token
// target vocabulary (three reserved ids and two content words).
TEST(Beam, ExhaustiveOracleWithCapTwo) {
  Rng rng(6);
  DecodeOptions cap2;
  cap2.max_length = 2;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    ModelConfig c = test::small_config(seed % 2 ? CellKind::gru : CellKind::vanilla,
                                       kVariants[seed % 5], seed, 5);
    c.init_scale = 1.5;
    const Model m = init_model(c);
    const Sentence src = random_source(rng, 5, 3);
    const int V = 5;

    double best_finished = -std::numeric_limits<double>::infinity();
    Sentence best_finished_seq;
    double best_live = -std::numeric_limits<double>::infinity();
    Sentence best_live_seq;
    auto consider = [&](const Sentence& seq) {
      const double score = chain_score(src, seq, m);
      if (seq.back() == kEos) {
        if (score > best_finished) best_finished = score, best_finished_seq = seq;
      } else if (score > best_live) {
        best_live = score, best_live_seq = seq;
      }
    };
    consider({kEos});
    for (TokenId a = 0; a < V; ++a) {
      if (a == kEos) continue;
      for (TokenId b = 0; b < V; ++b) consider({a, b});
    }
    const Sentence& expected = best_finished_seq.empty() ? best_live_seq : best_finished_seq;

    const Translation beam = beam_decode(src, m, V * V, cap2);
    EXPECT_EQ(beam.hypothesis.tokens, expected) << seed;
    EXPECT_NEAR(beam.hypothesis.log_prob, chain_score(src, expected, m), 1e-12);
  }
}

TEST(Beam, InvalidWidthRejected) {
  const Model m = random_model(1);
  EXPECT_THROW(beam_decode(Sentence{3}, m, 0), ContractViolation);
}

TEST(Trace, GateValuesInOpenIntervalAndWeightIsMeanOfMeans) {
  Rng rng(7);
  for (auto v : kVariants) {
    if (v == GateVariant::none) continue;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Model m = random_model(seed, v, 11, 3.0);
      const Translation tr = greedy_decode(random_source(rng, 11, 6), m);
      ASSERT_EQ(tr.trace.gates.size(), tr.trace.steps());
      double sum = 0.0;
      for (const auto& z : tr.trace.gates) {
        EXPECT_GT(z.minCoeff(), 0.0);
        EXPECT_LT(z.maxCoeff(), 1.0);
        sum += z.sum() / static_cast<double>(z.size());
      }
      EXPECT_NEAR(tr.trace.sentence_gate_weight(), sum / tr.trace.gates.size(), 1e-12);
    }
  }
}

TEST(Trace, NoGatesWithoutGateVariant) {
  const Model m = random_model(3, GateVariant::none);
  const Translation tr = greedy_decode(Sentence{3, 4}, m);
  EXPECT_TRUE(tr.trace.gates.empty());
  EXPECT_THROW(tr.trace.sentence_gate_weight(), ContractViolation);
}

TEST(Trace, AlphaRowsSumToOne) {
  Rng rng(8);
  const Model m = random_model(5);
  const Translation tr = greedy_decode(random_source(rng, 11, 6), m);
  for (const auto& row : tr.trace.alpha) EXPECT_NEAR(row.sum(), 1.0, 1e-12);
}

TEST(ForceAlign, OneRowPerReferenceToken) {
  Rng rng(9);
  const Model m = random_model(7);
  const SequencePair pair = test::random_pair(rng, 11, 4, 6);
  const DecodeTrace trace = force_align(pair, m);
  EXPECT_EQ(trace.steps(), pair.target.size());
  EXPECT_EQ(trace.alignment_matrix().rows(), 7);
  EXPECT_EQ(trace.alignment_matrix().cols(), 4);
}

TEST(ExtractAlignment, SingleSourceWord) {
  DecodeTrace t;
  for (int i = 0; i < 3; ++i) t.alpha.push_back(Vector::Ones(1));
  const LinkSet links = extract_alignment(t);
  EXPECT_EQ(links, (LinkSet{{1, 1}, {2, 1}, {3, 1}}));
}

TEST(ExtractAlignment, DiagonalIsIdentity) {
  const LinkSet links = extract_alignment(Matrix(Matrix::Identity(4, 4)));
  EXPECT_EQ(links, (LinkSet{{1, 1}, {2, 2}, {3, 3}, {4, 4}}));
}

TEST(ExtractAlignment, ArgmaxByHand) {
  Matrix m(1, 3);
  m << 0.2, 0.5, 0.3;
  EXPECT_EQ(extract_alignment(m), (LinkSet{{1, 2}}));
}

TEST(ExtractAlignment, TiesGoToLowestSource) {
  Matrix m(1, 3);
  m << 0.4, 0.2, 0.4;
  EXPECT_EQ(extract_alignment(m), (LinkSet{{1, 1}}));
}

TEST(ExtractAlignment, EmptyTraceRejected) {
  EXPECT_THROW(extract_alignment(DecodeTrace{}), ContractViolation);
}

}  // namespace
}  // namespace cgnmt
