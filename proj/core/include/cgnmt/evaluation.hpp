#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cgnmt/corpus.hpp"
#include "cgnmt/numerics.hpp"

namespace cgnmt {

inline constexpr int kBleuOrder = 4;

// Sufficient statistics of 4-gram BLEU against a single reference.
struct BleuStats {
  std::array<std::int64_t, kBleuOrder> matches{};
  std::array<std::int64_t, kBleuOrder> totals{};
  std::int64_t hypothesis_length = 0;
  std::int64_t reference_length = 0;

  BleuStats& operator+=(const BleuStats& other);
};

// Case-insensitive (ASCII lowercase) clipped n-gram counts.
BleuStats bleu_stats(std::span<const std::string> hypothesis,
                     std::span<const std::string> reference);
BleuStats bleu_stats(std::span<const TokenId> hypothesis, std::span<const TokenId> reference);

// Geometric mean of the four precisions times exp(min(0, 1 - r/c)); zero
// when any precision is zero. No smoothing.
double bleu_score(const BleuStats& stats);

// Corpus BLEU over whitespace-tokenised sentences.
double bleu(std::span<const std::string> hypotheses, std::span<const std::string> references);
double corpus_bleu(std::span<const Tokens> hypotheses, std::span<const Tokens> references);
double corpus_bleu(std::span<const Sentence> hypotheses, std::span<const Sentence> references);

// Add-one smoothing on orders 2..4; for per-sentence comparisons only.
double sentence_bleu(std::span<const std::string> hypothesis,
                     std::span<const std::string> reference);
double sentence_bleu(std::span<const TokenId> hypothesis, std::span<const TokenId> reference);

// 1-based (target position, source position).
struct Link {
  int target = 0;
  int source = 0;

  friend auto operator<=>(const Link&, const Link&) = default;
};

using LinkSet = std::set<Link>;

struct AlignmentSets {
  LinkSet sure;
  LinkSet possible;  // always contains `sure`
  Matrix soft;       // rows = target positions, columns = source positions
};

// 1 - (|A n S| + |A n P|) / (|A| + |S|); 0 when |A| + |S| = 0.
double aer(const LinkSet& alignment, const LinkSet& sure, const LinkSet& possible);

// 1 - (|M_A x M_S| + |M_A x M_P|) / (|M_A| + |M_S|) with x the elementwise
// product and |.| the sum of entries.
double saer(const Matrix& soft, const LinkSet& sure, const LinkSet& possible);

// One sentence per line: `i-j` sure, `i?j` possible, 1-based target-source.
AlignmentSets parse_alignment_line(std::string_view line);
std::vector<AlignmentSets> read_alignment_file(const std::filesystem::path& path);
std::string format_alignment(const LinkSet& links);

// Exact two-sided binomial sign test, ties dropped.
double sign_test(std::span<const double> scores_a, std::span<const double> scores_b);

double pearson(std::span<const double> x, std::span<const double> y);

struct LengthBucket {
  int lower = 0;  // inclusive source length
  int upper = 0;  // exclusive
  std::size_t count = 0;
  double bleu = 0.0;
  double mean_output_length = 0.0;
};

struct BucketReport {
  std::vector<LengthBucket> buckets;  // non-empty buckets, ascending
};

BucketReport bucket_report(std::span<const SequencePair> pairs,
                           std::span<const Sentence> translations, int width);
BucketReport bucket_report(std::span<const std::size_t> source_lengths,
                           std::span<const Tokens> translations,
                           std::span<const Tokens> references, int width);

}  // namespace cgnmt
