#pragma once

#include <span>
#include <vector>

#include "cgnmt/evaluation.hpp"
#include "cgnmt/model.hpp"

namespace cgnmt {

struct DecodeOptions {
  // Emitted tokens (EOS included) are capped at factor * J unless
  // max_length is positive, in which case it is used directly.
  int length_factor = 3;
  int max_length = 0;
};

int length_cap(std::size_t source_length, const DecodeOptions& options);

// Per-step record of one decoded sentence.
struct DecodeTrace {
  std::vector<Vector> alpha;  // one row over source positions per emitted token
  std::vector<Vector> gates;  // z_i per step; empty when no gate is active
  Sentence tokens;            // emitted tokens, EOS included when produced

  std::size_t steps() const { return tokens.size(); }
  std::vector<double> gate_means() const;
  // Mean over steps of mean(z_i).
  double sentence_gate_weight() const;
  Matrix alignment_matrix() const;
};

struct Hypothesis {
  Sentence tokens;  // ends with EOS when finished
  double log_prob = 0.0;
  bool live = true;
};

struct Translation {
  Hypothesis hypothesis;
  Sentence surface;  // hypothesis tokens without the trailing EOS
  DecodeTrace trace;
};

// Argmax at every step, ties to the lowest token id.
Translation greedy_decode(std::span<const TokenId> source, const Model& model,
                          const DecodeOptions& options = {});

// Keeps the `width` best expansions by total log probability; hypotheses
// that emit EOS are set aside. Returns the best finished hypothesis, or the
// best live one if none finished within the cap. No length normalisation.
Translation beam_decode(std::span<const TokenId> source, const Model& model, int width,
                        const DecodeOptions& options = {});

// Sum of log probabilities of `tokens` given the source, re-run from scratch.
double score_tokens(std::span<const TokenId> source, std::span<const TokenId> tokens,
                    const Model& model);

// Attention rows and gates under teacher forcing on the reference target.
DecodeTrace force_align(const SequencePair& pair, const Model& model);

// One link per target position to argmax_j alpha_ij, ties to the lowest j.
LinkSet extract_alignment(const DecodeTrace& trace);
LinkSet extract_alignment(const Matrix& soft);

}  // namespace cgnmt
