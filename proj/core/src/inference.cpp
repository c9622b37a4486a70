#include "cgnmt/inference.hpp"

#include <algorithm>
#include <numeric>

namespace cgnmt {

int length_cap(std::size_t source_length, const DecodeOptions& options) {
  if (options.max_length > 0) return options.max_length;
  return options.length_factor * static_cast<int>(source_length);
}

std::vector<double> DecodeTrace::gate_means() const {
  std::vector<double> means;
  means.reserve(gates.size());
  for (const auto& z : gates) means.push_back(z.mean());
  return means;
}

double DecodeTrace::sentence_gate_weight() const {
  if (gates.empty()) {
    throw ContractViolation("sentence_gate_weight: trace has no gate values");
  }
  const auto means = gate_means();
  return std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
}

Matrix DecodeTrace::alignment_matrix() const {
  if (alpha.empty()) return Matrix();
  Matrix m(static_cast<Eigen::Index>(alpha.size()), alpha.front().size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = alpha[i].transpose();
  }
  return m;
}

namespace {

// Lowest index among equal maxima.
TokenId argmax(const Vector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k) {
    if (v(k) > v(best)) best = k;
  }
  return static_cast<TokenId>(best);
}

void record(DecodeTrace& trace, const StepCache& step, TokenId token) {
  trace.alpha.push_back(step.alpha());
  if (step.cell.z.size() > 0) trace.gates.push_back(step.cell.z);
  trace.tokens.push_back(token);
}

Translation finish(Hypothesis hyp, DecodeTrace trace) {
  Translation t;
  t.surface = hyp.tokens;
  if (!t.surface.empty() && t.surface.back() == kEos) t.surface.pop_back();
  t.hypothesis = std::move(hyp);
  t.trace = std::move(trace);
  return t;
}

}  // namespace

Translation greedy_decode(std::span<const TokenId> source, const Model& model,
                          const DecodeOptions& options) {
  const EncodedSource enc = encode_source(source, model);
  const int cap = length_cap(source.size(), options);
  Hypothesis hyp;
  DecodeTrace trace;
  Vector state = enc.t0;
  TokenId prev = kBos;
  for (int i = 0; i < cap; ++i) {
    const StepCache step = decode_step(model, enc, state, prev);
    const TokenId y = argmax(step.logits);
    hyp.tokens.push_back(y);
    hyp.log_prob += step.log_prob(y);
    record(trace, step, y);
    if (y == kEos) {
      hyp.live = false;
      break;
    }
    state = step.cell.t;
    prev = y;
  }
  return finish(std::move(hyp), std::move(trace));
}

Translation beam_decode(std::span<const TokenId> source, const Model& model, int width,
                        const DecodeOptions& options) {
  if (width < 1) {
    throw ContractViolation("beam_decode: width must be >= 1");
  }
  struct Entry {
    Hypothesis hyp;
    Vector state;
    DecodeTrace trace;
  };
  struct Candidate {
    double score;
    std::size_t beam;
    TokenId token;
  };

  const EncodedSource enc = encode_source(source, model);
  const int cap = length_cap(source.size(), options);
  std::vector<Entry> live(1);
  live[0].state = enc.t0;
  std::vector<Entry> finished;

  for (int i = 0; i < cap && !live.empty(); ++i) {
    std::vector<StepCache> steps;
    steps.reserve(live.size());
    std::vector<Candidate> candidates;
    for (std::size_t b = 0; b < live.size(); ++b) {
      const TokenId prev = live[b].hyp.tokens.empty() ? kBos : live[b].hyp.tokens.back();
      steps.push_back(decode_step(model, enc, live[b].state, prev));
      const StepCache& s = steps.back();
      for (Eigen::Index y = 0; y < s.logits.size(); ++y) {
        candidates.push_back(
            {live[b].hyp.log_prob + s.log_prob(static_cast<TokenId>(y)), b,
             static_cast<TokenId>(y)});
      }
    }
    const auto keep = std::min(candidates.size(), static_cast<std::size_t>(width));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.beam != b.beam) return a.beam < b.beam;
                        return a.token < b.token;
                      });
    std::vector<Entry> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const Candidate& c = candidates[k];
      Entry e;
      e.hyp = live[c.beam].hyp;
      e.trace = live[c.beam].trace;
      e.hyp.tokens.push_back(c.token);
      e.hyp.log_prob = c.score;
      record(e.trace, steps[c.beam], c.token);
      if (c.token == kEos) {
        e.hyp.live = false;
        finished.push_back(std::move(e));
      } else {
        e.state = steps[c.beam].cell.t;
        next.push_back(std::move(e));
      }
    }
    live = std::move(next);
  }

  const auto& pool = finished.empty() ? live : finished;
  const auto best = std::max_element(pool.begin(), pool.end(), [](const Entry& a, const Entry& b) {
    return a.hyp.log_prob < b.hyp.log_prob;
  });
  return finish(best->hyp, best->trace);
}

double score_tokens(std::span<const TokenId> source, std::span<const TokenId> tokens,
                    const Model& model) {
  const EncodedSource enc = encode_source(source, model);
  Vector state = enc.t0;
  TokenId prev = kBos;
  double total = 0.0;
  for (TokenId y : tokens) {
    const StepCache step = decode_step(model, enc, state, prev);
    total += step.log_prob(y);
    state = step.cell.t;
    prev = y;
  }
  return total;
}

DecodeTrace force_align(const SequencePair& pair, const Model& model) {
  const ForwardResult r = forward(pair, model);
  DecodeTrace trace;
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    record(trace, r.steps[i], pair.target[i]);
  }
  return trace;
}

LinkSet extract_alignment(const Matrix& soft) {
  LinkSet links;
  for (Eigen::Index i = 0; i < soft.rows(); ++i) {
    const TokenId best = argmax(soft.row(i).transpose());
    links.insert({static_cast<int>(i) + 1, best + 1});
  }
  return links;
}

LinkSet extract_alignment(const DecodeTrace& trace) {
  if (trace.alpha.empty()) {
    throw ContractViolation("extract_alignment: empty trace");
  }
  return extract_alignment(trace.alignment_matrix());
}

}  // namespace cgnmt
