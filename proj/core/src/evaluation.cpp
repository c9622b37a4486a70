#include "cgnmt/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "cgnmt/errors.hpp"

namespace cgnmt {

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (int n = 0; n < kBleuOrder; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hypothesis_length += o.hypothesis_length;
  reference_length += o.reference_length;
  return *this;
}

namespace {

template <class T>
BleuStats count_ngrams(std::span<const T> hyp, std::span<const T> ref) {
  BleuStats st;
  st.hypothesis_length = static_cast<std::int64_t>(hyp.size());
  st.reference_length = static_cast<std::int64_t>(ref.size());
  for (std::size_t n = 1; n <= kBleuOrder; ++n) {
    std::map<std::vector<T>, std::int64_t> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) {
      ++ref_counts[std::vector<T>(ref.begin() + i, ref.begin() + i + n)];
    }
    std::map<std::vector<T>, std::int64_t> hyp_counts;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
      ++hyp_counts[std::vector<T>(hyp.begin() + i, hyp.begin() + i + n)];
    }
    std::int64_t matched = 0;
    std::int64_t total = 0;
    for (const auto& [gram, count] : hyp_counts) {
      total += count;
      if (auto it = ref_counts.find(gram); it != ref_counts.end()) {
        matched += std::min(count, it->second);
      }
    }
    st.matches[n - 1] = matched;
    st.totals[n - 1] = total;
  }
  return st;
}

Tokens lowercase(std::span<const std::string> tokens) {
  Tokens out(tokens.begin(), tokens.end());
  for (auto& t : out) {
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  }
  return out;
}

double smoothed(const BleuStats& st) {
  if (st.hypothesis_length == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < kBleuOrder; ++n) {
    const double add = n == 0 ? 0.0 : 1.0;
    const double num = static_cast<double>(st.matches[n]) + add;
    const double den = static_cast<double>(st.totals[n]) + add;
    if (num <= 0.0 || den <= 0.0) return 0.0;
    log_sum += std::log(num / den);
  }
  const double c = static_cast<double>(st.hypothesis_length);
  const double r = static_cast<double>(st.reference_length);
  return std::exp(log_sum / kBleuOrder + std::min(0.0, 1.0 - r / c));
}

void check_counts(std::size_t hyps, std::size_t refs) {
  if (hyps != refs) {
    throw InputError("bleu: " + std::to_string(hyps) + " hypotheses but " +
                     std::to_string(refs) + " references");
  }
}

}  // namespace

BleuStats bleu_stats(std::span<const std::string> hypothesis,
                     std::span<const std::string> reference) {
  const Tokens h = lowercase(hypothesis);
  const Tokens r = lowercase(reference);
  return count_ngrams<std::string>(h, r);
}

BleuStats bleu_stats(std::span<const TokenId> hypothesis, std::span<const TokenId> reference) {
  return count_ngrams<TokenId>(hypothesis, reference);
}

double bleu_score(const BleuStats& st) {
  if (st.hypothesis_length == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < kBleuOrder; ++n) {
    if (st.matches[n] == 0 || st.totals[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(st.matches[n]) / static_cast<double>(st.totals[n]));
  }
  const double c = static_cast<double>(st.hypothesis_length);
  const double r = static_cast<double>(st.reference_length);
  return std::exp(log_sum / kBleuOrder + std::min(0.0, 1.0 - r / c));
}

double corpus_bleu(std::span<const Tokens> hypotheses, std::span<const Tokens> references) {
  check_counts(hypotheses.size(), references.size());
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    total += bleu_stats(hypotheses[i], references[i]);
  }
  return bleu_score(total);
}

double corpus_bleu(std::span<const Sentence> hypotheses, std::span<const Sentence> references) {
  check_counts(hypotheses.size(), references.size());
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    total += bleu_stats(std::span<const TokenId>(hypotheses[i]),
                        std::span<const TokenId>(references[i]));
  }
  return bleu_score(total);
}

double bleu(std::span<const std::string> hypotheses, std::span<const std::string> references) {
  check_counts(hypotheses.size(), references.size());
  std::vector<Tokens> h;
  std::vector<Tokens> r;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    h.push_back(tokenize(hypotheses[i]));
    r.push_back(tokenize(references[i]));
  }
  return corpus_bleu(std::span<const Tokens>(h), std::span<const Tokens>(r));
}

double sentence_bleu(std::span<const std::string> hypothesis,
                     std::span<const std::string> reference) {
  return smoothed(bleu_stats(hypothesis, reference));
}

double sentence_bleu(std::span<const TokenId> hypothesis, std::span<const TokenId> reference) {
  return smoothed(bleu_stats(hypothesis, reference));
}

namespace {

void check_subset(const LinkSet& sure, const LinkSet& possible) {
  if (!std::includes(possible.begin(), possible.end(), sure.begin(), sure.end())) {
    throw InputError("alignment: sure links must be a subset of possible links");
  }
}

std::size_t intersection_size(const LinkSet& a, const LinkSet& b) {
  std::size_t n = 0;
  for (const auto& l : a) n += b.count(l);
  return n;
}

}  // namespace

double aer(const LinkSet& a, const LinkSet& s, const LinkSet& p) {
  check_subset(s, p);
  const double denom = static_cast<double>(a.size() + s.size());
  if (denom == 0.0) return 0.0;
  const double num = static_cast<double>(intersection_size(a, s) + intersection_size(a, p));
  return 1.0 - num / denom;
}

double saer(const Matrix& soft, const LinkSet& s, const LinkSet& p) {
  check_subset(s, p);
  auto mass = [&](const LinkSet& links) {
    double total = 0.0;
    for (const auto& l : links) {
      if (l.target < 1 || l.source < 1 || l.target > soft.rows() || l.source > soft.cols()) {
        throw InputError("saer: link " + std::to_string(l.target) + "-" +
                         std::to_string(l.source) + " outside alignment matrix " +
                         shape_string(soft.rows(), soft.cols()));
      }
      total += soft(l.target - 1, l.source - 1);
    }
    return total;
  };
  const double on_sure = mass(s);
  const double on_possible = mass(p);
  const double denom = soft.sum() + static_cast<double>(s.size());
  if (denom == 0.0) return 0.0;
  return 1.0 - (on_sure + on_possible) / denom;
}

AlignmentSets parse_alignment_line(std::string_view line) {
  AlignmentSets sets;
  for (const auto& item : tokenize(line)) {
    const auto cut = item.find_first_of("-?");
    auto bad = [&] { return FormatError("alignment: malformed link '" + item + "'"); };
    if (cut == std::string::npos || cut == 0 || cut + 1 == item.size()) throw bad();
    Link link;
    try {
      std::size_t used = 0;
      link.target = std::stoi(item.substr(0, cut), &used);
      if (used != cut) throw bad();
      const std::string rest = item.substr(cut + 1);
      link.source = std::stoi(rest, &used);
      if (used != rest.size()) throw bad();
    } catch (const std::logic_error&) {
      throw bad();
    }
    if (link.target < 1 || link.source < 1) throw bad();
    if (item[cut] == '-') {
      sets.sure.insert(link);
    }
    sets.possible.insert(link);
  }
  return sets;
}

std::vector<AlignmentSets> read_alignment_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("alignment: cannot open " + path.string());
  }
  std::vector<AlignmentSets> out;
  for (std::string line; std::getline(in, line);) {
    out.push_back(parse_alignment_line(line));
  }
  return out;
}

std::string format_alignment(const LinkSet& links) {
  std::string out;
  for (const auto& l : links) {
    if (!out.empty()) out += ' ';
    out += std::to_string(l.target) + "-" + std::to_string(l.source);
  }
  return out;
}

namespace {

// P[X <= k] for X ~ Binomial(n, 1/2).
double binomial_half_cdf(std::int64_t k, std::int64_t n) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (n <= 1000) {
    double coef = 1.0;
    double sum = 0.0;
    for (std::int64_t x = 0; x <= k; ++x) {
      sum += coef;
      coef = coef * static_cast<double>(n - x) / static_cast<double>(x + 1);
    }
    return std::ldexp(sum, -static_cast<int>(n));
  }
  const double log_half_n = static_cast<double>(n) * std::log(0.5);
  double peak = -INFINITY;
  std::vector<double> terms;
  for (std::int64_t x = 0; x <= k; ++x) {
    const double t = std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0) +
                     log_half_n;
    terms.push_back(t);
    peak = std::max(peak, t);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return std::exp(peak + std::log(sum));
}

}  // namespace

double sign_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InputError("sign_test: score lists differ in length");
  }
  std::int64_t wins = 0;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    ++n;
    if (a[i] > b[i]) ++wins;
  }
  if (n == 0) return 1.0;
  const std::int64_t k = std::min(wins, n - wins);
  return 2.0 * std::min(binomial_half_cdf(k, n), 0.5);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InputError("pearson: need two equal-length samples of size >= 2");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedStatisticError("pearson: zero variance, correlation undefined");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

template <class Sent>
BucketReport make_buckets(std::span<const std::size_t> lengths, std::span<const Sent> hyps,
                          std::span<const Sent> refs, int width) {
  if (width < 1) {
    throw InputError("bucket_report: width must be >= 1");
  }
  if (lengths.size() != hyps.size() || hyps.size() != refs.size()) {
    throw InputError("bucket_report: lists are not aligned");
  }
  struct Acc {
    BleuStats stats;
    std::size_t count = 0;
    std::size_t output_tokens = 0;
  };
  std::map<std::size_t, Acc> acc;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    auto& a = acc[lengths[i] / static_cast<std::size_t>(width)];
    a.stats += bleu_stats(std::span(hyps[i]), std::span(refs[i]));
    ++a.count;
    a.output_tokens += hyps[i].size();
  }
  BucketReport report;
  for (const auto& [index, a] : acc) {
    LengthBucket b;
    b.lower = static_cast<int>(index) * width;
    b.upper = b.lower + width;
    b.count = a.count;
    b.bleu = bleu_score(a.stats);
    b.mean_output_length = static_cast<double>(a.output_tokens) / static_cast<double>(a.count);
    report.buckets.push_back(b);
  }
  return report;
}

}  // namespace

BucketReport bucket_report(std::span<const SequencePair> pairs,
                           std::span<const Sentence> translations, int width) {
  std::vector<std::size_t> lengths;
  std::vector<Sentence> refs;
  for (const auto& p : pairs) {
    lengths.push_back(p.source.size());
    Sentence r = p.target;
    if (!r.empty() && r.back() == kEos) r.pop_back();
    refs.push_back(std::move(r));
  }
  return make_buckets<Sentence>(lengths, translations, refs, width);
}

BucketReport bucket_report(std::span<const std::size_t> source_lengths,
                           std::span<const Tokens> translations,
                           std::span<const Tokens> references, int width) {
  return make_buckets<Tokens>(source_lengths, translations, references, width);
}

}  // namespace cgnmt
