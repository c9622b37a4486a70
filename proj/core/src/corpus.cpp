#include "cgnmt/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cgnmt/errors.hpp"
#include "cgnmt/numerics.hpp"

namespace cgnmt {

Vocabulary::Vocabulary() {
  add(kUnkToken);
  add(kBosToken);
  add(kEosToken);
}

TokenId Vocabulary::add(std::string_view token) {
  if (auto it = ids_.find(std::string(token)); it != ids_.end()) {
    return it->second;
  }
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.contains(std::string(token));
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw InputError("vocabulary: id " + std::to_string(id) + " out of range [0, " +
                     std::to_string(tokens_.size()) + ")");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("vocabulary: cannot open " + path.string());
  }
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    lines.push_back(line);
  }
  if (lines.size() < 3 || lines[0] != kUnkToken || lines[1] != kBosToken ||
      lines[2] != kEosToken) {
    throw FormatError("vocabulary: " + path.string() +
                      " must start with <unk>, <s>, </s>");
  }
  Vocabulary vocab;
  for (std::size_t i = 3; i < lines.size(); ++i) {
    if (lines[i].empty() || vocab.contains(lines[i])) {
      throw FormatError("vocabulary: " + path.string() + " line " +
                        std::to_string(i + 1) + " is empty or duplicated");
    }
    vocab.add(lines[i]);
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("vocabulary: cannot write " + path.string());
  }
  for (const auto& t : tokens_) {
    out << t << '\n';
  }
}

bool is_reserved_token(std::string_view token) {
  return token == kUnkToken || token == kBosToken || token == kEosToken;
}

Vocabulary build_vocabulary(std::span<const Tokens> sentences, std::size_t max_size) {
  if (max_size < 4) {
    throw ConfigError("build_vocabulary: max_size must be at least 4");
  }
  struct Entry {
    std::string token;
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Entry> entries;
  for (const auto& sentence : sentences) {
    for (const auto& tok : sentence) {
      if (is_reserved_token(tok)) {
        continue;
      }
      auto [it, inserted] = index.try_emplace(tok, entries.size());
      if (inserted) {
        entries.push_back({tok, 0, entries.size()});
      }
      ++entries[it->second].count;
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.count > b.count;
  });
  Vocabulary vocab;
  const std::size_t keep = std::min(entries.size(), max_size - 3);
  for (std::size_t i = 0; i < keep; ++i) {
    vocab.add(entries[i].token);
  }
  return vocab;
}

Sentence numberize(std::span<const std::string> tokens, const Vocabulary& vocab) {
  Sentence ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    ids.push_back(vocab.id(t));
  }
  return ids;
}

Tokens denumberize(std::span<const TokenId> ids, const Vocabulary& vocab) {
  Tokens tokens;
  tokens.reserve(ids.size());
  for (TokenId id : ids) {
    tokens.push_back(vocab.token(id));
  }
  return tokens;
}

void validate_pair(const SequencePair& pair) {
  if (pair.source.empty()) {
    throw InputError("sequence pair: empty source");
  }
  if (pair.target.empty() || pair.target.back() != kEos) {
    throw InputError("sequence pair: target does not end with EOS");
  }
  if (std::count(pair.target.begin(), pair.target.end(), kEos) != 1) {
    throw InputError("sequence pair: target contains more than one EOS");
  }
}

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::copy:
      return "copy";
    case TaskKind::reverse:
      return "reverse";
    case TaskKind::lexicon:
      return "lexicon";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "copy") return TaskKind::copy;
  if (name == "reverse") return TaskKind::reverse;
  if (name == "lexicon") return TaskKind::lexicon;
  throw ConfigError("unknown task kind '" + std::string(name) + "'");
}

void validate(const ToyTaskSpec& spec) {
  if (spec.vocab_size < 1) {
    throw ConfigError("toy task: vocab_size must be >= 1");
  }
  if (spec.min_length < 1 || spec.min_length > spec.max_length) {
    throw ConfigError("toy task: need 1 <= min_length <= max_length");
  }
  if (!(spec.function_rate >= 0.0 && spec.function_rate <= 1.0)) {
    throw ConfigError("toy task: function_rate must lie in [0, 1]");
  }
}

ToyVocabularies toy_vocabularies(const ToyTaskSpec& spec) {
  validate(spec);
  ToyVocabularies v;
  if (spec.kind == TaskKind::lexicon) {
    for (int k = 0; k < spec.vocab_size; ++k) {
      v.source.add("s" + std::to_string(k));
    }
    for (int k = 0; k < kFunctionTokenCount; ++k) {
      v.target.add("f" + std::to_string(k));
    }
    for (int k = 0; k < spec.vocab_size; ++k) {
      v.target.add("t" + std::to_string(k));
    }
  } else {
    for (int k = 0; k < spec.vocab_size; ++k) {
      v.source.add("w" + std::to_string(k));
    }
    v.target = v.source;
  }
  return v;
}

namespace {

int lexicon_multiplier(int vocab_size) {
  int mult = 7;
  while (std::gcd(mult, vocab_size) != 1) {
    ++mult;
  }
  return mult;
}

}  // namespace

TokenId lexicon_map(const ToyTaskSpec& spec, TokenId source_id) {
  const int k = source_id - kFirstContentId;
  if (k < 0 || k >= spec.vocab_size) {
    throw InputError("lexicon_map: id " + std::to_string(source_id) +
                     " is not a source content token");
  }
  const int v = spec.vocab_size;
  const int image = static_cast<int>(
      (static_cast<long long>(lexicon_multiplier(v)) * k + 3) % v);
  return kFirstContentId + kFunctionTokenCount + image;
}

TokenId function_token_after(TokenId previous) {
  return kFirstContentId + previous % kFunctionTokenCount;
}

std::vector<SequencePair> synthesize_corpus(const ToyTaskSpec& spec, std::size_t count) {
  validate(spec);
  if (count < 1) {
    throw ConfigError("synthesize_corpus: count must be >= 1");
  }
  Rng rng(spec.seed);
  std::vector<SequencePair> pairs;
  pairs.reserve(count);
  const auto span = static_cast<std::uint64_t>(spec.max_length - spec.min_length + 1);
  for (std::size_t n = 0; n < count; ++n) {
    SequencePair pair;
    const int length = spec.min_length + static_cast<int>(rng.below(span));
    for (int j = 0; j < length; ++j) {
      pair.source.push_back(kFirstContentId +
                            static_cast<TokenId>(rng.below(
                                static_cast<std::uint64_t>(spec.vocab_size))));
    }
    switch (spec.kind) {
      case TaskKind::copy:
        pair.target = pair.source;
        break;
      case TaskKind::reverse:
        pair.target.assign(pair.source.rbegin(), pair.source.rend());
        break;
      case TaskKind::lexicon:
        for (TokenId s : pair.source) {
          const TokenId t = lexicon_map(spec, s);
          pair.target.push_back(t);
          if (rng.bernoulli(spec.function_rate)) {
            pair.target.push_back(function_token_after(t));
          }
        }
        break;
    }
    pair.target.push_back(kEos);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

CorpusSplits synthesize_splits(const ToyTaskSpec& spec, std::size_t train,
                               std::size_t dev, std::size_t test) {
  CorpusSplits splits;
  ToyTaskSpec s = spec;
  splits.train = synthesize_corpus(s, train);
  s.seed = spec.seed + 1;
  splits.dev = synthesize_corpus(s, dev);
  s.seed = spec.seed + 2;
  splits.test = synthesize_corpus(s, test);
  return splits;
}

Tokens tokenize(std::string_view line) {
  Tokens tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) {
      tokens.emplace_back(line.substr(i, j - i));
    }
    i = j;
  }
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<Tokens> read_sentences(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open corpus file " + path.string());
  }
  std::vector<Tokens> sentences;
  for (std::string line; std::getline(in, line);) {
    sentences.push_back(tokenize(line));
  }
  return sentences;
}

void write_sentences(const std::filesystem::path& path, std::span<const Tokens> sentences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot write corpus file " + path.string());
  }
  for (const auto& s : sentences) {
    out << join_tokens(s) << '\n';
  }
}

std::vector<SequencePair> read_parallel(const std::filesystem::path& source,
                                        const std::filesystem::path& target,
                                        const Vocabulary& source_vocab,
                                        const Vocabulary& target_vocab) {
  const auto src = read_sentences(source);
  const auto tgt = read_sentences(target);
  if (src.size() != tgt.size()) {
    throw FormatError("parallel corpus: " + source.string() + " has " +
                      std::to_string(src.size()) + " lines but " + target.string() +
                      " has " + std::to_string(tgt.size()));
  }
  std::vector<SequencePair> pairs;
  pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].empty()) {
      throw FormatError("parallel corpus: empty source sentence on line " +
                        std::to_string(i + 1));
    }
    SequencePair p{numberize(src[i], source_vocab), numberize(tgt[i], target_vocab)};
    p.target.push_back(kEos);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_parallel(const std::filesystem::path& source,
                    const std::filesystem::path& target,
                    std::span<const SequencePair> pairs,
                    const Vocabulary& source_vocab,
                    const Vocabulary& target_vocab) {
  std::vector<Tokens> src;
  std::vector<Tokens> tgt;
  for (const auto& p : pairs) {
    src.push_back(denumberize(p.source, source_vocab));
    Sentence body(p.target.begin(), p.target.end());
    if (!body.empty() && body.back() == kEos) body.pop_back();
    tgt.push_back(denumberize(body, target_vocab));
  }
  write_sentences(source, src);
  write_sentences(target, tgt);
}

}  // namespace cgnmt
