#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cgnmt {

using TokenId = int;
using Sentence = std::vector<TokenId>;
using Tokens = std::vector<std::string>;

inline constexpr TokenId kUnk = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kFirstContentId = 3;

inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";

// Token <-> id map. Ids 0..2 are always <unk>, <s>, </s>.
class Vocabulary {
 public:
  Vocabulary();

  // Returns the existing id if the token is already present.
  TokenId add(std::string_view token);
  TokenId id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  std::span<const std::string> tokens() const { return tokens_; }

  // One token per line; line number is the id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

bool is_reserved_token(std::string_view token);

// Keeps the max_size - 3 most frequent tokens; ties go to the token seen
// first. Reserved spellings in the input are not counted.
Vocabulary build_vocabulary(std::span<const Tokens> sentences, std::size_t max_size);

Sentence numberize(std::span<const std::string> tokens, const Vocabulary& vocab);
Tokens denumberize(std::span<const TokenId> ids, const Vocabulary& vocab);

struct SequencePair {
  Sentence source;  // no BOS/EOS
  Sentence target;  // ends with exactly one EOS
};

// Throws InputError unless source is non-empty and target ends with a
// single EOS.
void validate_pair(const SequencePair& pair);

enum class TaskKind { copy, reverse, lexicon };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

struct ToyTaskSpec {
  TaskKind kind = TaskKind::lexicon;
  int vocab_size = 50;  // content tokens on the source side
  int min_length = 5;
  int max_length = 15;
  double function_rate = 0.0;
  std::uint64_t seed = 1;
};

void validate(const ToyTaskSpec& spec);

inline constexpr int kFunctionTokenCount = 4;

// Id layout of the synthetic vocabularies. Source content ids are
// kFirstContentId + k for k in [0, vocab_size). For copy/reverse the target
// vocabulary equals the source one. For lexicon the target vocabulary holds
// four function tokens at kFirstContentId.. followed by vocab_size content
// tokens.
struct ToyVocabularies {
  Vocabulary source;
  Vocabulary target;
};

ToyVocabularies toy_vocabularies(const ToyTaskSpec& spec);

// Fixed seed-independent bijection from source content ids onto target
// content ids of the lexicon task.
TokenId lexicon_map(const ToyTaskSpec& spec, TokenId source_id);
// Function token inserted after target token `previous`.
TokenId function_token_after(TokenId previous);

std::vector<SequencePair> synthesize_corpus(const ToyTaskSpec& spec, std::size_t count);

struct CorpusSplits {
  std::vector<SequencePair> train;
  std::vector<SequencePair> dev;
  std::vector<SequencePair> test;
};

// Splits come from seeds seed, seed + 1 and seed + 2.
CorpusSplits synthesize_splits(const ToyTaskSpec& spec, std::size_t train,
                               std::size_t dev, std::size_t test);

Tokens tokenize(std::string_view line);
std::string join_tokens(std::span<const std::string> tokens);

std::vector<Tokens> read_sentences(const std::filesystem::path& path);
void write_sentences(const std::filesystem::path& path, std::span<const Tokens> sentences);

// Numberizes a parallel text corpus; EOS is appended to every target.
std::vector<SequencePair> read_parallel(const std::filesystem::path& source,
                                        const std::filesystem::path& target,
                                        const Vocabulary& source_vocab,
                                        const Vocabulary& target_vocab);
void write_parallel(const std::filesystem::path& source,
                    const std::filesystem::path& target,
                    std::span<const SequencePair> pairs,
                    const Vocabulary& source_vocab,
                    const Vocabulary& target_vocab);

}  // namespace cgnmt
