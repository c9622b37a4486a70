#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgnmt/corpus.hpp"
#include "cgnmt/inference.hpp"
#include "cgnmt/model.hpp"
#include "cgnmt/training.hpp"

namespace cgnmt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Everything a subcommand needs, read from `key = value` lines.
struct RunConfig {
  // Synthetic task, used whenever no text corpus is configured.
  ToyTaskSpec task;
  std::size_t train_size = 5000;
  std::size_t dev_size = 200;
  std::size_t test_size = 200;

  // Optional whitespace-tokenised parallel text.
  std::filesystem::path train_source, train_target;
  std::filesystem::path dev_source, dev_target;
  std::filesystem::path test_source, test_target;
  std::size_t max_vocab = 30000;

  ModelConfig model;
  TrainConfig training;
  int beam = 10;
  DecodeOptions decode;

  std::filesystem::path model_path;
  std::filesystem::path input;
  std::filesystem::path output;
  std::filesystem::path trace;
  std::filesystem::path training_log;
  std::filesystem::path report;
  std::filesystem::path reference;
  std::filesystem::path hypotheses;
  std::filesystem::path baseline_hypotheses;
  std::filesystem::path alignments;
  std::filesystem::path hypothesis_alignments;
  std::filesystem::path corpus_dir;
  int bucket_width = 5;

  std::vector<ScaleConfig> scale_settings;

  bool uses_text_corpus() const { return !train_source.empty(); }
};

RunConfig default_run_config();

// Applies `key = value` lines on top of `config`. Relative paths resolve
// against `base_dir`. Throws ConfigError on unknown keys or bad values.
void apply_config_text(RunConfig& config, std::string_view text,
                       const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Sets the data, initialisation and shuffle seeds together.
void set_all_seeds(RunConfig& config, std::uint64_t seed);

void validate(const RunConfig& config);

std::vector<std::string> known_config_keys();

// Sentence-level worker count from CGNMT_THREADS (default 1).
int thread_count();

// Decodes every source with greedy search (beam 1) or beam search; results
// keep input order.
std::vector<Translation> decode_all(std::span<const Sentence> sources, const Model& model,
                                    int beam, const DecodeOptions& options, int threads);

// Gold links of a synthetic pair: content words are sure, function words
// are possible links to the source of the preceding word. EOS is unlinked.
LinkSet toy_sure_links(const ToyTaskSpec& spec, const SequencePair& pair);
LinkSet toy_possible_links(const ToyTaskSpec& spec, const SequencePair& pair);

struct AblationRow {
  std::string name;
  CellKind cell = CellKind::gru;
  GateConfig gate;
};

// Gate-input grid followed by the decoder comparison grid, duplicates
// removed.
std::vector<AblationRow> ablation_grid();

int run_command(int argc, const char* const* argv);

}  // namespace cgnmt::cli
