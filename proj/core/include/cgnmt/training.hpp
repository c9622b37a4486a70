#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cgnmt/inference.hpp"
#include "cgnmt/model.hpp"

namespace cgnmt {

struct TrainConfig {
  double learning_rate = 0.5;
  double clip_norm = 1.0;  // global L2 norm
  int max_epochs = 10;
  int patience = 2;        // epochs without dev BLEU improvement
  int max_length = 80;     // longer sentences (either side) are skipped
  std::uint64_t shuffle_seed = 1;
  // Stop as soon as dev BLEU reaches this value; 0 disables.
  double target_dev_bleu = 0.0;
};

void validate(const TrainConfig& config);

double gradient_norm(const ModelParams& params);

// Rescales every gradient by threshold / norm when the global norm exceeds
// the threshold. Returns the factor applied (1 when untouched).
double clip_gradients(ModelParams& params, double threshold);

// theta <- theta - lr * grad
void sgd_update(ModelParams& params, double learning_rate);

struct EpochRecord {
  int epoch = 0;
  double train_loss_per_token = 0.0;
  double dev_bleu = 0.0;
  double clipped_fraction = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 0 means the initial parameters were kept
  double best_dev_bleu = 0.0;
  int stop_epoch = 0;
  std::size_t skipped_sentences = 0;
};

// Greedy-decoded corpus BLEU against the targets (EOS stripped).
double evaluate_bleu(std::span<const SequencePair> corpus, const Model& model,
                     const DecodeOptions& options = {});

using EpochCallback = std::function<void(const EpochRecord&)>;

// Per-sentence SGD over seeded shuffles; keeps the parameters of the best
// dev epoch. Throws DivergenceError on a non-finite loss.
TrainingLog train(std::span<const SequencePair> corpus, std::span<const SequencePair> dev,
                  Model& model, const TrainConfig& config, const EpochCallback& on_epoch = {});

// CSV: epoch,train_loss_per_token,dev_bleu,clipped_fraction
void write_training_log(std::ostream& out, const TrainingLog& log);
void write_training_log(const std::filesystem::path& path, const TrainingLog& log);

}  // namespace cgnmt
