#include "cgnmt/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

namespace cgnmt {

void validate(const TrainConfig& c) {
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw ConfigError("train: learning_rate must be finite and >= 0");
  }
  if (!(c.clip_norm > 0.0)) {
    throw ConfigError("train: clip_norm must be > 0");
  }
  if (c.max_epochs < 1 || c.patience < 1 || c.max_length < 1) {
    throw ConfigError("train: max_epochs, patience and max_length must be >= 1");
  }
  if (!(c.target_dev_bleu >= 0.0 && c.target_dev_bleu <= 1.0)) {
    throw ConfigError("train: target_dev_bleu must lie in [0, 1]");
  }
}

double gradient_norm(const ModelParams& params) {
  double sq = 0.0;
  for (const auto& [name, p] : params.parameters()) {
    sq += p->grad.squaredNorm();
  }
  return std::sqrt(sq);
}

double clip_gradients(ModelParams& params, double threshold) {
  if (!(threshold > 0.0)) {
    throw ContractViolation("clip_gradients: threshold must be > 0");
  }
  const double norm = gradient_norm(params);
  if (norm <= threshold) {
    return 1.0;
  }
  const double factor = threshold / norm;
  for (auto& np : params.parameters()) {
    np.param->grad *= factor;
  }
  return factor;
}

void sgd_update(ModelParams& params, double learning_rate) {
  for (auto& np : params.parameters()) {
    np.param->value.noalias() -= learning_rate * np.param->grad;
  }
}

double evaluate_bleu(std::span<const SequencePair> corpus, const Model& model,
                     const DecodeOptions& options) {
  std::vector<Sentence> hyps;
  std::vector<Sentence> refs;
  hyps.reserve(corpus.size());
  refs.reserve(corpus.size());
  for (const auto& pair : corpus) {
    hyps.push_back(greedy_decode(pair.source, model, options).surface);
    Sentence ref = pair.target;
    ref.pop_back();
    refs.push_back(std::move(ref));
  }
  return corpus_bleu(std::span<const Sentence>(hyps), std::span<const Sentence>(refs));
}

TrainingLog train(std::span<const SequencePair> corpus, std::span<const SequencePair> dev,
                  Model& model, const TrainConfig& config, const EpochCallback& on_epoch) {
  validate(config);
  if (corpus.empty() || dev.empty()) {
    throw InputError("train: training and dev corpora must be non-empty");
  }
  TrainingLog log;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    validate_pair(corpus[i]);
    const auto limit = static_cast<std::size_t>(config.max_length);
    if (corpus[i].source.size() > limit || corpus[i].target.size() - 1 > limit) {
      ++log.skipped_sentences;
    } else {
      usable.push_back(i);
    }
  }
  if (usable.empty()) {
    throw InputError("train: every training sentence exceeds max_length");
  }

  Rng rng(config.shuffle_seed);
  log.best_dev_bleu = evaluate_bleu(dev, model);
  ModelParams best = model.params;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(usable));
    double loss = 0.0;
    std::size_t tokens = 0;
    std::size_t clipped = 0;
    for (std::size_t k = 0; k < usable.size(); ++k) {
      const SequencePair& pair = corpus[usable[k]];
      model.params.zero_grads();
      const ForwardResult fwd = forward(pair, model);
      if (!std::isfinite(fwd.loss)) {
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch) +
                              ", sentence " + std::to_string(usable[k]));
      }
      backward(pair, fwd, model);
      if (clip_gradients(model.params, config.clip_norm) < 1.0) ++clipped;
      sgd_update(model.params, config.learning_rate);
      loss += fwd.loss;
      tokens += pair.target.size();
    }
    model.params.zero_grads();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss_per_token = loss / static_cast<double>(tokens);
    rec.dev_bleu = evaluate_bleu(dev, model);
    rec.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(usable.size());
    log.epochs.push_back(rec);
    log.stop_epoch = epoch;
    if (on_epoch) on_epoch(rec);

    if (rec.dev_bleu > log.best_dev_bleu) {
      log.best_dev_bleu = rec.dev_bleu;
      log.best_epoch = epoch;
      best = model.params;
      since_best = 0;
      if (config.target_dev_bleu > 0.0 && rec.dev_bleu >= config.target_dev_bleu) break;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  model.params = std::move(best);
  model.params.zero_grads();
  return log;
}

void write_training_log(std::ostream& out, const TrainingLog& log) {
  out << "epoch,train_loss_per_token,dev_bleu,clipped_fraction\n";
  char line[128];
  for (const auto& r : log.epochs) {
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f\n", r.epoch, r.train_loss_per_token,
                  r.dev_bleu, r.clipped_fraction);
    out << line;
  }
}

void write_training_log(const std::filesystem::path& path, const TrainingLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("training log: cannot write " + path.string());
  }
  write_training_log(out, log);
}

}  // namespace cgnmt
