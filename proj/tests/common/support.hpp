#pragma once

#include <cgnmt/model.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace cgnmt::test {

inline Vector random_vector(Rng& rng, int dim, double scale = 1.0) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.uniform(-scale, scale);
  return v;
}

inline ModelConfig small_config(CellKind cell, GateVariant variant, std::uint64_t seed,
                                int vocab = 11) {
  ModelConfig c;
  c.embedding_dim = 4;
  c.state_dim = 6;
  c.attention_dim = 6;
  c.source_vocab_size = vocab;
  c.target_vocab_size = vocab;
  c.cell = cell;
  c.gate = GateConfig::make(variant);
  c.seed = seed;
  return c;
}

inline SequencePair random_pair(Rng& rng, int vocab, int source_length, int target_length) {
  SequencePair p;
  for (int j = 0; j < source_length; ++j) {
    p.source.push_back(kFirstContentId + static_cast<int>(rng.below(vocab - kFirstContentId)));
  }
  for (int i = 0; i < target_length; ++i) {
    p.target.push_back(kFirstContentId + static_cast<int>(rng.below(vocab - kFirstContentId)));
  }
  p.target.push_back(kEos);
  return p;
}

// Central differences compared entry by entry with a floor on the absolute
// error, so that entries whose true gradient sits near roundoff do not
// dominate. Returns the number of entries outside tolerance.
inline int count_gradient_mismatches(Model& model, const SequencePair& pair, double eps,
                                     double rel_tol, double abs_tol) {
  model.params.zero_grads();
  const ForwardResult fwd = forward(pair, model);
  backward(pair, fwd, model);
  int bad = 0;
  for (auto& [name, p] : model.params.parameters()) {
    for (Eigen::Index k = 0; k < p->size(); ++k) {
      double& theta = p->value.data()[k];
      const double saved = theta;
      theta = saved + eps;
      const double up = forward(pair, model).loss;
      theta = saved - eps;
      const double down = forward(pair, model).loss;
      theta = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = p->grad.data()[k];
      const double scale = std::max(std::abs(analytic), std::abs(numeric));
      if (std::abs(analytic - numeric) > rel_tol * scale + abs_tol) ++bad;
    }
  }
  return bad;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cgnmt_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace cgnmt::test
