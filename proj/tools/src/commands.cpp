#include <CLI11.hpp>
#include <cgnmt/cli.hpp>
#include <cgnmt/errors.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <mutex>
#include <thread>

namespace cgnmt::cli {
namespace {

namespace fs = std::filesystem;

// Missing required paths and similar invocation problems.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Invocation {
  std::string command;
  std::string config_path;
  std::string model_path;
  std::string input;
  std::string output;
  bool trace = false;
  std::optional<int> beam;
  std::optional<std::uint64_t> seed;
};

struct Data {
  Vocabulary source_vocab;
  Vocabulary target_vocab;
  CorpusSplits splits;
};

fs::path source_vocab_path(const fs::path& model) { return fs::path(model.string() + ".src.vocab"); }
fs::path target_vocab_path(const fs::path& model) { return fs::path(model.string() + ".tgt.vocab"); }

const fs::path& require_path(const fs::path& p, const char* what) {
  if (p.empty()) throw UsageError(std::string("no ") + what + " given");
  return p;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string format_scale(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// Writes to a file when a path is given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const fs::path& path) {
    if (!path.empty()) {
      ensure_parent(path);
      file_.open(path, std::ios::binary);
      if (!file_) throw FormatError("cannot write " + path.string());
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  bool is_file() const { return file_.is_open(); }

 private:
  std::ofstream file_;
};

std::vector<Sentence> numberize_all(std::span<const Tokens> sentences, const Vocabulary& v) {
  std::vector<Sentence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(numberize(s, v));
  return out;
}

std::vector<Tokens> target_tokens(std::span<const SequencePair> pairs, const Vocabulary& v) {
  std::vector<Tokens> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back(denumberize(std::span(p.target).first(p.target.size() - 1), v));
  }
  return out;
}

std::vector<Sentence> sources_of(std::span<const SequencePair> pairs) {
  std::vector<Sentence> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.source);
  return out;
}

Data training_data(const RunConfig& c) {
  Data d;
  if (c.uses_text_corpus()) {
    const auto train_src = read_sentences(c.train_source);
    const auto train_tgt = read_sentences(c.train_target);
    d.source_vocab = build_vocabulary(train_src, c.max_vocab);
    d.target_vocab = build_vocabulary(train_tgt, c.max_vocab);
    d.splits.train = read_parallel(c.train_source, c.train_target, d.source_vocab, d.target_vocab);
    if (c.dev_source.empty() || c.dev_target.empty()) {
      throw UsageError("a text corpus needs dev_source and dev_target");
    }
    d.splits.dev = read_parallel(c.dev_source, c.dev_target, d.source_vocab, d.target_vocab);
    if (!c.test_source.empty() && !c.test_target.empty()) {
      d.splits.test = read_parallel(c.test_source, c.test_target, d.source_vocab, d.target_vocab);
    }
    return d;
  }
  ToyVocabularies v = toy_vocabularies(c.task);
  d.source_vocab = std::move(v.source);
  d.target_vocab = std::move(v.target);
  d.splits = synthesize_splits(c.task, c.train_size, c.dev_size, c.test_size);
  return d;
}

// The test split alone; same seed offset as synthesize_splits.
std::vector<SequencePair> synthetic_test(const ToyTaskSpec& task, std::size_t count) {
  ToyTaskSpec s = task;
  s.seed = task.seed + 2;
  return synthesize_corpus(s, count);
}

// Test bitext in the vocabularies of a trained model.
std::vector<SequencePair> test_pairs(const RunConfig& c, const Vocabulary& src,
                                     const Vocabulary& tgt) {
  if (!c.test_source.empty() && !c.test_target.empty()) {
    return read_parallel(c.test_source, c.test_target, src, tgt);
  }
  if (c.uses_text_corpus()) throw UsageError("no test_source/test_target given");
  return synthetic_test(c.task, c.test_size);
}

struct LoadedModel {
  Model model;
  Vocabulary source_vocab;
  Vocabulary target_vocab;
};

LoadedModel load_with_vocab(const fs::path& path) {
  require_path(path, "model (--model or `model =`)");
  LoadedModel m{load_model(path), Vocabulary::load(source_vocab_path(path)),
                Vocabulary::load(target_vocab_path(path))};
  if (static_cast<int>(m.source_vocab.size()) != m.model.config.source_vocab_size ||
      static_cast<int>(m.target_vocab.size()) != m.model.config.target_vocab_size) {
    throw FormatError("vocabulary files do not match model " + path.string());
  }
  return m;
}

std::string translation_line(const Translation& t, const Vocabulary& v) {
  return join_tokens(denumberize(t.surface, v));
}

nlohmann::json trace_json(std::size_t index, const Translation& t, const Vocabulary& v) {
  nlohmann::json j;
  j["sentence"] = index + 1;
  j["tokens"] = denumberize(t.trace.tokens, v);
  j["log_prob"] = t.hypothesis.log_prob;
  j["finished"] = !t.hypothesis.live;
  auto rows = nlohmann::json::array();
  for (const auto& a : t.trace.alpha) rows.push_back(std::vector<double>(a.begin(), a.end()));
  j["alpha"] = std::move(rows);
  if (!t.trace.gates.empty()) {
    auto gates = nlohmann::json::array();
    for (const auto& z : t.trace.gates) gates.push_back(std::vector<double>(z.begin(), z.end()));
    j["gates"] = std::move(gates);
    j["gate_weight"] = t.trace.sentence_gate_weight();
  }
  return j;
}

// ---------------------------------------------------------------- train

int cmd_train(const RunConfig& c) {
  const fs::path& model_path = require_path(c.model_path, "model (--model or `model =`)");
  const Data d = training_data(c);
  ModelConfig mc = c.model;
  mc.source_vocab_size = static_cast<int>(d.source_vocab.size());
  mc.target_vocab_size = static_cast<int>(d.target_vocab.size());
  validate(mc);
  Model model = init_model(mc);
  const TrainingLog log =
      train(d.splits.train, d.splits.dev, model, c.training, [](const EpochRecord& r) {
        std::cerr << "epoch " << r.epoch << " loss/token " << format_number(r.train_loss_per_token)
                  << " dev BLEU " << format_number(r.dev_bleu) << '\n';
      });
  ensure_parent(model_path);
  save_model(model, model_path);
  d.source_vocab.save(source_vocab_path(model_path));
  d.target_vocab.save(target_vocab_path(model_path));
  const fs::path log_path =
      c.training_log.empty() ? fs::path(model_path.string() + ".log.csv") : c.training_log;
  ensure_parent(log_path);
  write_training_log(log_path, log);
  if (!c.corpus_dir.empty()) {
    fs::create_directories(c.corpus_dir);
    const std::pair<const char*, const std::vector<SequencePair>*> parts[] = {
        {"train", &d.splits.train}, {"dev", &d.splits.dev}, {"test", &d.splits.test}};
    for (const auto& [name, pairs] : parts) {
      write_parallel(c.corpus_dir / (std::string(name) + ".src"),
                     c.corpus_dir / (std::string(name) + ".tgt"), *pairs, d.source_vocab,
                     d.target_vocab);
    }
  }
  std::cerr << "best epoch " << log.best_epoch << " dev BLEU " << format_number(log.best_dev_bleu)
            << ", stopped after epoch " << log.stop_epoch << ", skipped "
            << log.skipped_sentences << " sentences\n";
  return kExitOk;
}

// ------------------------------------------------------------ translate

int cmd_translate(const RunConfig& c, bool want_trace) {
  const LoadedModel m = load_with_vocab(c.model_path);
  std::vector<Sentence> sources;
  if (!c.input.empty()) {
    sources = numberize_all(read_sentences(c.input), m.source_vocab);
  } else {
    sources = sources_of(test_pairs(c, m.source_vocab, m.target_vocab));
  }
  for (std::size_t k = 0; k < sources.size(); ++k) {
    if (sources[k].empty()) throw InputError("input line " + std::to_string(k + 1) + " is empty");
  }
  fs::path trace_path = c.trace;
  if (want_trace && trace_path.empty()) {
    if (c.output.empty()) throw UsageError("--trace needs --output or `trace =`");
    trace_path = c.output.string() + ".trace.jsonl";
  }

  const auto results = decode_all(sources, m.model, c.beam, c.decode, thread_count());
  Sink out(c.output);
  for (const auto& t : results) out.stream() << translation_line(t, m.target_vocab) << '\n';
  if (!trace_path.empty()) {
    Sink trace(trace_path);
    for (std::size_t k = 0; k < results.size(); ++k) {
      trace.stream() << trace_json(k, results[k], m.target_vocab).dump() << '\n';
    }
  }
  return kExitOk;
}

// ------------------------------------------------------------- evaluate

int cmd_evaluate(const RunConfig& c) {
  const fs::path hyp_path = !c.input.empty() ? c.input : c.hypotheses;
  require_path(hyp_path, "hypotheses (--input or `hypotheses =`)");
  const auto hyps = read_sentences(hyp_path);

  std::vector<Tokens> refs;
  std::vector<std::size_t> source_lengths;
  if (!c.reference.empty()) {
    refs = read_sentences(c.reference);
    if (!c.test_source.empty()) {
      for (const auto& s : read_sentences(c.test_source)) source_lengths.push_back(s.size());
    }
  } else if (!c.test_target.empty()) {
    refs = read_sentences(c.test_target);
    if (!c.test_source.empty()) {
      for (const auto& s : read_sentences(c.test_source)) source_lengths.push_back(s.size());
    }
  } else if (!c.uses_text_corpus()) {
    const ToyVocabularies v = toy_vocabularies(c.task);
    const auto pairs = synthetic_test(c.task, c.test_size);
    refs = target_tokens(pairs, v.target);
    for (const auto& p : pairs) source_lengths.push_back(p.source.size());
  } else {
    throw UsageError("no reference (`reference =` or `test_target =`)");
  }
  if (hyps.size() != refs.size()) {
    throw InputError("evaluate: " + std::to_string(hyps.size()) + " hypotheses but " +
                     std::to_string(refs.size()) + " references");
  }

  Sink out(c.output);
  auto& os = out.stream();
  os << "metric,value\n";
  os << "sentences," << hyps.size() << '\n';
  os << "bleu," << format_number(corpus_bleu(hyps, refs)) << '\n';

  if (!c.baseline_hypotheses.empty()) {
    const auto base = read_sentences(c.baseline_hypotheses);
    if (base.size() != refs.size()) throw InputError("evaluate: baseline line count mismatch");
    std::vector<double> a, b;
    for (std::size_t k = 0; k < refs.size(); ++k) {
      a.push_back(sentence_bleu(hyps[k], refs[k]));
      b.push_back(sentence_bleu(base[k], refs[k]));
    }
    os << "baseline_bleu," << format_number(corpus_bleu(base, refs)) << '\n';
    os << "sign_test_p," << format_number(sign_test(a, b)) << '\n';
  }

  if (!c.hypothesis_alignments.empty()) {
    require_path(c.alignments, "reference alignments (`alignments =`)");
    const auto hyp_links = read_alignment_file(c.hypothesis_alignments);
    const auto ref_links = read_alignment_file(c.alignments);
    if (hyp_links.size() != ref_links.size()) {
      throw InputError("evaluate: alignment files differ in line count");
    }
    // corpus-level counts via per-sentence offsets
    LinkSet a, s, p;
    int offset = 0;
    for (std::size_t k = 0; k < hyp_links.size(); ++k) {
      int width = 0;
      for (const auto& sets : {hyp_links[k].possible, ref_links[k].possible}) {
        for (const auto& l : sets) width = std::max({width, l.target, l.source});
      }
      for (const auto& l : hyp_links[k].possible) a.insert({l.target + offset, l.source + offset});
      for (const auto& l : ref_links[k].sure) s.insert({l.target + offset, l.source + offset});
      for (const auto& l : ref_links[k].possible) p.insert({l.target + offset, l.source + offset});
      offset += width;
    }
    os << "aer," << format_number(aer(a, s, p)) << '\n';
  }

  if (source_lengths.size() == refs.size()) {
    const BucketReport report = bucket_report(source_lengths, hyps, refs, c.bucket_width);
    for (const auto& b : report.buckets) {
      const std::string key = "bucket_" + std::to_string(b.lower) + "_" + std::to_string(b.upper);
      os << key << "_count," << b.count << '\n';
      os << key << "_bleu," << format_number(b.bleu) << '\n';
      os << key << "_mean_output_length," << format_number(b.mean_output_length) << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- align

int cmd_align(const RunConfig& c) {
  const LoadedModel m = load_with_vocab(c.model_path);
  const auto pairs = test_pairs(c, m.source_vocab, m.target_vocab);

  std::vector<AlignmentSets> reference;
  if (!c.alignments.empty()) {
    reference = read_alignment_file(c.alignments);
    if (reference.size() != pairs.size()) {
      throw InputError("align: reference alignments do not match the bitext line count");
    }
  } else if (!c.uses_text_corpus() && c.test_source.empty()) {
    for (const auto& p : pairs) {
      AlignmentSets r;
      r.sure = toy_sure_links(c.task, p);
      r.possible = toy_possible_links(c.task, p);
      reference.push_back(std::move(r));
    }
  }

  Sink out(c.output);
  LinkSet a_all, s_all, p_all;
  double soft_hits = 0.0, soft_mass = 0.0;
  std::size_t sure_total = 0;
  int offset = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const DecodeTrace trace = force_align(pairs[k], m.model);
    // the EOS row has no source counterpart
    const Matrix soft = trace.alignment_matrix().topRows(trace.steps() - 1);
    const LinkSet links = soft.rows() > 0 ? extract_alignment(soft) : LinkSet{};
    out.stream() << format_alignment(links) << '\n';
    if (reference.empty()) continue;

    const auto& ref = reference[k];
    const int width = static_cast<int>(std::max<Eigen::Index>(soft.rows(), soft.cols()));
    for (const auto& l : links) a_all.insert({l.target + offset, l.source + offset});
    for (const auto& l : ref.sure) s_all.insert({l.target + offset, l.source + offset});
    for (const auto& l : ref.possible) p_all.insert({l.target + offset, l.source + offset});
    offset += width;

    auto mass_at = [&](const Link& l) {
      const bool inside = l.target >= 1 && l.target <= soft.rows() && l.source >= 1 &&
                          l.source <= soft.cols();
      if (!inside) throw InputError("align: reference link outside sentence " + std::to_string(k + 1));
      return soft(l.target - 1, l.source - 1);
    };
    for (const auto& l : ref.sure) soft_hits += mass_at(l);
    for (const auto& l : ref.possible) soft_hits += mass_at(l);
    soft_mass += soft.sum();
    sure_total += ref.sure.size();
  }

  if (!reference.empty()) {
    Sink report(c.report);
    auto& os = report.is_file() || out.is_file() ? report.stream() : std::cerr;
    const double denom = soft_mass + static_cast<double>(sure_total);
    os << "metric,value\n";
    os << "sentences," << pairs.size() << '\n';
    os << "aer," << format_number(aer(a_all, s_all, p_all)) << '\n';
    os << "saer," << format_number(denom > 0.0 ? 1.0 - soft_hits / denom : 0.0) << '\n';
  }
  return kExitOk;
}

// ----------------------------------------------------- scale-experiment

int cmd_scale(const RunConfig& c) {
  const LoadedModel m = load_with_vocab(c.model_path);
  const auto pairs = test_pairs(c, m.source_vocab, m.target_vocab);
  const auto sources = sources_of(pairs);
  std::vector<Sentence> refs;
  for (const auto& p : pairs) refs.emplace_back(p.target.begin(), p.target.end() - 1);
  const int threads = thread_count();

  Sink out(c.output);
  out.stream() << "source_scale,target_scale,mean_length,cap_fraction,bleu\n";
  for (const ScaleConfig& s : c.scale_settings) {
    Model scaled = m.model;
    scaled.config.scale = s;
    const auto results = decode_all(sources, scaled, c.beam, c.decode, threads);
    std::vector<Sentence> hyps;
    double length = 0.0;
    std::size_t capped = 0;
    for (std::size_t k = 0; k < results.size(); ++k) {
      hyps.push_back(results[k].surface);
      length += static_cast<double>(results[k].surface.size());
      const auto cap = static_cast<std::size_t>(length_cap(sources[k].size(), c.decode));
      capped += results[k].hypothesis.tokens.size() >= cap;
    }
    const double n = static_cast<double>(std::max<std::size_t>(results.size(), 1));
    out.stream() << format_scale(s.source) << ',' << format_scale(s.target) << ','
                 << format_number(length / n) << ',' << format_number(capped / n) << ','
                 << format_number(corpus_bleu(hyps, refs)) << '\n';
    if (out.is_file()) {
      const fs::path p = c.output.parent_path() /
                         (c.output.stem().string() + "." + format_scale(s.source) + "_" +
                          format_scale(s.target) + ".txt");
      Sink t(p);
      for (const auto& r : results) t.stream() << translation_line(r, m.target_vocab) << '\n';
    }
  }
  return kExitOk;
}

// --------------------------------------------------------------- ablate

int cmd_ablate(const RunConfig& c) {
  const Data d = training_data(c);
  if (d.splits.test.empty()) throw UsageError("ablate needs a test set");
  const auto sources = sources_of(d.splits.test);
  std::vector<Sentence> refs;
  for (const auto& p : d.splits.test) refs.emplace_back(p.target.begin(), p.target.end() - 1);
  const int threads = thread_count();

  Sink out(c.output);
  out.stream() << "name,cell,gate,gate_inputs,context_gate_parameters,best_epoch,dev_bleu,"
                  "test_bleu\n";
  for (const AblationRow& row : ablation_grid()) {
    ModelConfig mc = c.model;
    mc.cell = row.cell;
    mc.gate = row.gate;
    mc.source_vocab_size = static_cast<int>(d.source_vocab.size());
    mc.target_vocab_size = static_cast<int>(d.target_vocab.size());
    validate(mc);
    Model model = init_model(mc);
    const TrainingLog log = train(d.splits.train, d.splits.dev, model, c.training);
    const auto results = decode_all(sources, model, c.beam, c.decode, threads);
    std::vector<Sentence> hyps;
    for (const auto& r : results) hyps.push_back(r.surface);
    const auto count =
        count_parameters(mc.embedding_dim, mc.state_dim, mc.annotation_dim(), mc.cell, mc.gate);
    const std::string inputs = row.gate.active() ? "\"" + to_string(row.gate.inputs) + "\"" : "";
    out.stream() << row.name << ',' << to_string(row.cell) << ',' << to_string(row.gate.variant)
                 << ',' << inputs << ',' << count.context_gate << ',' << log.best_epoch << ','
                 << format_number(log.best_dev_bleu) << ','
                 << format_number(corpus_bleu(hyps, refs)) << '\n';
    std::cerr << row.name << ": test BLEU " << format_number(corpus_bleu(hyps, refs)) << '\n';
  }
  return kExitOk;
}

// ------------------------------------------------------------- dispatch

RunConfig resolve(const Invocation& inv) {
  RunConfig c = inv.config_path.empty() ? default_run_config() : load_run_config(inv.config_path);
  auto from_cwd = [](const std::string& p) { return fs::absolute(fs::path(p)); };
  if (!inv.model_path.empty()) c.model_path = from_cwd(inv.model_path);
  if (!inv.input.empty()) c.input = from_cwd(inv.input);
  if (!inv.output.empty()) c.output = from_cwd(inv.output);
  if (inv.beam) c.beam = *inv.beam;
  if (inv.seed) set_all_seeds(c, *inv.seed);
  validate(c);
  return c;
}

int dispatch(const Invocation& inv) {
  const RunConfig c = resolve(inv);
  if (inv.command == "train") return cmd_train(c);
  if (inv.command == "translate") return cmd_translate(c, inv.trace);
  if (inv.command == "evaluate") return cmd_evaluate(c);
  if (inv.command == "align") return cmd_align(c);
  if (inv.command == "scale-experiment") return cmd_scale(c);
  return cmd_ablate(c);
}

}  // namespace

std::vector<Translation> decode_all(std::span<const Sentence> sources, const Model& model,
                                    int beam, const DecodeOptions& options, int threads) {
  std::vector<Translation> out(sources.size());
  auto decode_one = [&](std::size_t k) {
    out[k] = beam == 1 ? greedy_decode(sources[k], model, options)
                       : beam_decode(sources[k], model, beam, options);
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || sources.size() < 2) {
    for (std::size_t k = 0; k < sources.size(); ++k) decode_one(k);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, sources.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < sources.size(); k = next++) {
        try {
          decode_one(k);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

LinkSet toy_sure_links(const ToyTaskSpec& spec, const SequencePair& pair) {
  LinkSet links;
  const int J = static_cast<int>(pair.source.size());
  const int I = static_cast<int>(pair.target.size()) - 1;
  if (spec.kind == TaskKind::copy || spec.kind == TaskKind::reverse) {
    for (int i = 1; i <= std::min(I, J); ++i) {
      links.insert({i, spec.kind == TaskKind::copy ? i : J + 1 - i});
    }
    return links;
  }
  int j = 0;
  for (int i = 1; i <= I; ++i) {
    const TokenId y = pair.target[i - 1];
    const bool function_word = y >= kFirstContentId && y < kFirstContentId + kFunctionTokenCount;
    if (!function_word && j < J) links.insert({i, ++j});
  }
  return links;
}

LinkSet toy_possible_links(const ToyTaskSpec& spec, const SequencePair& pair) {
  LinkSet links = toy_sure_links(spec, pair);
  if (spec.kind != TaskKind::lexicon) return links;
  int j = 0;
  const int I = static_cast<int>(pair.target.size()) - 1;
  for (int i = 1; i <= I; ++i) {
    const TokenId y = pair.target[i - 1];
    const bool function_word = y >= kFirstContentId && y < kFirstContentId + kFunctionTokenCount;
    if (!function_word) {
      ++j;
    } else if (j > 0) {
      links.insert({i, j});
    }
  }
  return links;
}

std::vector<AblationRow> ablation_grid() {
  const GateInputs t_only{true, false, false};
  const GateInputs t_s{true, true, false};
  const GateInputs t_s_y{true, true, true};
  return {
      {"gru+gating_scalar", CellKind::gru, GateConfig::make(GateVariant::gating_scalar)},
      {"gru+gate{t}", CellKind::gru, GateConfig::make(GateVariant::both, t_only)},
      {"gru+gate{t,s}", CellKind::gru, GateConfig::make(GateVariant::both, t_s)},
      {"gru+gate{t,s,y}", CellKind::gru, GateConfig::make(GateVariant::both, t_s_y)},
      {"vanilla", CellKind::vanilla, GateConfig::make(GateVariant::none)},
      {"vanilla+gate", CellKind::vanilla, GateConfig::make(GateVariant::both, t_s_y)},
      {"gru", CellKind::gru, GateConfig::make(GateVariant::none)},
      {"gru+source_gate", CellKind::gru, GateConfig::make(GateVariant::source, t_s_y)},
      {"gru+target_gate", CellKind::gru, GateConfig::make(GateVariant::target, t_s_y)},
  };
}

int run_command(int argc, const char* const* argv) {
  CLI::App app{"Attention NMT with context gates on desk-scale toy tasks", "cgnmt"};
  app.require_subcommand(1, 1);
  Invocation inv;

  const std::pair<const char*, const char*> commands[] = {
      {"train", "Train a model and write it with its vocabularies and log"},
      {"translate", "Translate source sentences with a trained model"},
      {"evaluate", "Score hypotheses against references"},
      {"align", "Extract attention alignments and score them"},
      {"scale-experiment", "Decode under source/target context scalings"},
      {"ablate", "Train the gate ablation grid and compare test BLEU"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", inv.config_path, "key = value configuration file");
    sub->add_option("--model", inv.model_path, "Model file");
    sub->add_option("--input", inv.input, "Input text file");
    sub->add_option("--output", inv.output, "Output file (stdout when omitted)");
    sub->add_flag("--trace", inv.trace, "Write per-sentence attention/gate traces as JSONL");
    sub->add_option("--beam", inv.beam, "Beam width; 1 selects greedy search");
    sub->add_option("--seed", inv.seed, "Seed for data, initialisation and shuffling");
    sub->callback([&inv, sub] { inv.command = sub->get_name(); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "cgnmt: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    return dispatch(inv);
  } catch (const UsageError& e) {
    std::cerr << "cgnmt " << inv.command << ": " << e.what() << "\n\n"
              << app.get_subcommand(inv.command)->help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "cgnmt " << inv.command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "cgnmt " << inv.command << ": " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace cgnmt::cli
