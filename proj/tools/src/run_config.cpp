#include <cgnmt/cli.hpp>
#include <cgnmt/errors.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace cgnmt::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config key '" + std::string(key) + "': not a number: '" +
                      std::string(value) + "'");
  }
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view value) {
  return parse_number<std::size_t>(key, value);
}

std::vector<ScaleConfig> parse_scale_settings(std::string_view key, std::string_view value) {
  std::vector<ScaleConfig> out;
  while (!value.empty()) {
    const auto comma = value.find(',');
    const std::string_view item = trim(value.substr(0, comma));
    value = comma == std::string_view::npos ? std::string_view{} : value.substr(comma + 1);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError("config key '" + std::string(key) + "': expected a:b, got '" +
                        std::string(item) + "'");
    }
    ScaleConfig s;
    s.source = parse_number<double>(key, trim(item.substr(0, colon)));
    s.target = parse_number<double>(key, trim(item.substr(colon + 1)));
    out.push_back(s);
  }
  if (out.empty()) throw ConfigError("config key '" + std::string(key) + "' is empty");
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view, std::string_view,
                                  const std::filesystem::path&)>;

Setter path_field(std::filesystem::path RunConfig::*field) {
  return [field](RunConfig& c, std::string_view, std::string_view v,
                 const std::filesystem::path& base) {
    const std::filesystem::path p{std::string(v)};
    c.*field = p.is_absolute() ? p : base / p;
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"task", [](RunConfig& c, auto, auto v, auto&) { c.task.kind = parse_task_kind(v); }},
      {"vocab_size",
       [](RunConfig& c, auto k, auto v, auto&) { c.task.vocab_size = parse_number<int>(k, v); }},
      {"min_length",
       [](RunConfig& c, auto k, auto v, auto&) { c.task.min_length = parse_number<int>(k, v); }},
      {"max_length",
       [](RunConfig& c, auto k, auto v, auto&) { c.task.max_length = parse_number<int>(k, v); }},
      {"function_rate",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.task.function_rate = parse_number<double>(k, v);
       }},
      {"data_seed",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.task.seed = parse_number<std::uint64_t>(k, v);
       }},
      {"train_size", [](RunConfig& c, auto k, auto v, auto&) { c.train_size = parse_size(k, v); }},
      {"dev_size", [](RunConfig& c, auto k, auto v, auto&) { c.dev_size = parse_size(k, v); }},
      {"test_size", [](RunConfig& c, auto k, auto v, auto&) { c.test_size = parse_size(k, v); }},
      {"train_source", path_field(&RunConfig::train_source)},
      {"train_target", path_field(&RunConfig::train_target)},
      {"dev_source", path_field(&RunConfig::dev_source)},
      {"dev_target", path_field(&RunConfig::dev_target)},
      {"test_source", path_field(&RunConfig::test_source)},
      {"test_target", path_field(&RunConfig::test_target)},
      {"max_vocab", [](RunConfig& c, auto k, auto v, auto&) { c.max_vocab = parse_size(k, v); }},
      {"embedding_dim",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.model.embedding_dim = parse_number<int>(k, v);
       }},
      {"state_dim",
       [](RunConfig& c, auto k, auto v, auto&) { c.model.state_dim = parse_number<int>(k, v); }},
      {"attention_dim",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.model.attention_dim = parse_number<int>(k, v);
       }},
      {"cell", [](RunConfig& c, auto, auto v, auto&) { c.model.cell = parse_cell_kind(v); }},
      {"gate",
       [](RunConfig& c, auto, auto v, auto&) {
         c.model.gate = GateConfig::make(parse_gate_variant(v), c.model.gate.inputs);
       }},
      {"gate_inputs",
       [](RunConfig& c, auto, auto v, auto&) {
         c.model.gate = GateConfig::make(c.model.gate.variant, parse_gate_inputs(v));
       }},
      {"source_scale",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.model.scale.source = parse_number<double>(k, v);
       }},
      {"target_scale",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.model.scale.target = parse_number<double>(k, v);
       }},
      {"init_seed",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.model.seed = parse_number<std::uint64_t>(k, v);
       }},
      {"init_scale",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.model.init_scale = parse_number<double>(k, v);
       }},
      {"learning_rate",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.training.learning_rate = parse_number<double>(k, v);
       }},
      {"clip_norm",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.training.clip_norm = parse_number<double>(k, v);
       }},
      {"max_epochs",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.training.max_epochs = parse_number<int>(k, v);
       }},
      {"patience",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.training.patience = parse_number<int>(k, v);
       }},
      {"max_train_length",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.training.max_length = parse_number<int>(k, v);
       }},
      {"shuffle_seed",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.training.shuffle_seed = parse_number<std::uint64_t>(k, v);
       }},
      {"target_dev_bleu",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.training.target_dev_bleu = parse_number<double>(k, v);
       }},
      {"beam", [](RunConfig& c, auto k, auto v, auto&) { c.beam = parse_number<int>(k, v); }},
      {"length_factor",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.decode.length_factor = parse_number<int>(k, v);
       }},
      {"max_output_length",
       [](RunConfig& c, auto k, auto v, auto&) {
         c.decode.max_length = parse_number<int>(k, v);
       }},
      {"model", path_field(&RunConfig::model_path)},
      {"input", path_field(&RunConfig::input)},
      {"output", path_field(&RunConfig::output)},
      {"trace", path_field(&RunConfig::trace)},
      {"training_log", path_field(&RunConfig::training_log)},
      {"report", path_field(&RunConfig::report)},
      {"reference", path_field(&RunConfig::reference)},
      {"hypotheses", path_field(&RunConfig::hypotheses)},
      {"baseline_hypotheses", path_field(&RunConfig::baseline_hypotheses)},
      {"alignments", path_field(&RunConfig::alignments)},
      {"hypothesis_alignments", path_field(&RunConfig::hypothesis_alignments)},
      {"corpus_dir", path_field(&RunConfig::corpus_dir)},
      {"bucket_width",
       [](RunConfig& c, auto k, auto v, auto&) { c.bucket_width = parse_number<int>(k, v); }},
      {"scale_settings",
       [](RunConfig& c, auto k, auto v, auto&) { c.scale_settings = parse_scale_settings(k, v); }},
  };
  return table;
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  c.scale_settings = {{1.0, 1.0}, {1.0, 0.8}, {1.0, 0.5}, {0.8, 1.0}, {0.5, 1.0}};
  return c;
}

void apply_config_text(RunConfig& config, std::string_view text,
                       const std::filesystem::path& base_dir) {
  bool attention_dim_set = false;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                        std::string(key) + "'");
    }
    if (value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty value for '" +
                        std::string(key) + "'");
    }
    try {
      it->second(config, key, value, base_dir);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
    attention_dim_set = attention_dim_set || key == "attention_dim";
  }
  if (!attention_dim_set) config.model.attention_dim = config.model.state_dim;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  RunConfig config = default_run_config();
  apply_config_text(config, text.str(), std::filesystem::absolute(path).parent_path());
  return config;
}

void set_all_seeds(RunConfig& config, std::uint64_t seed) {
  config.task.seed = seed;
  config.model.seed = seed;
  config.training.shuffle_seed = seed;
}

void validate(const RunConfig& config) {
  validate(config.task);
  validate(config.training);
  validate(config.model.gate);
  validate(config.model.scale);
  if (config.beam < 1) throw ConfigError("beam must be at least 1");
  if (config.decode.length_factor < 1) throw ConfigError("length_factor must be at least 1");
  if (config.decode.max_length < 0) throw ConfigError("max_output_length must be >= 0");
  if (config.bucket_width < 1) throw ConfigError("bucket_width must be at least 1");
  if (config.max_vocab < 4) throw ConfigError("max_vocab must be at least 4");
  const bool has_train = !config.train_source.empty() || !config.train_target.empty();
  if (has_train && (config.train_source.empty() || config.train_target.empty())) {
    throw ConfigError("train_source and train_target must be given together");
  }
  for (const auto& s : config.scale_settings) validate(s);
}

std::vector<std::string> known_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

int thread_count() {
  const char* env = std::getenv("CGNMT_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  const std::string_view v(env);
  int n = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc{} || ptr != v.data() + v.size() || n < 1) {
    throw ConfigError("CGNMT_THREADS must be a positive integer, got '" + std::string(v) + "'");
  }
  return n;
}

}  // namespace cgnmt::cli
