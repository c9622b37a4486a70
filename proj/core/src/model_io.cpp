#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cgnmt/model.hpp"

namespace cgnmt {

namespace {

using json = nlohmann::json;

json config_to_json(const ModelConfig& c) {
  return json{
      {"embedding_dim", c.embedding_dim},
      {"state_dim", c.state_dim},
      {"attention_dim", c.attention_dim},
      {"source_vocab_size", c.source_vocab_size},
      {"target_vocab_size", c.target_vocab_size},
      {"cell", std::string(to_string(c.cell))},
      {"gate",
       {{"variant", std::string(to_string(c.gate.variant))},
        {"inputs", to_string(c.gate.inputs)},
        {"granularity",
         c.gate.granularity == GateGranularity::scalar ? "scalar" : "elementwise"}}},
      {"scale", {{"source", c.scale.source}, {"target", c.scale.target}}},
      {"seed", c.seed},
      {"init_scale", c.init_scale},
  };
}

template <class T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) {
    throw FormatError(std::string("model file: manifest is missing field '") + name + "'");
  }
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("model file: manifest field '") + name +
                      "' has the wrong type");
  }
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.embedding_dim = field<int>(j, "embedding_dim");
  c.state_dim = field<int>(j, "state_dim");
  c.attention_dim = field<int>(j, "attention_dim");
  c.source_vocab_size = field<int>(j, "source_vocab_size");
  c.target_vocab_size = field<int>(j, "target_vocab_size");
  c.seed = field<std::uint64_t>(j, "seed");
  c.init_scale = field<double>(j, "init_scale");
  const json gate = field<json>(j, "gate");
  const json scale = field<json>(j, "scale");
  try {
    c.cell = parse_cell_kind(field<std::string>(j, "cell"));
    c.gate = GateConfig::make(parse_gate_variant(field<std::string>(gate, "variant")),
                              parse_gate_inputs(field<std::string>(gate, "inputs")));
    const auto granularity = field<std::string>(gate, "granularity");
    if (granularity != (c.gate.granularity == GateGranularity::scalar ? "scalar"
                                                                       : "elementwise")) {
      throw FormatError("model file: manifest field 'gate.granularity' is inconsistent");
    }
    c.scale.source = field<double>(scale, "source");
    c.scale.target = field<double>(scale, "target");
    validate(c);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("model file: invalid config: ") + e.what());
  }
  return c;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(k)]))
         << (8 * k);
  }
  return v;
}

}  // namespace

// Layout: "CGNM" | u32 version | u64 manifest length | manifest JSON |
// little-endian f64 payload, row-major, in manifest order. Offsets are
// relative to the payload start.
void save_model(const Model& model, const std::filesystem::path& path) {
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, p] : model.params.parameters()) {
    tensors.push_back({{"name", name}, {"rows", p->rows()}, {"cols", p->cols()},
                       {"offset", offset}});
    offset += static_cast<std::uint64_t>(p->size()) * 8;
  }
  const json manifest{{"config", config_to_json(model.config)}, {"tensors", tensors},
                      {"payload_bytes", offset}};
  const std::string text = manifest.dump();

  std::string blob(kModelMagic, 4);
  put_u32(blob, kModelFormatVersion);
  put_u64(blob, text.size());
  blob += text;
  blob.reserve(blob.size() + offset);
  for (const auto& [name, p] : model.params.parameters()) {
    for (Eigen::Index k = 0; k < p->size(); ++k) {
      put_u64(blob, std::bit_cast<std::uint64_t>(p->value.data()[k]));
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError("model file: cannot write " + path.string());
  }
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) {
    throw FormatError("model file: write failed for " + path.string());
  }
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("model file: cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string blob = buffer.str();

  if (blob.size() < 16) {
    throw FormatError("model file: truncated header");
  }
  if (std::memcmp(blob.data(), kModelMagic, 4) != 0) {
    throw FormatError("model file: bad magic (expected CGNM)");
  }
  const auto version = static_cast<std::uint32_t>(get_le(blob, 4, 4));
  if (version != kModelFormatVersion) {
    throw FormatError("model file: unsupported version " + std::to_string(version));
  }
  const std::uint64_t manifest_len = get_le(blob, 8, 8);
  if (manifest_len > blob.size() - 16) {
    throw FormatError("model file: truncated manifest");
  }
  json manifest;
  try {
    manifest = json::parse(blob.substr(16, manifest_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: manifest is not valid JSON: ") + e.what());
  }

  Model model;
  model.config = config_from_json(field<json>(manifest, "config"));
  model.params = ModelParams(model.config);

  const json tensors = field<json>(manifest, "tensors");
  auto params = model.params.parameters();
  if (!tensors.is_array() || tensors.size() != params.size()) {
    throw FormatError("model file: manifest lists " +
                      std::to_string(tensors.is_array() ? tensors.size() : 0) +
                      " tensors, config implies " + std::to_string(params.size()));
  }
  const std::size_t payload = 16 + manifest_len;
  const auto payload_bytes = field<std::uint64_t>(manifest, "payload_bytes");
  if (blob.size() - payload != payload_bytes) {
    throw FormatError("model file: payload is " + std::to_string(blob.size() - payload) +
                      " bytes, manifest declares " + std::to_string(payload_bytes));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& t = tensors[i];
    const auto name = field<std::string>(t, "name");
    const auto rows = field<std::int64_t>(t, "rows");
    const auto cols = field<std::int64_t>(t, "cols");
    const auto offset = field<std::uint64_t>(t, "offset");
    Parameter& p = *params[i].param;
    if (name != params[i].name) {
      throw FormatError("model file: tensor " + std::to_string(i) + " is '" + name +
                        "', expected '" + params[i].name + "'");
    }
    if (rows != p.rows() || cols != p.cols()) {
      throw FormatError("model file: tensor '" + name + "' has shape " +
                        shape_string(rows, cols) + ", config implies " +
                        shape_string(p.rows(), p.cols()));
    }
    const std::uint64_t bytes = static_cast<std::uint64_t>(p.size()) * 8;
    if (offset > payload_bytes || bytes > payload_bytes - offset) {
      throw FormatError("model file: tensor '" + name + "' exceeds the payload");
    }
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const std::size_t at = payload + offset + static_cast<std::size_t>(k) * 8;
      p.value.data()[k] = std::bit_cast<double>(get_le(blob, at, 8));
    }
  }
  return model;
}

}  // namespace cgnmt
