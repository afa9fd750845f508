#include "tge/config.hpp"

#include <charconv>
#include <sstream>

#include "tge/io.hpp"

namespace tge {

void RunConfig::validate() const {
  walk_config().validate();
  if (hei_quantile <= 0 || hei_quantile >= 1) throw DataError("hei_quantile must be in (0,1)");
  if (dim == 0 || heads == 0 || dim % heads != 0)
    throw DataError("dim must be positive and divisible by heads");
  if (rwpe_steps == 0) throw DataError("rwpe_steps must be >= 1");
  if (mask_rate <= 0 || mask_rate >= 1) throw DataError("mask_rate must be in (0,1)");
  if (epochs == 0 || batch_size == 0) throw DataError("epochs and batch_size must be positive");
  if (learning_rate <= 0) throw DataError("learning_rate must be > 0");
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) throw DataError("loss weights must be >= 0");
  if (segments == 0) throw DataError("segments must be >= 1");
  if (mlm_norm != "sequence" && mlm_norm != "position")
    throw DataError("mlm_norm must be sequence or position");
  if (edge_input != "zg" && edge_input != "wtm") throw DataError("edge_input must be zg or wtm");
  if (embed_source != "wtm" && embed_source != "zg")
    throw DataError("embed_source must be wtm or zg");
  if (anomaly_direction != "high" && anomaly_direction != "low")
    throw DataError("anomaly_direction must be high or low");
  if (resolution < 1) throw DataError("resolution must be >= 1");
  parsed_k_list();
}

void RunConfig::apply_desk_preset() {
  dim = 32;
  layers = 2;
  heads = 4;
  rwpe_steps = 8;
  epochs = 20;
}

WalkConfig RunConfig::walk_config() const {
  WalkConfig wc;
  wc.walks_per_node = walks_per_node;
  wc.walk_length = walk_length;
  wc.p = walk_p;
  wc.q = walk_q;
  wc.seed = seed;
  return wc;
}

ModelConfig RunConfig::model_config(std::uint32_t vocab_nodes, std::uint32_t time_steps) const {
  ModelConfig mc;
  mc.dim = dim;
  mc.heads = heads;
  mc.layers = layers;
  mc.rwpe_steps = rwpe_steps;
  mc.mlp_hidden = mlp_hidden;
  mc.vocab = vocab_nodes + Vocabulary::kReserved;
  mc.time_steps = time_steps;
  mc.mask_rate = mask_rate;
  return mc;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = batch_size;
  tc.learning_rate = learning_rate;
  tc.lambda1 = lambda1;
  tc.lambda2 = lambda2;
  tc.lambda3 = lambda3;
  tc.segments = segments;
  tc.mlm_norm = mlm_norm == "sequence" ? MlmNorm::sequence : MlmNorm::position;
  tc.edge_input = edge_input == "zg" ? EdgeInput::attention_output : EdgeInput::raw_embeddings;
  tc.strict_alg1 = strict_alg1;
  tc.seed = seed;
  return tc;
}

std::vector<std::uint32_t> RunConfig::parsed_k_list() const {
  std::vector<std::uint32_t> ks;
  std::string cur;
  for (char c : k_list + ",") {
    if (c == ',') {
      if (!cur.empty()) {
        std::uint32_t v = 0;
        const auto [p, ec] = std::from_chars(cur.data(), cur.data() + cur.size(), v);
        if (ec != std::errc() || p != cur.data() + cur.size() || v == 0)
          throw DataError("bad K value '" + cur + "'");
        ks.push_back(v);
        cur.clear();
      }
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (ks.empty()) throw DataError("empty K list");
  return ks;
}

// ---------------------------------------------------------------------------
// key table
// ---------------------------------------------------------------------------

namespace {

enum class Kind { u32, u64, i64, f64, str, boolean };

struct KeyDef {
  const char* section;
  const char* key;
  Kind kind;
  void* (*get)(RunConfig&);
};

template <auto Member>
void* member(RunConfig& c) {
  return &(c.*Member);
}

const KeyDef kKeys[] = {
    {"data", "resolution", Kind::i64, member<&RunConfig::resolution>},
    {"walk", "walks_per_node", Kind::u32, member<&RunConfig::walks_per_node>},
    {"walk", "walk_length", Kind::u32, member<&RunConfig::walk_length>},
    {"walk", "p", Kind::f64, member<&RunConfig::walk_p>},
    {"walk", "q", Kind::f64, member<&RunConfig::walk_q>},
    {"walk", "hei_quantile", Kind::f64, member<&RunConfig::hei_quantile>},
    {"model", "dim", Kind::u32, member<&RunConfig::dim>},
    {"model", "layers", Kind::u32, member<&RunConfig::layers>},
    {"model", "heads", Kind::u32, member<&RunConfig::heads>},
    {"model", "rwpe_steps", Kind::u32, member<&RunConfig::rwpe_steps>},
    {"model", "mlp_hidden", Kind::u32, member<&RunConfig::mlp_hidden>},
    {"model", "mask_rate", Kind::f64, member<&RunConfig::mask_rate>},
    {"train", "epochs", Kind::u32, member<&RunConfig::epochs>},
    {"train", "batch_size", Kind::u32, member<&RunConfig::batch_size>},
    {"train", "learning_rate", Kind::f64, member<&RunConfig::learning_rate>},
    {"train", "lambda1", Kind::f64, member<&RunConfig::lambda1>},
    {"train", "lambda2", Kind::f64, member<&RunConfig::lambda2>},
    {"train", "lambda3", Kind::f64, member<&RunConfig::lambda3>},
    {"train", "segments", Kind::u32, member<&RunConfig::segments>},
    {"train", "mlm_norm", Kind::str, member<&RunConfig::mlm_norm>},
    {"train", "edge_input", Kind::str, member<&RunConfig::edge_input>},
    {"train", "embed_source", Kind::str, member<&RunConfig::embed_source>},
    {"train", "strict_alg1", Kind::boolean, member<&RunConfig::strict_alg1>},
    {"eval", "k_list", Kind::str, member<&RunConfig::k_list>},
    {"eval", "anomaly_direction", Kind::str, member<&RunConfig::anomaly_direction>},
    {"run", "seed", Kind::u64, member<&RunConfig::seed>},
};

std::string value_to_string(const KeyDef& def, RunConfig& cfg) {
  void* p = def.get(cfg);
  switch (def.kind) {
    case Kind::u32: return std::to_string(*static_cast<std::uint32_t*>(p));
    case Kind::u64: return std::to_string(*static_cast<std::uint64_t*>(p));
    case Kind::i64: return std::to_string(*static_cast<std::int64_t*>(p));
    case Kind::f64: return fmt_g(*static_cast<double*>(p));
    case Kind::str: return *static_cast<std::string*>(p);
    case Kind::boolean: return *static_cast<bool*>(p) ? "true" : "false";
  }
  return {};
}

void value_from_string(const KeyDef& def, RunConfig& cfg, const std::string& s) {
  void* p = def.get(cfg);
  try {
    switch (def.kind) {
      case Kind::u32: *static_cast<std::uint32_t*>(p) = std::stoul(s); return;
      case Kind::u64: *static_cast<std::uint64_t*>(p) = std::stoull(s); return;
      case Kind::i64: *static_cast<std::int64_t*>(p) = std::stoll(s); return;
      case Kind::f64: *static_cast<double*>(p) = std::stod(s); return;
      case Kind::str: *static_cast<std::string*>(p) = s; return;
      case Kind::boolean:
        if (s == "true" || s == "1") *static_cast<bool*>(p) = true;
        else if (s == "false" || s == "0") *static_cast<bool*>(p) = false;
        else throw DataError("");
        return;
    }
  } catch (...) {
    throw DataError("bad value '" + s + "' for key " + def.section + "." + def.key);
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const RunConfig& base) {
  RunConfig cfg = base;
  std::istringstream in(text);
  std::string line, section;
  std::vector<std::string> unknown;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    bool found = false;
    for (const auto& def : kKeys)
      if (section == def.section && key == def.key) {
        value_from_string(def, cfg, val);
        found = true;
        break;
      }
    if (!found) unknown.push_back(section + "." + key);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw DataError(msg);
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path, const RunConfig& base) {
  return parse_config_text(read_text_file(path), base);
}

std::string serialize_config(const RunConfig& cfg) {
  auto& mut = const_cast<RunConfig&>(cfg);
  std::ostringstream os;
  std::string section;
  for (const auto& def : kKeys) {
    if (section != def.section) {
      section = def.section;
      os << '[' << section << "]\n";
    }
    os << def.key << " = " << value_to_string(def, mut) << '\n';
  }
  return os.str();
}

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a(serialize_config(cfg)); }

}  // namespace tge
