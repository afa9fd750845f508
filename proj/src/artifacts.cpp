#include "tge/artifacts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tge/io.hpp"

namespace tge {

static constexpr std::uint32_t kCkptMagic = 0x4b434754;  // "TGCK"
static constexpr std::uint32_t kCkptVersion = 1;

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  BinWriter w(out);
  w.put(kCkptMagic);
  w.put(kCkptVersion);
  w.put_string(serialize_config(ck.config));
  w.put(ck.vocab_nodes);
  w.put(ck.time_steps);
  w.put(ck.epoch);
  w.put(ck.adam_step);
  w.put(ck.train_accuracy);
  w.put(ck.segmentation.p);
  w.put<std::uint64_t>(ck.segmentation.v.size());
  for (auto s : ck.segmentation.v) w.put(s);

  auto dump = [&w](const ModelParams<float>& mp) {
    auto refs = tensor_refs(const_cast<ModelParams<float>&>(mp));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(refs.size()));
    for (const auto& r : refs) {
      w.put_string(r.name);
      w.put<std::uint64_t>(r.size);
      w.put_bytes(r.data, r.size * sizeof(float));
    }
  };
  dump(ck.params);
  dump(ck.adam_m);
  dump(ck.adam_v);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  BinReader r(in);
  if (r.get<std::uint32_t>() != kCkptMagic) throw DataError(path + ": not a checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCkptVersion)
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  ck.config = parse_config_text(r.get_string());
  ck.vocab_nodes = r.get<std::uint32_t>();
  ck.time_steps = r.get<std::uint32_t>();
  ck.epoch = r.get<std::uint32_t>();
  ck.adam_step = r.get<std::uint64_t>();
  ck.train_accuracy = r.get<double>();
  ck.segmentation.p = r.get<std::uint32_t>();
  const auto segn = r.get<std::uint64_t>();
  ck.segmentation.v.resize(segn);
  for (auto& s : ck.segmentation.v) s = r.get<std::uint32_t>();

  const ModelConfig mc = ck.config.model_config(ck.vocab_nodes, ck.time_steps);
  ck.params = ModelParams<float>::init(mc, 0);
  ck.adam_m = ModelParams<float>::zeros_like(ck.params);
  ck.adam_v = ModelParams<float>::zeros_like(ck.params);

  auto fill = [&r, &path](ModelParams<float>& mp) {
    auto refs = tensor_refs(mp);
    const auto count = r.get<std::uint32_t>();
    if (count != refs.size()) throw DataError(path + ": tensor count mismatch with config");
    for (auto& ref : refs) {
      const auto name = r.get_string();
      const auto size = r.get<std::uint64_t>();
      if (name != ref.name || size != ref.size)
        throw DataError(path + ": tensor " + name + " does not match config shape for " +
                        ref.name);
      r.get_bytes(ref.data, ref.size * sizeof(float));
    }
  };
  fill(ck.params);
  fill(ck.adam_m);
  fill(ck.adam_v);
  return ck;
}

// ---------------------------------------------------------------------------
// text artifacts
// ---------------------------------------------------------------------------

void save_embeddings(const Mat<double>& emb, const std::string& path, std::uint64_t config_hash,
                     std::uint64_t seed) {
  std::ostringstream os;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
  os << "# config=" << hex << " seed=" << seed << '\n';
  os << emb.rows << ' ' << emb.cols << '\n';
  for (std::size_t i = 0; i < emb.rows; ++i) {
    for (std::size_t j = 0; j < emb.cols; ++j) os << (j ? " " : "") << fmt_g(emb(i, j));
    os << '\n';
  }
  write_text_file(path, os.str());
}

Mat<double> load_embeddings(const std::string& path) {
  const auto lines = read_lines(path);
  std::size_t i = 0;
  while (i < lines.size() && (lines[i].empty() || lines[i][0] == '#')) ++i;
  if (i == lines.size()) throw DataError(path + ": empty embedding file");
  std::istringstream head(lines[i]);
  std::size_t rows = 0, cols = 0;
  if (!(head >> rows >> cols) || rows == 0 || cols == 0)
    throw DataError(path + ": bad embedding header");
  Mat<double> emb(rows, cols);
  for (std::size_t rr = 0; rr < rows; ++rr) {
    ++i;
    if (i >= lines.size()) throw DataError(path + ": truncated embedding file");
    std::istringstream row(lines[i]);
    for (std::size_t c = 0; c < cols; ++c)
      if (!(row >> emb(rr, c))) throw DataError(path + ": bad embedding row " + std::to_string(rr));
  }
  return emb;
}

void save_segmentation(const SegmentationVector& seg, const std::string& path,
                       std::uint64_t config_hash, std::uint64_t seed) {
  std::ostringstream os;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
  os << "# config=" << hex << " seed=" << seed << '\n';
  for (std::size_t i = 0; i < seg.v.size(); ++i) os << (i ? " " : "") << seg.v[i];
  os << '\n';
  write_text_file(path, os.str());
}

SegmentationVector load_segmentation(const std::string& path) {
  SegmentationVector seg;
  for (const auto& line : read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::uint32_t v;
    while (ss >> v) seg.v.push_back(v);
    break;
  }
  if (seg.v.empty()) throw DataError(path + ": no segmentation found");
  seg.p = *std::max_element(seg.v.begin(), seg.v.end());
  if (!seg.valid()) throw DataError(path + ": invalid segmentation vector");
  return seg;
}

std::vector<std::uint32_t> load_index_file(const std::string& path) {
  std::vector<std::uint32_t> out;
  for (const auto& line : read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    try {
      out.push_back(static_cast<std::uint32_t>(std::stoul(line)));
    } catch (...) {
      throw DataError(path + ": bad index line '" + line + "'");
    }
  }
  if (out.empty()) throw DataError(path + ": no entries");
  return out;
}

std::vector<double> load_series_file(const std::string& path) {
  std::vector<double> out;
  for (const auto& line : read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    try {
      out.push_back(std::stod(line));
    } catch (...) {
      throw DataError(path + ": bad series line '" + line + "'");
    }
  }
  if (out.empty()) throw DataError(path + ": no entries");
  return out;
}

}  // namespace tge
