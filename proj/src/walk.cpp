#include "tge/walk.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include "tge/io.hpp"

namespace tge {

void WalkConfig::validate() const {
  if (walks_per_node < 1) throw DataError("walks_per_node must be >= 1");
  if (walk_length < 2) throw DataError("walk_length must be >= 2");
  if (p <= 0 || q <= 0) throw DataError("walk biases p and q must be > 0");
}

std::vector<double> next_node_distribution(const SnapshotGraph& g, std::optional<NodeId> prev,
                                           NodeId cur, double p, double q) {
  const auto nbrs = g.adj(cur);
  std::vector<double> probs(nbrs.size());
  if (nbrs.empty()) return probs;

  if (!prev) {
    std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(nbrs.size()));
    return probs;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    const NodeId x = nbrs[i];
    double w;
    if (x == *prev) w = 1.0 / p;
    else if (g.has_edge(*prev, x)) w = 1.0;
    else w = 1.0 / q;
    probs[i] = w;
    total += w;
  }
  for (auto& w : probs) w /= total;
  return probs;
}

NodeId sample_next(const SnapshotGraph& g, std::optional<NodeId> prev, NodeId cur, double p,
                   double q, SplitMix64& rng) {
  const auto nbrs = g.adj(cur);
  if (!prev) return nbrs[rng.below(nbrs.size())];

  double total = 0.0;
  // Two passes keep the walk allocation-free; weights are cheap.
  auto weight = [&](NodeId x) {
    if (x == *prev) return 1.0 / p;
    if (g.has_edge(*prev, x)) return 1.0;
    return 1.0 / q;
  };
  for (NodeId x : nbrs) total += weight(x);
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < nbrs.size(); ++i) {
    acc += weight(nbrs[i]);
    if (u < acc) return nbrs[i];
  }
  return nbrs.back();
}

std::vector<NodeId> run_walk(const SnapshotGraph& g, NodeId start, const WalkConfig& cfg,
                             SplitMix64& rng) {
  std::vector<NodeId> nodes;
  nodes.reserve(cfg.walk_length);
  nodes.push_back(start);
  std::optional<NodeId> prev;
  NodeId cur = start;
  while (nodes.size() < cfg.walk_length) {
    if (g.degree(cur) == 0) {
      nodes.push_back(cur);  // dead end: pad to fixed length
      continue;
    }
    const NodeId next = sample_next(g, prev, cur, cfg.p, cfg.q, rng);
    nodes.push_back(next);
    prev = cur;
    cur = next;
  }
  return nodes;
}

WalkCorpus generate_corpus(const DynamicGraph& g, const WalkConfig& cfg, unsigned threads) {
  cfg.validate();

  struct Key {
    std::uint32_t t;
    NodeId start;
    std::uint32_t m;
  };
  std::vector<Key> keys;
  for (std::uint32_t t = 1; t <= g.time_steps(); ++t) {
    const auto& snap = g.snapshot(t);
    for (NodeId v = 0; v < g.vocab_size; ++v) {
      if (snap.degree(v) == 0) continue;
      for (std::uint32_t m = 1; m <= cfg.walks_per_node; ++m) keys.push_back({t, v, m});
    }
  }

  WalkCorpus corpus;
  corpus.cfg = cfg;
  corpus.time_steps = g.time_steps();
  corpus.vocab_size = g.vocab_size;
  corpus.records.resize(keys.size());

  auto work = [&](std::size_t i) {
    const auto& k = keys[i];
    SplitMix64 rng(stream_key({cfg.seed, 0x77616c6b, k.t, k.start, k.m}));
    corpus.records[i] = {k.t, k.m, run_walk(g.snapshot(k.t), k.start, cfg, rng)};
  };

  if (threads <= 1) {
    for (std::size_t i = 0; i < keys.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= keys.size()) return;
          work(i);
        }
      });
    for (auto& th : pool) th.join();
  }
  return corpus;
}

HeiReport high_degree_exposure_index(const WalkCorpus& corpus, const DynamicGraph& g,
                                     double degree_quantile) {
  if (corpus.records.empty()) throw DataError("empty walk corpus");
  if (degree_quantile <= 0 || degree_quantile >= 1)
    throw DataError("degree quantile must be in (0,1)");
  if (g.vocab_size == 0) throw DataError("empty vocabulary");

  std::vector<std::uint32_t> max_deg(g.vocab_size, 0);
  for (const auto& snap : g.snapshots)
    for (NodeId v = 0; v < g.vocab_size; ++v) max_deg[v] = std::max(max_deg[v], snap.degree(v));

  auto sorted = max_deg;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto cut = static_cast<std::size_t>(
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(degree_quantile * g.vocab_size + 0.999999)));
  const std::uint32_t threshold = sorted[std::min(cut, sorted.size()) - 1];

  std::vector<bool> top(g.vocab_size, false);
  std::uint32_t top_count = 0;
  for (NodeId v = 0; v < g.vocab_size; ++v)
    if (max_deg[v] >= threshold && threshold > 0) {
      top[v] = true;
      ++top_count;
    }
  if (top_count == 0) throw DataError("degree quantile selects zero nodes");

  std::uint64_t visits = 0, total = 0;
  for (const auto& rec : corpus.records)
    for (NodeId v : rec.nodes) {
      ++total;
      if (top[v]) ++visits;
    }

  HeiReport rep;
  rep.top_nodes = top_count;
  rep.degree_threshold = threshold;
  rep.node_share = static_cast<double>(top_count) / g.vocab_size;
  rep.visit_share = static_cast<double>(visits) / static_cast<double>(total);
  rep.hei = rep.visit_share / rep.node_share;
  return rep;
}

// ---------------------------------------------------------------------------
// corpus files
// ---------------------------------------------------------------------------

void save_corpus(const WalkCorpus& corpus, const std::string& path, std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& rec : corpus.records) {
    out << rec.t << ' ' << rec.m;
    for (NodeId v : rec.nodes) out << ' ' << v;
    out << '\n';
  }
  std::ostringstream meta;
  meta << "format = corpus-1\n";
  meta << "config_hash = " << config_hash << '\n';
  meta << "seed = " << corpus.cfg.seed << '\n';
  meta << "walks_per_node = " << corpus.cfg.walks_per_node << '\n';
  meta << "walk_length = " << corpus.cfg.walk_length << '\n';
  meta << "p = " << corpus.cfg.p << '\n';
  meta << "q = " << corpus.cfg.q << '\n';
  meta << "time_steps = " << corpus.time_steps << '\n';
  meta << "vocab_size = " << corpus.vocab_size << '\n';
  write_text_file(path + ".meta", meta.str());
}

WalkCorpus load_corpus(const std::string& path) {
  WalkCorpus corpus;

  for (const auto& line : read_lines(path + ".meta")) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "format" && val != "corpus-1") throw DataError("unsupported corpus format " + val);
    if (key == "seed") corpus.cfg.seed = std::stoull(val);
    if (key == "walks_per_node") corpus.cfg.walks_per_node = std::stoul(val);
    if (key == "walk_length") corpus.cfg.walk_length = std::stoul(val);
    if (key == "p") corpus.cfg.p = std::stod(val);
    if (key == "q") corpus.cfg.q = std::stod(val);
    if (key == "time_steps") corpus.time_steps = std::stoul(val);
    if (key == "vocab_size") corpus.vocab_size = std::stoul(val);
  }

  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    WalkRecord rec;
    if (!(ss >> rec.t >> rec.m))
      throw DataError(path + " line " + std::to_string(line_no) + ": bad record");
    NodeId v;
    while (ss >> v) rec.nodes.push_back(v);
    if (rec.nodes.size() != corpus.cfg.walk_length)
      throw DataError(path + " line " + std::to_string(line_no) + ": wrong walk length");
    corpus.records.push_back(std::move(rec));
  }
  if (corpus.records.empty()) throw DataError(path + ": empty corpus");
  return corpus;
}

}  // namespace tge
