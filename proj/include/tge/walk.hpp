#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tge/graph.hpp"
#include "tge/rng.hpp"

namespace tge {

struct WalkConfig {
  std::uint32_t walks_per_node = 5;  // W
  std::uint32_t walk_length = 32;   // L
  double p = 1.0;                    // return bias
  double q = 1.0;                    // in-out bias
  std::uint64_t seed = 1;

  void validate() const;
};

struct WalkRecord {
  std::uint32_t t = 0;  // 1-based snapshot index
  std::uint32_t m = 0;  // 1-based walk index within (t, start)
  std::vector<NodeId> nodes;
};

struct WalkCorpus {
  std::vector<WalkRecord> records;
  WalkConfig cfg;
  std::uint32_t time_steps = 0;
  std::uint32_t vocab_size = 0;
};

// Second-order transition law. With no previous node the distribution is
// uniform over neighbors; otherwise the unnormalized weight of neighbor x is
// 1/p when x is the previous node, 1 when x neighbors it, 1/q otherwise.
// Returns an empty vector when cur has no neighbors (dead end).
std::vector<double> next_node_distribution(const SnapshotGraph& g, std::optional<NodeId> prev,
                                           NodeId cur, double p, double q);

NodeId sample_next(const SnapshotGraph& g, std::optional<NodeId> prev, NodeId cur, double p,
                   double q, SplitMix64& rng);

// One fixed-length walk; pads by repeating the current node after a dead end.
std::vector<NodeId> run_walk(const SnapshotGraph& g, NodeId start, const WalkConfig& cfg,
                             SplitMix64& rng);

// W walks per (t, start node with degree >= 1). Per-walk streams are keyed by
// (seed, t, start, m), so the corpus is identical for any worker count.
WalkCorpus generate_corpus(const DynamicGraph& g, const WalkConfig& cfg, unsigned threads = 1);

struct HeiReport {
  double node_share = 0;
  double visit_share = 0;
  double hei = 0;
  std::uint32_t top_nodes = 0;
  std::uint32_t degree_threshold = 0;
};

// Visit concentration on top-degree nodes: the share of all corpus token
// occurrences landing on the top `degree_quantile` of nodes by max-over-time
// degree (ties at the cut included), divided by that node share.
HeiReport high_degree_exposure_index(const WalkCorpus& corpus, const DynamicGraph& g,
                                     double degree_quantile);

// Text format: one `t m n1 n2 ... nL` line per record, plus a `path.meta`
// sidecar with the config, seed, and config hash.
void save_corpus(const WalkCorpus& corpus, const std::string& path, std::uint64_t config_hash);
WalkCorpus load_corpus(const std::string& path);

}  // namespace tge
