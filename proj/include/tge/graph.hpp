#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tge/error.hpp"

namespace tge {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;  // stored with first < second

// One time slice over the global node vocabulary, CSR adjacency. Neighbor
// lists are sorted, deduplicated, symmetric, and self-loop free; nodes absent
// at this time simply have degree zero.
struct SnapshotGraph {
  std::vector<std::uint64_t> offsets;  // vocab + 1
  std::vector<NodeId> neighbors;

  std::uint32_t vocab() const { return static_cast<std::uint32_t>(offsets.size()) - 1; }
  std::uint32_t degree(NodeId v) const {
    return static_cast<std::uint32_t>(offsets[v + 1] - offsets[v]);
  }
  std::span<const NodeId> adj(NodeId v) const {
    return {neighbors.data() + offsets[v], neighbors.data() + offsets[v + 1]};
  }
  bool has_edge(NodeId u, NodeId v) const;
  std::uint64_t edge_count() const { return neighbors.size() / 2; }
  std::uint32_t present_count() const;

  // Symmetrizes, deduplicates, and drops self-loops.
  static SnapshotGraph from_edges(std::uint32_t vocab, std::vector<Edge> edges);
  std::vector<Edge> edge_list() const;  // (u, v) with u < v, sorted
};

// Ordered snapshot sequence; immutable once built, safe to share across
// threads. Snapshot indices t are 1-based throughout.
struct DynamicGraph {
  std::vector<SnapshotGraph> snapshots;
  std::uint32_t vocab_size = 0;
  std::int64_t resolution = 1;
  std::vector<std::string> node_labels;  // raw ingest labels; may be empty

  std::uint32_t time_steps() const { return static_cast<std::uint32_t>(snapshots.size()); }
  const SnapshotGraph& snapshot(std::uint32_t t) const { return snapshots[t - 1]; }
};

struct SnapshotStatsRow {
  std::uint32_t t = 0;
  std::uint32_t nodes = 0;
  std::uint64_t edges = 0;
};

struct SnapshotStats {
  std::vector<SnapshotStatsRow> rows;
  std::uint32_t vocab_size = 0;
  std::uint32_t union_nodes = 0;  // nodes present in at least one snapshot
  std::uint64_t sum_nodes = 0;    // sum of per-snapshot node counts
  std::uint64_t sum_edges = 0;
};

// Lines are `src<TAB>dst<TAB>timestamp`; `#` comments and blank lines are
// skipped. Timestamps are integer epoch seconds or YYYY-MM-DD. Buckets of
// width `resolution` become snapshots 1..T; interior empty buckets are kept.
DynamicGraph ingest_edge_list(std::istream& in, std::int64_t resolution);

SnapshotStats snapshot_stats(const DynamicGraph& g);
std::string format_stats(const SnapshotStats& s);       // aligned text table
std::string stats_csv(const SnapshotStats& s);

void save_graph(const DynamicGraph& g, std::ostream& out, std::uint64_t config_hash,
                std::uint64_t seed);
DynamicGraph load_graph(std::istream& in);

// Structural hash over (resolution, T, vocab, edge sets); identical graphs
// hash equal regardless of how they were produced.
std::uint64_t graph_hash(const DynamicGraph& g);

std::int64_t parse_timestamp(const std::string& field);  // epoch seconds

}  // namespace tge
