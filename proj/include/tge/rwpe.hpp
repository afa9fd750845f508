#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tge/graph.hpp"
#include "tge/vocab.hpp"

namespace tge {

// Per-node self-return probabilities of the uniform neighbor walk, steps
// 1..k. Row i is all zero for nodes with degree zero. Entries are exact
// diagonals of the s-step transition operator, accumulated in double.
struct ReturnProbMatrix {
  std::uint32_t n = 0;
  std::uint32_t k = 0;
  std::vector<double> values;  // n x k row-major

  double at(std::uint32_t i, std::uint32_t s) const { return values[i * k + (s - 1)]; }  // s in 1..k
  const double* row(std::uint32_t i) const { return values.data() + i * k; }
};

// Two equivalent evaluation orders; results agree to well under 1e-12 and the
// batched one is the default (better locality, SIMD-friendly panels).
enum class RwpeStrategy { per_node, batched };

ReturnProbMatrix return_probabilities(const SnapshotGraph& g, std::uint32_t k,
                                      RwpeStrategy strategy = RwpeStrategy::batched);

// Structural signal attached to one token: node tokens get their return
// probability row, special tokens and absent nodes the zero vector.
std::vector<double> rwpe_for_token(const ReturnProbMatrix& rpm, TokenId token,
                                   const Vocabulary& vocab);

// Cache container, one file per snapshot, keyed by graph hash + k.
void save_rwpe_cache(const ReturnProbMatrix& rpm, const std::string& path,
                     std::uint64_t graph_hash, std::uint32_t k);
bool load_rwpe_cache(ReturnProbMatrix& rpm, const std::string& path, std::uint64_t graph_hash,
                     std::uint32_t k);

// All snapshots of a graph, optionally through a cache directory.
std::vector<ReturnProbMatrix> rwpe_all_snapshots(const DynamicGraph& g, std::uint32_t k,
                                                 const std::string& cache_dir = "");

}  // namespace tge
