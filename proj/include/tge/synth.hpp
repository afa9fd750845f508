#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tge/graph.hpp"

namespace tge {

enum class GeneratorKind { two_blocks, random_graph, hub };

GeneratorKind parse_generator_kind(const std::string& name);
const char* generator_kind_name(GeneratorKind k);

struct Regime {
  std::uint32_t start_t = 1;
  std::uint32_t end_t = 1;
  GeneratorKind kind = GeneratorKind::random_graph;
  double edge_prob = 0.15;  // random / hub background density
  double pin = 0.35;        // two_blocks intra-community density
  double pout = 0.05;       // two_blocks cross-community density
  double hub_frac = 0.5;    // fraction of nodes wired to the hub
};

// Each regime draws a base graph once; snapshots inside the regime resample a
// `rewire` fraction of node pairs so consecutive slices stay similar without
// being identical. The first snapshot of every regime after the first also
// receives a transient burst of `shock` * |E| extra random edges, making the
// change points structurally loud the way real event snapshots are.
struct RegimeSpec {
  std::uint32_t T = 12;
  std::uint32_t n = 60;
  std::uint64_t seed = 1;
  double rewire = 0.3;
  double shock = 0.25;
  std::vector<Regime> regimes;
};

struct SyntheticTruth {
  std::vector<std::uint32_t> regime_label;      // per t, 1..R
  std::vector<std::uint32_t> anomalies;         // first t of regimes 2..R
  std::vector<std::uint8_t> edge_growth;        // y_t for t = 2..T
  std::vector<std::uint64_t> built_edge_counts; // generator bookkeeping per t
};

// Deterministic in spec.seed regardless of platform.
std::pair<DynamicGraph, SyntheticTruth> generate_synthetic(const RegimeSpec& spec);

// "1-4:blocks:pin=0.35,pout=0.05;5-8:random:p=0.2;9-12:hub:p=0.15,frac=0.5"
std::vector<Regime> parse_regimes(const std::string& text);

}  // namespace tge
