#include "tge/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "tge/rng.hpp"

namespace tge {

GeneratorKind parse_generator_kind(const std::string& name) {
  if (name == "blocks") return GeneratorKind::two_blocks;
  if (name == "random") return GeneratorKind::random_graph;
  if (name == "hub") return GeneratorKind::hub;
  throw DataError("unknown generator kind '" + name + "'");
}

const char* generator_kind_name(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::two_blocks: return "blocks";
    case GeneratorKind::random_graph: return "random";
    case GeneratorKind::hub: return "hub";
  }
  return "?";
}

static void validate(const RegimeSpec& spec) {
  if (spec.T < 1) throw DataError("T must be >= 1");
  if (spec.n < 2) throw DataError("need at least 2 nodes");
  if (spec.regimes.empty()) throw DataError("no regimes given");
  if (spec.rewire < 0 || spec.rewire > 1 || spec.shock < 0)
    throw DataError("rewire must be in [0,1] and shock >= 0");
  std::uint32_t expect = 1;
  for (const auto& r : spec.regimes) {
    if (r.start_t != expect || r.end_t < r.start_t)
      throw DataError("regimes must partition 1..T contiguously");
    expect = r.end_t + 1;
  }
  if (expect != spec.T + 1) throw DataError("regimes must cover exactly 1..T");
}

// Sampling probability for one node pair under a regime's generator.
static double pair_prob(const Regime& r, NodeId hub, NodeId u, NodeId v, std::uint32_t n) {
  switch (r.kind) {
    case GeneratorKind::two_blocks: {
      const bool same = (u < n / 2) == (v < n / 2);
      return same ? r.pin : r.pout;
    }
    case GeneratorKind::random_graph:
      return r.edge_prob;
    case GeneratorKind::hub:
      if (u == hub || v == hub) return r.hub_frac;
      return r.edge_prob;
  }
  return 0.0;
}

std::pair<DynamicGraph, SyntheticTruth> generate_synthetic(const RegimeSpec& spec) {
  validate(spec);
  const std::uint32_t n = spec.n;

  DynamicGraph g;
  g.vocab_size = n;
  g.resolution = 1;
  SyntheticTruth truth;
  truth.regime_label.assign(spec.T, 0);

  std::vector<std::uint64_t> edge_counts;

  for (std::size_t ri = 0; ri < spec.regimes.size(); ++ri) {
    const auto& regime = spec.regimes[ri];
    const NodeId hub =
        static_cast<NodeId>(SplitMix64(stream_key({spec.seed, 0x687562, ri})).below(n));

    // Base edge set for the regime.
    std::set<Edge> base;
    {
      SplitMix64 rng(stream_key({spec.seed, 0x62617365, ri}));
      for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v)
          if (rng.uniform() < pair_prob(regime, hub, u, v, n)) base.insert({u, v});
    }

    for (std::uint32_t t = regime.start_t; t <= regime.end_t; ++t) {
      truth.regime_label[t - 1] = static_cast<std::uint32_t>(ri + 1);
      std::set<Edge> edges;
      SplitMix64 rng(stream_key({spec.seed, 0x736e6170, t}));
      for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v) {
          const bool in_base = base.count({u, v}) > 0;
          bool present = in_base;
          if (rng.uniform() < spec.rewire)
            present = rng.uniform() < pair_prob(regime, hub, u, v, n);
          if (present) edges.insert({u, v});
        }

      // Transient burst at change points.
      if (ri > 0 && t == regime.start_t && spec.shock > 0) {
        SplitMix64 srng(stream_key({spec.seed, 0x73686f63, t}));
        auto extra = static_cast<std::uint64_t>(std::llround(spec.shock * edges.size()));
        std::uint64_t guard = 0;
        while (extra > 0 && guard < 100000) {
          const auto a = static_cast<NodeId>(srng.below(n));
          const auto b = static_cast<NodeId>(srng.below(n));
          ++guard;
          if (a == b) continue;
          const Edge e{std::min(a, b), std::max(a, b)};
          if (edges.insert(e).second) --extra;
        }
      }

      edge_counts.push_back(edges.size());
      g.snapshots.push_back(
          SnapshotGraph::from_edges(n, std::vector<Edge>(edges.begin(), edges.end())));
      if (ri > 0 && t == regime.start_t) truth.anomalies.push_back(t);
    }
  }

  truth.built_edge_counts = edge_counts;
  for (std::uint32_t t = 2; t <= spec.T; ++t)
    truth.edge_growth.push_back(edge_counts[t - 1] > edge_counts[t - 2] ? 1 : 0);

  return {std::move(g), std::move(truth)};
}

// ---------------------------------------------------------------------------
// regime string parsing: "1-4:blocks:pin=0.35,pout=0.05;..."
// ---------------------------------------------------------------------------

static std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto next = s.find(sep, pos);
    if (next == std::string::npos) {
      parts.push_back(s.substr(pos));
      break;
    }
    parts.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return parts;
}

static double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw DataError("");
    return v;
  } catch (...) {
    throw DataError("bad numeric value '" + s + "'");
  }
}

std::vector<Regime> parse_regimes(const std::string& text) {
  std::vector<Regime> regimes;
  for (const auto& item : split(text, ';')) {
    if (item.empty()) continue;
    const auto fields = split(item, ':');
    if (fields.size() < 2) throw DataError("bad regime '" + item + "'");
    Regime r;
    const auto range = split(fields[0], '-');
    if (range.size() != 2) throw DataError("bad regime range '" + fields[0] + "'");
    r.start_t = static_cast<std::uint32_t>(std::stoul(range[0]));
    r.end_t = static_cast<std::uint32_t>(std::stoul(range[1]));
    r.kind = parse_generator_kind(fields[1]);
    if (fields.size() > 2 && !fields[2].empty()) {
      for (const auto& kv : split(fields[2], ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw DataError("bad regime parameter '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const double val = parse_double(kv.substr(eq + 1));
        if (key == "p") r.edge_prob = val;
        else if (key == "pin") r.pin = val;
        else if (key == "pout") r.pout = val;
        else if (key == "frac") r.hub_frac = val;
        else throw DataError("unknown regime parameter '" + key + "'");
      }
    }
    regimes.push_back(r);
  }
  if (regimes.empty()) throw DataError("no regimes given");
  return regimes;
}

}  // namespace tge
