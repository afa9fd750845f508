#include "tge/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "tge/io.hpp"

namespace tge {

bool SnapshotGraph::has_edge(NodeId u, NodeId v) const {
  const auto n = adj(u);
  return std::binary_search(n.begin(), n.end(), v);
}

std::uint32_t SnapshotGraph::present_count() const {
  std::uint32_t c = 0;
  for (NodeId v = 0; v < vocab(); ++v)
    if (degree(v) > 0) ++c;
  return c;
}

SnapshotGraph SnapshotGraph::from_edges(std::uint32_t vocab, std::vector<Edge> edges) {
  std::vector<Edge> dirs;
  dirs.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u == v) continue;  // self-loops dropped
    if (u >= vocab || v >= vocab) throw DataError("edge endpoint outside vocabulary");
    dirs.emplace_back(u, v);
    dirs.emplace_back(v, u);
  }
  std::sort(dirs.begin(), dirs.end());
  dirs.erase(std::unique(dirs.begin(), dirs.end()), dirs.end());

  SnapshotGraph g;
  g.offsets.assign(vocab + 1, 0);
  for (const auto& [u, v] : dirs) g.offsets[u + 1]++;
  for (std::uint32_t i = 0; i < vocab; ++i) g.offsets[i + 1] += g.offsets[i];
  g.neighbors.reserve(dirs.size());
  for (const auto& [u, v] : dirs) g.neighbors.push_back(v);
  return g;
}

std::vector<Edge> SnapshotGraph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (NodeId u = 0; u < vocab(); ++u)
    for (NodeId v : adj(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

// ---------------------------------------------------------------------------
// ingestion
// ---------------------------------------------------------------------------

static std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097LL + static_cast<std::int64_t>(doe) - 719468;
}

std::int64_t parse_timestamp(const std::string& field) {
  if (field.size() == 10 && field[4] == '-' && field[7] == '-') {
    int y = 0;
    unsigned mo = 0, dd = 0;
    if (std::sscanf(field.c_str(), "%4d-%2u-%2u", &y, &mo, &dd) != 3 || mo < 1 || mo > 12 ||
        dd < 1 || dd > 31)
      throw DataError("bad date '" + field + "'");
    return days_from_civil(y, mo, dd) * 86400;
  }
  std::int64_t v = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last) throw DataError("bad timestamp '" + field + "'");
  return v;
}

DynamicGraph ingest_edge_list(std::istream& in, std::int64_t resolution) {
  if (resolution < 1) throw DataError("resolution must be >= 1");

  struct RawEdge {
    NodeId u, v;
    std::int64_t ts;
  };
  std::vector<RawEdge> raw;
  std::vector<std::string> labels;
  std::unordered_map<std::string, NodeId> ids;
  auto intern = [&](const std::string& s) {
    auto it = ids.find(s);
    if (it != ids.end()) return it->second;
    const auto id = static_cast<NodeId>(labels.size());
    labels.push_back(s);
    ids.emplace(s, id);
    return id;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos)
      throw DataError("line " + std::to_string(line_no) + ": expected src<TAB>dst<TAB>timestamp");
    const std::string src = line.substr(0, tab1);
    const std::string dst = line.substr(tab1 + 1, tab2 - tab1 - 1);
    const std::string ts_field = line.substr(tab2 + 1);
    if (src.empty() || dst.empty() || ts_field.empty())
      throw DataError("line " + std::to_string(line_no) + ": empty field");
    std::int64_t ts;
    try {
      ts = parse_timestamp(ts_field);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    raw.push_back({intern(src), intern(dst), ts});
  }
  if (raw.empty()) throw DataError("no valid edges in input");

  std::int64_t ts_min = std::numeric_limits<std::int64_t>::max();
  std::int64_t ts_max = std::numeric_limits<std::int64_t>::min();
  for (const auto& e : raw) {
    ts_min = std::min(ts_min, e.ts);
    ts_max = std::max(ts_max, e.ts);
  }
  const auto T = static_cast<std::uint32_t>((ts_max - ts_min) / resolution + 1);

  std::vector<std::vector<Edge>> per_t(T);
  for (const auto& e : raw) {
    const auto t = static_cast<std::size_t>((e.ts - ts_min) / resolution);
    per_t[t].emplace_back(e.u, e.v);
  }

  DynamicGraph g;
  g.vocab_size = static_cast<std::uint32_t>(labels.size());
  g.resolution = resolution;
  g.node_labels = std::move(labels);
  g.snapshots.reserve(T);
  for (auto& edges : per_t)
    g.snapshots.push_back(SnapshotGraph::from_edges(g.vocab_size, std::move(edges)));
  return g;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

SnapshotStats snapshot_stats(const DynamicGraph& g) {
  SnapshotStats s;
  s.vocab_size = g.vocab_size;
  std::vector<bool> seen(g.vocab_size, false);
  for (std::uint32_t t = 1; t <= g.time_steps(); ++t) {
    const auto& snap = g.snapshot(t);
    SnapshotStatsRow row;
    row.t = t;
    row.nodes = snap.present_count();
    row.edges = snap.edge_count();
    for (NodeId v = 0; v < g.vocab_size; ++v)
      if (snap.degree(v) > 0) seen[v] = true;
    s.sum_nodes += row.nodes;
    s.sum_edges += row.edges;
    s.rows.push_back(row);
  }
  for (bool b : seen)
    if (b) ++s.union_nodes;
  return s;
}

std::string format_stats(const SnapshotStats& s) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%6s %10s %12s\n", "t", "nodes", "edges");
  os << buf;
  for (const auto& r : s.rows) {
    std::snprintf(buf, sizeof buf, "%6u %10u %12llu\n", r.t, r.nodes,
                  static_cast<unsigned long long>(r.edges));
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "total: vocab=%u union_nodes=%u sum_nodes=%llu sum_edges=%llu\n", s.vocab_size,
                s.union_nodes, static_cast<unsigned long long>(s.sum_nodes),
                static_cast<unsigned long long>(s.sum_edges));
  os << buf;
  return os.str();
}

std::string stats_csv(const SnapshotStats& s) {
  std::ostringstream os;
  os << "t,nodes,edges\n";
  for (const auto& r : s.rows) os << r.t << ',' << r.nodes << ',' << r.edges << '\n';
  os << "total," << s.union_nodes << ',' << s.sum_edges << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

static constexpr std::uint32_t kGraphMagic = 0x48504754;  // "TGPH"
static constexpr std::uint32_t kGraphVersion = 1;

void save_graph(const DynamicGraph& g, std::ostream& out, std::uint64_t config_hash,
                std::uint64_t seed) {
  BinWriter w(out);
  w.put(kGraphMagic);
  w.put(kGraphVersion);
  w.put(config_hash);
  w.put(seed);
  w.put(g.resolution);
  w.put(g.time_steps());
  w.put(g.vocab_size);
  for (const auto& snap : g.snapshots) {
    const auto edges = snap.edge_list();
    w.put<std::uint64_t>(edges.size());
    for (const auto& [u, v] : edges) {
      w.put(u);
      w.put(v);
    }
  }
}

DynamicGraph load_graph(std::istream& in) {
  BinReader r(in);
  if (r.get<std::uint32_t>() != kGraphMagic) throw DataError("not a graph container");
  const auto version = r.get<std::uint32_t>();
  if (version != kGraphVersion)
    throw DataError("unsupported graph container version " + std::to_string(version));
  r.get<std::uint64_t>();  // config hash
  r.get<std::uint64_t>();  // seed
  DynamicGraph g;
  g.resolution = r.get<std::int64_t>();
  const auto T = r.get<std::uint32_t>();
  g.vocab_size = r.get<std::uint32_t>();
  g.snapshots.reserve(T);
  for (std::uint32_t t = 0; t < T; ++t) {
    const auto m = r.get<std::uint64_t>();
    std::vector<Edge> edges;
    edges.reserve(m);
    for (std::uint64_t i = 0; i < m; ++i) {
      const auto u = r.get<NodeId>();
      const auto v = r.get<NodeId>();
      edges.emplace_back(u, v);
    }
    g.snapshots.push_back(SnapshotGraph::from_edges(g.vocab_size, std::move(edges)));
  }
  return g;
}

std::uint64_t graph_hash(const DynamicGraph& g) {
  std::uint64_t h = kFnvOffset;
  auto mixv = [&h](std::uint64_t v) { h = fnv1a(&v, sizeof v, h); };
  mixv(static_cast<std::uint64_t>(g.resolution));
  mixv(g.time_steps());
  mixv(g.vocab_size);
  for (const auto& snap : g.snapshots) {
    mixv(snap.neighbors.size());
    if (!snap.neighbors.empty())
      h = fnv1a(snap.neighbors.data(), snap.neighbors.size() * sizeof(NodeId), h);
    h = fnv1a(snap.offsets.data(), snap.offsets.size() * sizeof(std::uint64_t), h);
  }
  return h;
}

// ---------------------------------------------------------------------------
// small file helpers
// ---------------------------------------------------------------------------

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace tge
