#include "tge/rwpe.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "tge/io.hpp"
#include "tge/kernels.hpp"

namespace tge {

// One step of mass propagation: out[j] = sum_{u in adj(j)} in[u] / deg(u),
// applied to `width` independent start columns at once. Iterating sources in
// ascending order keeps the floating-point accumulation order identical for
// every strategy and lane width.
static void propagate(const SnapshotGraph& g, const std::vector<double>& inv_deg,
                      const double* in, double* out, std::size_t width) {
  std::fill(out, out + static_cast<std::size_t>(g.vocab()) * width, 0.0);
  for (NodeId u = 0; u < g.vocab(); ++u) {
    const double w = inv_deg[u];
    if (w == 0.0) continue;
    const double* src = in + static_cast<std::size_t>(u) * width;
    if (width == 1) {
      if (*src == 0.0) continue;
      const double m = w * *src;
      for (NodeId j : g.adj(u)) out[j] += m;
    } else {
      for (NodeId j : g.adj(u))
        kern::axpy(out + static_cast<std::size_t>(j) * width, w, src, width);
    }
  }
}

static ReturnProbMatrix compute_batched(const SnapshotGraph& g, std::uint32_t k) {
  const std::uint32_t n = g.vocab();
  constexpr std::uint32_t kPanel = 64;
  ReturnProbMatrix rpm;
  rpm.n = n;
  rpm.k = k;
  rpm.values.assign(static_cast<std::size_t>(n) * k, 0.0);

  std::vector<double> inv_deg(n, 0.0);
  for (NodeId v = 0; v < n; ++v)
    if (g.degree(v) > 0) inv_deg[v] = 1.0 / g.degree(v);

  std::vector<double> cur(static_cast<std::size_t>(n) * kPanel);
  std::vector<double> nxt(static_cast<std::size_t>(n) * kPanel);
  for (std::uint32_t lo = 0; lo < n; lo += kPanel) {
    const std::uint32_t width = std::min(kPanel, n - lo);
    std::fill(cur.begin(), cur.end(), 0.0);
    for (std::uint32_t c = 0; c < width; ++c)
      cur[static_cast<std::size_t>(lo + c) * kPanel + c] = 1.0;
    for (std::uint32_t s = 1; s <= k; ++s) {
      propagate(g, inv_deg, cur.data(), nxt.data(), kPanel);
      for (std::uint32_t c = 0; c < width; ++c)
        rpm.values[static_cast<std::size_t>(lo + c) * k + (s - 1)] =
            nxt[static_cast<std::size_t>(lo + c) * kPanel + c];
      cur.swap(nxt);
    }
  }
  return rpm;
}

static ReturnProbMatrix compute_per_node(const SnapshotGraph& g, std::uint32_t k) {
  const std::uint32_t n = g.vocab();
  ReturnProbMatrix rpm;
  rpm.n = n;
  rpm.k = k;
  rpm.values.assign(static_cast<std::size_t>(n) * k, 0.0);

  std::vector<double> inv_deg(n, 0.0);
  for (NodeId v = 0; v < n; ++v)
    if (g.degree(v) > 0) inv_deg[v] = 1.0 / g.degree(v);

  std::vector<double> cur(n), nxt(n);
  for (NodeId i = 0; i < n; ++i) {
    if (g.degree(i) == 0) continue;
    std::fill(cur.begin(), cur.end(), 0.0);
    cur[i] = 1.0;
    for (std::uint32_t s = 1; s <= k; ++s) {
      propagate(g, inv_deg, cur.data(), nxt.data(), 1);
      rpm.values[static_cast<std::size_t>(i) * k + (s - 1)] = nxt[i];
      cur.swap(nxt);
    }
  }
  return rpm;
}

ReturnProbMatrix return_probabilities(const SnapshotGraph& g, std::uint32_t k,
                                      RwpeStrategy strategy) {
  if (k < 1) throw DataError("rwpe step count must be >= 1");
  return strategy == RwpeStrategy::batched ? compute_batched(g, k) : compute_per_node(g, k);
}

std::vector<double> rwpe_for_token(const ReturnProbMatrix& rpm, TokenId token,
                                   const Vocabulary& vocab) {
  if (token >= vocab.size()) throw DataError("token id out of vocabulary range");
  std::vector<double> out(rpm.k, 0.0);
  if (Vocabulary::is_special(token)) return out;
  const NodeId node = vocab.token_node(token);
  if (node < rpm.n) std::copy(rpm.row(node), rpm.row(node) + rpm.k, out.begin());
  return out;
}

// ---------------------------------------------------------------------------
// cache
// ---------------------------------------------------------------------------

static constexpr std::uint32_t kRwpeMagic = 0x45505754;  // "TWPE"
static constexpr std::uint32_t kRwpeVersion = 1;

void save_rwpe_cache(const ReturnProbMatrix& rpm, const std::string& path,
                     std::uint64_t graph_hash, std::uint32_t k) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  BinWriter w(out);
  w.put(kRwpeMagic);
  w.put(kRwpeVersion);
  w.put(graph_hash);
  w.put(k);
  w.put(rpm.n);
  w.put_bytes(rpm.values.data(), rpm.values.size() * sizeof(double));
}

bool load_rwpe_cache(ReturnProbMatrix& rpm, const std::string& path, std::uint64_t graph_hash,
                     std::uint32_t k) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  BinReader r(in);
  if (r.get<std::uint32_t>() != kRwpeMagic) throw DataError(path + ": not a rwpe cache");
  if (r.get<std::uint32_t>() != kRwpeVersion) return false;
  if (r.get<std::uint64_t>() != graph_hash) return false;
  if (r.get<std::uint32_t>() != k) return false;
  rpm.n = r.get<std::uint32_t>();
  rpm.k = k;
  rpm.values.assign(static_cast<std::size_t>(rpm.n) * k, 0.0);
  r.get_bytes(rpm.values.data(), rpm.values.size() * sizeof(double));
  return true;
}

std::vector<ReturnProbMatrix> rwpe_all_snapshots(const DynamicGraph& g, std::uint32_t k,
                                                 const std::string& cache_dir) {
  const std::uint64_t gh = cache_dir.empty() ? 0 : graph_hash(g);
  std::vector<ReturnProbMatrix> out(g.time_steps());
  for (std::uint32_t t = 1; t <= g.time_steps(); ++t) {
    std::string path;
    if (!cache_dir.empty()) {
      std::filesystem::create_directories(cache_dir);
      path = cache_dir + "/t" + std::to_string(t) + ".rwpe";
      if (load_rwpe_cache(out[t - 1], path, gh, k)) continue;
    }
    out[t - 1] = return_probabilities(g.snapshot(t), k);
    if (!path.empty()) save_rwpe_cache(out[t - 1], path, gh, k);
  }
  return out;
}

}  // namespace tge
