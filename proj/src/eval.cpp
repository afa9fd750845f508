#include "tge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tge/io.hpp"
#include "tge/rng.hpp"
#include "tge/sequence.hpp"

namespace tge {

std::uint64_t mcs_similarity(const SnapshotGraph& a, const SnapshotGraph& b) {
  if (a.vocab() != b.vocab()) throw DataError("snapshots over different vocabularies");
  std::uint64_t common = 0;
  for (NodeId u = 0; u < a.vocab(); ++u) {
    const auto na = a.adj(u);
    const auto nb = b.adj(u);
    std::size_t i = 0, j = 0;
    while (i < na.size() && j < nb.size()) {
      if (na[i] == nb[j]) {
        if (na[i] > u) ++common;
        ++i;
        ++j;
      } else if (na[i] < nb[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  return common;
}

SimilarityMatrix mcs_matrix(const DynamicGraph& g) {
  const std::uint32_t T = g.time_steps();
  SimilarityMatrix m(T, T);
  for (std::uint32_t i = 0; i < T; ++i)
    for (std::uint32_t j = i; j < T; ++j) {
      const auto s = static_cast<double>(mcs_similarity(g.snapshots[i], g.snapshots[j]));
      m(i, j) = s;
      m(j, i) = s;
    }
  return m;
}

SimilarityMatrix embedding_heatmap(const Mat<double>& emb) {
  const std::size_t T = emb.rows;
  SimilarityMatrix m(T, T);
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t j = i; j < T; ++j) {
      const double c = cosine(emb.row(i), emb.row(j), emb.cols);
      m(i, j) = c;
      m(j, i) = c;
    }
  return m;
}

std::string heatmap_csv(const SimilarityMatrix& m, std::uint64_t config_hash, std::uint64_t seed) {
  std::ostringstream os;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
  os << "# config=" << hex << " seed=" << seed << '\n';
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) os << (j ? "," : "") << fmt_g(m(i, j));
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// ranking
// ---------------------------------------------------------------------------

// candidate indices ordered by score descending, index ascending on ties
static std::vector<std::uint32_t> ranked_candidates(const std::vector<double>& score,
                                                    std::uint32_t skip) {
  std::vector<std::uint32_t> idx;
  for (std::uint32_t i = 0; i < score.size(); ++i)
    if (i != skip) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  return idx;
}

RankingReport rank_metrics(const Mat<double>& emb, const SimilarityMatrix& truth,
                           const std::vector<std::uint32_t>& k_list) {
  const auto T = static_cast<std::uint32_t>(emb.rows);
  if (truth.rows != T || truth.cols != T) throw DataError("truth matrix shape mismatch");
  if (k_list.empty()) throw DataError("empty K list");
  for (auto k : k_list)
    if (k == 0 || k > T - 1) throw DataError("K exceeds candidate count");

  RankingReport rep;
  rep.k_list = k_list;
  rep.precision.assign(k_list.size(), 0.0);
  rep.map.assign(k_list.size(), 0.0);

  for (std::uint32_t q = 0; q < T; ++q) {
    std::vector<double> emb_sim(T), truth_sim(T);
    for (std::uint32_t j = 0; j < T; ++j) {
      emb_sim[j] = cosine(emb.row(q), emb.row(j), emb.cols);
      truth_sim[j] = truth(q, j);
    }
    const auto pred = ranked_candidates(emb_sim, q);
    const auto ideal = ranked_candidates(truth_sim, q);

    QueryDetail det;
    det.query_t = q + 1;
    for (std::size_t r = 0; r < pred.size(); ++r)
      if (pred[r] == ideal[0]) det.reciprocal_rank = 1.0 / static_cast<double>(r + 1);

    for (std::size_t ki = 0; ki < k_list.size(); ++ki) {
      const std::uint32_t K = k_list[ki];
      std::vector<bool> relevant(T, false);
      for (std::uint32_t r = 0; r < K; ++r) relevant[ideal[r]] = true;

      std::uint32_t hits = 0;
      double ap = 0;
      for (std::uint32_t r = 0; r < K; ++r)
        if (relevant[pred[r]]) {
          ++hits;
          ap += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
      det.p_at_k.push_back(static_cast<double>(hits) / K);
      // divisor is min(K, |relevant|); the relevant set is exactly K here
      det.ap_at_k.push_back(ap / static_cast<double>(K));
      rep.precision[ki] += det.p_at_k.back();
      rep.map[ki] += det.ap_at_k.back();
    }
    rep.mrr += det.reciprocal_rank;
    rep.queries.push_back(std::move(det));
  }

  const auto nq = static_cast<double>(T);
  for (auto& v : rep.precision) v /= nq;
  for (auto& v : rep.map) v /= nq;
  rep.mrr /= nq;
  return rep;
}

std::string ranking_csv(const RankingReport& r, std::uint64_t config_hash, std::uint64_t seed) {
  std::ostringstream os;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
  os << "# config=" << hex << " seed=" << seed << '\n';
  os << "metric,K,value\n";
  for (std::size_t i = 0; i < r.k_list.size(); ++i) {
    os << "precision," << r.k_list[i] << ',' << fmt_g(r.precision[i]) << '\n';
    os << "map," << r.k_list[i] << ',' << fmt_g(r.map[i]) << '\n';
  }
  os << "mrr,," << fmt_g(r.mrr) << '\n';
  os << "query,K,p_at_k,ap_at_k,rr\n";
  for (const auto& q : r.queries)
    for (std::size_t i = 0; i < r.k_list.size(); ++i)
      os << q.query_t << ',' << r.k_list[i] << ',' << fmt_g(q.p_at_k[i]) << ','
         << fmt_g(q.ap_at_k[i]) << ',' << fmt_g(q.reciprocal_rank) << '\n';
  return os.str();
}

std::string ranking_text(const RankingReport& r) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%8s %10s %10s\n", "K", "P@K", "MAP@K");
  os << buf;
  for (std::size_t i = 0; i < r.k_list.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%8u %10.4f %10.4f\n", r.k_list[i], r.precision[i], r.map[i]);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "MRR %.4f over %zu queries\n", r.mrr, r.queries.size());
  os << buf;
  return os.str();
}

// ---------------------------------------------------------------------------
// anomaly detection
// ---------------------------------------------------------------------------

std::vector<double> anomaly_scores(const ModelParams<float>& params, const WalkCorpus& corpus,
                                   const std::vector<ReturnProbMatrix>& rpms,
                                   std::uint32_t vocab_nodes) {
  const Vocabulary vocab{vocab_nodes};
  const std::uint32_t T = params.cfg.time_steps;
  std::vector<double> sum(T, 0.0);
  std::vector<std::uint64_t> count(T, 0);
  for (const auto& rec : corpus.records) {
    if (rec.t < 1 || rec.t > T) throw DataError("walk timestamp outside model range");
    SplitMix64 rng(stream_key({0}));  // unused at mask rate 0
    const auto seq = build_sequence(rec, vocab, rpms[rec.t - 1], 0.0, rng);
    const auto tr = forward_sequence(seq, params);
    auto logits = timestamp_logits(tr.h, params.enc);
    softmax_row(logits.data(), logits.size());
    sum[rec.t - 1] += static_cast<double>(logits[rec.t - 1]);
    count[rec.t - 1] += 1;
  }
  std::vector<double> scores(T, 0.0);
  for (std::uint32_t t = 0; t < T; ++t)
    if (count[t]) scores[t] = sum[t] / static_cast<double>(count[t]);
  return scores;
}

double anomaly_mrr(const std::vector<double>& scores, const std::vector<std::uint32_t>& anomalies) {
  if (anomalies.empty()) throw DataError("empty anomaly set");
  std::vector<std::uint32_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  double mrr = 0;
  for (auto t : anomalies) {
    if (t < 1 || t > scores.size()) throw DataError("anomaly timestep out of range");
    for (std::size_t r = 0; r < idx.size(); ++r)
      if (idx[r] == t - 1) {
        mrr += 1.0 / static_cast<double>(r + 1);
        break;
      }
  }
  return mrr / static_cast<double>(anomalies.size());
}

static std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DataError("series length mismatch");
  if (a.size() < 2) throw DataError("need at least two points");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const auto n = static_cast<double>(a.size());
  const double ma = kern::vsum(ra.data(), ra.size()) / n;
  const double mb = kern::vsum(rb.data(), rb.size()) / n;
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0 || db == 0) throw DataError("constant series has no rank correlation");
  return num / std::sqrt(da * db);
}

// ---------------------------------------------------------------------------
// segmentation
// ---------------------------------------------------------------------------

SegmentationVector dp_segmentation(const Mat<double>& emb, std::uint32_t p) {
  const std::size_t T = emb.rows;
  if (p < 1 || p > T) throw DataError("segment count must be in [1, T]");

  Mat<double> cost(T, T);
  for (std::size_t s = 0; s < T; ++s)
    for (std::size_t e = s; e < T; ++e) cost(s, e) = segment_coherence(emb, s, e);

  const double ninf = -std::numeric_limits<double>::infinity();
  Mat<double> best(T, p + 1);
  std::fill(best.a.begin(), best.a.end(), ninf);
  Mat<double> from(T, p + 1);  // start index of the last segment
  for (std::size_t j = 0; j < T; ++j) best(j, 1) = cost(0, j);
  for (std::uint32_t m = 2; m <= p; ++m)
    for (std::size_t j = m - 1; j < T; ++j)
      for (std::size_t i = m - 1; i <= j; ++i) {
        const double v = best(i - 1, m - 1) + cost(i, j);
        if (v > best(j, m)) {
          best(j, m) = v;
          from(j, m) = static_cast<double>(i);
        }
      }

  SegmentationVector seg;
  seg.p = p;
  seg.v.assign(T, 0);
  std::size_t j = T - 1;
  for (std::uint32_t m = p; m >= 1; --m) {
    const std::size_t i = m == 1 ? 0 : static_cast<std::size_t>(from(j, m));
    for (std::size_t t = i; t <= j; ++t) seg.v[t] = m;
    if (m > 1) j = i - 1;
  }
  return seg;
}

double segmentation_objective(const Mat<double>& emb, const SegmentationVector& seg) {
  double total = 0;
  std::size_t s = 0;
  for (std::size_t t = 1; t <= seg.v.size(); ++t) {
    if (t == seg.v.size() || seg.v[t] != seg.v[s]) {
      total += segment_coherence(emb, s, t - 1);
      s = t;
    }
  }
  return total;
}

// Hungarian algorithm with potentials, O(n^3), on the negated weights.
double max_assignment(const Mat<double>& w, std::vector<std::uint32_t>* out_map) {
  const std::size_t r = w.rows, c = w.cols;
  const std::size_t n = std::max(r, c);
  const double inf = std::numeric_limits<double>::infinity();

  // square cost matrix, 1-based
  Mat<double> a(n + 1, n + 1);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= n; ++j)
      a(i, j) = (i <= r && j <= c) ? -w(i - 1, j - 1) : 0.0;

  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j)
        if (!used[j]) {
          const double cur = a(i0, j) - u[i0] - v[j];
          if (cur < minv[j]) {
            minv[j] = cur;
            way[j] = j0;
          }
          if (minv[j] < delta) {
            delta = minv[j];
            j1 = j;
          }
        }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  double total = 0;
  if (out_map) out_map->assign(r, std::numeric_limits<std::uint32_t>::max());
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j];
    if (i >= 1 && i <= r && j <= c) {
      total += w(i - 1, j - 1);
      if (out_map) (*out_map)[i - 1] = static_cast<std::uint32_t>(j - 1);
    }
  }
  return total;
}

// compacts arbitrary labels to 0..k-1 in first-appearance order
static std::vector<std::uint32_t> compact_labels(const std::vector<std::uint32_t>& labels,
                                                 std::uint32_t& k) {
  std::vector<std::uint32_t> out(labels.size());
  std::vector<std::uint32_t> seen;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = std::find(seen.begin(), seen.end(), labels[i]);
    if (it == seen.end()) {
      seen.push_back(labels[i]);
      it = seen.end() - 1;
    }
    out[i] = static_cast<std::uint32_t>(it - seen.begin());
  }
  k = static_cast<std::uint32_t>(seen.size());
  return out;
}

SegmentationReport segmentation_metrics(const SegmentationVector& pred,
                                        const std::vector<std::uint32_t>& truth_labels) {
  if (pred.v.size() != truth_labels.size()) throw DataError("label length mismatch");
  const auto n = static_cast<double>(pred.v.size());

  std::uint32_t kp = 0, kt = 0;
  const auto cp = compact_labels(pred.v, kp);
  const auto ct = compact_labels(truth_labels, kt);

  Mat<double> cont(kp, kt);
  for (std::size_t i = 0; i < cp.size(); ++i) cont(cp[i], ct[i]) += 1.0;

  SegmentationReport rep;

  std::vector<std::uint32_t> mapping;
  rep.acc = max_assignment(cont, &mapping) / n;

  // mutual information (natural log) with arithmetic-mean normalization
  double hp = 0, ht = 0, mi = 0;
  for (std::uint32_t i = 0; i < kp; ++i) {
    double ni = 0;
    for (std::uint32_t j = 0; j < kt; ++j) ni += cont(i, j);
    if (ni > 0) hp -= ni / n * std::log(ni / n);
  }
  for (std::uint32_t j = 0; j < kt; ++j) {
    double nj = 0;
    for (std::uint32_t i = 0; i < kp; ++i) nj += cont(i, j);
    if (nj > 0) ht -= nj / n * std::log(nj / n);
  }
  for (std::uint32_t i = 0; i < kp; ++i) {
    double ni = 0;
    for (std::uint32_t j = 0; j < kt; ++j) ni += cont(i, j);
    for (std::uint32_t j = 0; j < kt; ++j) {
      double nj = 0;
      for (std::uint32_t ii = 0; ii < kp; ++ii) nj += cont(ii, j);
      const double nij = cont(i, j);
      if (nij > 0) mi += nij / n * std::log(nij * n / (ni * nj));
    }
  }
  rep.nmi = (hp + ht) > 0 ? 2.0 * mi / (hp + ht) : 1.0;

  // macro F1 over truth classes after the optimal mapping
  const auto unmatched = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> mapped(cp.size());
  for (std::size_t i = 0; i < cp.size(); ++i) mapped[i] = mapping[cp[i]];
  double f1_sum = 0;
  for (std::uint32_t cls = 0; cls < kt; ++cls) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < ct.size(); ++i) {
      const bool is_pred = mapped[i] == cls && mapped[i] != unmatched;
      const bool is_true = ct[i] == cls;
      if (is_pred && is_true) ++tp;
      else if (is_pred) ++fp;
      else if (is_true) ++fn;
    }
    const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    f1_sum += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
  }
  rep.f1_macro = f1_sum / static_cast<double>(kt);
  return rep;
}

std::string segmentation_report_csv(const SegmentationReport& r, std::uint64_t config_hash,
                                    std::uint64_t seed) {
  std::ostringstream os;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
  os << "# config=" << hex << " seed=" << seed << '\n';
  os << "metric,value\n";
  os << "acc," << fmt_g(r.acc) << '\n';
  os << "nmi," << fmt_g(r.nmi) << '\n';
  os << "f1_macro," << fmt_g(r.f1_macro) << '\n';
  return os.str();
}

}  // namespace tge
