#include "tge/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tge/io.hpp"
#include "tge/rng.hpp"
#include "tge/sequence.hpp"
#include "tge/synth.hpp"

namespace tge {

bool SegmentationVector::valid() const {
  if (v.empty() || p == 0 || v.front() != 1) return false;
  std::uint32_t seen = 1;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] != v[i - 1] && v[i] != v[i - 1] + 1) return false;
    seen = std::max(seen, v[i]);
  }
  return seen == p;
}

// ---------------------------------------------------------------------------
// top-down segmentation
// ---------------------------------------------------------------------------

double segment_coherence(const Mat<double>& emb, std::size_t s, std::size_t e) {
  const std::size_t d = emb.cols;
  std::vector<double> mean(d, 0.0);
  for (std::size_t t = s; t <= e; ++t) kern::vadd(mean.data(), emb.row(t), d);
  kern::scal(mean.data(), 1.0 / static_cast<double>(e - s + 1), d);
  double score = 0.0;
  for (std::size_t t = s; t <= e; ++t) score += cosine(emb.row(t), mean.data(), d);
  return score;
}

SegmentationVector top_down_segmentation(const Mat<double>& emb, std::uint32_t p,
                                         bool strict_range) {
  const std::size_t T = emb.rows;
  if (p < 1 || p > T) throw DataError("segment count must be in [1, T]");

  std::vector<std::pair<std::size_t, std::size_t>> segs{{0, T - 1}};  // inclusive
  while (segs.size() < p) {
    // longest segment, ties to the earliest start
    std::size_t best = 0;
    for (std::size_t i = 1; i < segs.size(); ++i) {
      const auto len = segs[i].second - segs[i].first;
      if (len > segs[best].second - segs[best].first) best = i;
    }
    const auto [s, e] = segs[best];
    const std::size_t lo = strict_range ? s + 1 : s;
    if (e < lo + 1) throw DataError("split range cannot reach the requested segment count");

    std::size_t best_j = lo;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t j = lo; j <= e - 1; ++j) {
      const double score = segment_coherence(emb, s, j) + segment_coherence(emb, j + 1, e);
      if (score > best_score) {
        best_score = score;
        best_j = j;
      }
    }
    segs[best] = {s, best_j};
    segs.insert(segs.begin() + static_cast<std::ptrdiff_t>(best) + 1, {best_j + 1, e});
  }

  SegmentationVector out;
  out.p = p;
  out.v.assign(T, 0);
  for (std::size_t i = 0; i < segs.size(); ++i)
    for (std::size_t t = segs[i].first; t <= segs[i].second; ++t)
      out.v[t] = static_cast<std::uint32_t>(i + 1);
  return out;
}

template <typename T>
Mat<T> segment_causal_mask(const SegmentationVector& seg) {
  const std::size_t n = seg.v.size();
  const T ninf = -std::numeric_limits<T>::infinity();
  Mat<T> m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m(i, j) = (j <= i && seg.v[i] == seg.v[j]) ? T(0) : ninf;
  return m;
}

// ---------------------------------------------------------------------------
// segment attention and edge prediction
// ---------------------------------------------------------------------------

template <typename T>
void segment_attention(const Mat<T>& emb, const TemporalParams<T>& tp, const Mat<T>& mask,
                       TemporalTrace<T>& tr) {
  const std::size_t n = emb.rows;
  const std::size_t d = emb.cols;
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(d));

  tr.q = Mat<T>(n, d);
  gemm_nn(tr.q, emb, tp.wq);
  tr.k = Mat<T>(n, d);
  gemm_nn(tr.k, emb, tp.wk);
  tr.v = Mat<T>(n, d);
  gemm_nn(tr.v, emb, tp.wv);

  tr.beta = Mat<T>(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      tr.beta(i, j) = kern::dot(tr.q.row(i), tr.k.row(j), d) * inv_sqrt_d + mask(i, j);
    softmax_row(tr.beta.row(i), n);
  }
  tr.z = Mat<T>(n, d);
  gemm_nn(tr.z, tr.beta, tr.v);
}

std::vector<std::uint8_t> edge_labels(const DynamicGraph& g) {
  if (g.time_steps() < 2) throw DataError("edge labels need at least two snapshots");
  std::vector<std::uint8_t> y;
  for (std::uint32_t t = 2; t <= g.time_steps(); ++t)
    y.push_back(g.snapshot(t).edge_count() > g.snapshot(t - 1).edge_count() ? 1 : 0);
  return y;
}

// loss = max(x,0) - x*y + log(1 + exp(-|x|)), numerically safe for any logit
template <typename T>
static double bce_with_logit(T x, std::uint8_t y) {
  const double xd = x;
  return std::max(xd, 0.0) - xd * y + std::log1p(std::exp(-std::abs(xd)));
}

template <typename T>
double edge_evolution_forward_backward(const Mat<T>& w_tm, const TemporalParams<T>& tp,
                                       const Mat<T>& mask, const std::vector<std::uint8_t>& y,
                                       EdgeInput input, T scale, TemporalTrace<T>& tr,
                                       ModelParams<T>* grads) {
  const std::size_t n = w_tm.rows;
  const std::size_t d = w_tm.cols;
  if (!y.empty() && y.size() != n - 1) throw DataError("edge label count must be T-1");

  segment_attention(w_tm, tp, mask, tr);
  const Mat<T>& src = input == EdgeInput::attention_output ? tr.z : w_tm;

  double loss = 0.0;
  tr.yhat.assign(y.size(), T(0));
  std::vector<T> dlogit(y.size(), T(0));
  for (std::size_t t = 0; t < y.size(); ++t) {
    T x = tp.f_b[0];
    x += kern::dot(tp.f_w.data(), src.row(t), d);
    x += kern::dot(tp.f_w.data() + d, src.row(t + 1), d);
    const T p = T(1) / (T(1) + std::exp(-x));
    tr.yhat[t] = p;
    loss += bce_with_logit(x, y[t]);
    dlogit[t] = scale * (p - static_cast<T>(y[t]));
  }
  if (!grads || scale == T(0) || y.empty()) return loss;

  auto& G = *grads;
  Mat<T> dsrc(n, d);
  for (std::size_t t = 0; t < y.size(); ++t) {
    kern::axpy(G.tmp.f_w.data(), dlogit[t], src.row(t), d);
    kern::axpy(G.tmp.f_w.data() + d, dlogit[t], src.row(t + 1), d);
    G.tmp.f_b[0] += dlogit[t];
    kern::axpy(dsrc.row(t), dlogit[t], tp.f_w.data(), d);
    kern::axpy(dsrc.row(t + 1), dlogit[t], tp.f_w.data() + d, d);
  }

  if (input == EdgeInput::raw_embeddings) {
    for (std::size_t i = 0; i < dsrc.a.size(); ++i) G.enc.w_tm.a[i] += dsrc.a[i];
    return loss;
  }

  // back through the attention block
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(d));
  Mat<T> dbeta(n, n);
  gemm_nt(dbeta, dsrc, tr.v);
  Mat<T> dv(n, d);
  gemm_tn(dv, tr.beta, dsrc);

  Mat<T> ds(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const T rowc = kern::dot(dbeta.row(i), tr.beta.row(i), n);
    for (std::size_t j = 0; j < n; ++j)
      ds(i, j) = tr.beta(i, j) * (dbeta(i, j) - rowc) * inv_sqrt_d;
  }
  Mat<T> dq(n, d), dk(n, d);
  gemm_nn(dq, ds, tr.k);
  gemm_tn(dk, ds, tr.q);

  gemm_tn(G.tmp.wq, w_tm, dq);
  gemm_tn(G.tmp.wk, w_tm, dk);
  gemm_tn(G.tmp.wv, w_tm, dv);

  Mat<T> demb(n, d);
  gemm_nt(demb, dq, tp.wq);
  gemm_nt(demb, dk, tp.wk);
  gemm_nt(demb, dv, tp.wv);
  for (std::size_t i = 0; i < demb.a.size(); ++i) G.enc.w_tm.a[i] += demb.a[i];
  return loss;
}

// ---------------------------------------------------------------------------
// optimizer
// ---------------------------------------------------------------------------

static constexpr float kBeta1 = 0.9f;
static constexpr float kBeta2 = 0.999f;
static constexpr float kAdamEps = 1e-8f;

void adam_step(ModelParams<float>& params, const ModelParams<float>& grads, AdamState& state,
               float lr) {
  state.step += 1;
  const float bc1 = 1.0f / (1.0f - std::pow(kBeta1, static_cast<float>(state.step)));
  const float bc2 = 1.0f / (1.0f - std::pow(kBeta2, static_cast<float>(state.step)));
  auto pr = tensor_refs(params);
  auto gr = tensor_refs(const_cast<ModelParams<float>&>(grads));
  auto mr = tensor_refs(state.m);
  auto vr = tensor_refs(state.v);
  for (std::size_t i = 0; i < pr.size(); ++i)
    kern::adam_update(pr[i].data, mr[i].data, vr[i].data, gr[i].data, pr[i].size, lr, kBeta1,
                      kBeta2, kAdamEps, bc1, bc2);
}

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

void TrainConfig::validate(std::uint32_t time_steps) const {
  if (epochs < 1) throw DataError("epochs must be >= 1");
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  if (learning_rate <= 0) throw DataError("learning_rate must be > 0");
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) throw DataError("loss weights must be >= 0");
  if (segments < 1 || segments > time_steps)
    throw DataError("segments must be in [1, time_steps]");
}

static void check_finite_grads(const ModelParams<float>& grads, std::uint32_t epoch,
                               std::uint32_t batch) {
  auto refs = tensor_refs(const_cast<ModelParams<float>&>(grads));
  for (const auto& r : refs)
    for (std::size_t i = 0; i < r.size; ++i)
      if (!std::isfinite(r.data[i]))
        throw DivergenceError("non-finite gradient in tensor " + r.name + " at epoch " +
                              std::to_string(epoch) + " batch " + std::to_string(batch));
}

TrainResult train(const DynamicGraph& graph, const WalkCorpus& corpus,
                  const std::vector<ReturnProbMatrix>& rpms, const ModelConfig& mcfg,
                  const TrainConfig& tcfg) {
  mcfg.validate();
  tcfg.validate(graph.time_steps());
  if (mcfg.time_steps != graph.time_steps()) throw DataError("model/graph time_steps mismatch");
  if (rpms.size() != graph.time_steps()) throw DataError("need one rwpe matrix per snapshot");
  if (corpus.records.empty()) throw DataError("empty walk corpus");

  const Vocabulary vocab{graph.vocab_size};
  if (mcfg.vocab != vocab.size()) throw DataError("model/graph vocabulary mismatch");

  TrainResult res;
  res.params = ModelParams<float>::init(mcfg, tcfg.seed);
  auto grads = ModelParams<float>::zeros_like(res.params);
  AdamState adam{ModelParams<float>::zeros_like(res.params),
                 ModelParams<float>::zeros_like(res.params), 0};
  const auto y = graph.time_steps() >= 2 ? edge_labels(graph) : std::vector<std::uint8_t>{};

  const std::size_t n_rec = corpus.records.size();
  std::vector<std::size_t> order(n_rec);
  for (std::size_t i = 0; i < n_rec; ++i) order[i] = i;

  auto build = [&](std::size_t rec_idx, std::uint32_t epoch, double rate) {
    SplitMix64 rng(stream_key({tcfg.seed, 0x6d61736b, epoch, rec_idx}));
    const auto& rec = corpus.records[rec_idx];
    return build_sequence(rec, vocab, rpms[rec.t - 1], rate, rng);
  };

  // one epoch over the data; update=false is the pre-training evaluation pass
  auto run_epoch = [&](std::uint32_t epoch, bool update) {
    const auto seg = top_down_segmentation(mat_cast<double>(res.params.enc.w_tm), tcfg.segments,
                                           tcfg.strict_alg1);
    const auto mask = segment_causal_mask<float>(seg);
    res.segmentation = seg;

    EpochLog log;
    log.epoch = epoch;
    std::size_t batches = 0;

    if (update) {
      SplitMix64 shuffle_rng(stream_key({tcfg.seed, 0x73687566, epoch}));
      shuffle_rng.shuffle(order);
    }

    for (std::size_t base = 0; base < n_rec; base += tcfg.batch_size) {
      const std::size_t bsz = std::min<std::size_t>(tcfg.batch_size, n_rec - base);
      std::vector<TokenSequence> seqs;
      seqs.reserve(bsz);
      std::size_t total_masked = 0;
      for (std::size_t i = 0; i < bsz; ++i) {
        seqs.push_back(build(order[base + i], epoch, mcfg.mask_rate));
        total_masked += seqs.back().mask_positions.size();
      }

      const float mlm_scale =
          tcfg.mlm_norm == MlmNorm::sequence
              ? static_cast<float>(tcfg.lambda1 / static_cast<double>(bsz))
              : (total_masked ? static_cast<float>(tcfg.lambda1 / static_cast<double>(total_masked))
                              : 0.0f);
      const float ts_scale = static_cast<float>(tcfg.lambda2 / static_cast<double>(bsz));

      if (update) {
        auto refs = tensor_refs(grads);
        for (auto& r : refs) std::fill(r.data, r.data + r.size, 0.0f);
      }

      double l1_sum = 0, l2_sum = 0;
      for (const auto& seq : seqs) {
        const auto tr = forward_sequence(seq, res.params);
        Mat<float> dh;
        const auto losses = heads_forward_backward<float>(
            seq, res.params, tr, mlm_scale, ts_scale, update ? &grads : nullptr,
            update ? &dh : nullptr);
        l1_sum += losses.mlm;
        l2_sum += losses.timestamp;
        if (update) encoder_backward(seq, res.params, tr, dh, grads);
      }

      double l3 = 0;
      if (!y.empty()) {
        TemporalTrace<float> ttr;
        l3 = edge_evolution_forward_backward<float>(res.params.enc.w_tm, res.params.tmp, mask, y,
                                                    tcfg.edge_input,
                                                    static_cast<float>(tcfg.lambda3), ttr,
                                                    update ? &grads : nullptr);
      }

      if (update) {
        check_finite_grads(grads, epoch, static_cast<std::uint32_t>(batches));
        adam_step(res.params, grads, adam, static_cast<float>(tcfg.learning_rate));
      }

      const double l1 = tcfg.mlm_norm == MlmNorm::sequence
                            ? l1_sum / static_cast<double>(bsz)
                            : (total_masked ? l1_sum / static_cast<double>(total_masked) : 0.0);
      const double l2 = l2_sum / static_cast<double>(bsz);
      log.mlm += l1;
      log.timestamp += l2;
      log.edge += l3;
      ++batches;
    }

    log.mlm /= static_cast<double>(batches);
    log.timestamp /= static_cast<double>(batches);
    log.edge /= static_cast<double>(batches);
    log.total = tcfg.lambda1 * log.mlm + tcfg.lambda2 * log.timestamp + tcfg.lambda3 * log.edge;
    if (!std::isfinite(log.total))
      throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
    res.log.push_back(log);
  };

  run_epoch(0, false);
  for (std::uint32_t e = 1; e <= tcfg.epochs; ++e) run_epoch(e, true);

  // timestamp accuracy over the unmasked corpus
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n_rec; ++i) {
    const auto seq = build(i, 0, 0.0);
    const auto losses = sequence_losses(seq, res.params);
    if (losses.timestamp_correct) ++correct;
  }
  res.train_accuracy = static_cast<double>(correct) / static_cast<double>(n_rec);
  return res;
}

std::string training_log_csv(const std::vector<EpochLog>& log, std::uint64_t config_hash,
                             std::uint64_t seed, double train_accuracy) {
  std::ostringstream os;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
  os << "# config=" << hex << " seed=" << seed << '\n';
  os << "epoch,L1,L2,L3,total\n";
  for (const auto& row : log)
    os << row.epoch << ',' << fmt_g(row.mlm) << ',' << fmt_g(row.timestamp) << ','
       << fmt_g(row.edge) << ',' << fmt_g(row.total) << '\n';
  os << "# train_accuracy=" << fmt_g(train_accuracy) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// gradient verification
// ---------------------------------------------------------------------------

GradCheckReport check_gradients(const GradCheckConfig& cfg) {
  RegimeSpec rs;
  rs.T = cfg.time_steps;
  rs.n = cfg.vocab_nodes;
  rs.seed = cfg.seed;
  rs.rewire = 0.5;
  rs.shock = 0;
  rs.regimes = {{1, cfg.time_steps, GeneratorKind::random_graph, 0.35, 0, 0, 0}};
  auto [graph, truth] = generate_synthetic(rs);

  WalkConfig wc;
  wc.walks_per_node = 1;
  wc.walk_length = cfg.walk_length;
  wc.seed = cfg.seed;
  const auto corpus = generate_corpus(graph, wc);
  if (corpus.records.size() < cfg.sequences) throw DataError("gradcheck graph too small");

  ModelConfig mc;
  mc.dim = cfg.dim;
  mc.heads = cfg.heads;
  mc.layers = cfg.layers;
  mc.rwpe_steps = cfg.rwpe_steps;
  mc.vocab = cfg.vocab_nodes + Vocabulary::kReserved;
  mc.time_steps = cfg.time_steps;
  mc.mask_rate = 0.3;

  auto params = ModelParams<double>::init(mc, cfg.seed);
  {
    // heads start at zero in training; randomize them here so L1, L2, and L3
    // all exercise every path
    SplitMix64 rng(stream_key({cfg.seed, 0x68656164}));
    auto refs = tensor_refs(params);
    for (auto& r : refs)
      if (r.name == "w_p" || r.name == "b_p" || r.name == "w_tm" || r.name == "b_tm" ||
          r.name == "tmp.f_w" || r.name == "tmp.f_b")
        for (std::size_t i = 0; i < r.size; ++i) r.data[i] = rng.uniform(-0.5, 0.5);
  }

  const Vocabulary vocab{graph.vocab_size};
  const auto rpms = rwpe_all_snapshots(graph, mc.rwpe_steps);
  std::vector<TokenSequence> seqs;
  const std::size_t stride = std::max<std::size_t>(1, corpus.records.size() / cfg.sequences);
  for (std::size_t i = 0; i < corpus.records.size() && seqs.size() < cfg.sequences; i += stride) {
    SplitMix64 rng(stream_key({cfg.seed, 0x6d61736b, i}));
    const auto& rec = corpus.records[i];
    seqs.push_back(build_sequence(rec, vocab, rpms[rec.t - 1], mc.mask_rate, rng));
  }
  const auto B = static_cast<double>(seqs.size());

  const auto seg = top_down_segmentation(mat_cast<double>(params.enc.w_tm),
                                         std::min<std::uint32_t>(3, cfg.time_steps), false);
  const auto mask = segment_causal_mask<double>(seg);
  const auto y = edge_labels(graph);

  auto loss_fn = [&](ModelParams<double>& mp) {
    double l1 = 0, l2 = 0;
    for (const auto& seq : seqs) {
      const auto l = sequence_losses(seq, mp);
      l1 += l.mlm;
      l2 += l.timestamp;
    }
    TemporalTrace<double> tr;
    const double l3 = edge_evolution_forward_backward<double>(
        mp.enc.w_tm, mp.tmp, mask, y, EdgeInput::attention_output, 0.0, tr, nullptr);
    return cfg.lambda1 * (l1 / B) + cfg.lambda2 * (l2 / B) + cfg.lambda3 * l3;
  };

  auto grads = ModelParams<double>::zeros_like(params);
  for (const auto& seq : seqs) {
    const auto tr = forward_sequence(seq, params);
    Mat<double> dh;
    heads_forward_backward<double>(seq, params, tr, cfg.lambda1 / B, cfg.lambda2 / B, &grads,
                                   &dh);
    encoder_backward(seq, params, tr, dh, grads);
  }
  {
    TemporalTrace<double> tr;
    edge_evolution_forward_backward<double>(params.enc.w_tm, params.tmp, mask, y,
                                            EdgeInput::attention_output, cfg.lambda3, tr, &grads);
  }

  GradCheckReport rep;
  auto prefs = tensor_refs(params);
  auto grefs = tensor_refs(grads);
  for (std::size_t ti = 0; ti < prefs.size(); ++ti) {
    auto& pr = prefs[ti];
    std::vector<double> fd(pr.size);
    double scale = 1e-6;
    for (std::size_t i = 0; i < pr.size; ++i) {
      const double keep = pr.data[i];
      pr.data[i] = keep + cfg.step;
      const double up = loss_fn(params);
      pr.data[i] = keep - cfg.step;
      const double dn = loss_fn(params);
      pr.data[i] = keep;
      fd[i] = (up - dn) / (2.0 * cfg.step);
      scale = std::max({scale, std::abs(fd[i]), std::abs(grefs[ti].data[i])});
    }
    for (std::size_t i = 0; i < pr.size; ++i) {
      const double rel = std::abs(grefs[ti].data[i] - fd[i]) / scale;
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst_tensor = pr.name;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// explicit instantiations
// ---------------------------------------------------------------------------

#define TGE_INSTANTIATE(T)                                                                      \
  template Mat<T> segment_causal_mask<T>(const SegmentationVector&);                            \
  template void segment_attention(const Mat<T>&, const TemporalParams<T>&, const Mat<T>&,       \
                                  TemporalTrace<T>&);                                           \
  template double edge_evolution_forward_backward(const Mat<T>&, const TemporalParams<T>&,     \
                                                  const Mat<T>&,                                \
                                                  const std::vector<std::uint8_t>&, EdgeInput,  \
                                                  T, TemporalTrace<T>&, ModelParams<T>*);

TGE_INSTANTIATE(float)
TGE_INSTANTIATE(double)

#undef TGE_INSTANTIATE

}  // namespace tge
