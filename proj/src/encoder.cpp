#include "tge/encoder.hpp"

#include <cmath>

#include "tge/rng.hpp"

namespace tge {

void ModelConfig::validate() const {
  if (dim == 0 || heads == 0) throw DataError("dim and heads must be positive");
  if (dim % heads != 0) throw DataError("dim must be divisible by heads");
  if (rwpe_steps == 0) throw DataError("rwpe_steps must be >= 1");
  if (vocab < Vocabulary::kReserved + 1) throw DataError("vocabulary too small");
  if (time_steps == 0) throw DataError("time_steps must be >= 1");
  if (mask_rate < 0 || mask_rate >= 1) throw DataError("mask_rate must be in [0,1)");
}

// ---------------------------------------------------------------------------
// parameters
// ---------------------------------------------------------------------------

template <typename T>
static void fill_uniform(std::vector<T>& v, T scale, SplitMix64& rng) {
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0)) * scale;
}

template <typename T>
static void fill_uniform(Mat<T>& m, T scale, SplitMix64& rng) {
  fill_uniform(m.a, scale, rng);
}

template <typename T>
ModelParams<T> ModelParams<T>::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::uint32_t d = cfg.dim;
  const std::uint32_t h = cfg.hidden();
  const std::uint32_t f = cfg.ffn_dim();
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));
  SplitMix64 rng(stream_key({seed, 0x696e6974}));

  ModelParams<T> mp;
  mp.cfg = cfg;
  auto& e = mp.enc;
  e.w_tok = Mat<T>(cfg.vocab, d);
  fill_uniform(e.w_tok, scale, rng);
  e.mlp_w1 = Mat<T>(cfg.rwpe_steps, h);
  fill_uniform(e.mlp_w1, scale, rng);
  e.mlp_b1.assign(h, T(0));
  e.mlp_w2 = Mat<T>(h, d);
  fill_uniform(e.mlp_w2, scale, rng);
  e.mlp_b2.assign(d, T(0));

  e.layers.resize(cfg.layers);
  for (auto& L : e.layers) {
    for (Mat<T>* w : {&L.wq, &L.wk, &L.wv, &L.wo}) {
      *w = Mat<T>(d, d);
      fill_uniform(*w, scale, rng);
    }
    L.bq.assign(d, T(0));
    L.bk.assign(d, T(0));
    L.bv.assign(d, T(0));
    L.bo.assign(d, T(0));
    L.wf1 = Mat<T>(d, f);
    fill_uniform(L.wf1, scale, rng);
    L.bf1.assign(f, T(0));
    L.wf2 = Mat<T>(f, d);
    fill_uniform(L.wf2, scale, rng);
    L.bf2.assign(d, T(0));
    L.ln1_g.assign(d, T(1));
    L.ln1_b.assign(d, T(0));
    L.ln2_g.assign(d, T(1));
    L.ln2_b.assign(d, T(0));
  }

  e.w_p = Mat<T>(cfg.vocab, d);
  e.b_p.assign(cfg.vocab, T(0));
  e.w_tm = Mat<T>(cfg.time_steps, d);
  e.b_tm.assign(cfg.time_steps, T(0));

  mp.tmp.wq = Mat<T>(d, d);
  fill_uniform(mp.tmp.wq, scale, rng);
  mp.tmp.wk = Mat<T>(d, d);
  fill_uniform(mp.tmp.wk, scale, rng);
  mp.tmp.wv = Mat<T>(d, d);
  fill_uniform(mp.tmp.wv, scale, rng);
  mp.tmp.f_w.assign(2 * d, T(0));
  mp.tmp.f_b.assign(1, T(0));
  return mp;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros_like(const ModelParams<T>& other) {
  ModelParams<T> z = other;
  auto refs = tensor_refs(z);
  for (auto& r : refs) std::fill(r.data, r.data + r.size, T(0));
  return z;
}

template <typename T>
std::vector<TensorRef<T>> tensor_refs(ModelParams<T>& mp) {
  std::vector<TensorRef<T>> out;
  auto add_mat = [&](const std::string& name, Mat<T>& m) {
    out.push_back({name, m.a.data(), m.a.size()});
  };
  auto add_vec = [&](const std::string& name, std::vector<T>& v) {
    out.push_back({name, v.data(), v.size()});
  };
  auto& e = mp.enc;
  add_mat("w_tok", e.w_tok);
  add_mat("mlp_w1", e.mlp_w1);
  add_vec("mlp_b1", e.mlp_b1);
  add_mat("mlp_w2", e.mlp_w2);
  add_vec("mlp_b2", e.mlp_b2);
  for (std::size_t i = 0; i < e.layers.size(); ++i) {
    const std::string p = "layer" + std::to_string(i) + ".";
    auto& L = e.layers[i];
    add_mat(p + "wq", L.wq);
    add_vec(p + "bq", L.bq);
    add_mat(p + "wk", L.wk);
    add_vec(p + "bk", L.bk);
    add_mat(p + "wv", L.wv);
    add_vec(p + "bv", L.bv);
    add_mat(p + "wo", L.wo);
    add_vec(p + "bo", L.bo);
    add_mat(p + "wf1", L.wf1);
    add_vec(p + "bf1", L.bf1);
    add_mat(p + "wf2", L.wf2);
    add_vec(p + "bf2", L.bf2);
    add_vec(p + "ln1_g", L.ln1_g);
    add_vec(p + "ln1_b", L.ln1_b);
    add_vec(p + "ln2_g", L.ln2_g);
    add_vec(p + "ln2_b", L.ln2_b);
  }
  add_mat("w_p", e.w_p);
  add_vec("b_p", e.b_p);
  add_mat("w_tm", e.w_tm);
  add_vec("b_tm", e.b_tm);
  add_mat("tmp.wq", mp.tmp.wq);
  add_mat("tmp.wk", mp.tmp.wk);
  add_mat("tmp.wv", mp.tmp.wv);
  add_vec("tmp.f_w", mp.tmp.f_w);
  add_vec("tmp.f_b", mp.tmp.f_b);
  return out;
}

// ---------------------------------------------------------------------------
// elementwise pieces
// ---------------------------------------------------------------------------

static constexpr double kLnEps = 1e-5;

template <typename T>
static T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(0.70710678118654752440)));
}

template <typename T>
static T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(0.70710678118654752440)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(0.39894228040143267794);
  return cdf + x * pdf;
}

template <typename T>
static void layer_norm(const Mat<T>& x, const std::vector<T>& g, const std::vector<T>& b,
                       Mat<T>& y, LnTrace<T>& tr) {
  const std::size_t n = x.cols;
  tr.rstd.assign(x.rows, T(0));
  tr.xhat = Mat<T>(x.rows, n);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const T* xi = x.row(i);
    const T mu = kern::vsum(xi, n) / static_cast<T>(n);
    T var = T(0);
    for (std::size_t j = 0; j < n; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= static_cast<T>(n);
    const T rstd = T(1) / std::sqrt(var + static_cast<T>(kLnEps));
    tr.rstd[i] = rstd;
    T* xh = tr.xhat.row(i);
    T* yi = y.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      xh[j] = (xi[j] - mu) * rstd;
      yi[j] = g[j] * xh[j] + b[j];
    }
  }
}

template <typename T>
static Mat<T> layer_norm_backward(const Mat<T>& dy, const LnTrace<T>& tr, const std::vector<T>& g,
                                  std::vector<T>& dg, std::vector<T>& db) {
  const std::size_t n = dy.cols;
  Mat<T> dx(dy.rows, n);
  for (std::size_t i = 0; i < dy.rows; ++i) {
    const T* dyi = dy.row(i);
    const T* xh = tr.xhat.row(i);
    T m1 = T(0), m2 = T(0);
    for (std::size_t j = 0; j < n; ++j) {
      const T dxh = dyi[j] * g[j];
      m1 += dxh;
      m2 += dxh * xh[j];
      dg[j] += dyi[j] * xh[j];
      db[j] += dyi[j];
    }
    m1 /= static_cast<T>(n);
    m2 /= static_cast<T>(n);
    T* dxi = dx.row(i);
    for (std::size_t j = 0; j < n; ++j) dxi[j] = (dyi[j] * g[j] - m1 - xh[j] * m2) * tr.rstd[i];
  }
  return dx;
}

template <typename T>
static void add_col_sums(const Mat<T>& m, std::vector<T>& acc) {
  for (std::size_t i = 0; i < m.rows; ++i) kern::vadd(acc.data(), m.row(i), m.cols);
}

// ---------------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------------

template <typename T>
Mat<T> embed_sequence(const TokenSequence& seq, const EncoderParams<T>& enc,
                      const ModelConfig& cfg, SeqTrace<T>* trace) {
  const std::size_t len = seq.tokens.size();
  const std::uint32_t d = cfg.dim;
  const std::uint32_t h = cfg.hidden();
  if (seq.rwpe_rows.cols != cfg.rwpe_steps) throw DataError("rwpe width mismatch");

  Mat<T> rwpe = mat_cast<T>(seq.rwpe_rows);
  Mat<T> pre = affine(rwpe, enc.mlp_w1, enc.mlp_b1);
  Mat<T> act(len, h);
  for (std::size_t i = 0; i < pre.a.size(); ++i) act.a[i] = pre.a[i] > T(0) ? pre.a[i] : T(0);
  Mat<T> x = affine(act, enc.mlp_w2, enc.mlp_b2);
  for (std::size_t l = 0; l < len; ++l) {
    const TokenId tok = seq.tokens[l];
    if (tok >= enc.w_tok.rows) throw DataError("token id out of vocabulary range");
    kern::vadd(x.row(l), enc.w_tok.row(tok), d);
  }
  if (trace) {
    trace->rwpe = std::move(rwpe);
    trace->mlp_pre = std::move(pre);
    trace->mlp_act = std::move(act);
  }
  return x;
}

template <typename T>
Mat<T> encode(const Mat<T>& x, const EncoderParams<T>& enc, const ModelConfig& cfg,
              SeqTrace<T>* trace) {
  const std::size_t len = x.rows;
  const std::uint32_t d = cfg.dim;
  const std::uint32_t nh = cfg.heads;
  const std::uint32_t dh = d / nh;
  const T inv_sqrt_dh = T(1) / std::sqrt(static_cast<T>(dh));

  Mat<T> cur = x;
  if (trace) trace->layers.resize(cfg.layers);
  for (std::uint32_t z = 0; z < cfg.layers; ++z) {
    const auto& L = enc.layers[z];
    LayerTrace<T> tr;
    tr.x_in = cur;

    tr.q = affine(cur, L.wq, L.bq);
    tr.k = affine(cur, L.wk, L.bk);
    tr.v = affine(cur, L.wv, L.bv);

    tr.heads_out = Mat<T>(len, d);
    tr.attn.resize(nh);
    for (std::uint32_t hh = 0; hh < nh; ++hh) {
      const std::size_t off = static_cast<std::size_t>(hh) * dh;
      Mat<T> s(len, len);
      for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < len; ++j)
          s(i, j) = kern::dot(tr.q.row(i) + off, tr.k.row(j) + off, dh) * inv_sqrt_dh;
      for (std::size_t i = 0; i < len; ++i) softmax_row(s.row(i), len);
      for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < len; ++j)
          kern::axpy(tr.heads_out.row(i) + off, s(i, j), tr.v.row(j) + off, dh);
      tr.attn[hh] = std::move(s);
    }

    Mat<T> attn_proj = affine(tr.heads_out, L.wo, L.bo);
    Mat<T> r1 = cur;
    for (std::size_t i = 0; i < r1.a.size(); ++i) r1.a[i] += attn_proj.a[i];
    tr.x1 = Mat<T>(len, d);
    layer_norm(r1, L.ln1_g, L.ln1_b, tr.x1, tr.ln1);

    tr.ff_pre = affine(tr.x1, L.wf1, L.bf1);
    tr.ff_act = Mat<T>(len, cfg.ffn_dim());
    for (std::size_t i = 0; i < tr.ff_pre.a.size(); ++i) tr.ff_act.a[i] = gelu(tr.ff_pre.a[i]);
    Mat<T> f2 = affine(tr.ff_act, L.wf2, L.bf2);
    Mat<T> r2 = tr.x1;
    for (std::size_t i = 0; i < r2.a.size(); ++i) r2.a[i] += f2.a[i];
    Mat<T> out(len, d);
    layer_norm(r2, L.ln2_g, L.ln2_b, out, tr.ln2);

    cur = std::move(out);
    if (trace) (*trace).layers[z] = std::move(tr);
  }
  return cur;
}

template <typename T>
SeqTrace<T> forward_sequence(const TokenSequence& seq, const ModelParams<T>& mp) {
  SeqTrace<T> trace;
  Mat<T> x = embed_sequence(seq, mp.enc, mp.cfg, &trace);
  trace.h = encode(x, mp.enc, mp.cfg, &trace);
  return trace;
}

template <typename T>
std::vector<T> mlm_logits_at(const Mat<T>& h, std::uint32_t pos, const EncoderParams<T>& enc) {
  std::vector<T> logits(enc.w_p.rows);
  for (std::size_t v = 0; v < enc.w_p.rows; ++v)
    logits[v] = kern::dot(h.row(pos), enc.w_p.row(v), h.cols) + enc.b_p[v];
  return logits;
}

template <typename T>
std::vector<T> timestamp_logits(const Mat<T>& h, const EncoderParams<T>& enc) {
  std::vector<T> logits(enc.w_tm.rows);
  for (std::size_t r = 0; r < enc.w_tm.rows; ++r)
    logits[r] = kern::dot(h.row(0), enc.w_tm.row(r), h.cols) + enc.b_tm[r];
  return logits;
}

// Stable cross-entropy; turns logits into probabilities in place.
template <typename T>
static double softmax_xent(std::vector<T>& logits, std::size_t target) {
  const T m = kern::vmax(logits.data(), logits.size());
  const double zt = static_cast<double>(logits[target]) - static_cast<double>(m);
  T s = T(0);
  for (auto& z : logits) {
    z = std::exp(z - m);
    s += z;
  }
  kern::scal(logits.data(), T(1) / s, logits.size());
  return std::log(static_cast<double>(s)) - zt;
}

template <typename T>
SeqLosses heads_forward_backward(const TokenSequence& seq, const ModelParams<T>& mp,
                                 const SeqTrace<T>& tr, T mlm_scale, T ts_scale,
                                 ModelParams<T>* grads, Mat<T>* dh) {
  const auto& enc = mp.enc;
  const std::uint32_t d = mp.cfg.dim;
  SeqLosses out;
  if (dh) *dh = Mat<T>(tr.h.rows, tr.h.cols);

  // timestamp head on the leading classification token
  {
    if (seq.t < 1 || seq.t > enc.w_tm.rows) throw DataError("sequence timestamp out of range");
    auto probs = timestamp_logits(tr.h, enc);
    std::size_t arg = 0;
    for (std::size_t r = 1; r < probs.size(); ++r)
      if (probs[r] > probs[arg]) arg = r;
    out.timestamp_correct = arg == seq.t - 1;
    out.timestamp = softmax_xent(probs, seq.t - 1);
    if (grads && ts_scale != T(0)) {
      for (std::size_t r = 0; r < probs.size(); ++r) {
        const T g = ts_scale * (probs[r] - (r == seq.t - 1 ? T(1) : T(0)));
        kern::axpy(grads->enc.w_tm.row(r), g, tr.h.row(0), d);
        grads->enc.b_tm[r] += g;
        kern::axpy(dh->row(0), g, enc.w_tm.row(r), d);
      }
    }
  }

  // token reconstruction at masked positions
  for (std::size_t mi = 0; mi < seq.mask_positions.size(); ++mi) {
    const std::uint32_t pos = seq.mask_positions[mi];
    const TokenId target = seq.mlm_targets[mi];
    auto probs = mlm_logits_at(tr.h, pos, enc);
    out.mlm += softmax_xent(probs, target);
    if (grads && mlm_scale != T(0)) {
      for (std::size_t v = 0; v < probs.size(); ++v) {
        const T g = mlm_scale * (probs[v] - (v == target ? T(1) : T(0)));
        kern::axpy(grads->enc.w_p.row(v), g, tr.h.row(pos), d);
        grads->enc.b_p[v] += g;
        kern::axpy(dh->row(pos), g, enc.w_p.row(v), d);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

template <typename T>
void encoder_backward(const TokenSequence& seq, const ModelParams<T>& mp, const SeqTrace<T>& tr,
                      Mat<T>& dh, ModelParams<T>& grads) {
  const ModelConfig& cfg = mp.cfg;
  const std::size_t len = seq.tokens.size();
  const std::uint32_t d = cfg.dim;
  const std::uint32_t nh = cfg.heads;
  const std::uint32_t dh_w = d / nh;
  const T inv_sqrt_dh = T(1) / std::sqrt(static_cast<T>(dh_w));

  Mat<T> dcur = std::move(dh);
  for (std::uint32_t z = cfg.layers; z-- > 0;) {
    const auto& L = mp.enc.layers[z];
    auto& G = grads.enc.layers[z];
    const auto& t = tr.layers[z];

    // second residual block
    Mat<T> dr2 = layer_norm_backward(dcur, t.ln2, L.ln2_g, G.ln2_g, G.ln2_b);
    Mat<T> dx1 = dr2;  // residual branch
    gemm_tn(G.wf2, t.ff_act, dr2);
    add_col_sums(dr2, G.bf2);
    Mat<T> dact(len, cfg.ffn_dim());
    gemm_nt(dact, dr2, L.wf2);
    for (std::size_t i = 0; i < dact.a.size(); ++i) dact.a[i] *= gelu_grad(t.ff_pre.a[i]);
    gemm_tn(G.wf1, t.x1, dact);
    add_col_sums(dact, G.bf1);
    gemm_nt(dx1, dact, L.wf1);

    // first residual block
    Mat<T> dr1 = layer_norm_backward(dx1, t.ln1, L.ln1_g, G.ln1_g, G.ln1_b);
    Mat<T> dx = dr1;  // residual branch
    gemm_tn(G.wo, t.heads_out, dr1);
    add_col_sums(dr1, G.bo);
    Mat<T> dheads(len, d);
    gemm_nt(dheads, dr1, L.wo);

    Mat<T> dq(len, d), dk(len, d), dv(len, d);
    for (std::uint32_t hh = 0; hh < nh; ++hh) {
      const std::size_t off = static_cast<std::size_t>(hh) * dh_w;
      const Mat<T>& P = t.attn[hh];
      Mat<T> dp(len, len);
      for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < len; ++j) {
          dp(i, j) = kern::dot(dheads.row(i) + off, t.v.row(j) + off, dh_w);
          kern::axpy(dv.row(j) + off, P(i, j), dheads.row(i) + off, dh_w);
        }
      for (std::size_t i = 0; i < len; ++i) {
        const T rowc = kern::dot(dp.row(i), P.row(i), len);
        for (std::size_t j = 0; j < len; ++j) {
          const T ds = P(i, j) * (dp(i, j) - rowc) * inv_sqrt_dh;
          kern::axpy(dq.row(i) + off, ds, t.k.row(j) + off, dh_w);
          kern::axpy(dk.row(j) + off, ds, t.q.row(i) + off, dh_w);
        }
      }
    }

    gemm_tn(G.wq, t.x_in, dq);
    add_col_sums(dq, G.bq);
    gemm_nt(dx, dq, L.wq);
    gemm_tn(G.wk, t.x_in, dk);
    add_col_sums(dk, G.bk);
    gemm_nt(dx, dk, L.wk);
    gemm_tn(G.wv, t.x_in, dv);
    add_col_sums(dv, G.bv);
    gemm_nt(dx, dv, L.wv);

    dcur = std::move(dx);
  }

  // embedding: token rows plus the structural projection
  for (std::size_t l = 0; l < len; ++l)
    kern::vadd(grads.enc.w_tok.row(seq.tokens[l]), dcur.row(l), d);
  gemm_tn(grads.enc.mlp_w2, tr.mlp_act, dcur);
  add_col_sums(dcur, grads.enc.mlp_b2);
  Mat<T> dact(len, cfg.hidden());
  gemm_nt(dact, dcur, mp.enc.mlp_w2);
  for (std::size_t i = 0; i < dact.a.size(); ++i)
    if (tr.mlp_pre.a[i] <= T(0)) dact.a[i] = T(0);
  gemm_tn(grads.enc.mlp_w1, tr.rwpe, dact);
  add_col_sums(dact, grads.enc.mlp_b1);
}

template <typename T>
SeqLosses sequence_losses(const TokenSequence& seq, const ModelParams<T>& mp) {
  const SeqTrace<T> tr = forward_sequence(seq, mp);
  return heads_forward_backward<T>(seq, mp, tr, T(0), T(0), nullptr, nullptr);
}

// ---------------------------------------------------------------------------
// explicit instantiations
// ---------------------------------------------------------------------------

#define TGE_INSTANTIATE(T)                                                                       \
  template struct ModelParams<T>;                                                                \
  template std::vector<TensorRef<T>> tensor_refs(ModelParams<T>&);                               \
  template Mat<T> embed_sequence(const TokenSequence&, const EncoderParams<T>&,                  \
                                 const ModelConfig&, SeqTrace<T>*);                              \
  template Mat<T> encode(const Mat<T>&, const EncoderParams<T>&, const ModelConfig&,             \
                         SeqTrace<T>*);                                                          \
  template SeqTrace<T> forward_sequence(const TokenSequence&, const ModelParams<T>&);            \
  template std::vector<T> mlm_logits_at(const Mat<T>&, std::uint32_t, const EncoderParams<T>&);  \
  template std::vector<T> timestamp_logits(const Mat<T>&, const EncoderParams<T>&);              \
  template SeqLosses heads_forward_backward(const TokenSequence&, const ModelParams<T>&,         \
                                            const SeqTrace<T>&, T, T, ModelParams<T>*, Mat<T>*); \
  template void encoder_backward(const TokenSequence&, const ModelParams<T>&,                    \
                                 const SeqTrace<T>&, Mat<T>&, ModelParams<T>&);                  \
  template SeqLosses sequence_losses(const TokenSequence&, const ModelParams<T>&);

TGE_INSTANTIATE(float)
TGE_INSTANTIATE(double)

#undef TGE_INSTANTIATE

}  // namespace tge
