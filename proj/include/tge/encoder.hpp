#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tge/linalg.hpp"
#include "tge/sequence.hpp"
#include "tge/vocab.hpp"

namespace tge {

struct ModelConfig {
  std::uint32_t dim = 256;
  std::uint32_t heads = 8;
  std::uint32_t layers = 8;       // transformer depth
  std::uint32_t rwpe_steps = 16;  // structural encoding length k
  std::uint32_t mlp_hidden = 0;   // 0 -> dim
  std::uint32_t vocab = 0;        // token vocabulary (nodes + specials)
  std::uint32_t time_steps = 0;   // timestamp classes
  double mask_rate = 0.15;

  std::uint32_t hidden() const { return mlp_hidden ? mlp_hidden : dim; }
  std::uint32_t ffn_dim() const { return 4 * dim; }
  void validate() const;
};

template <typename T>
struct LayerParams {
  Mat<T> wq, wk, wv, wo;                  // dim x dim
  std::vector<T> bq, bk, bv, bo;          // dim
  Mat<T> wf1;                             // dim x 4*dim
  std::vector<T> bf1;                     // 4*dim
  Mat<T> wf2;                             // 4*dim x dim
  std::vector<T> bf2;                     // dim
  std::vector<T> ln1_g, ln1_b, ln2_g, ln2_b;
};

template <typename T>
struct EncoderParams {
  Mat<T> w_tok;                           // vocab x dim
  Mat<T> mlp_w1;                          // k x hidden
  std::vector<T> mlp_b1;                  // hidden
  Mat<T> mlp_w2;                          // hidden x dim
  std::vector<T> mlp_b2;                  // dim
  std::vector<LayerParams<T>> layers;
  Mat<T> w_p;                             // vocab x dim   (token head)
  std::vector<T> b_p;                     // vocab
  Mat<T> w_tm;                            // T x dim       (timestamp head; rows are
  std::vector<T> b_tm;                    //                the graph embeddings)
};

template <typename T>
struct TemporalParams {
  Mat<T> wq, wk, wv;       // dim x dim
  std::vector<T> f_w;      // 2*dim  (edge classifier weight)
  std::vector<T> f_b;      // 1      (edge classifier bias)
};

// Every trainable tensor of the whole model. Gradient and Adam moment
// buffers reuse the same shape via zeros_like.
template <typename T>
struct ModelParams {
  ModelConfig cfg;
  EncoderParams<T> enc;
  TemporalParams<T> tmp;

  // Heads start at zero (uniform predictions); everything else uniform
  // in +-1/sqrt(dim); layer-norm gains at one.
  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);
  static ModelParams zeros_like(const ModelParams& other);
};

template <typename T>
struct TensorRef {
  std::string name;
  T* data;
  std::size_t size;
};

// Fixed-order tensor enumeration shared by the optimizer, checkpoints, and
// gradient checks.
template <typename T>
std::vector<TensorRef<T>> tensor_refs(ModelParams<T>& mp);

// ---------------------------------------------------------------------------
// forward / backward
// ---------------------------------------------------------------------------

template <typename T>
struct LnTrace {
  std::vector<T> rstd;
  Mat<T> xhat;
};

template <typename T>
struct LayerTrace {
  Mat<T> x_in, q, k, v;
  std::vector<Mat<T>> attn;  // per head, L' x L' softmax rows
  Mat<T> heads_out;          // concatenated head outputs, pre output-projection
  LnTrace<T> ln1;
  Mat<T> x1;
  Mat<T> ff_pre, ff_act;
  LnTrace<T> ln2;
};

template <typename T>
struct SeqTrace {
  Mat<T> rwpe;     // L' x k structural rows (cast to T)
  Mat<T> mlp_pre;  // L' x hidden
  Mat<T> mlp_act;
  std::vector<LayerTrace<T>> layers;
  Mat<T> h;        // final hidden states, L' x dim
};

// Token embedding plus projected structural encoding.
template <typename T>
Mat<T> embed_sequence(const TokenSequence& seq, const EncoderParams<T>& enc,
                      const ModelConfig& cfg, SeqTrace<T>* trace = nullptr);

// Bidirectional transformer stack; layers == 0 passes x through unchanged.
template <typename T>
Mat<T> encode(const Mat<T>& x, const EncoderParams<T>& enc, const ModelConfig& cfg,
              SeqTrace<T>* trace = nullptr);

template <typename T>
SeqTrace<T> forward_sequence(const TokenSequence& seq, const ModelParams<T>& mp);

// Pre-softmax affine heads.
template <typename T>
std::vector<T> mlm_logits_at(const Mat<T>& h, std::uint32_t pos, const EncoderParams<T>& enc);
template <typename T>
std::vector<T> timestamp_logits(const Mat<T>& h, const EncoderParams<T>& enc);

struct SeqLosses {
  double mlm = 0;        // summed cross-entropy over masked positions
  double timestamp = 0;  // cross-entropy of the true snapshot index
  bool timestamp_correct = false;
};

// Head losses; when grads is non-null also seeds dh (resized and zeroed here)
// with mlm_scale/ts_scale already containing loss weights and batch
// normalization factors.
template <typename T>
SeqLosses heads_forward_backward(const TokenSequence& seq, const ModelParams<T>& mp,
                                 const SeqTrace<T>& tr, T mlm_scale, T ts_scale,
                                 ModelParams<T>* grads, Mat<T>* dh);

// Propagates dh through the stack and the embedding, accumulating into grads.
template <typename T>
void encoder_backward(const TokenSequence& seq, const ModelParams<T>& mp, const SeqTrace<T>& tr,
                      Mat<T>& dh, ModelParams<T>& grads);

template <typename T>
SeqLosses sequence_losses(const TokenSequence& seq, const ModelParams<T>& mp);

}  // namespace tge
