#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tge/encoder.hpp"
#include "tge/graph.hpp"
#include "tge/linalg.hpp"
#include "tge/rwpe.hpp"
#include "tge/walk.hpp"

namespace tge {

// Contiguous, non-decreasing assignment of timesteps 1..T to segments 1..p.
struct SegmentationVector {
  std::vector<std::uint32_t> v;  // length T, values 1..p
  std::uint32_t p = 0;

  bool valid() const;
};

// Sum over t in [s, e] (0-based, inclusive) of cosine between row t and the
// segment mean; cosine against a zero vector counts as 0. Shared by the
// greedy splitter and the exact DP segmenter.
double segment_coherence(const Mat<double>& emb, std::size_t s, std::size_t e);

// Greedy recursive splitting: repeatedly split the longest segment (ties:
// earliest) at the index maximizing the two-part coherence sum. The default
// split range allows singleton left parts so p segments are always reachable;
// strict_range restores the verbatim narrower loop bounds.
SegmentationVector top_down_segmentation(const Mat<double>& emb, std::uint32_t p,
                                         bool strict_range = false);

// Additive pre-softmax mask: entry (i,j) is 0 iff j <= i and both timesteps
// share a segment, -inf otherwise.
template <typename T>
Mat<T> segment_causal_mask(const SegmentationVector& seg);

template <typename T>
struct TemporalTrace {
  Mat<T> q, k, v;     // T x d
  Mat<T> beta;        // T x T attention weights
  Mat<T> z;           // T x d attention output
  std::vector<T> yhat;  // T-1 edge-increase probabilities
};

// Single-head attention over the graph-embedding rows with the segment mask.
template <typename T>
void segment_attention(const Mat<T>& emb, const TemporalParams<T>& tp, const Mat<T>& mask,
                       TemporalTrace<T>& tr);

// y_t = 1 iff the edge count strictly grows from t-1 to t, for t = 2..T.
std::vector<std::uint8_t> edge_labels(const DynamicGraph& g);

enum class EdgeInput { attention_output, raw_embeddings };

// Summed binary cross-entropy of edge-growth predictions from concatenated
// consecutive rows. Returns the loss; with grads != nullptr also accumulates
// lambda-scaled gradients into the temporal tensors and w_tm.
template <typename T>
double edge_evolution_forward_backward(const Mat<T>& w_tm, const TemporalParams<T>& tp,
                                       const Mat<T>& mask, const std::vector<std::uint8_t>& y,
                                       EdgeInput input, T scale, TemporalTrace<T>& tr,
                                       ModelParams<T>* grads);

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

enum class MlmNorm { sequence, position };

struct TrainConfig {
  std::uint32_t epochs = 15;
  std::uint32_t batch_size = 32;
  double learning_rate = 1e-4;
  double lambda1 = 5, lambda2 = 10, lambda3 = 5;
  std::uint32_t segments = 8;  // p
  MlmNorm mlm_norm = MlmNorm::sequence;
  EdgeInput edge_input = EdgeInput::attention_output;
  bool strict_alg1 = false;
  std::uint64_t seed = 1;

  void validate(std::uint32_t time_steps) const;
};

struct EpochLog {
  std::uint32_t epoch = 0;  // 0 is the pre-training evaluation pass
  double mlm = 0, timestamp = 0, edge = 0, total = 0;
};

struct TrainResult {
  ModelParams<float> params;
  std::vector<EpochLog> log;
  SegmentationVector segmentation;  // last refresh
  double train_accuracy = 0;        // timestamp accuracy on unmasked corpus
};

struct AdamState {
  ModelParams<float> m, v;
  std::uint64_t step = 0;
};

void adam_step(ModelParams<float>& params, const ModelParams<float>& grads, AdamState& state,
               float lr);

// Joint optimization of reconstruction, timestamp, and edge losses. The
// segmentation is refreshed from w_tm once per epoch and held fixed between
// refreshes. rpms holds the per-snapshot structural encodings. Deterministic
// given cfg.seed.
TrainResult train(const DynamicGraph& graph, const WalkCorpus& corpus,
                  const std::vector<ReturnProbMatrix>& rpms, const ModelConfig& mcfg,
                  const TrainConfig& tcfg);

std::string training_log_csv(const std::vector<EpochLog>& log, std::uint64_t config_hash,
                             std::uint64_t seed, double train_accuracy);

// ---------------------------------------------------------------------------
// gradient verification
// ---------------------------------------------------------------------------

struct GradCheckConfig {
  std::uint32_t dim = 8, heads = 2, layers = 1;
  std::uint32_t rwpe_steps = 4, vocab_nodes = 15;  // tokens = nodes + 5
  std::uint32_t time_steps = 4, walk_length = 6;
  std::uint32_t sequences = 6;
  double lambda1 = 5, lambda2 = 10, lambda3 = 5;
  double step = 1e-4;
  std::uint64_t seed = 7;
};

struct GradCheckReport {
  double max_rel_error = 0;
  std::string worst_tensor;
};

// Compares every analytic gradient entry against central finite differences
// of the full weighted loss, in double precision.
GradCheckReport check_gradients(const GradCheckConfig& cfg);

}  // namespace tge
