#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tge/encoder.hpp"
#include "tge/graph.hpp"
#include "tge/linalg.hpp"
#include "tge/temporal.hpp"
#include "tge/walk.hpp"

namespace tge {

using SimilarityMatrix = Mat<double>;

// Size of the common edge set under the shared node labeling; exact for
// snapshots over one vocabulary.
std::uint64_t mcs_similarity(const SnapshotGraph& a, const SnapshotGraph& b);
SimilarityMatrix mcs_matrix(const DynamicGraph& g);

// Pairwise cosine similarities between embedding rows.
SimilarityMatrix embedding_heatmap(const Mat<double>& emb);
std::string heatmap_csv(const SimilarityMatrix& m, std::uint64_t config_hash, std::uint64_t seed);

// ---------------------------------------------------------------------------
// ranking task
// ---------------------------------------------------------------------------

struct QueryDetail {
  std::uint32_t query_t = 0;           // 1-based
  std::vector<double> p_at_k, ap_at_k;  // aligned with k_list
  double reciprocal_rank = 0;
};

struct RankingReport {
  std::vector<std::uint32_t> k_list;
  std::vector<double> precision, map;  // averaged per K
  double mrr = 0;
  std::vector<QueryDetail> queries;
};

// For each query snapshot, candidates are all other snapshots ordered by
// embedding cosine (descending, ties to the lower index). The relevant set is
// the top K by ground-truth similarity under the same tie rule; MRR uses the
// single truth-top-1 candidate.
RankingReport rank_metrics(const Mat<double>& emb, const SimilarityMatrix& truth,
                           const std::vector<std::uint32_t>& k_list);

std::string ranking_csv(const RankingReport& r, std::uint64_t config_hash, std::uint64_t seed);
std::string ranking_text(const RankingReport& r);

// ---------------------------------------------------------------------------
// anomaly task
// ---------------------------------------------------------------------------

// score(t) = mean over walks starting at t of the probability the timestamp
// head assigns to the true index t (unmasked sequences).
std::vector<double> anomaly_scores(const ModelParams<float>& params, const WalkCorpus& corpus,
                                   const std::vector<ReturnProbMatrix>& rpms,
                                   std::uint32_t vocab_nodes);

// Mean reciprocal rank of the annotated timesteps when all timesteps are
// ranked by score descending (ties to the earlier t).
double anomaly_mrr(const std::vector<double>& scores, const std::vector<std::uint32_t>& anomalies);

// Rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// segmentation task
// ---------------------------------------------------------------------------

// Exact maximizer of the summed within-segment cosine coherence over all
// contiguous p-segmentations (same cost as the greedy splitter).
SegmentationVector dp_segmentation(const Mat<double>& emb, std::uint32_t p);

double segmentation_objective(const Mat<double>& emb, const SegmentationVector& seg);

struct SegmentationReport {
  double acc = 0;       // best one-to-one label assignment agreement
  double nmi = 0;       // arithmetic-mean normalization
  double f1_macro = 0;  // after the same assignment
};

SegmentationReport segmentation_metrics(const SegmentationVector& pred,
                                        const std::vector<std::uint32_t>& truth_labels);

std::string segmentation_report_csv(const SegmentationReport& r, std::uint64_t config_hash,
                                    std::uint64_t seed);

// Max-weight one-to-one assignment value on a non-negative matrix
// (rectangular allowed); out_map, when given, receives row -> column or
// UINT32_MAX for unmatched rows.
double max_assignment(const Mat<double>& w, std::vector<std::uint32_t>* out_map = nullptr);

}  // namespace tge
