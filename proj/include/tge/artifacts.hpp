#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tge/config.hpp"
#include "tge/encoder.hpp"
#include "tge/linalg.hpp"
#include "tge/temporal.hpp"

namespace tge {

// Trained model container: full config text, RNG seed, epoch and optimizer
// counters, every parameter tensor, and the Adam moments. Save -> load ->
// save is bit-identical.
struct Checkpoint {
  RunConfig config;
  std::uint32_t vocab_nodes = 0;
  std::uint32_t time_steps = 0;
  std::uint32_t epoch = 0;
  std::uint64_t adam_step = 0;
  double train_accuracy = 0;
  SegmentationVector segmentation;
  ModelParams<float> params;
  ModelParams<float> adam_m, adam_v;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Text matrix: a comment header with config hash and seed, a `T d` line,
// then rows of shortest-round-trip decimals.
void save_embeddings(const Mat<double>& emb, const std::string& path, std::uint64_t config_hash,
                     std::uint64_t seed);
Mat<double> load_embeddings(const std::string& path);

// One line of T segment ids.
void save_segmentation(const SegmentationVector& seg, const std::string& path,
                       std::uint64_t config_hash, std::uint64_t seed);
SegmentationVector load_segmentation(const std::string& path);

// One unsigned integer per line (anomaly timesteps, truth labels).
std::vector<std::uint32_t> load_index_file(const std::string& path);
// One real per line (reference series).
std::vector<double> load_series_file(const std::string& path);

}  // namespace tge
