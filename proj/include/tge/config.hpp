#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tge/encoder.hpp"
#include "tge/temporal.hpp"
#include "tge/walk.hpp"

namespace tge {

// Every knob of the pipeline in one flat, sectioned key-value structure.
// Files are diffable text; unknown keys are rejected. The canonical
// serialization (fixed key order, thread count excluded) is what gets hashed
// into every output artifact.
struct RunConfig {
  // [data]
  std::int64_t resolution = 1;
  // [walk]
  std::uint32_t walks_per_node = 5;
  std::uint32_t walk_length = 32;
  double walk_p = 1.0;
  double walk_q = 1.0;
  double hei_quantile = 0.125;
  // [model]
  std::uint32_t dim = 256;
  std::uint32_t layers = 8;
  std::uint32_t heads = 8;
  std::uint32_t rwpe_steps = 16;
  std::uint32_t mlp_hidden = 0;  // 0 -> dim
  double mask_rate = 0.15;
  // [train]
  std::uint32_t epochs = 15;
  std::uint32_t batch_size = 32;
  double learning_rate = 1e-4;
  double lambda1 = 5, lambda2 = 10, lambda3 = 5;
  std::uint32_t segments = 8;
  std::string mlm_norm = "sequence";     // sequence | position
  std::string edge_input = "zg";         // zg | wtm
  std::string embed_source = "wtm";      // wtm | zg
  bool strict_alg1 = false;
  // [eval]
  std::string k_list = "5,10";
  std::string anomaly_direction = "high";  // high | low
  // [run]
  std::uint64_t seed = 1;
  std::uint32_t threads = 1;  // wall time only, excluded from the hash

  void validate() const;
  void apply_desk_preset();

  WalkConfig walk_config() const;
  ModelConfig model_config(std::uint32_t vocab_nodes, std::uint32_t time_steps) const;
  TrainConfig train_config() const;
  std::vector<std::uint32_t> parsed_k_list() const;
};

// Sectioned `key = value` text; '#' starts a comment.
RunConfig parse_config_text(const std::string& text, const RunConfig& base = {});
RunConfig load_config_file(const std::string& path, const RunConfig& base = {});
std::string serialize_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace tge
