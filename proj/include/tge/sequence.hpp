#pragma once

#include <cstdint>
#include <vector>

#include "tge/linalg.hpp"
#include "tge/rng.hpp"
#include "tge/rwpe.hpp"
#include "tge/vocab.hpp"
#include "tge/walk.hpp"

namespace tge {

// A walk ready for the encoder: [CLS] walk tokens [SEP], with
// ceil(mask_rate * L) interior positions replaced by [MASK] and their
// originals kept as reconstruction targets. Structural rows follow the
// post-masking tokens, so masked and special positions carry zeros.
struct TokenSequence {
  std::vector<TokenId> tokens;                // length L' = L + 2
  std::vector<std::uint32_t> mask_positions;  // ascending, within 1..L
  std::vector<TokenId> mlm_targets;           // original token per masked slot
  std::uint32_t t = 0;                        // 1-based snapshot index
  Mat<double> rwpe_rows;                      // L' x k
};

// mask_rate 0 builds an unmasked sequence (scoring / inference path).
TokenSequence build_sequence(const WalkRecord& walk, const Vocabulary& vocab,
                             const ReturnProbMatrix& rpm, double mask_rate, SplitMix64& rng);

std::uint32_t mask_count(double mask_rate, std::uint32_t walk_length);

}  // namespace tge
