#include "tge/sequence.hpp"

#include <algorithm>
#include <cmath>

namespace tge {

std::uint32_t mask_count(double mask_rate, std::uint32_t walk_length) {
  if (mask_rate < 0 || mask_rate >= 1) throw DataError("mask_rate must be in [0,1)");
  return static_cast<std::uint32_t>(std::ceil(mask_rate * walk_length));
}

TokenSequence build_sequence(const WalkRecord& walk, const Vocabulary& vocab,
                             const ReturnProbMatrix& rpm, double mask_rate, SplitMix64& rng) {
  const auto L = static_cast<std::uint32_t>(walk.nodes.size());
  TokenSequence seq;
  seq.t = walk.t;
  seq.tokens.reserve(L + 2);
  seq.tokens.push_back(Vocabulary::kCls);
  for (NodeId v : walk.nodes) seq.tokens.push_back(vocab.node_token(v));
  seq.tokens.push_back(Vocabulary::kSep);

  const std::uint32_t c = mask_count(mask_rate, L);
  if (c > 0) {
    // Partial Fisher-Yates over the interior positions.
    std::vector<std::uint32_t> pos(L);
    for (std::uint32_t i = 0; i < L; ++i) pos[i] = i + 1;
    for (std::uint32_t i = 0; i < c; ++i) {
      const auto j = i + static_cast<std::uint32_t>(rng.below(L - i));
      std::swap(pos[i], pos[j]);
    }
    pos.resize(c);
    std::sort(pos.begin(), pos.end());
    for (std::uint32_t p : pos) {
      seq.mask_positions.push_back(p);
      seq.mlm_targets.push_back(seq.tokens[p]);
      seq.tokens[p] = Vocabulary::kMask;
    }
  }

  seq.rwpe_rows = Mat<double>(seq.tokens.size(), rpm.k);
  for (std::size_t l = 0; l < seq.tokens.size(); ++l) {
    const auto row = rwpe_for_token(rpm, seq.tokens[l], vocab);
    std::copy(row.begin(), row.end(), seq.rwpe_rows.row(l));
  }
  return seq;
}

}  // namespace tge
