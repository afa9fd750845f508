#pragma once

#include <cstdint>

#include "tge/error.hpp"
#include "tge/graph.hpp"

namespace tge {

using TokenId = std::uint32_t;

// Token ids: fixed reserved block, then dense node ids.
//   0 [PAD]  1 [CLS]  2 [SEP]  3 [MASK]  4 [UNK]  5.. nodes
struct Vocabulary {
  std::uint32_t node_count = 0;

  static constexpr TokenId kPad = 0;
  static constexpr TokenId kCls = 1;
  static constexpr TokenId kSep = 2;
  static constexpr TokenId kMask = 3;
  static constexpr TokenId kUnk = 4;
  static constexpr TokenId kReserved = 5;

  std::uint32_t size() const { return node_count + kReserved; }
  TokenId node_token(NodeId v) const { return v + kReserved; }
  static bool is_special(TokenId t) { return t < kReserved; }
  NodeId token_node(TokenId t) const {
    if (t < kReserved || t >= size()) throw DataError("token id out of vocabulary range");
    return t - kReserved;
  }
};

}  // namespace tge
