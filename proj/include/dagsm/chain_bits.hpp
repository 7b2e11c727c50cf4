#pragma once

#include <bit>
#include <cstdint>

namespace dagsm {

/// A chain of up to 32 blocks as whale flags: bit i is block i (0 = oldest).
struct Chain {
  std::uint32_t whales = 0;
  std::uint8_t length = 0;

  static std::uint32_t mask(int n) { return n >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << n) - 1; }

  /// Whale transactions in the first n blocks.
  int tx(int n) const { return std::popcount(whales & mask(n)); }
  int tx() const { return tx(length); }
  bool empty() const { return length == 0; }

  /// Drops the first n blocks.
  Chain shifted(int n) const { return {n >= 32 ? 0u : whales >> n, static_cast<std::uint8_t>(length - n)}; }

  /// Appends a block that carries a whale iff the chain holds fewer whales
  /// than the pool offers.
  Chain appended(int pool) const {
    Chain c = *this;
    if (tx() < pool) c.whales |= std::uint32_t{1} << length;
    ++c.length;
    return c;
  }

  friend bool operator==(const Chain&, const Chain&) = default;
};

enum class Fork : std::uint8_t { kIrrelevant, kRelevant, kActive };

}  // namespace dagsm
