// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

#include "dtameta/math.hpp"

namespace dtameta {

/// Philox4x32-10 counter-based generator keyed by (seed, chain).
///
/// Streams are addressed by a block index (one block per sampler iteration),
/// so the values consumed in iteration k never depend on how many values
/// earlier iterations consumed. That makes thinned runs prefix-consistent
/// and chain parallelism incapable of perturbing the stream.
class PhiloxRng {
 public:
  PhiloxRng(std::uint64_t seed, std::uint32_t stream) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32) ^ (0x9E3779B9u * (stream + 1));
    set_block(0);
  }

  /// Position the generator at the start of a block (e.g. iteration index).
  void set_block(std::uint64_t block) {
    block_ = block;
    call_ = 0;
    buf_pos_ = 4;
  }

  std::uint32_t next_u32() {
    if (buf_pos_ >= 4) refill();
    return buf_[buf_pos_++];
  }

  /// Uniform on (0, 1), strictly interior.
  double uniform() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    const std::uint64_t bits = (hi << 32 | lo) >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via inverse-CDF; exactly one uniform consumed.
  double normal() { return math::inv_Phi(uniform()); }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static void round(std::array<std::uint32_t, 4>& ctr, const std::array<std::uint32_t, 2>& key) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }

  void refill() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(call_), static_cast<std::uint32_t>(call_ >> 32)};
    std::array<std::uint32_t, 2> key = key_;
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      round(ctr, key);
    }
    buf_ = ctr;
    buf_pos_ = 0;
    ++call_;
  }

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t block_ = 0;
  std::uint64_t call_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
};

}  // namespace dtameta
