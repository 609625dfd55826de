#pragma once

#include <cstdint>
#include <vector>

#include "localregret/geometry.hpp"
#include "localregret/losses.hpp"

namespace localregret {

/// Loss played by the oblivious adversary in one round, on K = [-1, 1].
enum class AdversaryMove : std::int8_t {
  kZero = 0,
  kPlus = 1,   // f(x) = x
  kMinus = -1, // f(x) = -x
};

/// Randomised hard sequence for window w.
///
/// Rounds are grouped into floor(T / 2w) segments of length 2w. In the
/// first half of a segment odd rounds draw +x or -x with equal
/// probability and each even round negates its predecessor; the second
/// half and the trailing T mod 2w rounds are zero.
class AdversarySequence {
 public:
  long horizon() const noexcept { return static_cast<long>(moves_.size()); }
  int window() const noexcept { return window_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// 1-based round index.
  AdversaryMove move(long t) const;
  /// Round t is one of the independent coin flips.
  bool is_random(long t) const;
  long segments() const noexcept;
  const std::vector<AdversaryMove>& moves() const noexcept { return moves_; }

  /// f_t as a loss with M = 1, L = 1, beta = 0 on [-1, 1].
  LossFunction loss(long t) const;
  std::vector<LossFunction> losses() const;

  static ConvexBody body() { return ConvexBody::cube(1, 1.0); }

 private:
  friend AdversarySequence generate_adversary(long T, int w, std::uint64_t seed);
  int window_ = 1;
  std::uint64_t seed_ = 0;
  std::vector<AdversaryMove> moves_;
};

/// Requires 1 <= w <= T. Deterministic in the seed.
AdversarySequence generate_adversary(long T, int w, std::uint64_t seed);

/// (1 / 4w) floor(T / 2w): expected local regret any learner suffers.
double expected_lower_bound(long T, int w);

}  // namespace localregret
