#include "localregret/adversary.hpp"

#include <random>
#include <sstream>

#include "localregret/errors.hpp"

namespace localregret {

namespace {

void check_horizon(long T, int w) {
  if (w < 1 || T < 1 || w > T) {
    std::ostringstream os;
    os << "adversary: need 1 <= w <= T, got T = " << T << ", w = " << w;
    throw ArgumentError(os.str());
  }
}

LossFunction linear_move(AdversaryMove move) {
  const double c = static_cast<double>(static_cast<int>(move));
  LossConstants k;
  k.bound = 1.0;
  k.lipschitz = 1.0;
  k.smoothness = 0.0;
  k.hessian_lipschitz = 0.0;
  k.domain_radius = 1.0;
  const char* name = move == AdversaryMove::kPlus ? "+x" : move == AdversaryMove::kMinus ? "-x" : "0";
  return LossFunction(
      1, [c](const Vector& x) { return c * x[0]; },
      [c](const Vector&) { return Vector::Constant(1, c).eval(); }, k,
      [](const Vector&) { return Matrix::Zero(1, 1).eval(); }, name);
}

}  // namespace

AdversarySequence generate_adversary(long T, int w, std::uint64_t seed) {
  check_horizon(T, w);
  AdversarySequence seq;
  seq.window_ = w;
  seq.seed_ = seed;
  seq.moves_.assign(static_cast<std::size_t>(T), AdversaryMove::kZero);

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  const long segment = 2L * w;
  const long segments = T / segment;
  for (long s = 0; s < segments; ++s) {
    for (long j = 1; j <= w; ++j) {
      const auto idx = static_cast<std::size_t>(s * segment + j - 1);
      if (j % 2 == 1) {
        seq.moves_[idx] = coin(rng) ? AdversaryMove::kPlus : AdversaryMove::kMinus;
      } else {
        seq.moves_[idx] = static_cast<AdversaryMove>(-static_cast<int>(seq.moves_[idx - 1]));
      }
    }
  }
  return seq;
}

AdversaryMove AdversarySequence::move(long t) const {
  if (t < 1 || t > horizon()) throw ArgumentError("adversary round out of range");
  return moves_[static_cast<std::size_t>(t - 1)];
}

long AdversarySequence::segments() const noexcept { return horizon() / (2L * window_); }

bool AdversarySequence::is_random(long t) const {
  if (t < 1 || t > horizon()) throw ArgumentError("adversary round out of range");
  const long segment = 2L * window_;
  if ((t - 1) / segment >= segments()) return false;
  const long j = (t - 1) % segment + 1;
  return j <= window_ && j % 2 == 1;
}

LossFunction AdversarySequence::loss(long t) const { return linear_move(move(t)); }

std::vector<LossFunction> AdversarySequence::losses() const {
  // Three distinct losses; share the handles.
  const LossFunction plus = linear_move(AdversaryMove::kPlus);
  const LossFunction minus = linear_move(AdversaryMove::kMinus);
  const LossFunction zero = linear_move(AdversaryMove::kZero);
  std::vector<LossFunction> out;
  out.reserve(moves_.size());
  for (AdversaryMove m : moves_) {
    out.push_back(m == AdversaryMove::kPlus ? plus : m == AdversaryMove::kMinus ? minus : zero);
  }
  return out;
}

double expected_lower_bound(long T, int w) {
  check_horizon(T, w);
  return static_cast<double>(T / (2L * w)) / (4.0 * w);
}

}  // namespace localregret
