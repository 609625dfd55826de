#pragma once

#include <stdexcept>
#include <string>

namespace localregret {

/// Malformed input: wrong dimension, non-finite entries, unknown names.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an algorithm does not hold
/// (point outside the body, step size out of range, ...).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An inner loop hit its safety cap. The message carries the round, the
/// number of steps taken and the last stationarity measure.
class SafetyCapExceeded : public std::runtime_error {
 public:
  SafetyCapExceeded(std::string message, long round, long steps)
      : std::runtime_error(std::move(message)), round_(round), steps_(steps) {}

  long round() const noexcept { return round_; }
  long steps() const noexcept { return steps_; }

 private:
  long round_;
  long steps_;
};

/// Invalid experiment configuration (harness level).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace localregret

namespace localregret {

/// A player's learner failed during a game simulation.
class PlayerFailure : public std::runtime_error {
 public:
  PlayerFailure(int player, const std::string& what)
      : std::runtime_error("player " + std::to_string(player) + ": " + what), player_(player) {}

  int player() const noexcept { return player_; }

 private:
  int player_;
};

}  // namespace localregret
