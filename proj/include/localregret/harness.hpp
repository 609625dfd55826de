#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "localregret/games.hpp"
#include "localregret/geometry.hpp"
#include "localregret/losses.hpp"

namespace localregret {

enum class ExperimentKind { kTsogd, kStochastic, kNewton, kAdversary, kGame };

const char* to_string(ExperimentKind kind) noexcept;

/// A builtin's parameters: the fixed `params` first, then one uniform draw
/// per entry of `ranges` (redrawn each round in random mode).
struct BuiltinDraw {
  std::string name;
  std::vector<double> params;
  std::vector<std::pair<double, double>> ranges;
};

struct LossSequenceSpec {
  enum class Mode { kIdentical, kRandom };
  Mode mode = Mode::kIdentical;
  int dim = 1;
  double radius = 1.0;
  std::vector<BuiltinDraw> builtins;
};

struct GameConfig {
  std::string name = "bilinear";
  ToyGanParams gan;
  UpdateOrder order = UpdateOrder::kSimultaneous;
};

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::kTsogd;
  long T = 1;
  int w = 1;
  std::optional<double> eta;
  std::optional<double> delta;
  /// Newton only: L2 to use instead of the losses' declared value.
  std::optional<double> hessian_lipschitz;
  double sigma = 0.0;
  std::optional<ConvexBody> body;
  LossSequenceSpec losses;
  GameConfig game;
  std::vector<std::uint64_t> seeds{1};
  bool assert_bounds = true;
  std::size_t safety_cap = 1'000'000;
};

/// Parses the JSON config document; throws ConfigError naming the problem.
std::vector<ExperimentConfig> parse_config(const std::string& text);
std::vector<ExperimentConfig> load_config(const std::filesystem::path& path);

/// Checks every algorithm precondition that can be decided before running
/// (step sizes, body kinds, constant availability). Throws ConfigError.
void validate(const ExperimentConfig& config);

/// Loss sequence the experiment plays for `seed` (tsogd/stochastic/newton).
std::vector<LossFunction> build_losses(const ExperimentConfig& config, std::uint64_t seed);

struct TraceRecord {
  std::string run_id;
  long round = 0;
  double cost = 0.0;
  std::size_t inner_steps = 0;
  std::size_t tau = 0;
  double cumulative = 0.0;
  OracleCounters counters;
  std::vector<double> iterate;
};

/// Delimiter-separated trace with a header row.
void write_trace(const std::filesystem::path& path, std::span<const TraceRecord> records);
std::vector<TraceRecord> read_trace(const std::filesystem::path& path);

enum class BoundRelation { kAtMost, kAtLeast, kEqual };
enum class BoundMode {
  /// Must hold on every run; the worst run is reported.
  kDeterministic,
  /// Holds in expectation; the mean over runs is reported with its standard error.
  kExpectation,
};

struct BoundCheck {
  std::string name;
  BoundRelation relation = BoundRelation::kAtMost;
  BoundMode mode = BoundMode::kDeterministic;
  double measured = 0.0;
  double theoretical = 0.0;
  double standard_error = 0.0;
  long runs = 0;
  double margin = 0.0;
  bool pass = false;
};

/// Absolute slack for deterministic comparisons.
inline constexpr double kDeterministicSlack = 1e-9;
/// Standard errors allowed for expectation lower bounds.
inline constexpr double kLowerBoundStandardErrors = 3.0;

/// Fills margin and pass from measured/theoretical.
void evaluate(BoundCheck& check);

struct RunOptions {
  std::filesystem::path out_dir = "out";
  std::optional<std::vector<std::uint64_t>> seed_override;
  int parallelism = 1;
};

struct RunReport {
  int exit_code = 0;
  std::string text;
  std::vector<std::filesystem::path> summaries;
};

/// Executes every (experiment x seed) run, writes one trace per run (per
/// player for games) and one summary.json per experiment.
/// Exit code 0 when all asserted bounds pass, 1 otherwise, 2 for invalid
/// configurations.
RunReport run_experiments(const std::vector<ExperimentConfig>& experiments,
                          const RunOptions& options);
RunReport run_config_file(const std::filesystem::path& config, const RunOptions& options);

struct VerifyRow {
  std::string source;
  BoundCheck check;
};

struct VerifyReport {
  int exit_code = 0;
  std::vector<VerifyRow> rows;
  std::string text;
};

/// Re-evaluates every bound recorded in the summaries. Exit code 2 on a
/// malformed summary, 1 if any bound fails, else 0.
VerifyReport verify_summaries(std::span<const std::filesystem::path> summaries);

/// Human-readable listing of the builtin catalog.
std::string describe_builtins();

}  // namespace localregret
