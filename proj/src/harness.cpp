#include "localregret/harness.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "localregret/adversary.hpp"
#include "localregret/errors.hpp"
#include "localregret/minimizers.hpp"

namespace localregret {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::kTsogd:
      return "tsogd";
    case ExperimentKind::kStochastic:
      return "stochastic";
    case ExperimentKind::kNewton:
      return "newton";
    case ExperimentKind::kAdversary:
      return "adversary-vs-tsogd";
    case ExperimentKind::kGame:
      return "game";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

[[noreturn]] void config_fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) config_fail(where, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) config_fail(where, "unknown key '" + key + "'");
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) config_fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_fail(where, "expected a finite number");
  return v;
}

long integer(const json& j, const std::string& where, long min) {
  if (!j.is_number_integer()) config_fail(where, "expected an integer");
  const long v = j.get<long>();
  if (v < min) config_fail(where, "must be >= " + std::to_string(min));
  return v;
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) config_fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ConvexBody parse_body(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    config_fail(where, "body needs a string 'type'");
  }
  const std::string type = j["type"].get<std::string>();
  try {
    if (type == "unconstrained") {
      allow_keys(j, where, {"type", "dim"});
      return ConvexBody::unconstrained(static_cast<int>(integer(j.at("dim"), where + ".dim", 1)));
    }
    if (type == "box") {
      allow_keys(j, where, {"type", "lower", "upper"});
      return ConvexBody::box(to_vector(numbers(j.at("lower"), where + ".lower")),
                             to_vector(numbers(j.at("upper"), where + ".upper")));
    }
    if (type == "cube") {
      allow_keys(j, where, {"type", "dim", "radius"});
      return ConvexBody::cube(static_cast<int>(integer(j.at("dim"), where + ".dim", 1)),
                              number(j.at("radius"), where + ".radius"));
    }
    if (type == "ball") {
      allow_keys(j, where, {"type", "center", "radius"});
      return ConvexBody::ball(to_vector(numbers(j.at("center"), where + ".center")),
                              number(j.at("radius"), where + ".radius"));
    }
  } catch (const json::out_of_range& e) {
    config_fail(where, std::string("missing field: ") + e.what());
  } catch (const ArgumentError& e) {
    config_fail(where, e.what());
  }
  config_fail(where, "unknown body type '" + type + "'");
}

LossSequenceSpec parse_losses(const json& j, const std::string& where) {
  allow_keys(j, where, {"mode", "dim", "radius", "builtins"});
  LossSequenceSpec spec;
  if (j.contains("mode")) {
    const std::string mode = j["mode"].is_string() ? j["mode"].get<std::string>() : "";
    if (mode == "identical") {
      spec.mode = LossSequenceSpec::Mode::kIdentical;
    } else if (mode == "random") {
      spec.mode = LossSequenceSpec::Mode::kRandom;
    } else {
      config_fail(where + ".mode", "expected 'identical' or 'random'");
    }
  }
  if (j.contains("dim")) spec.dim = static_cast<int>(integer(j["dim"], where + ".dim", 1));
  if (j.contains("radius")) {
    spec.radius = number(j["radius"], where + ".radius");
    if (!(spec.radius > 0.0)) config_fail(where + ".radius", "must be > 0");
  }
  if (!j.contains("builtins") || !j["builtins"].is_array() || j["builtins"].empty()) {
    config_fail(where + ".builtins", "expected a non-empty array");
  }
  for (std::size_t i = 0; i < j["builtins"].size(); ++i) {
    const json& b = j["builtins"][i];
    const std::string bw = where + ".builtins[" + std::to_string(i) + "]";
    allow_keys(b, bw, {"name", "params", "ranges"});
    BuiltinDraw draw;
    if (!b.contains("name") || !b["name"].is_string()) config_fail(bw, "needs a string 'name'");
    draw.name = b["name"].get<std::string>();
    if (b.contains("params")) draw.params = numbers(b["params"], bw + ".params");
    if (b.contains("ranges")) {
      if (!b["ranges"].is_array()) config_fail(bw + ".ranges", "expected an array of [lo, hi]");
      for (std::size_t r = 0; r < b["ranges"].size(); ++r) {
        const auto pair = numbers(b["ranges"][r], bw + ".ranges[" + std::to_string(r) + "]");
        if (pair.size() != 2 || pair[0] > pair[1]) {
          config_fail(bw + ".ranges[" + std::to_string(r) + "]", "expected [lo, hi] with lo <= hi");
        }
        draw.ranges.emplace_back(pair[0], pair[1]);
      }
    }
    spec.builtins.push_back(std::move(draw));
  }
  return spec;
}

GameConfig parse_game(const json& j, const std::string& where) {
  allow_keys(j, where, {"name", "target", "disc_box", "gen_box", "order"});
  GameConfig g;
  if (j.contains("name")) {
    if (!j["name"].is_string()) config_fail(where + ".name", "expected a string");
    g.name = j["name"].get<std::string>();
  }
  if (g.name != "bilinear" && g.name != "toy_gan") {
    config_fail(where + ".name", "unknown game '" + g.name + "' (bilinear, toy_gan)");
  }
  if (j.contains("target")) g.gan.target = number(j["target"], where + ".target");
  if (j.contains("disc_box")) g.gan.disc_box = number(j["disc_box"], where + ".disc_box");
  if (j.contains("gen_box")) g.gan.gen_box = number(j["gen_box"], where + ".gen_box");
  if (j.contains("order")) {
    const std::string order = j["order"].is_string() ? j["order"].get<std::string>() : "";
    if (order == "simultaneous") {
      g.order = UpdateOrder::kSimultaneous;
    } else if (order == "alternating") {
      g.order = UpdateOrder::kAlternating;
    } else {
      config_fail(where + ".order", "expected 'simultaneous' or 'alternating'");
    }
  }
  return g;
}

ExperimentKind parse_kind(const json& j, const std::string& where) {
  const std::string s = j.is_string() ? j.get<std::string>() : "";
  if (s == "tsogd") return ExperimentKind::kTsogd;
  if (s == "stochastic") return ExperimentKind::kStochastic;
  if (s == "newton") return ExperimentKind::kNewton;
  if (s == "adversary-vs-tsogd") return ExperimentKind::kAdversary;
  if (s == "game") return ExperimentKind::kGame;
  config_fail(where,
              "kind must be one of tsogd, stochastic, newton, adversary-vs-tsogd, game");
}

ExperimentConfig parse_experiment(const json& j, std::size_t index) {
  const std::string where = "experiments[" + std::to_string(index) + "]";
  allow_keys(j, where,
             {"name", "kind", "T", "w", "eta", "delta", "L2", "sigma", "body", "losses", "game",
              "seeds", "assert_bounds", "safety_cap"});
  ExperimentConfig c;
  if (!j.contains("name") || !j["name"].is_string() || j["name"].get<std::string>().empty()) {
    config_fail(where, "needs a non-empty string 'name'");
  }
  c.name = j["name"].get<std::string>();
  for (char ch : c.name) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) {
      config_fail(where + ".name", "may contain only letters, digits, '-', '_' and '.'");
    }
  }
  const std::string w2 = "experiment '" + c.name + "'";
  if (!j.contains("kind")) config_fail(w2, "missing 'kind'");
  c.kind = parse_kind(j["kind"], w2 + ".kind");
  if (!j.contains("T")) config_fail(w2, "missing 'T'");
  c.T = integer(j["T"], w2 + ".T", 1);
  if (j.contains("w")) c.w = static_cast<int>(integer(j["w"], w2 + ".w", 1));
  if (j.contains("eta")) c.eta = number(j["eta"], w2 + ".eta");
  if (j.contains("delta")) c.delta = number(j["delta"], w2 + ".delta");
  if (j.contains("L2")) c.hessian_lipschitz = number(j["L2"], w2 + ".L2");
  if (j.contains("sigma")) c.sigma = number(j["sigma"], w2 + ".sigma");
  if (j.contains("body")) c.body = parse_body(j["body"], w2 + ".body");
  if (j.contains("losses")) c.losses = parse_losses(j["losses"], w2 + ".losses");
  if (j.contains("game")) c.game = parse_game(j["game"], w2 + ".game");
  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty()) {
      config_fail(w2 + ".seeds", "expected a non-empty array of integers");
    }
    c.seeds.clear();
    for (std::size_t i = 0; i < j["seeds"].size(); ++i) {
      c.seeds.push_back(static_cast<std::uint64_t>(
          integer(j["seeds"][i], w2 + ".seeds[" + std::to_string(i) + "]", 0)));
    }
  }
  if (j.contains("assert_bounds")) {
    if (!j["assert_bounds"].is_boolean()) config_fail(w2 + ".assert_bounds", "expected a bool");
    c.assert_bounds = j["assert_bounds"].get<bool>();
  }
  if (j.contains("safety_cap")) {
    c.safety_cap = static_cast<std::size_t>(integer(j["safety_cap"], w2 + ".safety_cap", 1));
  }
  return c;
}

}  // namespace

std::vector<ExperimentConfig> parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  allow_keys(doc, "config", {"experiments"});
  if (!doc.contains("experiments") || !doc["experiments"].is_array()) {
    throw ConfigError("config: expected an 'experiments' array");
  }
  std::vector<ExperimentConfig> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < doc["experiments"].size(); ++i) {
    out.push_back(parse_experiment(doc["experiments"][i], i));
    if (!names.insert(out.back().name).second) {
      throw ConfigError("config: duplicate experiment name '" + out.back().name + "'");
    }
  }
  for (const auto& c : out) validate(c);
  return out;
}

std::vector<ExperimentConfig> load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

// ---------------------------------------------------------------------------
// Loss sequences and resolved parameters

std::vector<LossFunction> build_losses(const ExperimentConfig& config, std::uint64_t seed) {
  const LossSequenceSpec& spec = config.losses;
  if (spec.builtins.empty()) throw ConfigError("experiment '" + config.name + "': no builtins");
  std::mt19937_64 rng(mix_seed(seed, 0x5EEDULL));
  auto draw = [&](const BuiltinDraw& b) {
    std::vector<double> params = b.params;
    for (const auto& [lo, hi] : b.ranges) {
      params.push_back(std::uniform_real_distribution<double>(lo, hi)(rng));
    }
    return builtin_loss(b.name, params, spec.dim, spec.radius);
  };

  std::vector<LossFunction> out;
  out.reserve(static_cast<std::size_t>(config.T));
  if (spec.mode == LossSequenceSpec::Mode::kIdentical) {
    const LossFunction f = draw(spec.builtins.front());
    out.assign(static_cast<std::size_t>(config.T), f);
    return out;
  }
  std::uniform_int_distribution<std::size_t> pick(0, spec.builtins.size() - 1);
  for (long t = 0; t < config.T; ++t) out.push_back(draw(spec.builtins[pick(rng)]));
  return out;
}

namespace {

struct Resolved {
  LossConstants constants;
  double eta = 1.0;
  double delta = 1.0;
  double l2 = 0.0;
  ConvexBody body = ConvexBody::unconstrained(1);
};

LossConstants envelope(std::span<const LossFunction> losses) {
  LossConstants env;
  env.hessian_lipschitz = 0.0;
  for (const auto& f : losses) env = LossConstants::envelope(env, f.constants());
  return env;
}

bool body_within(const ConvexBody& body, double radius) {
  if (radius == std::numeric_limits<double>::infinity()) return true;
  switch (body.kind()) {
    case ConvexBody::Kind::kUnconstrained:
      return false;
    case ConvexBody::Kind::kBox:
      return body.lower().cwiseAbs().maxCoeff() <= radius &&
             body.upper().cwiseAbs().maxCoeff() <= radius;
    case ConvexBody::Kind::kBall:
      return body.center().cwiseAbs().maxCoeff() + body.radius() <= radius;
  }
  return false;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

Resolved resolve(const ExperimentConfig& c, std::span<const LossFunction> losses) {
  const std::string where = "experiment '" + c.name + "'";
  Resolved r;
  r.constants = envelope(losses);
  const LossConstants& k = r.constants;
  switch (c.kind) {
    case ExperimentKind::kTsogd: {
      r.body = c.body.value_or(ConvexBody::cube(c.losses.dim, c.losses.radius));
      if (r.body.dim() != c.losses.dim) config_fail(where, "body and loss dimensions differ");
      if (!body_within(r.body, k.domain_radius)) {
        config_fail(where, "body is not contained in the cube [-" + fmt(k.domain_radius) + ", " +
                               fmt(k.domain_radius) + "]^n on which the loss constants hold");
      }
      r.eta = c.eta.value_or(default_learning_rate(k.smoothness));
      r.delta = c.delta.value_or(k.lipschitz > 0.0 ? k.lipschitz : 1.0);
      if (!(r.eta > 0.0)) config_fail(where, "eta must be > 0");
      if (!(r.eta * (1.0 - 0.5 * k.smoothness * r.eta) > 0.0)) {
        config_fail(where, "eta = " + fmt(r.eta) + " violates eta < 2 / beta = " +
                               fmt(2.0 / k.smoothness));
      }
      break;
    }
    case ExperimentKind::kStochastic:
    case ExperimentKind::kNewton: {
      r.body = c.body.value_or(ConvexBody::unconstrained(c.losses.dim));
      if (!r.body.is_unconstrained()) {
        config_fail(where, std::string(to_string(c.kind)) +
                               " is defined only on an unconstrained body");
      }
      if (r.body.dim() != c.losses.dim) config_fail(where, "body and loss dimensions differ");
      if (!k.global()) {
        config_fail(where, "losses must have globally valid constants on R^n (declared only on [-" +
                               fmt(k.domain_radius) + ", " + fmt(k.domain_radius) + "]^n)");
      }
      if (c.kind == ExperimentKind::kStochastic) {
        if (!(c.sigma >= 0.0)) config_fail(where, "sigma must be >= 0");
        r.eta = c.eta.value_or(default_learning_rate(k.smoothness));
        if (!(r.eta > 0.0)) config_fail(where, "eta must be > 0");
        if (!(k.smoothness > 0.0)) config_fail(where, "stochastic runs need beta > 0");
        break;
      }
      if (!(k.smoothness > 0.0)) config_fail(where, "newton needs beta > 0");
      r.l2 = c.hessian_lipschitz.value_or(k.hessian_lipschitz.value_or(0.0));
      if (!k.hessian_lipschitz) config_fail(where, "newton needs losses with a Hessian constant");
      if (!(r.l2 > 0.0)) {
        config_fail(where, "newton needs L2 > 0; set 'L2' to an upper bound of the Hessian constant");
      }
      if (r.l2 < *k.hessian_lipschitz) {
        config_fail(where, "L2 = " + fmt(r.l2) + " is below the losses' Hessian constant " +
                               fmt(*k.hessian_lipschitz));
      }
      r.delta = c.delta.value_or(k.smoothness);
      if (!(r.delta > 0.0)) config_fail(where, "delta must be > 0");
      break;
    }
    case ExperimentKind::kAdversary:
    case ExperimentKind::kGame:
      break;
  }
  return r;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  const std::string where = "experiment '" + c.name + "'";
  if (c.seeds.empty()) config_fail(where, "needs at least one seed");
  if (c.w < 1 || c.w > c.T) {
    config_fail(where, "window must satisfy 1 <= w <= T (w = " + std::to_string(c.w) +
                           ", T = " + std::to_string(c.T) + ")");
  }
  switch (c.kind) {
    case ExperimentKind::kTsogd:
    case ExperimentKind::kStochastic:
    case ExperimentKind::kNewton: {
      std::vector<LossFunction> losses;
      try {
        losses = build_losses(c, c.seeds.front());
      } catch (const ArgumentError& e) {
        config_fail(where, e.what());
      }
      resolve(c, losses);
      break;
    }
    case ExperimentKind::kAdversary: {
      const double eta = c.eta.value_or(1.0);
      if (!(eta > 0.0) || eta > 1.0) {
        config_fail(where, "adversary runs need 0 < eta <= 1 (eta = " + fmt(eta) + ")");
      }
      if (c.delta && !(*c.delta > 0.0)) config_fail(where, "delta must be > 0");
      break;
    }
    case ExperimentKind::kGame: {
      if (c.T <= c.w) config_fail(where, "games need T > w for the equilibrium certificate");
      GameSpec game = c.game.name == "toy_gan" ? toy_gan_game(c.game.gan) : bilinear_game();
      const double eta = c.eta.value_or(default_learning_rate(game.max_smoothness()));
      for (int i = 0; i < game.players(); ++i) {
        const double beta = game.player(i).loss_constants.smoothness;
        if (!(eta > 0.0) || !(eta * (1.0 - 0.5 * beta * eta) > 0.0)) {
          config_fail(where, "eta = " + fmt(eta) + " violates 0 < eta < 2 / beta for player " +
                                 std::to_string(i) + " (beta = " + fmt(beta) + ")");
        }
      }
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Traces

namespace {

constexpr std::size_t kMaxLoggedDim = 8;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<TraceRecord> ledger_trace(const std::string& run_id, const RegretLedger& ledger,
                                      std::span<const Point> iterates) {
  std::vector<TraceRecord> out;
  out.reserve(ledger.rounds());
  const auto counters = ledger.counter_history();
  for (std::size_t t = 1; t <= ledger.rounds(); ++t) {
    TraceRecord r;
    r.run_id = run_id;
    r.round = static_cast<long>(t);
    r.cost = ledger.costs()[t - 1];
    r.inner_steps = ledger.steps()[t - 1];
    r.tau = ledger.tau(t);
    r.cumulative = ledger.cumulative(t);
    r.counters = counters[t - 1];
    if (t - 1 < iterates.size() && iterates[t - 1].size() <= static_cast<Eigen::Index>(kMaxLoggedDim)) {
      const Point& x = iterates[t - 1];
      r.iterate.assign(x.data(), x.data() + x.size());
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

void write_trace(const fs::path& path, std::span<const TraceRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace '" + path.string() + "'");
  std::size_t dim = 0;
  for (const auto& r : records) dim = std::max(dim, r.iterate.size());
  out << "run_id,round,cost,inner_steps,tau,cumulative,value_calls,gradient_calls,hessian_calls,"
         "stochastic_calls";
  for (std::size_t i = 0; i < dim; ++i) out << ",x" << i;
  out << '\n';
  for (const auto& r : records) {
    out << r.run_id << ',' << r.round << ',' << format_double(r.cost) << ',' << r.inner_steps
        << ',' << r.tau << ',' << format_double(r.cumulative) << ',' << r.counters.value << ','
        << r.counters.gradient << ',' << r.counters.hessian << ',' << r.counters.stochastic;
    for (std::size_t i = 0; i < dim; ++i) {
      out << ',';
      if (i < r.iterate.size()) out << format_double(r.iterate[i]);
    }
    out << '\n';
  }
}

std::vector<TraceRecord> read_trace(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace '" + path.string() + "' is empty");
  std::vector<std::string> header;
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 10 || header[0] != "run_id") {
    throw std::runtime_error("trace '" + path.string() + "' has an unexpected header");
  }
  std::vector<TraceRecord> out;
  long last_round = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != header.size()) {
      throw std::runtime_error("trace '" + path.string() + "': row width differs from header");
    }
    TraceRecord r;
    r.run_id = cells[0];
    r.round = std::stol(cells[1]);
    r.cost = std::stod(cells[2]);
    r.inner_steps = std::stoull(cells[3]);
    r.tau = std::stoull(cells[4]);
    r.cumulative = std::stod(cells[5]);
    r.counters.value = std::stoull(cells[6]);
    r.counters.gradient = std::stoull(cells[7]);
    r.counters.hessian = std::stoull(cells[8]);
    r.counters.stochastic = std::stoull(cells[9]);
    for (std::size_t i = 10; i < cells.size(); ++i) {
      if (!cells[i].empty()) r.iterate.push_back(std::stod(cells[i]));
    }
    if (r.round <= last_round) {
      throw std::runtime_error("trace '" + path.string() + "': rounds are not increasing");
    }
    last_round = r.round;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bounds

void evaluate(BoundCheck& c) {
  switch (c.relation) {
    case BoundRelation::kAtMost:
      c.margin = c.theoretical - c.measured;
      c.pass = c.mode == BoundMode::kDeterministic ? c.margin >= -kDeterministicSlack
                                                   : c.margin >= 0.0;
      break;
    case BoundRelation::kAtLeast:
      if (c.mode == BoundMode::kDeterministic) {
        c.margin = c.measured - c.theoretical;
        c.pass = c.margin >= -kDeterministicSlack;
      } else {
        c.margin = c.measured + kLowerBoundStandardErrors * c.standard_error - c.theoretical;
        c.pass = c.margin >= 0.0;
      }
      break;
    case BoundRelation::kEqual:
      c.margin = -std::abs(c.measured - c.theoretical);
      c.pass = c.measured == c.theoretical;
      break;
  }
}

namespace {

const char* relation_name(BoundRelation r) {
  switch (r) {
    case BoundRelation::kAtMost:
      return "<=";
    case BoundRelation::kAtLeast:
      return ">=";
    case BoundRelation::kEqual:
      return "==";
  }
  return "?";
}

const char* mode_name(BoundMode m) {
  return m == BoundMode::kDeterministic ? "deterministic" : "expectation";
}

json to_json(const BoundCheck& c) {
  return json{{"name", c.name},
              {"relation", relation_name(c.relation)},
              {"mode", mode_name(c.mode)},
              {"measured", c.measured},
              {"theoretical", c.theoretical},
              {"standard_error", c.standard_error},
              {"runs", c.runs},
              {"margin", c.margin},
              {"pass", c.pass}};
}

BoundCheck bound_from_json(const json& j) {
  if (!j.is_object()) throw std::runtime_error("bound entry is not an object");
  BoundCheck c;
  c.name = j.at("name").get<std::string>();
  const std::string rel = j.at("relation").get<std::string>();
  if (rel == "<=") {
    c.relation = BoundRelation::kAtMost;
  } else if (rel == ">=") {
    c.relation = BoundRelation::kAtLeast;
  } else if (rel == "==") {
    c.relation = BoundRelation::kEqual;
  } else {
    throw std::runtime_error("bound '" + c.name + "' has unknown relation '" + rel + "'");
  }
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "deterministic") {
    c.mode = BoundMode::kDeterministic;
  } else if (mode == "expectation") {
    c.mode = BoundMode::kExpectation;
  } else {
    throw std::runtime_error("bound '" + c.name + "' has unknown mode '" + mode + "'");
  }
  auto num = [&](const char* key) {
    const json& v = j.at(key);
    if (!v.is_number()) throw std::runtime_error(std::string("bound field '") + key + "' is not a number");
    return v.get<double>();
  };
  c.measured = num("measured");
  c.theoretical = num("theoretical");
  c.standard_error = j.contains("standard_error") ? num("standard_error") : 0.0;
  c.runs = j.contains("runs") ? j["runs"].get<long>() : 1;
  evaluate(c);
  return c;
}

BoundCheck single(std::string name, BoundRelation rel, BoundMode mode, double measured,
                  double theoretical) {
  BoundCheck c;
  c.name = std::move(name);
  c.relation = rel;
  c.mode = mode;
  c.measured = measured;
  c.theoretical = theoretical;
  c.runs = 1;
  evaluate(c);
  return c;
}

// Deterministic checks keep the worst run; expectation checks average.
std::vector<BoundCheck> aggregate(const std::vector<std::vector<BoundCheck>>& per_run) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<BoundCheck>> groups;
  for (const auto& run : per_run) {
    for (const auto& c : run) {
      if (!groups.count(c.name)) order.push_back(c.name);
      groups[c.name].push_back(c);
    }
  }
  std::vector<BoundCheck> out;
  for (const auto& name : order) {
    const auto& g = groups[name];
    BoundCheck agg = g.front();
    agg.runs = static_cast<long>(g.size());
    if (agg.mode == BoundMode::kDeterministic) {
      for (const auto& c : g) {
        if (c.margin < agg.margin) {
          agg.measured = c.measured;
          agg.theoretical = c.theoretical;
          agg.margin = c.margin;
        }
      }
      agg.standard_error = 0.0;
    } else {
      const double n = static_cast<double>(g.size());
      double mean = 0.0;
      double theory = 0.0;
      for (const auto& c : g) {
        mean += c.measured;
        theory += c.theoretical;
      }
      mean /= n;
      theory /= n;
      double ss = 0.0;
      for (const auto& c : g) ss += (c.measured - mean) * (c.measured - mean);
      agg.measured = mean;
      agg.theoretical = theory;
      agg.standard_error = g.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    }
    evaluate(agg);
    out.push_back(agg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runs

struct JobResult {
  std::vector<std::pair<std::string, std::vector<TraceRecord>>> traces;
  json metrics;
  std::vector<BoundCheck> bounds;
  std::string error;
  int error_code = 0;
};

json counters_json(const OracleCounters& c) {
  return json{{"value", c.value},
              {"gradient", c.gradient},
              {"hessian", c.hessian},
              {"stochastic", c.stochastic}};
}

json ledger_metrics(const RegretLedger& l) {
  double max_cost = 0.0;
  for (double c : l.costs()) max_cost = std::max(max_cost, c);
  return json{{"rounds", l.rounds()},
              {"regret", l.cumulative()},
              {"max_cost", max_cost},
              {"tau_total", l.tau_total()},
              {"inner_steps_total", l.total_inner_steps()},
              {"oracle_calls", counters_json(l.counters())}};
}

json constants_json(const LossConstants& k) {
  json j{{"M", k.bound}, {"L", k.lipschitz}, {"beta", k.smoothness}};
  if (k.hessian_lipschitz) j["L2"] = *k.hessian_lipschitz;
  return j;
}

// Mean of costs over rounds w..T.
double tail_mean(std::span<const double> costs, int w) {
  double sum = 0.0;
  for (std::size_t t = static_cast<std::size_t>(w); t <= costs.size(); ++t) sum += costs[t - 1];
  return sum / static_cast<double>(costs.size() - static_cast<std::size_t>(w) + 1);
}

std::string run_id(std::uint64_t seed) { return "seed-" + std::to_string(seed); }

JobResult run_tsogd(const ExperimentConfig& c, std::uint64_t seed) {
  JobResult out;
  const auto losses = build_losses(c, seed);
  const Resolved r = resolve(c, losses);
  TsogdConfig tc;
  tc.window = c.w;
  tc.eta = r.eta;
  tc.delta = r.delta;
  tc.body = r.body;
  tc.safety_cap = c.safety_cap;
  const OnlineRun run = tsogd_run(losses, tc);
  const RegretLedger& l = run.ledger;
  out.traces.emplace_back(run_id(seed), ledger_trace(run_id(seed), l, run.iterates));
  out.metrics = ledger_metrics(l);
  out.metrics["constants"] = constants_json(r.constants);
  out.metrics["eta"] = r.eta;
  out.metrics["delta"] = r.delta;

  const auto& k = r.constants;
  const double regret_bound = bounds::tsogd_regret(r.delta, k.lipschitz, c.T, c.w);
  out.bounds.push_back(single("tsogd.local_regret", BoundRelation::kAtMost,
                              BoundMode::kDeterministic, l.cumulative(), regret_bound));
  out.bounds.push_back(single("tsogd.round_cost", BoundRelation::kAtMost, BoundMode::kDeterministic,
                              out.metrics["max_cost"].get<double>(),
                              bounds::tsogd_round_cost(r.delta, k.lipschitz, c.w)));
  out.bounds.push_back(single(
      "tsogd.inner_steps", BoundRelation::kAtMost, BoundMode::kDeterministic,
      static_cast<double>(l.tau_total()),
      bounds::tsogd_inner_steps(k.bound, r.delta, r.eta, k.smoothness, c.T, c.w)));
  if (c.losses.mode == LossSequenceSpec::Mode::kIdentical && c.T > c.w) {
    const double mean = tail_mean(l.costs(), c.w);
    out.metrics["window_stationarity"] = mean;
    out.bounds.push_back(single("offline.window_stationarity", BoundRelation::kAtMost,
                                BoundMode::kDeterministic, mean,
                                regret_bound / static_cast<double>(c.T - c.w)));
  }
  return out;
}

JobResult run_stochastic(const ExperimentConfig& c, std::uint64_t seed) {
  JobResult out;
  const auto losses = build_losses(c, seed);
  const Resolved r = resolve(c, losses);
  std::vector<StochasticGradientOracle> oracles;
  oracles.reserve(losses.size());
  for (std::size_t t = 0; t < losses.size(); ++t) {
    oracles.emplace_back(losses[t], c.sigma, mix_seed(seed, 1000 + t));
  }
  StochasticTsogdConfig sc;
  sc.window = c.w;
  sc.eta = r.eta;
  sc.body = r.body;
  const OnlineRun run = stochastic_tsogd_run(oracles, sc);
  const RegretLedger& l = run.ledger;
  out.traces.emplace_back(run_id(seed), ledger_trace(run_id(seed), l, run.iterates));
  out.metrics = ledger_metrics(l);
  out.metrics["constants"] = constants_json(r.constants);
  out.metrics["eta"] = r.eta;
  out.metrics["sigma"] = c.sigma;

  const auto& k = r.constants;
  const double regret_bound = bounds::stochastic_regret(k.smoothness, k.bound, c.sigma, c.T, c.w);
  out.bounds.push_back(single("stochastic.expected_regret", BoundRelation::kAtMost,
                              BoundMode::kExpectation, l.cumulative(), regret_bound));
  out.bounds.push_back(single("stochastic.sample_count", BoundRelation::kEqual,
                              BoundMode::kDeterministic,
                              static_cast<double>(l.counters().stochastic),
                              static_cast<double>(bounds::stochastic_samples(c.T, c.w))));
  if (c.losses.mode == LossSequenceSpec::Mode::kIdentical && c.T > c.w) {
    const double mean = tail_mean(l.costs(), c.w);
    out.metrics["window_stationarity"] = mean;
    out.bounds.push_back(single("stochastic.window_stationarity", BoundRelation::kAtMost,
                                BoundMode::kExpectation, mean,
                                regret_bound / static_cast<double>(c.T - c.w)));
  }
  return out;
}

JobResult run_newton(const ExperimentConfig& c, std::uint64_t seed) {
  JobResult out;
  const auto losses = build_losses(c, seed);
  const Resolved r = resolve(c, losses);
  NewtonConfig nc;
  nc.window = c.w;
  nc.delta = r.delta;
  nc.smoothness = r.constants.smoothness;
  nc.hessian_lipschitz = r.l2;
  nc.dim = c.losses.dim;
  nc.safety_cap = c.safety_cap;
  const NewtonRun run = newton_run(losses, nc);
  const RegretLedger& l = run.run.ledger;
  out.traces.emplace_back(run_id(seed), ledger_trace(run_id(seed), l, run.run.iterates));
  out.metrics = ledger_metrics(l);
  out.metrics["constants"] = constants_json(r.constants);
  out.metrics["delta"] = r.delta;
  out.metrics["L2"] = r.l2;
  out.metrics["curvature_steps"] = run.curvature_steps;

  const auto& k = r.constants;
  out.bounds.push_back(single(
      "newton.phi_sum", BoundRelation::kAtMost, BoundMode::kDeterministic, l.cumulative(),
      bounds::newton_phi_sum(r.delta, k.lipschitz, k.smoothness, r.l2, c.T, c.w)));
  out.bounds.push_back(single("newton.inner_steps", BoundRelation::kAtMost,
                              BoundMode::kDeterministic, static_cast<double>(l.tau_total()),
                              bounds::newton_inner_steps(k.bound, k.smoothness, r.delta, c.T, c.w)));
  if (r.delta == k.smoothness) {
    out.bounds.push_back(single("newton.inner_steps_simplified", BoundRelation::kAtMost,
                                BoundMode::kDeterministic, static_cast<double>(l.tau_total()),
                                bounds::newton_inner_steps_simplified(k.bound, k.smoothness, c.T,
                                                                      c.w)));
  }
  return out;
}

JobResult run_adversary(const ExperimentConfig& c, std::uint64_t seed) {
  JobResult out;
  const AdversarySequence seq = generate_adversary(c.T, c.w, seed);
  TsogdConfig tc;
  tc.window = c.w;
  tc.eta = c.eta.value_or(1.0);
  tc.delta = c.delta.value_or(1.0);
  tc.body = AdversarySequence::body();
  tc.safety_cap = c.safety_cap;
  const auto losses = seq.losses();
  const OnlineRun run = tsogd_run(losses, tc);
  const RegretLedger& l = run.ledger;
  out.traces.emplace_back(run_id(seed), ledger_trace(run_id(seed), l, run.iterates));
  out.metrics = ledger_metrics(l);
  out.metrics["eta"] = tc.eta;
  out.metrics["delta"] = tc.delta;
  out.bounds.push_back(single("adversary.expected_regret_lower", BoundRelation::kAtLeast,
                              BoundMode::kExpectation, l.cumulative(),
                              expected_lower_bound(c.T, c.w)));
  out.bounds.push_back(single("tsogd.local_regret", BoundRelation::kAtMost,
                              BoundMode::kDeterministic, l.cumulative(),
                              bounds::tsogd_regret(tc.delta, 1.0, c.T, c.w)));
  return out;
}

JobResult run_game(const ExperimentConfig& c, std::uint64_t seed) {
  JobResult out;
  const GameSpec game = c.game.name == "toy_gan" ? toy_gan_game(c.game.gan) : bilinear_game();
  const double eta = c.eta.value_or(default_learning_rate(game.max_smoothness()));
  const SimulationResult sim =
      simulate(game, tsogd_factory(eta), c.w, c.T, seed, {}, c.game.order);
  for (int i = 0; i < game.players(); ++i) {
    std::vector<Point> iterates;
    for (const auto& joint : sim.history.rounds) iterates.push_back(joint[static_cast<std::size_t>(i)]);
    const std::string id = run_id(seed) + "-player-" + std::to_string(i);
    out.traces.emplace_back(id, ledger_trace(id, sim.ledgers[static_cast<std::size_t>(i)], iterates));
  }
  json players = json::array();
  for (const auto& l : sim.ledgers) players.push_back(ledger_metrics(l));
  out.metrics["players"] = players;
  out.metrics["eta"] = eta;
  out.metrics["order"] = c.game.order == UpdateOrder::kSimultaneous ? "simultaneous" : "alternating";
  if (c.game.order != UpdateOrder::kSimultaneous) return out;  // demo mode: no guarantees

  const EquilibriumReport best = best_equilibrium_round(sim.history, game, eta, c.w, sim.ledgers);
  out.metrics["best_round"] = best.round;
  out.metrics["best_epsilon"] = best.epsilon;
  double replay_gap = 0.0;
  for (int i = 0; i < game.players(); ++i) {
    const auto costs = sim.ledgers[static_cast<std::size_t>(i)].costs();
    for (long t = 1; t <= c.T; ++t) {
      const double norm = replay_certificate(sim.history, game, i, eta, c.w, t);
      replay_gap = std::max(replay_gap, std::abs(norm * norm - costs[static_cast<std::size_t>(t - 1)]));
    }
  }
  out.metrics["replay_gap"] = replay_gap;
  out.bounds.push_back(single("game.equilibrium_epsilon", BoundRelation::kAtMost,
                              BoundMode::kDeterministic, best.epsilon, best.bound));
  out.bounds.push_back(single("game.replay_consistency", BoundRelation::kAtMost,
                              BoundMode::kDeterministic, replay_gap, 1e-10));
  return out;
}

JobResult run_job(const ExperimentConfig& c, std::uint64_t seed) {
  try {
    switch (c.kind) {
      case ExperimentKind::kTsogd:
        return run_tsogd(c, seed);
      case ExperimentKind::kStochastic:
        return run_stochastic(c, seed);
      case ExperimentKind::kNewton:
        return run_newton(c, seed);
      case ExperimentKind::kAdversary:
        return run_adversary(c, seed);
      case ExperimentKind::kGame:
        return run_game(c, seed);
    }
  } catch (const ConfigError& e) {
    JobResult r;
    r.error = e.what();
    r.error_code = 2;
    return r;
  } catch (const PreconditionError& e) {
    JobResult r;
    r.error = e.what();
    r.error_code = 2;
    return r;
  } catch (const std::exception& e) {
    JobResult r;
    r.error = e.what();
    r.error_code = 1;
    return r;
  }
  return {};
}

}  // namespace

RunReport run_experiments(const std::vector<ExperimentConfig>& experiments,
                          const RunOptions& options) {
  RunReport report;
  std::ostringstream text;

  std::vector<ExperimentConfig> configs = experiments;
  for (auto& c : configs) {
    if (options.seed_override) c.seeds = *options.seed_override;
  }
  try {
    for (const auto& c : configs) validate(c);
  } catch (const ConfigError& e) {
    report.exit_code = 2;
    report.text = std::string("invalid config: ") + e.what() + "\n";
    return report;
  }

  struct Job {
    std::size_t experiment;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t e = 0; e < configs.size(); ++e) {
    for (std::uint64_t s : configs[e].seeds) jobs.push_back({e, s});
  }
  std::vector<JobResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      results[i] = run_job(configs[jobs[i].experiment], jobs[i].seed);
    }
  };
  const int threads = std::max(1, std::min<int>(options.parallelism, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Single collector: all files are written here, in job order.
  std::size_t job = 0;
  for (std::size_t e = 0; e < configs.size(); ++e) {
    const ExperimentConfig& c = configs[e];
    const fs::path dir = options.out_dir / c.name;
    fs::create_directories(dir);
    json runs = json::array();
    std::vector<std::vector<BoundCheck>> per_run;
    bool failed = false;
    for (std::size_t s = 0; s < c.seeds.size(); ++s, ++job) {
      JobResult& r = results[job];
      if (r.error_code != 0) {
        text << "[" << c.name << "] seed " << jobs[job].seed << " failed: " << r.error << "\n";
        report.exit_code = std::max(report.exit_code, r.error_code);
        failed = true;
        continue;
      }
      json run{{"seed", jobs[job].seed}, {"metrics", r.metrics}};
      json files = json::array();
      for (const auto& [id, records] : r.traces) {
        const fs::path file = dir / (id + ".csv");
        write_trace(file, records);
        files.push_back(file.filename().string());
      }
      run["traces"] = files;
      runs.push_back(run);
      per_run.push_back(r.bounds);
    }
    const auto checks = aggregate(per_run);
    json bound_json = json::array();
    for (const auto& b : checks) bound_json.push_back(to_json(b));

    json summary{{"experiment", c.name},
                 {"kind", to_string(c.kind)},
                 {"T", c.T},
                 {"w", c.w},
                 {"seeds", c.seeds},
                 {"assert_bounds", c.assert_bounds},
                 {"complete", !failed},
                 {"runs", runs},
                 {"bounds", bound_json}};
    const fs::path summary_path = dir / "summary.json";
    std::ofstream out(summary_path, std::ios::binary);
    out << summary.dump(2) << '\n';
    report.summaries.push_back(summary_path);

    for (const auto& b : checks) {
      text << "[" << c.name << "] " << b.name << ": measured " << fmt(b.measured) << ' '
           << relation_name(b.relation) << " theoretical " << fmt(b.theoretical);
      if (b.mode == BoundMode::kExpectation) text << " (mean of " << b.runs << ", SE " << fmt(b.standard_error) << ")";
      text << " -> " << (b.pass ? "PASS" : "FAIL") << (c.assert_bounds ? "" : " (not asserted)")
           << "\n";
      if (!b.pass && c.assert_bounds) report.exit_code = std::max(report.exit_code, 1);
    }
  }
  report.text = text.str();
  return report;
}

RunReport run_config_file(const fs::path& config, const RunOptions& options) {
  std::vector<ExperimentConfig> experiments;
  try {
    experiments = load_config(config);
  } catch (const ConfigError& e) {
    RunReport r;
    r.exit_code = 2;
    r.text = std::string("invalid config: ") + e.what() + "\n";
    return r;
  }
  return run_experiments(experiments, options);
}

// ---------------------------------------------------------------------------
// Verify

VerifyReport verify_summaries(std::span<const fs::path> summaries) {
  VerifyReport report;
  for (const auto& path : summaries) {
    std::ifstream in(path);
    if (!in) {
      report.exit_code = 2;
      report.text = "cannot open summary '" + path.string() + "'\n";
      report.rows.clear();
      return report;
    }
    try {
      const json doc = json::parse(in);
      if (!doc.is_object() || !doc.contains("bounds") || !doc["bounds"].is_array()) {
        throw std::runtime_error("missing 'bounds' array");
      }
      const std::string source =
          doc.contains("experiment") && doc["experiment"].is_string()
              ? doc["experiment"].get<std::string>()
              : path.string();
      for (const auto& b : doc["bounds"]) report.rows.push_back({source, bound_from_json(b)});
      if (doc.contains("complete") && doc["complete"].is_boolean() && !doc["complete"].get<bool>()) {
        report.exit_code = std::max(report.exit_code, 1);
      }
    } catch (const std::exception& e) {
      report.exit_code = 2;
      report.text = "malformed summary '" + path.string() + "': " + e.what() + "\n";
      report.rows.clear();
      return report;
    }
  }

  std::ostringstream os;
  if (!report.rows.empty()) {
    os << std::left << std::setw(22) << "experiment" << std::setw(36) << "bound" << std::right
       << std::setw(18) << "measured" << std::setw(4) << "" << std::setw(18) << "theoretical"
       << std::setw(18) << "margin" << "  result\n";
  }
  for (const auto& row : report.rows) {
    const auto& b = row.check;
    os << std::left << std::setw(22) << row.source << std::setw(36) << b.name << std::right
       << std::setw(18) << fmt(b.measured) << std::setw(4) << relation_name(b.relation)
       << std::setw(18) << fmt(b.theoretical) << std::setw(18) << fmt(b.margin) << "  "
       << (b.pass ? "PASS" : "FAIL") << "\n";
    if (!b.pass) report.exit_code = std::max(report.exit_code, 1);
  }
  report.text = os.str();
  return report;
}

std::string describe_builtins() {
  std::ostringstream os;
  for (const auto& b : builtin_catalog()) {
    os << std::left << std::setw(20) << b.name << std::setw(52) << b.formula << "params: " << b.params
       << "\n";
  }
  return os.str();
}

}  // namespace localregret
