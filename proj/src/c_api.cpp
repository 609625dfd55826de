#include "localregret/localregret.h"

#include <cmath>
#include <exception>
#include <filesystem>
#include <new>
#include <string>
#include <vector>

#include "localregret/adversary.hpp"
#include "localregret/errors.hpp"
#include "localregret/geometry.hpp"
#include "localregret/harness.hpp"
#include "localregret/losses.hpp"

struct lr_body {
  localregret::ConvexBody body;
};

struct lr_loss {
  localregret::LossFunction loss;
};

struct lr_report {
  std::string text;
  int exit_code = 0;
};

namespace {

thread_local std::string g_last_error;

lr_status fail(lr_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps exceptions from the core onto status codes.
template <typename Fn>
lr_status guarded(Fn&& fn) noexcept {
  try {
    g_last_error.clear();
    fn();
    return LR_OK;
  } catch (const localregret::SafetyCapExceeded& e) {
    return fail(LR_ERR_SAFETY_CAP, e.what());
  } catch (const localregret::ConfigError& e) {
    return fail(LR_ERR_CONFIG, e.what());
  } catch (const localregret::ArgumentError& e) {
    return fail(LR_ERR_ARGUMENT, e.what());
  } catch (const localregret::PreconditionError& e) {
    return fail(LR_ERR_PRECONDITION, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(LR_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(LR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LR_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(LR_ERR_INTERNAL, "unknown error");
  }
}

localregret::Vector view(const double* p, int n) {
  return Eigen::Map<const localregret::Vector>(p, n);
}

void copy_out(const localregret::Vector& v, double* out) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i];
}

}  // namespace

extern "C" {

const char* lr_last_error(void) { return g_last_error.c_str(); }

const char* lr_version(void) { return "0.1.0"; }

lr_status lr_body_unconstrained(int dim, lr_body** out) {
  if (!out) return fail(LR_ERR_ARGUMENT, "out is null");
  return guarded([&] { *out = new lr_body{localregret::ConvexBody::unconstrained(dim)}; });
}

lr_status lr_body_box(int dim, const double* lower, const double* upper, lr_body** out) {
  if (!out || !lower || !upper || dim < 1) return fail(LR_ERR_ARGUMENT, "invalid box arguments");
  return guarded(
      [&] { *out = new lr_body{localregret::ConvexBody::box(view(lower, dim), view(upper, dim))}; });
}

lr_status lr_body_ball(int dim, const double* center, double radius, lr_body** out) {
  if (!out || !center || dim < 1) return fail(LR_ERR_ARGUMENT, "invalid ball arguments");
  return guarded(
      [&] { *out = new lr_body{localregret::ConvexBody::ball(view(center, dim), radius)}; });
}

void lr_body_destroy(lr_body* body) { delete body; }

int lr_body_dim(const lr_body* body) { return body ? body->body.dim() : -1; }

lr_status lr_body_project(const lr_body* body, const double* x, double* out) {
  if (!body || !x || !out) return fail(LR_ERR_ARGUMENT, "null argument");
  return guarded([&] { copy_out(body->body.project(view(x, body->body.dim())), out); });
}

lr_status lr_projected_gradient(const lr_body* body, double eta, const double* grad,
                                const double* x, double* out, double* norm) {
  if (!body || !grad || !x) return fail(LR_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const int n = body->body.dim();
    const auto pg = localregret::projected_gradient(body->body, eta, view(grad, n), view(x, n));
    if (out) copy_out(pg.value, out);
    if (norm) *norm = pg.norm();
  });
}

lr_status lr_loss_builtin(const char* name, const double* params, size_t n_params, int dim,
                          double radius, lr_loss** out) {
  if (!name || !out || (n_params > 0 && !params)) return fail(LR_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    std::span<const double> p(params, n_params);
    *out = new lr_loss{localregret::builtin_loss(name, p, dim, radius)};
  });
}

void lr_loss_destroy(lr_loss* loss) { delete loss; }

int lr_loss_dim(const lr_loss* loss) { return loss ? loss->loss.dim() : -1; }

lr_status lr_loss_value(const lr_loss* loss, const double* x, double* out) {
  if (!loss || !x || !out) return fail(LR_ERR_ARGUMENT, "null argument");
  return guarded([&] { *out = loss->loss.value(view(x, loss->loss.dim())); });
}

lr_status lr_loss_gradient(const lr_loss* loss, const double* x, double* out) {
  if (!loss || !x || !out) return fail(LR_ERR_ARGUMENT, "null argument");
  return guarded([&] { copy_out(loss->loss.gradient(view(x, loss->loss.dim())), out); });
}

lr_status lr_loss_constants_get(const lr_loss* loss, lr_loss_constants* out) {
  if (!loss || !out) return fail(LR_ERR_ARGUMENT, "null argument");
  const auto& k = loss->loss.constants();
  out->bound = k.bound;
  out->lipschitz = k.lipschitz;
  out->smoothness = k.smoothness;
  out->hessian_lipschitz = k.hessian_lipschitz.value_or(-1.0);
  out->domain_radius = k.domain_radius;
  return LR_OK;
}

double lr_expected_lower_bound(long horizon, int window) {
  try {
    return localregret::expected_lower_bound(horizon, window);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return std::nan("");
  }
}

lr_status lr_run_config(const char* config_path, const lr_run_options* options, lr_report** out) {
  if (!config_path || !out) return fail(LR_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    localregret::RunOptions opts;
    if (options) {
      if (options->out_dir) opts.out_dir = options->out_dir;
      if (options->seed_override && options->seed_override_count > 0) {
        opts.seed_override = std::vector<std::uint64_t>(
            options->seed_override, options->seed_override + options->seed_override_count);
      }
      opts.parallelism = options->parallelism < 1 ? 1 : options->parallelism;
    }
    auto result = localregret::run_config_file(config_path, opts);
    *out = new lr_report{std::move(result.text), result.exit_code};
  });
}

lr_status lr_verify(const char* const* summary_paths, size_t count, lr_report** out) {
  if (!out || (count > 0 && !summary_paths)) return fail(LR_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < count; ++i) paths.emplace_back(summary_paths[i]);
    auto result = localregret::verify_summaries(paths);
    *out = new lr_report{std::move(result.text), result.exit_code};
  });
}

lr_status lr_list_builtins(lr_report** out) {
  if (!out) return fail(LR_ERR_ARGUMENT, "null argument");
  return guarded([&] { *out = new lr_report{localregret::describe_builtins(), 0}; });
}

const char* lr_report_text(const lr_report* report) { return report ? report->text.c_str() : ""; }

int lr_report_exit_code(const lr_report* report) { return report ? report->exit_code : 2; }

void lr_report_destroy(lr_report* report) { delete report; }

}  // extern "C"
