#include "antilimit.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "app/run.hpp"
#include "core/builtin.hpp"
#include "core/errors.hpp"
#include "core/parallel.hpp"

struct al_model {
  antilimit::ModelInstance instance;
};

namespace {

using nlohmann::json;

thread_local std::string g_error;
thread_local std::string g_error_json;

al_status status_of(antilimit::ErrorKind kind) {
  using antilimit::ErrorKind;
  switch (kind) {
    case ErrorKind::Config: return AL_ERR_CONFIG;
    case ErrorKind::Contract: return AL_ERR_CONTRACT;
    case ErrorKind::Hypothesis:
    case ErrorKind::BoundaryEscape:
    case ErrorKind::DegeneratePotential: return AL_ERR_HYPOTHESIS;
    case ErrorKind::Resolution: return AL_ERR_RESOLUTION;
    case ErrorKind::NoConvergence: return AL_ERR_CONVERGENCE;
    case ErrorKind::Internal: return AL_ERR_INTERNAL;
  }
  return AL_ERR_INTERNAL;
}

al_status fail(al_status s, json body) {
  g_error = body.value("message", "");
  body["status"] = static_cast<int>(s);
  g_error_json = body.dump();
  return s;
}

template <class Fn>
al_status guarded(Fn&& fn) {
  g_error.clear();
  g_error_json.clear();
  try {
    fn();
    return AL_OK;
  } catch (const antilimit::Error& e) {
    return fail(status_of(e.kind()), e.to_json());
  } catch (const json::exception& e) {
    // Type mismatches while reading a config block.
    return fail(AL_ERR_CONFIG, {{"kind", "config"}, {"message", e.what()}});
  } catch (const std::bad_alloc&) {
    return fail(AL_ERR_INTERNAL, {{"kind", "internal"}, {"message", "out of memory"}});
  } catch (const std::exception& e) {
    return fail(AL_ERR_INTERNAL, {{"kind", "internal"}, {"message", e.what()}});
  } catch (...) {
    return fail(AL_ERR_INTERNAL, {{"kind", "internal"}, {"message", "unknown exception"}});
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw antilimit::ContractError(what);
}

}  // namespace

extern "C" {

const char* al_version(void) { return ANTILIMIT_VERSION; }

al_status al_model_create(const char* model_json, al_model** out) {
  return guarded([&] {
    require(model_json && out, "null argument");
    *out = nullptr;
    json block = antilimit::parse_json_text(model_json);
    auto* m = new al_model{antilimit::model_from_json(block)};
    *out = m;
  });
}

void al_model_destroy(al_model* model) { delete model; }

al_status al_model_info(const al_model* model, char** json_out) {
  return guarded([&] {
    require(model && json_out, "null argument");
    *json_out = dup_string(model->instance.summary().dump());
  });
}

al_status al_model_eval_f(const al_model* model, const double* theta, int theta_dim, const double* args,
                          int nargs, double* out) {
  return guarded([&] {
    require(model && theta && args && out, "null argument");
    require(theta_dim >= 1 && theta_dim <= antilimit::kMaxBaseDim, "theta_dim must be 1..4");
    require(nargs >= 0, "nargs must be nonnegative");
    antilimit::BasePoint t = antilimit::BasePoint::from(std::vector<double>(theta, theta + theta_dim));
    *out = model->instance.eval_f(t, std::vector<double>(args, args + nargs));
  });
}

al_status al_call(const al_model* model, const char* op, const char* params_json, int workers,
                  char** result_json) {
  return guarded([&] {
    require(model && op && result_json, "null argument");
    *result_json = nullptr;
    json params = params_json && *params_json ? antilimit::parse_json_text(params_json) : json::object();
    antilimit::OpContext ctx;
    ctx.workers = antilimit::resolve_workers(workers);
    const std::string name = op;
    antilimit::OpResult r = name == "sweep" ? antilimit::run_sweep(model->instance, params, ctx)
                                            : antilimit::run_op(name, model->instance, params, ctx);
    json files = json::object();
    for (const auto& f : r.extra) files[f.name] = f.content;
    json body = {{"result", r.data}, {"metrics", r.metrics}, {"warnings", r.warnings}, {"files", files}};
    *result_json = dup_string(body.dump());
  });
}

al_status al_run(const char* subcommand, const char* config_json, const char* out_dir, int workers,
                 char** manifest_json) {
  return guarded([&] {
    require(config_json != nullptr, "null config");
    if (manifest_json) *manifest_json = nullptr;
    antilimit::RunRequest req;
    req.subcommand = subcommand ? subcommand : "";
    req.config_text = config_json;
    if (out_dir) req.out_dir = std::string(out_dir);
    req.workers = workers;
    json manifest = antilimit::run(req);
    if (manifest_json) *manifest_json = dup_string(manifest.dump());
  });
}

const char* al_last_error(void) { return g_error.c_str(); }

const char* al_last_error_json(void) { return g_error_json.c_str(); }

int al_exit_code(al_status status) {
  switch (status) {
    case AL_OK: return 0;
    case AL_ERR_CONFIG:
    case AL_ERR_CONTRACT: return 2;
    case AL_ERR_HYPOTHESIS:
    case AL_ERR_RESOLUTION:
    case AL_ERR_CONVERGENCE: return 3;
    case AL_ERR_INTERNAL: return 1;
  }
  return 1;
}

void al_free_string(char* s) { std::free(s); }

}  // extern "C"
