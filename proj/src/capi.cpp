#include "tamperid/tamperid.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <variant>

#include "config.hpp"
#include "errors.hpp"
#include "gradient_estimator.hpp"
#include "harness.hpp"
#include "newton_estimator.hpp"

using namespace tamperid;

struct tamperid_config {
  ConfigMap map;
};

struct tamperid_result {
  ExperimentResult result;
};

struct tamperid_estimator {
  std::unique_ptr<DefenseState> defense;
  std::variant<GradientEstimator, NewtonEstimator> impl;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_key;

tamperid_status fail(tamperid_status s, std::string msg, std::string key = {}) {
  g_error = std::move(msg);
  g_error_key = std::move(key);
  return s;
}

template <class F>
tamperid_status guarded(F&& f) {
  g_error.clear();
  g_error_key.clear();
  try {
    return f();
  } catch (const ConfigError& e) {
    return fail(TAMPERID_ERR_CONFIG, e.what(), e.key());
  } catch (const DimensionError& e) {
    return fail(TAMPERID_ERR_DIMENSION, e.what());
  } catch (const NumericalError& e) {
    return fail(TAMPERID_ERR_NUMERICAL, e.what());
  } catch (const IoError& e) {
    return fail(TAMPERID_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(TAMPERID_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TAMPERID_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(TAMPERID_ERR_INTERNAL, "unknown error");
  }
}

tamperid_status copy_out(const std::string& s, char* buf, size_t buflen, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf) return needed ? TAMPERID_OK : fail(TAMPERID_ERR_INVALID_ARGUMENT, "buf and needed are both NULL");
  if (buflen < s.size() + 1) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "buffer too small");
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return TAMPERID_OK;
}

const std::vector<double>* column_of(const ExperimentResult& r, const std::string& name) {
  const AggregateSeries& s = r.series;
  if (name == "mean_sq_error") return &s.mean_sq_error;
  if (name == "sd_sq_error") return &s.sd_sq_error;
  if (name == "mean_rate_stat") return &s.mean_rate_stat;
  if (name == "mean_power_stat") return &s.mean_power_stat;
  if (name == "mean_regret") return &s.mean_regret;
  if (name == "mean_logdet") return &s.mean_logdet;
  if (name == "mean_p_hat") return &s.mean_p_hat;
  if (name == "mean_q_hat") return &s.mean_q_hat;
  if (name == "mean_J") return &s.mean_J;
  if (name == "mean_beta") return &s.mean_beta;
  if (name == "mean_lambda_min") return &s.mean_lambda_min;
  if (name == "mean_lambda_max") return &s.mean_lambda_max;
  if (name == "mean_u") return &s.mean_u;
  if (name == "mean_y_star") return &s.mean_y_star;
  if (name == "envelope_value") return &r.envelope.value;
  for (const auto& e : r.extra_envelopes)
    if (name == to_string(e.spec.kind) + "_envelope") return &e.value;
  return nullptr;
}

}  // namespace

extern "C" {

const char* tamperid_version(void) { return library_version(); }

const char* tamperid_status_name(tamperid_status status) {
  switch (status) {
    case TAMPERID_OK: return "ok";
    case TAMPERID_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case TAMPERID_ERR_CONFIG: return "config";
    case TAMPERID_ERR_DIMENSION: return "dimension";
    case TAMPERID_ERR_NUMERICAL: return "numerical";
    case TAMPERID_ERR_IO: return "io";
    case TAMPERID_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* tamperid_last_error(void) { return g_error.c_str(); }
const char* tamperid_last_error_key(void) { return g_error_key.c_str(); }

size_t tamperid_preset_count(void) { return preset_names().size(); }

const char* tamperid_preset_name(size_t index) {
  static const std::vector<std::string> names = preset_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

tamperid_status tamperid_preset_runs(const char* name, size_t* count) {
  return guarded([&] {
    if (!name || !count) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    *count = preset_runs(name).size();
    return TAMPERID_OK;
  });
}

tamperid_status tamperid_preset_create(const char* name, size_t run, tamperid_config** out) {
  return guarded([&] {
    if (!name || !out) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    auto runs = preset_runs(name);
    if (run >= runs.size()) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "preset run index out of range");
    *out = new tamperid_config{std::move(runs[run])};
    return TAMPERID_OK;
  });
}

tamperid_status tamperid_config_create(tamperid_config** out) {
  return guarded([&] {
    if (!out) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    *out = new tamperid_config{};
    return TAMPERID_OK;
  });
}

tamperid_status tamperid_config_parse(const char* text, tamperid_config** out) {
  return guarded([&] {
    if (!text || !out) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    *out = new tamperid_config{ConfigMap::from_text(text)};
    return TAMPERID_OK;
  });
}

tamperid_status tamperid_config_load(const char* path, tamperid_config** out) {
  return guarded([&] {
    if (!path || !out) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    *out = new tamperid_config{ConfigMap::from_file(path)};
    return TAMPERID_OK;
  });
}

void tamperid_config_destroy(tamperid_config* config) { delete config; }

tamperid_status tamperid_config_set(tamperid_config* config, const char* key, const char* value) {
  return guarded([&] {
    if (!config || !key || !value) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    config->map.set(key, value);
    return TAMPERID_OK;
  });
}

tamperid_status tamperid_config_apply(tamperid_config* config, const char* assignment) {
  return guarded([&] {
    if (!config || !assignment) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    config->map.apply_override(assignment);
    return TAMPERID_OK;
  });
}

tamperid_status tamperid_config_get(const tamperid_config* config, const char* key, char* buf, size_t buflen,
                                    size_t* needed) {
  return guarded([&] {
    if (!config || !key) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    return copy_out(config->map.get(key), buf, buflen, needed);
  });
}

tamperid_status tamperid_config_dump(const tamperid_config* config, char* buf, size_t buflen, size_t* needed) {
  return guarded([&] {
    if (!config) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    return copy_out(config->map.to_text(), buf, buflen, needed);
  });
}

tamperid_status tamperid_config_validate(const tamperid_config* config) {
  return guarded([&] {
    if (!config) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    (void)parse_experiment(config->map);
    return TAMPERID_OK;
  });
}

tamperid_status tamperid_run(const tamperid_config* config, const char* out_dir, int emit_gnuplot, unsigned threads,
                             tamperid_result** out) {
  return guarded([&] {
    if (!config || !out) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    const ExperimentConfig cfg = parse_experiment(config->map);
    RunOptions opts;
    if (out_dir) opts.out_dir = out_dir;
    opts.emit_gnuplot = emit_gnuplot != 0;
    opts.source = config->map;
    opts.threads = threads;
    *out = new tamperid_result{run_experiment(cfg, opts)};
    return TAMPERID_OK;
  });
}

void tamperid_result_destroy(tamperid_result* result) { delete result; }

tamperid_status tamperid_result_name(const tamperid_result* result, char* buf, size_t buflen, size_t* needed) {
  return guarded([&] {
    if (!result) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    return copy_out(result->result.config.name, buf, buflen, needed);
  });
}

tamperid_status tamperid_result_length(const tamperid_result* result, size_t* n) {
  if (!result || !n) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
  *n = result->result.series.size();
  return TAMPERID_OK;
}

tamperid_status tamperid_result_column(const tamperid_result* result, const char* column, double* out, size_t n) {
  return guarded([&] {
    if (!result || !column || !out) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    const ExperimentResult& r = result->result;
    if (n != r.series.size()) return fail(TAMPERID_ERR_DIMENSION, "column buffer length must equal the series length");
    if (std::strcmp(column, "k") == 0) {
      for (size_t i = 0; i < n; ++i) out[i] = static_cast<double>(r.series.k[i]);
      return TAMPERID_OK;
    }
    const std::string name = column;
    const std::string theta_prefix = "mean_theta_hat_";
    if (name.rfind(theta_prefix, 0) == 0) {
      const long j = std::strtol(name.c_str() + theta_prefix.size(), nullptr, 10) - 1;
      if (j < 0 || j >= r.config.theta.size()) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "no such column: " + name);
      for (size_t i = 0; i < n; ++i) out[i] = r.series.mean_theta_hat[i](j);
      return TAMPERID_OK;
    }
    const std::vector<double>* col = column_of(r, name);
    if (!col) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "no such column: " + name);
    std::copy(col->begin(), col->end(), out);
    return TAMPERID_OK;
  });
}

tamperid_status tamperid_result_envelope_constant(const tamperid_result* result, double* out) {
  if (!result || !out) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
  *out = result->result.envelope.constant;
  return TAMPERID_OK;
}

tamperid_status tamperid_result_replica_count(const tamperid_result* result, size_t* n) {
  if (!result || !n) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
  *n = result->result.replicas.size();
  return TAMPERID_OK;
}

tamperid_status tamperid_result_replica(const tamperid_result* result, size_t index, tamperid_replica_summary* summary,
                                        double* theta, size_t dim) {
  if (!result || !summary) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
  const auto& reps = result->result.replicas;
  if (index >= reps.size()) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "replica index out of range");
  const ReplicaSummary& s = reps[index];
  if (theta) {
    if (dim != static_cast<size_t>(s.theta_hat.size()))
      return fail(TAMPERID_ERR_DIMENSION, "theta buffer length must equal dim(theta)");
    for (size_t i = 0; i < dim; ++i) theta[i] = s.theta_hat(static_cast<Eigen::Index>(i));
  }
  *summary = {s.sq_error, s.p_hat, s.q_hat, s.J, s.regret, s.guarded_steps, s.bound_violations, s.gain_repairs};
  return TAMPERID_OK;
}

tamperid_status tamperid_estimator_create(const tamperid_config* config, tamperid_estimator** out) {
  return guarded([&] {
    if (!config || !out) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    const ExperimentConfig cfg = parse_experiment(config->map);
    auto defense = std::make_unique<DefenseState>();
    const AttackSource attack =
        uses_defense(cfg.algorithm) ? AttackSource::estimated(*defense) : AttackSource::known(cfg.flips);
    const NoiseSchedule noise(cfg.noise);
    if (is_newton(cfg.algorithm))
      *out = new tamperid_estimator{std::move(defense), NewtonEstimator(cfg.newton, cfg.theta_set, noise, attack)};
    else
      *out = new tamperid_estimator{std::move(defense), GradientEstimator(cfg.grad, cfg.theta_set, noise, attack)};
    return TAMPERID_OK;
  });
}

void tamperid_estimator_destroy(tamperid_estimator* estimator) { delete estimator; }

tamperid_status tamperid_estimator_dim(const tamperid_estimator* estimator, size_t* dim) {
  if (!estimator || !dim) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
  *dim = static_cast<size_t>(std::visit([](const auto& e) { return e.theta().size(); }, estimator->impl));
  return TAMPERID_OK;
}

tamperid_status tamperid_estimator_update(tamperid_estimator* estimator, const double* phi, size_t dim, int bit) {
  return guarded([&] {
    if (!estimator || !phi) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    if (bit != 0 && bit != 1) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "bit must be 0 or 1");
    const Vector v = Eigen::Map<const Vector>(phi, static_cast<Eigen::Index>(dim));
    std::visit([&](auto& e) { e.update(v, to_bit(bit == 1)); }, estimator->impl);
    return TAMPERID_OK;
  });
}

tamperid_status tamperid_estimator_ingest_probe(tamperid_estimator* estimator, int sent, int received) {
  return guarded([&] {
    if (!estimator) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
    if ((sent != 0 && sent != 1) || (received != 0 && received != 1))
      return fail(TAMPERID_ERR_INVALID_ARGUMENT, "probe bits must be 0 or 1");
    estimator->defense->ingest(to_bit(sent == 1), to_bit(received == 1));
    return TAMPERID_OK;
  });
}

tamperid_status tamperid_estimator_theta(const tamperid_estimator* estimator, double* out, size_t dim) {
  if (!estimator || !out) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
  const Vector& th = std::visit([](const auto& e) -> const Vector& { return e.theta(); }, estimator->impl);
  if (dim != static_cast<size_t>(th.size())) return fail(TAMPERID_ERR_DIMENSION, "buffer length must equal dim(theta)");
  for (size_t i = 0; i < dim; ++i) out[i] = th(static_cast<Eigen::Index>(i));
  return TAMPERID_OK;
}

tamperid_status tamperid_estimator_attack_estimate(const tamperid_estimator* estimator, double* p, double* q) {
  if (!estimator || !p || !q) return fail(TAMPERID_ERR_INVALID_ARGUMENT, "null argument");
  *p = estimator->defense->p_hat();
  *q = estimator->defense->q_hat();
  return TAMPERID_OK;
}

}  // extern "C"
