#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"
#include "defense.hpp"
#include "plant.hpp"

namespace tamperid {

// One time step of one replica. theta_hat is the estimate after the update of
// step k; regret_cum uses the estimate the step started with.
struct StepRecord {
  std::int64_t k = 0;
  Vector phi;
  double y = 0.0;
  Bit s0 = Bit::zero;
  Bit s = Bit::zero;
  Vector theta_hat;
  double sq_error = 0.0;
  double regret_cum = 0.0;
  double p_hat = 0.0;
  double q_hat = 0.0;
  double logdet = 0.0;  // log det P^-1 (Newton family only)
  double beta = 0.0;    // beta_k (Newton family only)
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double u = 0.0;
  double y_star = 0.0;
  double J_running = 0.0;
  Probe probe = Probe::none;
  Bit probe_received = Bit::zero;
};

struct ReplicaSummary {
  std::int64_t replica = 0;
  Vector theta_hat;
  double sq_error = 0.0;
  double p_hat = 0.0;
  double q_hat = 0.0;
  double J = 0.0;
  double regret = 0.0;
  std::int64_t guarded_steps = 0;
  std::int64_t bound_violations = 0;
  std::int64_t gain_repairs = 0;
};

struct ReplicaRun {
  std::vector<StepRecord> records;
  ReplicaSummary summary;
};

// Steps kept in the record stream: every k <= 1000, every metrics_stride-th
// step after that, and k = N.
bool is_recorded(std::int64_t k, std::int64_t horizon, std::int64_t stride) noexcept;

// Deterministic in (cfg.base_seed, replica). NumericalError from an estimator
// is rethrown with the replica and step attached.
ReplicaRun run_replica(const ExperimentConfig& cfg, std::int64_t replica);

// Raw (unscaled) envelope at step k. regret_rate needs the log det and beta of
// that step; lil_rate requires k >= 3.
double raw_envelope(const EnvelopeSpec& spec, double k, double logdet = 0.0, double beta = 1.0);

// Per-k statistics across replicas, in record order.
struct AggregateSeries {
  std::vector<std::int64_t> k;
  std::vector<double> mean_sq_error, sd_sq_error;
  std::vector<double> mean_rate_stat;   // k |e|^2 / ln k
  std::vector<double> mean_power_stat;  // k^gamma |e|^2
  std::vector<double> mean_regret, mean_logdet, mean_regret_scale;  // scale = logdet / beta^2
  std::vector<double> mean_p_hat, mean_q_hat, mean_J;
  std::vector<double> mean_beta, mean_lambda_min, mean_lambda_max;
  std::vector<double> mean_u, mean_y_star;
  std::vector<Vector> mean_theta_hat;

  std::size_t size() const noexcept { return k.size(); }
};

struct FittedEnvelope {
  EnvelopeSpec spec;
  double constant = 0.0;
  std::vector<double> metric;  // the averaged statistic it bounds
  std::vector<double> value;   // constant * raw envelope (NaN where undefined)
};

// Metric bounded by an envelope kind: mean error for the power kinds, mean
// regret for regret_rate, |mean J - sigma^2| for lil_rate.
std::vector<double> envelope_metric(const AggregateSeries& agg, EnvelopeKind kind, double noise_variance);

// c = max over k in [N/10, N] of metric / raw envelope.
FittedEnvelope fit_envelope(const AggregateSeries& agg, const EnvelopeSpec& spec, double noise_variance,
                            std::int64_t horizon);

struct ExperimentResult {
  ExperimentConfig config;
  AggregateSeries series;
  FittedEnvelope envelope;
  std::vector<FittedEnvelope> extra_envelopes;  // regret envelope for the Newton family
  std::vector<ReplicaSummary> replicas;
  double gain_threshold = 0.0;  // first-order family: 1 / (2 c^2 f delta)
  double wall_seconds = 0.0;
  bool complete = true;
  std::string failure;
};

struct RunOptions {
  std::filesystem::path out_dir;  // empty: write nothing
  bool emit_gnuplot = false;
  ConfigMap source;  // echoed into the manifest
  unsigned threads = 0;  // 0: TAMPERID_THREADS or hardware concurrency
};

// Runs every replica and aggregates in replica order. If a replica fails the
// outputs for the completed prefix are written with status=partial and the
// error is rethrown.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options);

std::string format_csv(const ExperimentResult& result);
std::string format_manifest(const ExperimentResult& result, const RunOptions& options);
std::string format_gnuplot(const ExperimentResult& result, const std::string& csv_name);

const char* library_version() noexcept;

}  // namespace tamperid
