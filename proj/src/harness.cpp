#include "harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <variant>

#include "controller.hpp"
#include "errors.hpp"
#include "gradient_estimator.hpp"
#include "newton_estimator.hpp"
#include "random.hpp"

#ifndef TAMPERID_VERSION
#define TAMPERID_VERSION "0.0.0"
#endif
#ifndef TAMPERID_GIT_REV
#define TAMPERID_GIT_REV "unknown"
#endif

namespace tamperid {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string vec_text(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += num(v(i));
  }
  return out;
}

// Online mean (and second moment) with a fixed update order.
struct Welford {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double sd() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0; }
};

struct RowAccumulator {
  Welford sq_error, rate, power, regret, logdet, regret_scale, p_hat, q_hat, J, beta, lmin, lmax, u, y_star;
  std::vector<Welford> theta;
};

unsigned thread_count(unsigned requested, std::int64_t replicas) {
  unsigned n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("TAMPERID_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v > 0) n = static_cast<unsigned>(v);
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::int64_t>(n, replicas));
}

}  // namespace

const char* library_version() noexcept { return TAMPERID_VERSION; }

bool is_recorded(std::int64_t k, std::int64_t horizon, std::int64_t stride) noexcept {
  return k <= 1000 || k % stride == 0 || k == horizon;
}

ReplicaRun run_replica(const ExperimentConfig& cfg, std::int64_t replica) {
  ReplicaRun run;
  const auto r = static_cast<std::uint64_t>(replica);
  const Eigen::Index dim = cfg.theta.size();

  FirPlant plant(cfg.theta, cfg.noise, derive_seed(cfg.base_seed, r, Stream::noise));
  BinarySensor sensor(cfg.threshold);
  TamperChannel channel(cfg.flips, derive_seed(cfg.base_seed, r, Stream::channel));
  const NoiseSchedule noise(cfg.noise);

  const bool defended = uses_defense(cfg.algorithm);
  const InsertionSchedule schedule = cfg.schedule();
  DefenseState defense;
  const AttackSource attack = defended ? AttackSource::estimated(defense) : AttackSource::known(cfg.flips);

  std::variant<GradientEstimator, NewtonEstimator> estimator =
      is_newton(cfg.algorithm)
          ? std::variant<GradientEstimator, NewtonEstimator>(
                std::in_place_type<NewtonEstimator>, cfg.newton, cfg.theta_set, noise, attack)
          : std::variant<GradientEstimator, NewtonEstimator>(
                std::in_place_type<GradientEstimator>, cfg.grad, cfg.theta_set, noise, attack);
  auto theta_hat = [&]() -> const Vector& {
    return std::visit([](const auto& e) -> const Vector& { return e.theta(); }, estimator);
  };

  RegressorSource inputs = cfg.control.enabled
                               ? RegressorSource::external([](std::int64_t) { return Vector(); }, cfg.bound_m)
                               : RegressorSource::fir_window(dim, cfg.input, cfg.bound_m,
                                                             derive_seed(cfg.base_seed, r, Stream::input));
  std::optional<Controller> controller;
  if (cfg.control.enabled) {
    Rng rng(derive_seed(cfg.base_seed, r, Stream::control));
    std::normal_distribution<double> z;
    std::deque<double> past;
    const double sd = std::sqrt(cfg.control.u0_variance);
    for (Eigen::Index i = 1; i < dim; ++i) past.push_back(sd * z(rng));
    controller.emplace(dim, std::move(past), cfg.control.input_clamp, cfg.control.theta1_floor);
  }

  double regret = 0.0;
  double tracking_sum = 0.0;
  double lmin = kNaN, lmax = kNaN;
  run.records.reserve(static_cast<std::size_t>(
      std::min<std::int64_t>(cfg.horizon, 1000) + std::max<std::int64_t>(0, cfg.horizon - 1000) / cfg.metrics_stride + 1));

  for (std::int64_t k = 1; k <= cfg.horizon; ++k) {
    const Vector theta_prev = theta_hat();
    StepRecord rec;
    rec.k = k;
    if (controller) {
      rec.y_star = cfg.control.reference.at(k + 1);
      ControlAction act = controller->control(theta_prev, cfg.noise, rec.y_star);
      rec.u = act.u;
      rec.phi = std::move(act.phi);
      inputs.observe(rec.phi);
    } else {
      rec.phi = inputs.next(k);
      rec.u = rec.phi(0);
    }
    rec.y = plant.step(rec.phi);
    rec.s0 = sensor.sense(rec.y);
    rec.s = channel.transmit(rec.s0);

    if (defended) {
      rec.probe = schedule.plan(k);
      if (rec.probe != Probe::none) {
        const Bit sent = rec.probe == Probe::send_one ? Bit::one : Bit::zero;
        rec.probe_received = channel.transmit(sent);
        defense.ingest(sent, rec.probe_received);
      }
    }

    try {
      std::visit([&](auto& e) { e.update(rec.phi, rec.s); }, estimator);
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "replica " << replica << ", step " << k << ": " << e.what();
      throw NumericalError(os.str());
    }

    const double pred_gap = (theta_prev - cfg.theta).dot(rec.phi);
    regret += pred_gap * pred_gap;
    if (controller) tracking_sum += (rec.y - rec.y_star) * (rec.y - rec.y_star);

    if (!is_recorded(k, cfg.horizon, cfg.metrics_stride)) continue;

    rec.theta_hat = theta_hat();
    rec.sq_error = (rec.theta_hat - cfg.theta).squaredNorm();
    rec.regret_cum = regret;
    const FlipProbabilities working = attack.current();
    rec.p_hat = working.p;
    rec.q_hat = working.q;
    rec.J_running = controller ? tracking_sum / static_cast<double>(k) : kNaN;
    if (const auto* ne = std::get_if<NewtonEstimator>(&estimator)) {
      rec.logdet = ne->logdet_gain_inverse();
      rec.beta = ne->beta();
      if (k == 1 || k % cfg.eig_stride == 0 || k == cfg.horizon) std::tie(lmin, lmax) = ne->inverse_eigen_extremes();
      rec.lambda_min = lmin;
      rec.lambda_max = lmax;
    } else {
      rec.logdet = rec.beta = rec.lambda_min = rec.lambda_max = kNaN;
    }
    run.records.push_back(std::move(rec));
  }

  ReplicaSummary& s = run.summary;
  s.replica = replica;
  s.theta_hat = theta_hat();
  s.sq_error = (s.theta_hat - cfg.theta).squaredNorm();
  s.p_hat = attack.current().p;
  s.q_hat = attack.current().q;
  s.J = controller && cfg.horizon > 0 ? tracking_sum / static_cast<double>(cfg.horizon) : kNaN;
  s.regret = regret;
  s.guarded_steps = controller ? controller->guarded_steps() : 0;
  s.bound_violations = inputs.bound_violations();
  if (const auto* ne = std::get_if<NewtonEstimator>(&estimator)) s.gain_repairs = ne->gain_repairs();
  return run;
}

double raw_envelope(const EnvelopeSpec& spec, double k, double logdet, double beta) {
  switch (spec.kind) {
    case EnvelopeKind::power_rate:
      return std::pow(k, -spec.exponent);
    case EnvelopeKind::log_over_power:
      return std::log(k) / std::pow(k, spec.exponent);
    case EnvelopeKind::regret_rate:
      return logdet / (beta * beta);
    case EnvelopeKind::lil_rate:
      return lil_envelope(k);
  }
  throw ConfigError("envelope.kind", "invalid envelope kind");
}

std::vector<double> envelope_metric(const AggregateSeries& agg, EnvelopeKind kind, double noise_variance) {
  switch (kind) {
    case EnvelopeKind::power_rate:
    case EnvelopeKind::log_over_power:
      return agg.mean_sq_error;
    case EnvelopeKind::regret_rate:
      return agg.mean_regret;
    case EnvelopeKind::lil_rate: {
      std::vector<double> out(agg.size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(agg.mean_J[i] - noise_variance);
      return out;
    }
  }
  throw ConfigError("envelope.kind", "invalid envelope kind");
}

FittedEnvelope fit_envelope(const AggregateSeries& agg, const EnvelopeSpec& spec, double noise_variance,
                            std::int64_t horizon) {
  FittedEnvelope fit;
  fit.spec = spec;
  fit.metric = envelope_metric(agg, spec.kind, noise_variance);
  std::vector<double> raw(agg.size(), kNaN);
  for (std::size_t i = 0; i < agg.size(); ++i) {
    const auto k = static_cast<double>(agg.k[i]);
    if (spec.kind == EnvelopeKind::lil_rate && k < 3) continue;
    // The regret scale is averaged per replica (log det / beta^2 of each run).
    raw[i] = spec.kind == EnvelopeKind::regret_rate ? agg.mean_regret_scale[i] : raw_envelope(spec, k);
  }
  const std::int64_t lo = horizon / 10;
  double c = kNaN;
  for (std::size_t i = 0; i < agg.size(); ++i) {
    if (agg.k[i] < lo || !(raw[i] > 0.0) || !std::isfinite(raw[i]) || !std::isfinite(fit.metric[i])) continue;
    const double ratio = fit.metric[i] / raw[i];
    if (std::isnan(c) || ratio > c) c = ratio;
  }
  fit.constant = c;
  fit.value.resize(agg.size());
  for (std::size_t i = 0; i < agg.size(); ++i) fit.value[i] = c * raw[i];
  return fit;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.config = cfg;
  {
    const double floor = gradient_density_floor(cfg.noise, cfg.threshold, cfg.bound_m, cfg.theta_set.norm_bound());
    result.gain_threshold = gradient_gain_threshold(cfg.flips, floor, cfg.excitation_delta);
  }

  const std::int64_t n = cfg.replicas;
  const unsigned workers = thread_count(options.threads, n);
  std::vector<std::optional<ReplicaRun>> slots(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> stop{false};

  auto work = [&] {
    for (;;) {
      const std::int64_t r = next.fetch_add(1);
      if (r >= n || stop.load()) return;
      std::optional<ReplicaRun> out;
      std::exception_ptr err;
      try {
        out = run_replica(cfg, r);
      } catch (...) {
        err = std::current_exception();
      }
      {
        std::lock_guard<std::mutex> lock(mu);
        slots[static_cast<std::size_t>(r)] = std::move(out);
        errors[static_cast<std::size_t>(r)] = err;
        done[static_cast<std::size_t>(r)] = 1;
      }
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);

  std::vector<RowAccumulator> rows;
  std::exception_ptr failure;
  for (std::int64_t r = 0; r < n; ++r) {
    std::optional<ReplicaRun> run;
    {
      std::unique_lock<std::mutex> lock(mu);
      cv.wait(lock, [&] { return done[static_cast<std::size_t>(r)] != 0; });
      if (errors[static_cast<std::size_t>(r)]) {
        failure = errors[static_cast<std::size_t>(r)];
        stop = true;
        break;
      }
      run = std::move(slots[static_cast<std::size_t>(r)]);
      slots[static_cast<std::size_t>(r)].reset();
    }
    const auto& recs = run->records;
    if (rows.empty()) {
      rows.resize(recs.size());
      result.series.k.reserve(recs.size());
      for (const auto& rec : recs) result.series.k.push_back(rec.k);
    }
    const double gamma = cfg.grad.gamma;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const StepRecord& rec = recs[i];
      RowAccumulator& a = rows[i];
      const auto k = static_cast<double>(rec.k);
      a.sq_error.add(rec.sq_error);
      a.rate.add(rec.k >= 2 ? k * rec.sq_error / std::log(k) : kNaN);
      a.power.add(std::pow(k, gamma) * rec.sq_error);
      a.regret.add(rec.regret_cum);
      a.logdet.add(rec.logdet);
      a.regret_scale.add(rec.logdet / (rec.beta * rec.beta));
      a.p_hat.add(rec.p_hat);
      a.q_hat.add(rec.q_hat);
      a.J.add(rec.J_running);
      a.beta.add(rec.beta);
      a.lmin.add(rec.lambda_min);
      a.lmax.add(rec.lambda_max);
      a.u.add(rec.u);
      a.y_star.add(rec.y_star);
      if (a.theta.empty()) a.theta.resize(static_cast<std::size_t>(rec.theta_hat.size()));
      for (Eigen::Index j = 0; j < rec.theta_hat.size(); ++j) a.theta[static_cast<std::size_t>(j)].add(rec.theta_hat(j));
    }
    result.replicas.push_back(run->summary);
  }
  stop = true;
  for (auto& t : pool) t.join();

  AggregateSeries& s = result.series;
  for (const RowAccumulator& a : rows) {
    s.mean_sq_error.push_back(a.sq_error.mean);
    s.sd_sq_error.push_back(a.sq_error.sd());
    s.mean_rate_stat.push_back(a.rate.mean);
    s.mean_power_stat.push_back(a.power.mean);
    s.mean_regret.push_back(a.regret.mean);
    s.mean_logdet.push_back(a.logdet.mean);
    s.mean_regret_scale.push_back(a.regret_scale.mean);
    s.mean_p_hat.push_back(a.p_hat.mean);
    s.mean_q_hat.push_back(a.q_hat.mean);
    s.mean_J.push_back(a.J.mean);
    s.mean_beta.push_back(a.beta.mean);
    s.mean_lambda_min.push_back(a.lmin.mean);
    s.mean_lambda_max.push_back(a.lmax.mean);
    s.mean_u.push_back(a.u.mean);
    s.mean_y_star.push_back(a.y_star.mean);
    Vector th(static_cast<Eigen::Index>(a.theta.size()));
    for (std::size_t j = 0; j < a.theta.size(); ++j) th(static_cast<Eigen::Index>(j)) = a.theta[j].mean;
    s.mean_theta_hat.push_back(std::move(th));
  }

  const double sigma2 = cfg.noise.variance();
  result.envelope = fit_envelope(s, cfg.envelope, sigma2, cfg.horizon);
  if (is_newton(cfg.algorithm) && cfg.envelope.kind != EnvelopeKind::regret_rate)
    result.extra_envelopes.push_back(fit_envelope(s, {EnvelopeKind::regret_rate, 0.0}, sigma2, cfg.horizon));

  if (failure) {
    result.complete = false;
    try {
      std::rethrow_exception(failure);
    } catch (const std::exception& e) {
      result.failure = e.what();
    } catch (...) {
      result.failure = "unknown error";
    }
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!options.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + options.out_dir.string() + "': " + ec.message());
    const std::string csv_name = cfg.name + ".csv";
    auto write = [&](const std::string& file, const std::string& text) {
      std::ofstream f(options.out_dir / file, std::ios::binary);
      if (!f) throw IoError("cannot write '" + (options.out_dir / file).string() + "'");
      f << text;
      if (!f) throw IoError("write failed for '" + (options.out_dir / file).string() + "'");
    };
    write(csv_name, format_csv(result));
    write(cfg.name + ".manifest", format_manifest(result, options));
    if (options.emit_gnuplot) write(cfg.name + ".gp", format_gnuplot(result, csv_name));
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

std::string format_csv(const ExperimentResult& result) {
  const AggregateSeries& s = result.series;
  const bool newton = is_newton(result.config.algorithm);
  std::ostringstream os;
  os << "k,mean_sq_error,sd_sq_error,mean_rate_stat,mean_regret,mean_logdet,mean_p_hat,mean_q_hat,mean_J,"
        "envelope_value,mean_power_stat,mean_beta,mean_lambda_min,mean_lambda_max,mean_u,mean_y_star";
  for (const auto& e : result.extra_envelopes) os << ',' << to_string(e.spec.kind) << "_envelope";
  for (Eigen::Index j = 0; j < result.config.theta.size(); ++j) os << ",mean_theta_hat_" << (j + 1);
  os << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << s.k[i] << ',' << num(s.mean_sq_error[i]) << ',' << num(s.sd_sq_error[i]) << ','
       << num(s.mean_rate_stat[i]) << ',' << num(s.mean_regret[i]) << ',' << num(s.mean_logdet[i]) << ','
       << num(s.mean_p_hat[i]) << ',' << num(s.mean_q_hat[i]) << ',' << num(s.mean_J[i]) << ','
       << num(result.envelope.value[i]) << ',' << num(s.mean_power_stat[i]) << ','
       << num(newton ? s.mean_beta[i] : kNaN) << ',' << num(s.mean_lambda_min[i]) << ','
       << num(s.mean_lambda_max[i]) << ',' << num(s.mean_u[i]) << ',' << num(s.mean_y_star[i]);
    for (const auto& e : result.extra_envelopes) os << ',' << num(e.value[i]);
    for (Eigen::Index j = 0; j < s.mean_theta_hat[i].size(); ++j) os << ',' << num(s.mean_theta_hat[i](j));
    os << '\n';
  }
  return os.str();
}

std::string format_manifest(const ExperimentResult& result, const RunOptions& options) {
  const ExperimentConfig& cfg = result.config;
  std::ostringstream os;
  os << "status=" << (result.complete ? "ok" : "partial") << '\n';
  if (!result.complete) os << "failure=" << result.failure << '\n';
  os << "library.version=" << TAMPERID_VERSION << '\n';
  os << "library.git=" << TAMPERID_GIT_REV << '\n';
  os << "experiment.name=" << cfg.name << '\n';
  os << "algorithm=" << to_string(cfg.algorithm) << '\n';
  os << "replicas.requested=" << cfg.replicas << '\n';
  os << "replicas.completed=" << result.replicas.size() << '\n';
  os << "wall_seconds=" << num(result.wall_seconds) << '\n';
  os << "seeds.base=" << cfg.base_seed << '\n';
  os << "seeds.derivation=splitmix64(splitmix64(splitmix64(base) ^ replica) ^ stream); "
        "streams noise=1 channel=2 input=3 control=4\n";
  for (const auto& [k, v] : options.source.values()) os << "config." << k << '=' << v << '\n';
  std::string overridden;
  for (const auto& k : options.source.overridden()) {
    if (!overridden.empty()) overridden += ',';
    overridden += k + "=" + options.source.get(k);
  }
  os << "overrides=" << overridden << '\n';
  os << "envelope.kind=" << to_string(result.envelope.spec.kind) << '\n';
  os << "envelope.exponent=" << num(result.envelope.spec.exponent) << '\n';
  os << "envelope.constant=" << num(result.envelope.constant) << '\n';
  for (const auto& e : result.extra_envelopes)
    os << "envelope." << to_string(e.spec.kind) << ".constant=" << num(e.constant) << '\n';
  os << "grad.gain_threshold=" << num(result.gain_threshold) << '\n';
  os << "grad.gain_threshold_met=" << (cfg.grad.beta > result.gain_threshold ? "true" : "false") << '\n';
  std::int64_t guarded = 0, violations = 0, repairs = 0;
  for (const auto& r : result.replicas) {
    guarded += r.guarded_steps;
    violations += r.bound_violations;
    repairs += r.gain_repairs;
  }
  os << "diagnostics.guarded_steps=" << guarded << '\n';
  os << "diagnostics.regressor_bound_violations=" << violations << '\n';
  os << "diagnostics.gain_repairs=" << repairs << '\n';
  const AggregateSeries& s = result.series;
  if (s.size() > 0) {
    os << "final.k=" << s.k.back() << '\n';
    os << "final.mean_sq_error=" << num(s.mean_sq_error.back()) << '\n';
    os << "final.mean_theta_hat=" << vec_text(s.mean_theta_hat.back()) << '\n';
    os << "final.mean_p_hat=" << num(s.mean_p_hat.back()) << '\n';
    os << "final.mean_q_hat=" << num(s.mean_q_hat.back()) << '\n';
    if (cfg.control.enabled) os << "final.mean_J=" << num(s.mean_J.back()) << '\n';
  }
  return os.str();
}

std::string format_gnuplot(const ExperimentResult& result, const std::string& csv_name) {
  const std::string base = result.config.name;
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set terminal pngcairo size 900,600\n"
     << "set logscale x\n"
     << "set xlabel 'k'\n";
  os << "set output '" << base << "_error.png'\n"
     << "set logscale y\n"
     << "plot '" << csv_name << "' using 1:2 with lines title 'mean squared error'";
  if (result.envelope.spec.kind != EnvelopeKind::regret_rate && result.envelope.spec.kind != EnvelopeKind::lil_rate)
    os << ", '' using 1:10 with lines dashtype 2 title 'envelope'";
  os << '\n' << "unset logscale y\n";
  os << "set output '" << base << "_rate.png'\n"
     << "plot '" << csv_name << "' using 1:4 with lines title 'k |e|^2 / ln k', '' using 1:11 with lines title "
        "'k^gamma |e|^2'\n";
  if (uses_defense(result.config.algorithm))
    os << "set output '" << base << "_attack.png'\n"
       << "plot '" << csv_name << "' using 1:7 with lines title 'p hat', '' using 1:8 with lines title 'q hat'\n";
  if (is_newton(result.config.algorithm)) {
    os << "set output '" << base << "_regret.png'\n"
       << "plot '" << csv_name << "' using 1:5 with lines title 'cumulative regret'";
    if (result.envelope.spec.kind == EnvelopeKind::regret_rate)
      os << ", '' using 1:10 with lines dashtype 2 title 'envelope'";
    else if (!result.extra_envelopes.empty())
      os << ", '' using 1:17 with lines dashtype 2 title 'envelope'";
    os << '\n';
  }
  if (result.config.control.enabled)
    os << "set output '" << base << "_tracking.png'\n"
       << "plot '" << csv_name << "' using 1:9 with lines title 'J_n'\n";
  return os.str();
}

}  // namespace tamperid
