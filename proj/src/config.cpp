#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace tamperid {
namespace {

const std::vector<std::pair<std::string, std::string>>& defaults() {
  static const std::vector<std::pair<std::string, std::string>> d = {
      {"experiment.name", "custom"},
      {"algorithm", "grp-kp"},
      {"horizon", "100000"},
      {"replicas", "50"},
      {"metrics_stride", "10"},
      {"seeds.base", "20251017"},
      {"plant.theta", "3,-1"},
      {"noise.kind", "gaussian"},
      {"noise.mean", "0"},
      {"noise.variance", "1"},
      {"sensor.C", "1"},
      {"channel.p", "0.2"},
      {"channel.q", "0.3"},
      {"input.kind", "gaussian"},
      {"input.variance", "2"},
      {"input.variance_decay", "0"},
      {"input.bound_M", "6"},
      {"theta_set.shape", "box"},
      {"theta_set.lower", "-6,-6"},
      {"theta_set.upper", "6,6"},
      {"theta_set.center", "0,0"},
      {"theta_set.radius", "6"},
      {"grad.beta", "80"},
      {"grad.gamma", "1"},
      {"grad.theta0", "1,1"},
      {"grad.delta", "2"},
      {"grad.h", "2"},
      {"newton.P1_scale", "1"},
      {"newton.theta0", "1,1"},
      {"newton.density_radius", "auto"},
      {"newton.eig_stride", "100"},
      {"newton.ratchet_warmup", "100"},
      {"newton.logdet_check_stride", "1000"},
      {"defense.T", "20"},
      {"defense.slots_zero", "1,3,5,7,9"},
      {"defense.slots_one", "2,4,6,8,10"},
      {"control.enabled", "false"},
      {"control.reference.kind", "sinusoid"},
      {"control.reference.amplitude", "4"},
      {"control.reference.period", "18000"},
      {"control.reference.value", "0"},
      {"control.theta1_floor", "1e-3"},
      {"control.input_clamp", "50"},
      {"control.u0_variance", "1"},
      {"envelope.kind", "auto"},
      {"envelope.exponent", "auto"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const ConfigMap& m, const std::string& key) {
  const std::string& v = m.get(key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key, key + ": expected a number, got '" + v + "'");
  }
}

std::int64_t parse_int(const ConfigMap& m, const std::string& key) {
  const std::string& v = m.get(key);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key, key + ": expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_uint(const ConfigMap& m, const std::string& key) {
  const std::string& v = m.get(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key, key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

bool parse_bool(const ConfigMap& m, const std::string& key) {
  const std::string& v = m.get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, key + ": expected true/false, got '" + v + "'");
}

Vector parse_vector(const ConfigMap& m, const std::string& key) {
  std::vector<double> vals;
  std::stringstream ss(m.get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    try {
      std::size_t pos = 0;
      vals.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(key, key + ": expected a comma-separated list of numbers");
    }
  }
  if (vals.empty()) throw ConfigError(key, key + ": empty vector");
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::set<int> parse_slots(const ConfigMap& m, const std::string& key) {
  std::set<int> out;
  const Vector v = parse_vector(m, key);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != std::floor(v(i))) throw ConfigError(key, key + ": slots must be integers");
    out.insert(static_cast<int>(v(i)));
  }
  return out;
}

void require_dim(const Vector& v, Eigen::Index n, const std::string& key) {
  if (v.size() != n) {
    std::ostringstream os;
    os << key << ": expected " << n << " entries (dimension of plant.theta), got " << v.size();
    throw ConfigError(key, os.str());
  }
}

}  // namespace

ConfigMap::ConfigMap() {
  for (const auto& [k, v] : defaults()) values_[k] = v;
}

ConfigMap ConfigMap::from_text(const std::string& text) {
  ConfigMap m;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected key=value on line " + std::to_string(lineno));
    m.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  m.overridden_.clear();
  return m;
}

ConfigMap ConfigMap::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return from_text(ss.str());
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown config key '" + key + "'");
  it->second = value;
  if (std::find(overridden_.begin(), overridden_.end(), key) == overridden_.end()) overridden_.push_back(key);
}

void ConfigMap::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment, "override must look like key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& ConfigMap::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown config key '" + key + "'");
  return it->second;
}

std::string ConfigMap::to_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << '=' << v << '\n';
  return os.str();
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::grp_kp: return "grp-kp";
    case Algorithm::grp_up: return "grp-up";
    case Algorithm::nrp_kp: return "nrp-kp";
    case Algorithm::nrp_up: return "nrp-up";
  }
  return "?";
}

bool is_newton(Algorithm a) noexcept { return a == Algorithm::nrp_kp || a == Algorithm::nrp_up; }
bool uses_defense(Algorithm a) noexcept { return a == Algorithm::grp_up || a == Algorithm::nrp_up; }

std::string to_string(EnvelopeKind k) {
  switch (k) {
    case EnvelopeKind::power_rate: return "power_rate";
    case EnvelopeKind::log_over_power: return "log_over_power";
    case EnvelopeKind::regret_rate: return "regret_rate";
    case EnvelopeKind::lil_rate: return "lil_rate";
  }
  return "?";
}

ExperimentConfig parse_experiment(const ConfigMap& m) {
  ExperimentConfig c;
  c.name = m.get("experiment.name");

  const std::string& alg = m.get("algorithm");
  if (alg == "grp-kp") c.algorithm = Algorithm::grp_kp;
  else if (alg == "grp-up") c.algorithm = Algorithm::grp_up;
  else if (alg == "nrp-kp") c.algorithm = Algorithm::nrp_kp;
  else if (alg == "nrp-up") c.algorithm = Algorithm::nrp_up;
  else throw ConfigError("algorithm", "algorithm must be one of grp-kp, grp-up, nrp-kp, nrp-up");

  c.horizon = parse_int(m, "horizon");
  if (c.horizon < 0) throw ConfigError("horizon", "horizon must be >= 0");
  c.replicas = parse_int(m, "replicas");
  if (c.replicas < 1) throw ConfigError("replicas", "replicas must be >= 1");
  c.metrics_stride = parse_int(m, "metrics_stride");
  if (c.metrics_stride < 1) throw ConfigError("metrics_stride", "metrics_stride must be >= 1");
  c.base_seed = parse_uint(m, "seeds.base");

  c.theta = parse_vector(m, "plant.theta");
  if (!c.theta.allFinite()) throw ConfigError("plant.theta", "plant.theta must be finite");
  const Eigen::Index n = c.theta.size();

  if (m.get("noise.kind") != "gaussian") throw ConfigError("noise.kind", "noise.kind must be 'gaussian'");
  c.noise = NoiseModel::gaussian(parse_double(m, "noise.mean"), parse_double(m, "noise.variance"));
  c.threshold = parse_double(m, "sensor.C");
  if (!std::isfinite(c.threshold)) throw ConfigError("sensor.C", "sensor.C must be finite");

  c.flips = {parse_double(m, "channel.p"), parse_double(m, "channel.q")};
  c.flips.validate();

  const std::string& ik = m.get("input.kind");
  if (ik == "gaussian") c.input.kind = InputLaw::Kind::gaussian;
  else if (ik == "uniform") c.input.kind = InputLaw::Kind::uniform;
  else throw ConfigError("input.kind", "input.kind must be 'gaussian' or 'uniform'");
  c.input.variance = parse_double(m, "input.variance");
  if (!(c.input.variance > 0.0) || !std::isfinite(c.input.variance))
    throw ConfigError("input.variance", "input.variance must be finite and > 0");
  c.input.variance_decay = parse_double(m, "input.variance_decay");
  if (!(c.input.variance_decay >= 0.0) || !std::isfinite(c.input.variance_decay))
    throw ConfigError("input.variance_decay", "input.variance_decay must be finite and >= 0");
  c.bound_m = parse_double(m, "input.bound_M");
  if (!(c.bound_m > 0.0) || !std::isfinite(c.bound_m))
    throw ConfigError("input.bound_M", "input.bound_M must be finite and > 0");

  const std::string& shape = m.get("theta_set.shape");
  if (shape == "box") {
    Vector lo = parse_vector(m, "theta_set.lower");
    Vector hi = parse_vector(m, "theta_set.upper");
    require_dim(lo, n, "theta_set.lower");
    require_dim(hi, n, "theta_set.upper");
    c.theta_set = ConstraintSet::box(lo, hi);
  } else if (shape == "ball") {
    Vector center = parse_vector(m, "theta_set.center");
    require_dim(center, n, "theta_set.center");
    c.theta_set = ConstraintSet::ball(center, parse_double(m, "theta_set.radius"));
  } else {
    throw ConfigError("theta_set.shape", "theta_set.shape must be 'box' or 'ball'");
  }
  if (!c.theta_set.contains(c.theta))
    throw ConfigError("plant.theta", "plant.theta must lie in the parameter set");

  c.grad.beta = parse_double(m, "grad.beta");
  if (!(c.grad.beta > 0.0) || !std::isfinite(c.grad.beta)) throw ConfigError("grad.beta", "grad.beta must be > 0");
  c.grad.gamma = parse_double(m, "grad.gamma");
  if (!(c.grad.gamma > 0.5 && c.grad.gamma <= 1.0))
    throw ConfigError("grad.gamma", "grad.gamma must lie in (1/2, 1]");
  c.grad.threshold = c.threshold;
  c.grad.theta0 = parse_vector(m, "grad.theta0");
  require_dim(c.grad.theta0, n, "grad.theta0");
  if (!c.theta_set.contains(c.grad.theta0))
    throw ConfigError("grad.theta0", "grad.theta0 must lie in the parameter set");
  c.excitation_delta = parse_double(m, "grad.delta");
  if (!(c.excitation_delta > 0.0)) throw ConfigError("grad.delta", "grad.delta must be > 0");
  c.excitation_h = parse_int(m, "grad.h");
  if (c.excitation_h < n) throw ConfigError("grad.h", "grad.h must be >= dim(theta)");

  c.newton.p1_scale = parse_double(m, "newton.P1_scale");
  if (!(c.newton.p1_scale > 0.0) || !std::isfinite(c.newton.p1_scale))
    throw ConfigError("newton.P1_scale", "newton.P1_scale must be finite and > 0");
  c.newton.theta0 = parse_vector(m, "newton.theta0");
  require_dim(c.newton.theta0, n, "newton.theta0");
  if (!c.theta_set.contains(c.newton.theta0))
    throw ConfigError("newton.theta0", "newton.theta0 must lie in the parameter set");
  c.newton.threshold = c.threshold;
  c.newton.bound_m = c.bound_m;
  if (m.get("newton.density_radius") != "auto") {
    const double r = parse_double(m, "newton.density_radius");
    if (!(r >= 0.0) || !std::isfinite(r))
      throw ConfigError("newton.density_radius", "newton.density_radius must be finite and >= 0");
    c.newton.density_radius = r;
  }
  c.newton.ratchet_warmup = parse_int(m, "newton.ratchet_warmup");
  if (c.newton.ratchet_warmup < 1)
    throw ConfigError("newton.ratchet_warmup", "newton.ratchet_warmup must be >= 1");
  c.newton.logdet_check_stride = parse_int(m, "newton.logdet_check_stride");
  if (c.newton.logdet_check_stride < 1)
    throw ConfigError("newton.logdet_check_stride", "newton.logdet_check_stride must be >= 1");
  c.eig_stride = parse_int(m, "newton.eig_stride");
  if (c.eig_stride < 1) throw ConfigError("newton.eig_stride", "newton.eig_stride must be >= 1");
  if (is_newton(c.algorithm)) {
    const double radius = c.newton.density_radius.value_or(c.theta_set.norm_bound() * c.bound_m +
                                                           std::abs(c.threshold));
    const double f = std::min(c.noise.pdf(-radius), c.noise.pdf(radius));
    if (!(f >= kMinUsableDensity))
      throw ConfigError(c.newton.density_radius ? "newton.density_radius" : "input.bound_M",
                        "noise density vanishes on the beta radius; set newton.density_radius");
  }

  c.defense_period = static_cast<int>(parse_int(m, "defense.T"));
  c.slots_zero = parse_slots(m, "defense.slots_zero");
  c.slots_one = parse_slots(m, "defense.slots_one");
  (void)c.schedule();

  c.control.enabled = parse_bool(m, "control.enabled");
  const std::string& rk = m.get("control.reference.kind");
  if (rk == "sinusoid")
    c.control.reference = ReferenceSignal::sinusoid(parse_double(m, "control.reference.amplitude"),
                                                    parse_double(m, "control.reference.period"));
  else if (rk == "constant")
    c.control.reference = ReferenceSignal::constant(parse_double(m, "control.reference.value"));
  else
    throw ConfigError("control.reference.kind", "control.reference.kind must be 'sinusoid' or 'constant'");
  c.control.theta1_floor = parse_double(m, "control.theta1_floor");
  if (!(c.control.theta1_floor > 0.0)) throw ConfigError("control.theta1_floor", "control.theta1_floor must be > 0");
  c.control.input_clamp = parse_double(m, "control.input_clamp");
  if (!(c.control.input_clamp > 0.0)) throw ConfigError("control.input_clamp", "control.input_clamp must be > 0");
  c.control.u0_variance = parse_double(m, "control.u0_variance");
  if (!(c.control.u0_variance >= 0.0)) throw ConfigError("control.u0_variance", "control.u0_variance must be >= 0");

  const std::string& ek = m.get("envelope.kind");
  if (ek == "auto") {
    if (c.control.enabled) c.envelope = {EnvelopeKind::lil_rate, 0.5};
    else if (is_newton(c.algorithm)) c.envelope = {EnvelopeKind::log_over_power, 0.75};
    else c.envelope = {EnvelopeKind::power_rate, c.grad.gamma};
  } else if (ek == "power_rate") c.envelope = {EnvelopeKind::power_rate, c.grad.gamma};
  else if (ek == "log_over_power") c.envelope = {EnvelopeKind::log_over_power, 0.75};
  else if (ek == "regret_rate") c.envelope = {EnvelopeKind::regret_rate, 0.0};
  else if (ek == "lil_rate") c.envelope = {EnvelopeKind::lil_rate, 0.5};
  else throw ConfigError("envelope.kind", "envelope.kind must be auto, power_rate, log_over_power, regret_rate or lil_rate");
  if (m.get("envelope.exponent") != "auto") c.envelope.exponent = parse_double(m, "envelope.exponent");
  return c;
}

std::vector<std::string> preset_names() { return {"example1", "example2", "example3"}; }

std::vector<ConfigMap> preset_runs(const std::string& name) {
  std::vector<ConfigMap> runs;
  auto base = [] {
    ConfigMap m;
    return m;
  };
  const std::pair<const char*, const char*> attacks[] = {{"0.2", "0.3"}, {"0.8", "0.9"}};
  if (name == "example1") {
    for (const auto& [p, q] : attacks) {
      for (const char* gamma : {"1", "0.8"}) {
        ConfigMap m = base();
        m.set("experiment.name", std::string("example1_grp-kp_p") + p + "_q" + q + "_g" + gamma);
        m.set("algorithm", "grp-kp");
        m.set("channel.p", p);
        m.set("channel.q", q);
        m.set("grad.gamma", gamma);
        runs.push_back(m);
      }
    }
    for (const auto& [p, q] : attacks) {
      ConfigMap m = base();
      m.set("experiment.name", std::string("example1_grp-up_p") + p + "_q" + q + "_g1");
      m.set("algorithm", "grp-up");
      m.set("channel.p", p);
      m.set("channel.q", q);
      runs.push_back(m);
    }
  } else if (name == "example2") {
    ConfigMap m = base();
    m.set("experiment.name", "example2_nrp-up_p0.1_q0.2");
    m.set("algorithm", "nrp-up");
    m.set("horizon", "20000");
    m.set("channel.p", "0.1");
    m.set("channel.q", "0.2");
    m.set("input.variance", "1");
    m.set("input.variance_decay", "0.125");
    m.set("newton.density_radius", "1");
    runs.push_back(m);
  } else if (name == "example3") {
    for (const auto& [p, q] : attacks) {
      ConfigMap m = base();
      m.set("experiment.name", std::string("example3_nrp-up_p") + p + "_q" + q);
      m.set("algorithm", "nrp-up");
      m.set("horizon", "20000");
      m.set("replicas", "20");
      m.set("channel.p", p);
      m.set("channel.q", q);
      m.set("control.enabled", "true");
      m.set("newton.density_radius", "1");
      runs.push_back(m);
    }
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "'");
  }
  for (auto& r : runs) r = ConfigMap::from_text(r.to_text());
  return runs;
}

}  // namespace tamperid
