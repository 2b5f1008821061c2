// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tamperid/tamperid.h"

namespace {

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "results";
  long long replicas = 0;
  std::string seed;
  bool emit_gnuplot = false;
  std::string preset;
  bool print = false;
};

// One line on stderr: error status=<name> key=<key> message=<text>
int report(tamperid_status status) {
  const char* key = tamperid_last_error_key();
  std::fprintf(stderr, "error status=%s key=%s message=%s\n", tamperid_status_name(status), *key ? key : "-",
               tamperid_last_error());
  return status == TAMPERID_ERR_CONFIG ? 3 : 4;
}

struct Config {
  tamperid_config* ptr = nullptr;
  ~Config() { tamperid_config_destroy(ptr); }
};

tamperid_status apply_cli(tamperid_config* cfg, const Options& o) {
  for (const auto& s : o.overrides)
    if (auto st = tamperid_config_apply(cfg, s.c_str()); st != TAMPERID_OK) return st;
  if (o.replicas > 0)
    if (auto st = tamperid_config_set(cfg, "replicas", std::to_string(o.replicas).c_str()); st != TAMPERID_OK)
      return st;
  if (!o.seed.empty())
    if (auto st = tamperid_config_set(cfg, "seeds.base", o.seed.c_str()); st != TAMPERID_OK) return st;
  return TAMPERID_OK;
}

tamperid_status run_one(tamperid_config* cfg, const Options& o) {
  tamperid_result* res = nullptr;
  const tamperid_status st = tamperid_run(cfg, o.out_dir.c_str(), o.emit_gnuplot ? 1 : 0, 0, &res);
  if (st != TAMPERID_OK) return st;
  char name[256];
  size_t needed = 0;
  tamperid_result_name(res, name, sizeof name, &needed);
  double c = 0.0;
  tamperid_result_envelope_constant(res, &c);
  std::printf("ok name=%s csv=%s/%s.csv manifest=%s/%s.manifest envelope_constant=%.6g\n", name, o.out_dir.c_str(),
              name, o.out_dir.c_str(), name, c);
  tamperid_result_destroy(res);
  return TAMPERID_OK;
}

int run_preset(const std::string& preset, const Options& o) {
  size_t runs = 0;
  if (auto st = tamperid_preset_runs(preset.c_str(), &runs); st != TAMPERID_OK) return report(st);
  for (size_t i = 0; i < runs; ++i) {
    Config cfg;
    if (auto st = tamperid_preset_create(preset.c_str(), i, &cfg.ptr); st != TAMPERID_OK) return report(st);
    if (auto st = apply_cli(cfg.ptr, o); st != TAMPERID_OK) return report(st);
    if (auto st = run_one(cfg.ptr, o); st != TAMPERID_OK) return report(st);
  }
  return 0;
}

tamperid_status load(const Options& o, Config& cfg) {
  if (o.config_path.empty()) return tamperid_config_create(&cfg.ptr);
  return tamperid_config_load(o.config_path.c_str(), &cfg.ptr);
}

int run_custom(const Options& o) {
  Config cfg;
  if (auto st = load(o, cfg); st != TAMPERID_OK) return report(st);
  if (auto st = apply_cli(cfg.ptr, o); st != TAMPERID_OK) return report(st);
  if (auto st = run_one(cfg.ptr, o); st != TAMPERID_OK) return report(st);
  return 0;
}

int validate(const Options& o) {
  if (!o.preset.empty()) {
    size_t runs = 0;
    if (auto st = tamperid_preset_runs(o.preset.c_str(), &runs); st != TAMPERID_OK) return report(st);
    for (size_t i = 0; i < runs; ++i) {
      Config cfg;
      if (auto st = tamperid_preset_create(o.preset.c_str(), i, &cfg.ptr); st != TAMPERID_OK) return report(st);
      if (auto st = apply_cli(cfg.ptr, o); st != TAMPERID_OK) return report(st);
      if (auto st = tamperid_config_validate(cfg.ptr); st != TAMPERID_OK) return report(st);
    }
    std::printf("ok preset=%s runs=%zu\n", o.preset.c_str(), runs);
    return 0;
  }
  Config cfg;
  if (auto st = load(o, cfg); st != TAMPERID_OK) return report(st);
  if (auto st = apply_cli(cfg.ptr, o); st != TAMPERID_OK) return report(st);
  if (auto st = tamperid_config_validate(cfg.ptr); st != TAMPERID_OK) return report(st);
  if (o.print) {
    size_t need = 0;
    if (auto st = tamperid_config_dump(cfg.ptr, nullptr, 0, &need); st != TAMPERID_OK) return report(st);
    std::string text(need, '\0');
    if (auto st = tamperid_config_dump(cfg.ptr, text.data(), text.size(), &need); st != TAMPERID_OK)
      return report(st);
    std::fputs(text.c_str(), stdout);
  }
  std::printf("ok config=%s\n", o.config_path.empty() ? "defaults" : o.config_path.c_str());
  return 0;
}

void add_common(CLI::App* cmd, Options& o, bool with_config, bool runs) {
  if (with_config) cmd->add_option("--config", o.config_path, "key=value config file");
  cmd->add_option("--set", o.overrides, "override a key (key=value), repeatable");
  cmd->add_option("--replicas", o.replicas, "number of Monte Carlo replicas")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "base seed");
  if (runs) {
    cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    cmd->add_flag("--emit-gnuplot", o.emit_gnuplot, "write gnuplot scripts next to the CSVs");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identification under tampered binary observations"};
  app.set_version_flag("--version", std::string(tamperid_version()));
  app.require_subcommand(1);
  Options o;

  auto* ex1 = app.add_subcommand("example1", "first-order estimators, both attack pairs and step exponents");
  auto* ex2 = app.add_subcommand("example2", "second-order estimator with unknown attack");
  auto* ex3 = app.add_subcommand("example3", "adaptive tracking under both attack pairs");
  auto* run = app.add_subcommand("run", "run a custom experiment");
  auto* val = app.add_subcommand("validate", "check a configuration without running it");
  for (auto* c : {ex1, ex2, ex3}) add_common(c, o, false, true);
  add_common(run, o, true, true);
  add_common(val, o, true, false);
  val->add_option("--preset", o.preset, "validate a shipped preset instead of a config file");
  val->add_flag("--print", o.print, "print the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error status=usage key=- message=%s\n", e.what());
    return 2;
  }

  if (*ex1) return run_preset("example1", o);
  if (*ex2) return run_preset("example2", o);
  if (*ex3) return run_preset("example3", o);
  if (*run) return run_custom(o);
  return validate(o);
}
