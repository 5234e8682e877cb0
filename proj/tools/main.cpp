// sisrd: command line front end for the SIS reaction-diffusion toolkit.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sisrd/harness.hpp"
#include "sisrd/spectral.hpp"

namespace {

using namespace sisrd;
using nlohmann::json;

struct Options {
  std::string config;
  std::string out;
  std::string regime = "dI";
  std::string values;
  std::optional<double> sigma;
  std::string delta;
};

ScenarioConfig load(const Options& o) {
  ScenarioConfig cfg = ScenarioConfig::load(o.config);
  if (!o.delta.empty()) cfg.mask_deltas = parse_values(o.delta);
  for (double d : cfg.mask_deltas)
    if (!(d > 0.0)) throw ConfigError("--delta values must be positive");
  return cfg;
}

std::filesystem::path out_dir(const Options& o, const ScenarioConfig& cfg) {
  return o.out.empty() ? std::filesystem::path(cfg.output_dir) : std::filesystem::path(o.out);
}

void emit(const Options& o, const ScenarioConfig& cfg, const OutputBundle& b,
          const std::string& primary) {
  auto dir = out_dir(o, cfg);
  if (!dir.empty()) write_bundle(dir, b);
  auto it = b.files.find(primary);
  if (it != b.files.end()) std::cout << it->second;
}

OutputBundle spectral_bundle(const ScenarioConfig& cfg, bool r0) {
  const CoefficientSet c = cfg.coefficients();
  SpectralResult s = r0 ? compute_R0(c) : compute_lambda0(c);
  const std::string key = r0 ? "R0" : "lambda0";
  json j = {{key, s.eigenvalue},   {"residual", s.residual}, {"iterations", s.iterations},
            {"converged", s.converged}, {"d_S", s.d_S},     {"d_I", s.d_I}};
  if (r0) j["pointwise_sup"] = pointwise_R0_sup(c);
  OutputBundle b;
  b.files[key + ".json"] = j.dump(2) + "\n";
  b.files[key + "_eigenfield.csv"] = to_csv(s.eigenfield);
  return b;
}

int dispatch(const std::string& cmd, const Options& o) {
  const ScenarioConfig cfg = load(o);
  auto sigma = o.sigma;
  if (cmd == "simulate") {
    emit(o, cfg, simulate(cfg), "summary.json");
  } else if (cmd == "equilibrium") {
    auto outcome = run_scenario(cfg);
    emit(o, cfg, outcome.bundle, "summary.json");
  } else if (cmd == "r0") {
    emit(o, cfg, spectral_bundle(cfg, true), "R0.json");
  } else if (cmd == "lambda0") {
    emit(o, cfg, spectral_bundle(cfg, false), "lambda0.json");
  } else if (cmd == "asymptotics") {
    emit(o, cfg, asymptotics_bundle(cfg, parse_regime(o.regime), sigma), "profile.json");
  } else if (cmd == "audit") {
    emit(o, cfg, audit_bundle(cfg), "audit.json");
  } else if (cmd == "compare") {
    emit(o, cfg, compare_bundle(cfg, parse_regime(o.regime), sigma), "compare.json");
  } else if (cmd == "sweep") {
    SweepTable t = sweep(cfg, parse_regime(o.regime), parse_values(o.values), sigma);
    OutputBundle b;
    b.files["sweep.csv"] = t.to_csv();
    b.files["sweep.json"] = t.summary_json();
    emit(o, cfg, b, "sweep.csv");
    for (const auto& r : t.records)
      if (!r.ok) std::cerr << "row d_S=" << r.d_S << " d_I=" << r.d_I << " failed: " << r.error << "\n";
    if (!t.trend_ok) {
      std::cerr << "sweep: distance trend is not nonincreasing within 10% slack\n";
      return 1;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial SIS reaction-diffusion equilibria and small-diffusion limits"};
  app.require_subcommand(1);
  Options o;

  struct Spec {
    const char* name;
    const char* help;
    bool regime;
    bool values;
    bool delta;
  };
  const Spec specs[] = {
      {"simulate", "time-dependent run to stop.t_final", false, false, false},
      {"equilibrium", "endemic equilibrium with diagnostics, audit and masks", false, false, true},
      {"r0", "basic reproduction number (p = 1)", false, false, false},
      {"lambda0", "principal eigenvalue of the invasion problem", false, false, false},
      {"asymptotics", "predicted limit profile for a regime", true, false, false},
      {"sweep", "diffusion sweep against the regime's limit", true, true, false},
      {"audit", "a priori bounds of the computed equilibrium", false, false, false},
      {"compare", "distance of the equilibrium to a limit profile", true, false, false},
  };
  for (const auto& s : specs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", o.config, "scenario JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (default: config output_dir)");
    if (s.regime) {
      sub->add_option("--regime", o.regime, "dI, dS or both")->capture_default_str();
      sub->add_option("--sigma", o.sigma, "limit ratio d_I/d_S for the both regime");
    }
    if (s.values) sub->add_option("--values", o.values, "decreasing list, e.g. 1e-1,1e-2")->required();
    if (s.delta) sub->add_option("--delta", o.delta, "mask thresholds, e.g. 1e-2,1e-4");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return dispatch(cmd, o);
  } catch (const sisrd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sisrd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
