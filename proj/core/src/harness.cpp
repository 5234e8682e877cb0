#include "sisrd/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "sisrd/linalg.hpp"
#include "sisrd/spectral.hpp"

namespace sisrd {

using nlohmann::json;

namespace {

[[noreturn]] void config_fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) config_fail(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      config_fail(where, "unknown key '" + it.key() + "'");
  }
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) config_fail(where, "missing '" + key + "'");
  const json& v = obj.at(key);
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (!v.is_number()) config_fail(where + "." + key, "expected a number");
  return v.get<double>();
}

double get_number_or(const json& obj, const std::string& key, double fallback,
                     const std::string& where) {
  return obj.contains(key) ? get_number(obj, key, where) : fallback;
}

std::size_t get_count(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0)
    config_fail(where, "expected a nonnegative integer");
  return v.get<std::size_t>();
}

std::pair<double, double> get_pair(const json& obj, const std::string& key,
                                   const std::string& where) {
  if (!obj.contains(key)) config_fail(where, "missing '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    config_fail(where + "." + key, "expected [number, number]");
  return {v[0].get<double>(), v[1].get<double>()};
}

Formula get_formula(const json& obj, const std::string& key, const std::string& where,
                    std::optional<std::string> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return Formula::parse(*fallback);
    config_fail(where, "missing '" + key + "'");
  }
  const json& v = obj.at(key);
  std::string text;
  if (v.is_string())
    text = v.get<std::string>();
  else if (v.is_number())
    text = format_double(v.get<double>());
  else
    config_fail(where + "." + key, "expected a formula string or a number");
  try {
    return Formula::parse(std::move(text));
  } catch (const ParseError& e) {
    config_fail(where + "." + key, e.what());
  }
}

DomainSpec parse_domain(const json& d) {
  const std::string where = "domain";
  if (!d.is_object() || !d.contains("kind") || !d.at("kind").is_string())
    config_fail(where, "missing 'kind'");
  const std::string kind = d.at("kind").get<std::string>();
  DomainSpec spec;
  if (kind == "interval") {
    reject_unknown_keys(d, where, {"kind", "bounds", "nodes"});
    auto [a, b] = get_pair(d, "bounds", where);
    if (!d.contains("nodes")) config_fail(where, "missing 'nodes'");
    spec = DomainSpec::interval(a, b, get_count(d.at("nodes"), where + ".nodes"));
  } else if (kind == "rectangle") {
    reject_unknown_keys(d, where, {"kind", "x", "y", "nodes"});
    auto [xa, xb] = get_pair(d, "x", where);
    auto [ya, yb] = get_pair(d, "y", where);
    if (!d.contains("nodes")) config_fail(where, "missing 'nodes'");
    const json& n = d.at("nodes");
    std::size_t nx = 0, ny = 0;
    if (n.is_array() && n.size() == 2) {
      nx = get_count(n[0], where + ".nodes");
      ny = get_count(n[1], where + ".nodes");
    } else {
      nx = ny = get_count(n, where + ".nodes");
    }
    spec = DomainSpec::rectangle(xa, xb, ya, yb, nx, ny);
  } else if (kind == "disk") {
    reject_unknown_keys(d, where, {"kind", "center", "radius", "cells", "cell_size"});
    auto [cx, cy] = get_pair(d, "center", where);
    double r = get_number(d, "radius", where);
    if (d.contains("cells") == d.contains("cell_size"))
      config_fail(where, "give exactly one of 'cells' and 'cell_size'");
    if (d.contains("cells"))
      spec = DomainSpec::disk(cx, cy, r, get_count(d.at("cells"), where + ".cells"));
    else
      spec = DomainSpec::disk_with_cell(cx, cy, r, get_number(d, "cell_size", where));
  } else {
    config_fail(where, "unknown kind '" + kind + "'");
  }
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    config_fail(where, e.what());
  }
  return spec;
}

StopRule parse_stop(const json& s) {
  const std::string where = "stop";
  reject_unknown_keys(s, where,
                      {"t_final", "steady_tol", "dt0", "dt_max", "dt_min", "growth", "max_steps",
                       "snapshot_every", "solver_tol"});
  StopRule r = EeOptions::default_stop();
  r.t_final = get_number_or(s, "t_final", r.t_final, where);
  r.steady_tol = get_number_or(s, "steady_tol", r.steady_tol, where);
  r.dt0 = get_number_or(s, "dt0", r.dt0, where);
  r.dt_max = get_number_or(s, "dt_max", r.dt_max, where);
  r.dt_min = get_number_or(s, "dt_min", r.dt_min, where);
  r.growth = get_number_or(s, "growth", r.growth, where);
  r.solver_tol = get_number_or(s, "solver_tol", r.solver_tol, where);
  if (s.contains("max_steps")) r.max_steps = get_count(s.at("max_steps"), where + ".max_steps");
  if (s.contains("snapshot_every"))
    r.snapshot_every = get_count(s.at("snapshot_every"), where + ".snapshot_every");
  try {
    r.validate();
  } catch (const ConfigError& e) {
    config_fail(where, e.what());
  }
  return r;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Rethrow with the scenario name prefixed, keeping the error category.
template <class F>
auto with_context(const std::string& name, F&& f) -> decltype(f()) {
  const std::string ctx = name.empty() ? std::string() : "scenario '" + name + "': ";
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + e.what());
  } catch (const ComputeError& e) {
    throw ComputeError(ctx + e.what());
  } catch (const Error& e) {
    throw ComputeError(ctx + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string mask_file_name(std::string_view prefix, double delta) {
  return std::string(prefix) + format_double(delta) + ".csv";
}

json stop_json(const StopRule& s) {
  return {{"t_final", number_or_null(s.t_final)}, {"steady_tol", s.steady_tol},
          {"dt0", s.dt0},                         {"dt_max", s.dt_max},
          {"dt_min", s.dt_min},                   {"growth", s.growth},
          {"snapshot_every", s.snapshot_every},   {"solver_tol", s.solver_tol}};
}

json config_json(const ScenarioConfig& cfg, const DiscreteDomain& dom) {
  static constexpr const char* kinds[] = {"interval", "rectangle", "disk"};
  return {{"name", cfg.name},
          {"schema_version", cfg.schema_version},
          {"domain",
           {{"kind", kinds[static_cast<int>(cfg.domain.kind)]},
            {"nodes", dom.size()},
            {"h", dom.h()},
            {"measure", dom.total_measure()}}},
          {"coefficients",
           {{"beta", cfg.beta.text},
            {"gamma", cfg.gamma.text},
            {"eta", cfg.eta.text},
            {"lambda", cfg.lambda.text}}},
          {"parameters", {{"d_S", cfg.d_S}, {"d_I", cfg.d_I}, {"p", cfg.p}, {"q", cfg.q}}},
          {"stop", stop_json(cfg.stop)},
          {"newton", cfg.newton}};
}

json equilibrium_json(const EquilibriumResult& e) {
  return {{"endemic", e.endemic},
          {"residual_S", e.residual_S},
          {"residual_I", e.residual_I},
          {"conservation_gap", e.conservation_gap},
          {"march_steps", e.march_steps},
          {"march_time", e.march_time},
          {"march_steady", e.march_steady},
          {"max_mass_defect", e.max_mass_defect},
          {"newton_applied", e.newton_applied},
          {"newton_iterations", e.newton_iterations},
          {"note", e.note},
          {"S_min", e.S.min()},
          {"S_max", e.S.max()},
          {"I_min", e.I.min()},
          {"I_max", e.I.max()},
          {"I_mass", integrate(e.I)}};
}

json diagnostics_json(const DiagnosticsReport& d) {
  json checks = json::array();
  for (const auto& c : d.checks)
    checks.push_back({{"name", c.name},
                      {"node", c.node},
                      {"reaction", c.reaction},
                      {"margin", c.margin},
                      {"passed", c.passed}});
  return {{"conservation_gap", d.conservation_gap},
          {"residual_S", d.residual_S},
          {"residual_I", d.residual_I},
          {"tol_grid", d.tol_grid},
          {"checks", checks},
          {"all_passed", d.all_passed()}};
}

json audit_json(const AuditReport& a) {
  json checks = json::array();
  for (const auto& c : a.checks)
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"bound", c.bound},
                      {"margin", c.margin},
                      {"passed", c.passed}});
  json j = {{"tol_grid", a.tol_grid}, {"checks", checks}, {"all_passed", a.all_passed()}};
  j["c0"] = a.c0 ? json(*a.c0) : json(nullptr);
  return j;
}

json metrics_json(const CompareMetrics& m) {
  return {{"kind", m.kind},
          {"S_sup", number_or_null(m.S_sup)},
          {"I_sup", number_or_null(m.I_sup)},
          {"S_L1", number_or_null(m.S_L1)},
          {"I_L1", number_or_null(m.I_L1)},
          {"vanishing_interior_nodes", m.vanishing_interior_nodes},
          {"headline", number_or_null(m.headline())}};
}

json profile_json(const LimitProfile& lp) {
  json masks = json::object();
  for (const auto& [name, m] : lp.masks) masks[name] = count(m);
  json meta = json::object();
  for (const auto& [k, v] : lp.meta) meta[k] = number_or_null(v);
  json fields = json::array();
  for (const auto& [name, f] : lp.fields) fields.push_back(name);
  return {{"regime", std::string(regime_name(lp.regime))},
          {"sigma", number_or_null(lp.sigma)},
          {"has_fields", lp.has_fields()},
          {"mask_nodes", masks},
          {"fields", fields},
          {"meta", meta}};
}

json sequence_json(const MonotoneSequence& s) {
  json gaps = json::array();
  for (double g : s.gaps) gaps.push_back(g);
  return {{"gaps", gaps},
          {"iterations", s.gaps.size()},
          {"converged", s.converged},
          {"monotone", s.is_monotone()},
          {"final_error", s.final_error()}};
}

}  // namespace

Formula Formula::parse(std::string text) {
  Expr e = parse_expr(text);
  return {std::move(text), std::move(e)};
}

ScenarioConfig ScenarioConfig::parse(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    reject_unknown_keys(root, "config",
                        {"schema_version", "name", "comment", "domain", "coefficients",
                         "parameters", "initial", "stop", "newton", "mask_deltas",
                         "erosion_cells", "zero_infection_threshold", "record_wall_time",
                         "output_dir"});
    ScenarioConfig cfg;
    if (!root.contains("schema_version") || !root.at("schema_version").is_number_integer())
      config_fail("config", "missing integer 'schema_version'");
    cfg.schema_version = root.at("schema_version").get<int>();
    if (cfg.schema_version != kSchemaVersion)
      config_fail("config", "unsupported schema_version " + std::to_string(cfg.schema_version));
    if (root.contains("name")) cfg.name = root.at("name").get<std::string>();
    if (root.contains("comment")) cfg.comment = root.at("comment").get<std::string>();
    if (!root.contains("domain")) config_fail("config", "missing 'domain'");
    cfg.domain = parse_domain(root.at("domain"));

    if (!root.contains("coefficients")) config_fail("config", "missing 'coefficients'");
    const json& co = root.at("coefficients");
    reject_unknown_keys(co, "coefficients", {"beta", "gamma", "eta", "lambda"});
    cfg.beta = get_formula(co, "beta", "coefficients");
    cfg.gamma = get_formula(co, "gamma", "coefficients");
    cfg.eta = get_formula(co, "eta", "coefficients");
    cfg.lambda = get_formula(co, "lambda", "coefficients");

    if (!root.contains("parameters")) config_fail("config", "missing 'parameters'");
    const json& pa = root.at("parameters");
    reject_unknown_keys(pa, "parameters", {"d_S", "d_I", "p", "q"});
    cfg.d_S = get_number(pa, "d_S", "parameters");
    cfg.d_I = get_number(pa, "d_I", "parameters");
    cfg.p = get_number(pa, "p", "parameters");
    cfg.q = get_number(pa, "q", "parameters");
    if (!(cfg.d_S > 0.0) || !std::isfinite(cfg.d_S)) config_fail("parameters.d_S", "must be positive");
    if (!(cfg.d_I > 0.0) || !std::isfinite(cfg.d_I)) config_fail("parameters.d_I", "must be positive");
    if (!(cfg.p > 0.0 && cfg.p <= 1.0)) config_fail("parameters.p", "must lie in (0, 1]");
    if (!(cfg.q > 0.0) || !std::isfinite(cfg.q)) config_fail("parameters.q", "must be positive");

    json init = root.value("initial", json::object());
    reject_unknown_keys(init, "initial", {"S", "I"});
    cfg.S0 = get_formula(init, "S", "initial", "0.8");
    cfg.I0 = get_formula(init, "I", "initial", "0.2");

    if (root.contains("stop")) cfg.stop = parse_stop(root.at("stop"));
    if (root.contains("newton")) cfg.newton = root.at("newton").get<bool>();
    if (root.contains("mask_deltas")) {
      cfg.mask_deltas.clear();
      for (const auto& d : root.at("mask_deltas")) {
        if (!d.is_number() || !(d.get<double>() > 0.0))
          config_fail("mask_deltas", "entries must be positive numbers");
        cfg.mask_deltas.push_back(d.get<double>());
      }
    }
    if (root.contains("erosion_cells"))
      cfg.erosion_cells = get_count(root.at("erosion_cells"), "erosion_cells");
    cfg.zero_infection_threshold =
        get_number_or(root, "zero_infection_threshold", cfg.zero_infection_threshold, "config");
    if (!(cfg.zero_infection_threshold > 0.0))
      config_fail("zero_infection_threshold", "must be positive");
    if (root.contains("record_wall_time"))
      cfg.record_wall_time = root.at("record_wall_time").get<bool>();
    if (root.contains("output_dir")) cfg.output_dir = root.at("output_dir").get<std::string>();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

DomainPtr ScenarioConfig::build_domain() const { return sisrd::build_domain(domain); }

CoefficientSet ScenarioConfig::coefficients(const DomainPtr& dom) const {
  auto field = [&](const Formula& f, const char* name) {
    try {
      return ScalarField::from_expr(dom, f.expr);
    } catch (const EvalError& e) {
      throw ConfigError(std::string("coefficients.") + name + ": " + e.what());
    }
  };
  return CoefficientSet(field(beta, "beta"), field(gamma, "gamma"), field(eta, "eta"),
                        field(lambda, "lambda"), d_S, d_I, p, q);
}

SimState ScenarioConfig::initial_state(const DomainPtr& dom) const {
  try {
    SimState s{ScalarField::from_expr(dom, S0.expr), ScalarField::from_expr(dom, I0.expr), 0.0};
    return s;
  } catch (const EvalError& e) {
    throw ConfigError(std::string("initial: ") + e.what());
  }
}

EeOptions ScenarioConfig::ee_options() const {
  EeOptions o;
  o.stop = stop;
  o.newton = newton;
  return o;
}

bool ScenarioConfig::smooth_coefficients() const {
  return beta.expr.is_smooth() && gamma.expr.is_smooth() && eta.expr.is_smooth() &&
         lambda.expr.is_smooth();
}

void write_bundle(const std::filesystem::path& dir, const OutputBundle& bundle) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const bool existed = fs::exists(dir, ec);
  if (!existed && !fs::create_directories(dir, ec))
    throw ComputeError("cannot create output directory '" + dir.string() + "'");
  std::vector<fs::path> written;
  try {
    for (const auto& [name, content] : bundle.files) {
      fs::path path = dir / name;
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw ComputeError("cannot write '" + path.string() + "'");
      written.push_back(path);
      out << content;
      out.close();
      if (!out) throw ComputeError("cannot write '" + path.string() + "'");
    }
  } catch (...) {
    for (const auto& p : written) fs::remove(p, ec);
    if (!existed) fs::remove(dir, ec);
    throw;
  }
}

ScenarioOutcome run_scenario(const ScenarioConfig& cfg) {
  return with_context(cfg.name, [&] {
    const DomainPtr dom = cfg.build_domain();
    const CoefficientSet c = cfg.coefficients(dom);
    const SimState init = cfg.initial_state(dom);
    validate_state(init, c, true);

    ScenarioOutcome out;
    const ScalarField dfe = solve_dfe(c);
    out.ee = find_ee(c, init, cfg.ee_options());
    out.diagnostics = diagnostics(c, out.ee);
    if (c.p() == 1.0) {
      out.R0 = compute_R0(c).eigenvalue;
      out.omega_tilde_empty = classify_dI0_p1(c).meta.at("no_ee_small_dI") != 0.0;
    }
    out.lambda0 = compute_lambda0(c).eigenvalue;
    if (out.ee.endemic) out.audit = bounds_audit(c, out.ee);

    auto& files = out.bundle.files;
    files["S.csv"] = to_csv(out.ee.S);
    files["I.csv"] = to_csv(out.ee.I);
    files["dfe.csv"] = to_csv(dfe);
    ScalarField mass(dom);
    for (std::size_t k = 0; k < mass.size(); ++k) mass[k] = out.ee.I[k] * dom->measure()[k];
    files["infected_mass.csv"] = to_csv(mass);

    json masks = json::object();
    for (double delta : cfg.mask_deltas) {
      NodeMask m = risk_indicator(c, out.ee.S, delta);
      const std::string file = mask_file_name("mask_delta_", delta);
      masks[file] = {{"delta", delta}, {"nodes", count(m)}};
      files[file] = mask_to_csv(*dom, m);
      out.masks.emplace(file, std::move(m));
    }
    const bool density = cfg.smooth_coefficients();
    if (density) files["coincidence_density.csv"] = to_csv(coincidence_density(c));

    json summary;
    summary["config"] = config_json(cfg, *dom);
    summary["comment"] = cfg.comment;
    summary["R0"] = out.R0 ? json(*out.R0) : json(nullptr);
    summary["lambda0"] = out.lambda0;
    summary["pointwise_R0_sup"] = pointwise_R0_sup(c);
    summary["outcome"] = out.ee.endemic ? "endemic" : "disease_free";
    summary["omega_tilde_empty"] = c.p() == 1.0 ? json(out.omega_tilde_empty) : json(nullptr);
    summary["equilibrium"] = equilibrium_json(out.ee);
    summary["diagnostics"] = diagnostics_json(out.diagnostics);
    summary["audit"] = out.audit ? audit_json(*out.audit) : json(nullptr);
    summary["masks"] = masks;
    summary["coincidence_density"] = density;
    files["summary.json"] = dump(summary);
    return out;
  });
}

OutputBundle simulate(const ScenarioConfig& cfg) {
  return with_context(cfg.name, [&] {
    const DomainPtr dom = cfg.build_domain();
    const CoefficientSet c = cfg.coefficients(dom);
    SimState init = cfg.initial_state(dom);
    validate_state(init, c, true);
    RunResult r = run(std::move(init), c, cfg.stop);
    OutputBundle b;
    b.files["S.csv"] = to_csv(r.state.S);
    b.files["I.csv"] = to_csv(r.state.I);
    std::string trace = "t,mass,min_S,max_S,min_I,max_I\n";
    for (const auto& s : r.snapshots)
      trace += format_double(s.t) + "," + format_double(s.mass) + "," + format_double(s.min_S) +
               "," + format_double(s.max_S) + "," + format_double(s.min_I) + "," +
               format_double(s.max_I) + "\n";
    b.files["trace.csv"] = trace;
    json summary = {{"config", config_json(cfg, *dom)},
                    {"t", r.state.t},
                    {"steps", r.steps},
                    {"rejected", r.rejected},
                    {"steady", r.steady},
                    {"change_rate", r.change_rate},
                    {"max_mass_defect", r.max_mass_defect},
                    {"conservation_gap", conservation_gap(c, r.state.S, r.state.I)}};
    b.files["summary.json"] = dump(summary);
    return b;
  });
}

double CompareMetrics::headline() const { return std::max(S_sup, I_sup); }

CompareMetrics compare(const EquilibriumResult& ee, const LimitProfile& lp,
                       const CoefficientSet& c, std::size_t erosion_cells) {
  ee.S.require_same_domain(c.beta());
  ee.I.require_same_domain(c.beta());
  const DomainPtr& dom = c.domain();
  const auto& w = dom->measure();
  const std::size_t n = dom->size();
  CompareMetrics m;

  if (lp.has_fields()) {
    lp.S->require_same_domain(ee.S);
    lp.I->require_same_domain(ee.I);
    m.kind = "fields";
    m.S_sup = sup_distance(ee.S, *lp.S);
    m.I_sup = sup_distance(ee.I, *lp.I);
    for (std::size_t k = 0; k < n; ++k) {
      m.S_L1 += std::abs(ee.S[k] - (*lp.S)[k]) * w[k];
      m.I_L1 += std::abs(ee.I[k] - (*lp.I)[k]) * w[k];
    }
    return m;
  }

  if (auto it = lp.masks.find("vanishing"); it != lp.masks.end()) {
    m.kind = "classification";
    const ScalarField& ceiling = lp.fields.at("ceiling");
    ceiling.require_same_domain(ee.S);
    NodeMask interior = erode(*dom, it->second, erosion_cells);
    m.vanishing_interior_nodes = count(interior);
    for (std::size_t k = 0; k < n; ++k) {
      double excess = std::max(ee.S[k] - ceiling[k], 0.0);
      m.S_sup = std::max(m.S_sup, excess);
      m.S_L1 += excess * w[k];
      if (interior[k]) {
        m.I_sup = std::max(m.I_sup, ee.I[k]);
        m.I_L1 += std::abs(ee.I[k]) * w[k];
      }
    }
    return m;
  }

  m.kind = "envelope";
  auto violation = [&](const ScalarField& f, const char* lo, const char* hi, double& sup,
                       double& l1) {
    for (std::size_t k = 0; k < n; ++k) {
      double v = 0.0;
      if (auto a = lp.fields.find(lo); a != lp.fields.end()) v = std::max(v, a->second[k] - f[k]);
      if (auto b = lp.fields.find(hi); b != lp.fields.end()) v = std::max(v, f[k] - b->second[k]);
      sup = std::max(sup, v);
      l1 += v * w[k];
    }
  };
  violation(ee.S, "S_lower", "S_upper", m.S_sup, m.S_L1);
  violation(ee.I, "I_lower", "I_upper", m.I_sup, m.I_L1);
  if (lp.fields.count("S_upper_q1")) {
    double s2 = 0.0, l2 = 0.0, i2 = 0.0, li2 = 0.0;
    violation(ee.S, "", "S_upper_q1", s2, l2);
    violation(ee.I, "I_lower_q1", "", i2, li2);
    m.S_sup = std::max(m.S_sup, s2);
    m.S_L1 = std::max(m.S_L1, l2);
    m.I_sup = std::max(m.I_sup, i2);
    m.I_L1 = std::max(m.I_L1, li2);
  }
  return m;
}

CollarCheck zero_infection_collar(const ScalarField& I, const NodeMask& predicted,
                                  double threshold, std::size_t collar) {
  const DiscreteDomain& dom = *I.domain();
  if (predicted.size() != I.size()) throw DomainMismatch();
  const std::size_t n = I.size();
  NodeMask observed(n), not_predicted(n);
  for (std::size_t k = 0; k < n; ++k) {
    observed[k] = I[k] < threshold;
    not_predicted[k] = !predicted[k];
  }
  const NodeMask inner = erode(dom, predicted, collar);
  const NodeMask outer = erode(dom, not_predicted, collar);
  CollarCheck r;
  r.predicted = count(predicted);
  r.observed = count(observed);
  for (std::size_t k = 0; k < n; ++k) {
    if (inner[k] && !observed[k]) ++r.mismatches;
    if (outer[k] && observed[k]) ++r.mismatches;
  }
  r.passed = r.mismatches == 0;
  return r;
}

SweepRegime parse_regime(std::string_view s) {
  if (s == "dI" || s == "dI_to_0") return SweepRegime::DI;
  if (s == "dS" || s == "dS_to_0") return SweepRegime::DS;
  if (s == "both" || s == "both_to_0") return SweepRegime::Both;
  throw ConfigError("unknown regime '" + std::string(s) + "' (expected dI, dS or both)");
}

std::string_view regime_label(SweepRegime r) {
  switch (r) {
    case SweepRegime::DI: return "dI";
    case SweepRegime::DS: return "dS";
    case SweepRegime::Both: return "both";
  }
  return "unknown";
}

LimitProfile regime_profile(const CoefficientSet& c, SweepRegime regime,
                            std::optional<double> sigma) {
  switch (regime) {
    case SweepRegime::DI: return c.p() == 1.0 ? classify_dI0_p1(c) : limit_dI0_plt1(c);
    case SweepRegime::DS: return limit_dS0(c);
    case SweepRegime::Both:
      if (!sigma) throw ConfigError("the both regime needs --sigma");
      return c.p() == 1.0 ? limit_both_p1(c, *sigma) : limit_both_plt1(c, *sigma);
  }
  throw ConfigError("unknown regime");
}

bool trend_nonincreasing(const std::vector<double>& d, double slack, double floor) {
  for (std::size_t i = 1; i < d.size(); ++i) {
    const double prev = d[i - 1] < floor ? 0.0 : d[i - 1];
    const double cur = d[i] < floor ? 0.0 : d[i];
    if (cur > (1.0 + slack) * prev) return false;
  }
  return true;
}

SweepTable sweep(const ScenarioConfig& cfg, SweepRegime regime, const std::vector<double>& values,
                 std::optional<double> sigma) {
  return with_context(cfg.name, [&] {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0.0) || !std::isfinite(values[i]))
        throw ConfigError("sweep values must be positive");
      if (i > 0 && !(values[i] < values[i - 1]))
        throw ConfigError("sweep values must be strictly decreasing");
    }
    if (regime == SweepRegime::Both && (!sigma || !(*sigma > 0.0)))
      throw ConfigError("the both regime needs a positive sigma");

    SweepTable table;
    table.regime = regime;
    if (regime == SweepRegime::Both) table.sigma = *sigma;
    if (values.empty()) return table;

    const DomainPtr dom = cfg.build_domain();
    const CoefficientSet base = cfg.coefficients(dom);
    const SimState init = cfg.initial_state(dom);
    validate_state(init, base, true);

    auto rates = [&](double v) -> std::pair<double, double> {
      switch (regime) {
        case SweepRegime::DI: return {cfg.d_S, v};
        case SweepRegime::DS: return {v, cfg.d_I};
        case SweepRegime::Both: return {v / *sigma, v};
      }
      return {cfg.d_S, cfg.d_I};
    };
    // The oracle depends only on the rates held fixed during the sweep.
    auto [dS0, dI0] = rates(values.front());
    table.oracle = regime_profile(base.with_diffusion(dS0, dI0), regime, sigma);

    std::optional<SimState> warm;
    for (double v : values) {
      SweepRecord rec;
      std::tie(rec.d_S, rec.d_I) = rates(v);
      rec.sigma = rec.d_I / rec.d_S;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const CoefficientSet c = base.with_diffusion(rec.d_S, rec.d_I);
        SimState start = warm ? *warm : init;
        start.t = 0.0;
        rec.ee = find_ee(c, start, cfg.ee_options());
        rec.endemic = rec.ee.endemic;
        rec.gap = rec.ee.conservation_gap;
        if (c.p() == 1.0) rec.R0 = compute_R0(c).eigenvalue;
        rec.metrics = compare(rec.ee, table.oracle, c, cfg.erosion_cells);
        rec.dist_S_sup = rec.metrics.S_sup;
        rec.dist_I_sup = rec.metrics.I_sup;
        rec.dist_S_L1 = rec.metrics.S_L1;
        rec.dist_I_L1 = rec.metrics.I_L1;
        if (rec.ee.endemic)
          warm = SimState{rec.ee.S, rec.ee.I, 0.0};
        else
          warm.reset();
      } catch (const Error& e) {
        rec.ok = false;
        rec.error = e.what();
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rec.dist_S_sup = rec.dist_I_sup = rec.dist_S_L1 = rec.dist_I_L1 = rec.gap = nan;
        warm.reset();
      }
      if (cfg.record_wall_time)
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      table.records.push_back(std::move(rec));
    }

    std::vector<double> headline, r0;
    for (const auto& r : table.records) {
      if (!r.ok) continue;
      headline.push_back(r.metrics.headline());
      r0.push_back(-r.R0);
    }
    table.trend_ok = trend_nonincreasing(headline);
    if (regime == SweepRegime::DI && cfg.p == 1.0) {
      // R0 nonincreasing in d_I: along decreasing d_I the sequence -R0 must
      // not increase beyond solver noise.
      bool mono = true;
      for (std::size_t i = 1; i < r0.size(); ++i)
        if (r0[i] > r0[i - 1] + 1e-9 * std::abs(r0[i - 1])) mono = false;
      table.r0_monotone = mono;
    }
    return table;
  });
}

std::string SweepTable::to_csv() const {
  std::string out(kSweepHeader);
  out += "\n";
  for (const auto& r : records) {
    const double cols[] = {r.d_S,       r.d_I,       r.sigma, r.dist_S_sup, r.dist_I_sup,
                           r.dist_S_L1, r.dist_I_L1, r.R0,    r.gap,        r.seconds};
    for (std::size_t i = 0; i < std::size(cols); ++i) {
      if (i) out += ",";
      out += format_double(cols[i]);
    }
    out += "\n";
  }
  return out;
}

std::string SweepTable::summary_json() const {
  json rows = json::array();
  for (const auto& r : records) {
    json row = {{"d_S", r.d_S},
                {"d_I", r.d_I},
                {"ok", r.ok},
                {"endemic", r.endemic},
                {"error", r.error}};
    if (r.ok) {
      row["metrics"] = metrics_json(r.metrics);
      row["newton_applied"] = r.ee.newton_applied;
      row["march_steady"] = r.ee.march_steady;
    }
    rows.push_back(row);
  }
  json j = {{"regime", std::string(regime_label(regime))},
            {"sigma", number_or_null(sigma)},
            {"rows", rows},
            {"trend_ok", trend_ok},
            {"oracle", profile_json(oracle)}};
  j["r0_monotone"] = r0_monotone ? json(*r0_monotone) : json(nullptr);
  return dump(j);
}

OutputBundle asymptotics_bundle(const ScenarioConfig& cfg, SweepRegime regime,
                                std::optional<double> sigma) {
  return with_context(cfg.name, [&] {
    const CoefficientSet c = cfg.coefficients();
    const LimitProfile lp = regime_profile(c, regime, sigma);
    OutputBundle b;
    if (lp.S) b.files["limit_S.csv"] = to_csv(*lp.S);
    if (lp.I) b.files["limit_I.csv"] = to_csv(*lp.I);
    for (const auto& [name, f] : lp.fields) b.files["field_" + name + ".csv"] = to_csv(f);
    for (const auto& [name, m] : lp.masks)
      b.files["mask_" + name + ".csv"] = mask_to_csv(*c.domain(), m);
    json j = profile_json(lp);
    j["config"] = config_json(cfg, *c.domain());
    if (regime == SweepRegime::Both && *sigma > c.eta().max()) {
      constexpr std::size_t n_max = 100000;
      auto seq = [&](Direction d) {
        return c.p() == 1.0 ? monotone_seq_p1(c, *sigma, n_max, d)
                            : monotone_seq_plt1(c, *sigma, n_max, d);
      };
      j["sequences"] = {{"increasing", sequence_json(seq(Direction::Increasing))},
                        {"decreasing", sequence_json(seq(Direction::Decreasing))}};
    }
    b.files["profile.json"] = dump(j);
    return b;
  });
}

OutputBundle audit_bundle(const ScenarioConfig& cfg) {
  return with_context(cfg.name, [&] {
    const DomainPtr dom = cfg.build_domain();
    const CoefficientSet c = cfg.coefficients(dom);
    const SimState init = cfg.initial_state(dom);
    validate_state(init, c, true);
    const EquilibriumResult ee = find_ee(c, init, cfg.ee_options());
    json j = {{"config", config_json(cfg, *dom)},
              {"equilibrium", equilibrium_json(ee)},
              {"diagnostics", diagnostics_json(diagnostics(c, ee))}};
    j["audit"] = ee.endemic ? audit_json(bounds_audit(c, ee)) : json(nullptr);
    if (c.p() < 1.0 || ee.endemic) j["c0"] = c.p() < 1.0 ? json(susceptible_floor_c0(c)) : json(nullptr);
    OutputBundle b;
    b.files["audit.json"] = dump(j);
    return b;
  });
}

OutputBundle compare_bundle(const ScenarioConfig& cfg, SweepRegime regime,
                            std::optional<double> sigma) {
  return with_context(cfg.name, [&] {
    const DomainPtr dom = cfg.build_domain();
    const CoefficientSet c = cfg.coefficients(dom);
    const SimState init = cfg.initial_state(dom);
    validate_state(init, c, true);
    const EquilibriumResult ee = find_ee(c, init, cfg.ee_options());
    const LimitProfile lp = regime_profile(c, regime, sigma);
    json j = {{"config", config_json(cfg, *dom)},
              {"equilibrium", equilibrium_json(ee)},
              {"profile", profile_json(lp)},
              {"metrics", metrics_json(compare(ee, lp, c, cfg.erosion_cells))}};
    OutputBundle b;
    b.files["compare.json"] = dump(j);
    return b;
  });
}

std::vector<double> parse_values(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string item(text.substr(pos, end - pos));
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size())
        throw ConfigError("cannot parse value '" + item + "'");
      out.push_back(v);
    } else if (end != text.size() || pos != 0) {
      throw ConfigError("empty entry in value list");
    }
    pos = end + 1;
  }
  return out;
}

}  // namespace sisrd
