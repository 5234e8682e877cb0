// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sisrd/asymptotics.hpp"
#include "sisrd/harness.hpp"
#include "sisrd/spectral.hpp"

using namespace sisrd;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json scenario_json(const std::string& file) {
  return json::parse(slurp(fs::path(SISRD_SCENARIO_DIR) / file));
}

ScenarioConfig config(const json& j) { return ScenarioConfig::parse(j.dump()); }

json constant_json(const std::string& name, double beta, double gamma, double eta, double lambda,
                   double p, double q, double d_S = 1.0, double d_I = 1.0) {
  return {{"schema_version", 1},
          {"name", name},
          {"domain", {{"kind", "interval"}, {"bounds", {0, 1}}, {"nodes", 65}}},
          {"coefficients", {{"beta", beta}, {"gamma", gamma}, {"eta", eta}, {"lambda", lambda}}},
          {"parameters", {{"d_S", d_S}, {"d_I", d_I}, {"p", p}, {"q", q}}}};
}

struct BatteryEntry {
  ScenarioConfig cfg;
  ScenarioOutcome out;
};

// Scenario battery: shipped configs plus variants, p = 1 entries first.
std::vector<json> battery_configs() {
  std::vector<json> v;
  v.push_back(scenario_json("constant_p1.json"));
  v.push_back(scenario_json("disease_free.json"));
  v.push_back(scenario_json("scenario1.json"));
  v.push_back(scenario_json("scenario2.json"));
  v.push_back(constant_json("subcritical", 1.0, 0.5, 0.5, 0.5, 1.0, 1.0));
  v.push_back(constant_json("sqrt_incidence_p1", 2.0, 0.5, 1.5, 4.0, 1.0, 0.5, 0.2, 0.05));
  {
    json j = constant_json("cosine_beta_low", 1.0, 0.5, 0.5, 0.6, 1.0, 1.0, 0.5, 0.05);
    j["coefficients"]["beta"] = "1 + 0.5*cos(pi*x)";
    v.push_back(j);
  }
  {
    json j = constant_json("cosine_beta_high", 1.0, 0.5, 0.5, 1.2, 1.0, 1.0, 0.5, 0.05);
    j["coefficients"]["beta"] = "1 + 0.5*cos(pi*x)";
    v.push_back(j);
  }
  {
    json j = scenario_json("scenario1.json");
    j["name"] = "scenario1_sparse_recruitment";
    j["domain"]["cells"] = 32;
    j["coefficients"]["lambda"] = "0.2";
    v.push_back(j);
  }
  {
    json j = scenario_json("scenario1.json");
    j["name"] = "scenario1_fast_infected";
    j["domain"]["cells"] = 32;
    j["coefficients"]["lambda"] = "0.3";
    j["parameters"]["d_I"] = 1.0;
    v.push_back(j);
  }
  v.push_back(scenario_json("constant_phalf.json"));
  v.push_back(scenario_json("interval_phalf.json"));
  v.push_back(constant_json("golden_phalf", 1.5, 0.5, 1.0, 1.0, 0.5, 1.0));
  {
    json j = scenario_json("scenario1.json");
    j["name"] = "scenario1_phalf";
    j["domain"]["cells"] = 32;
    j["parameters"]["p"] = 0.5;
    v.push_back(j);
  }
  return v;
}

class Gate {
 public:
  void check(int id, const std::string& title, const std::function<Verdict()>& body) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      v = body();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures_;
    std::printf("%s criterion %d: %s | %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", id,
                title.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

// Cached expensive computations shared between criteria.
struct Shared {
  std::vector<BatteryEntry> battery;
  std::optional<SweepTable> scenario1_dI;
  std::optional<SweepTable> interval_dI;
  std::optional<SweepTable> constant_both;
  std::optional<SweepTable> scenario1_both;

  const std::vector<BatteryEntry>& get_battery() {
    if (battery.empty())
      for (const json& j : battery_configs()) {
        ScenarioConfig cfg = config(j);
        battery.push_back({cfg, run_scenario(cfg)});
      }
    return battery;
  }
  const SweepTable& get_scenario1_dI() {
    if (!scenario1_dI)
      scenario1_dI = sweep(config(scenario_json("scenario1.json")), SweepRegime::DI,
                           {1e-1, 1e-2, 1e-3});
    return *scenario1_dI;
  }
  const SweepTable& get_interval_dI() {
    if (!interval_dI)
      interval_dI = sweep(config(scenario_json("interval_phalf.json")), SweepRegime::DI,
                          {1e-1, 1e-2, 1e-3, 1e-4});
    return *interval_dI;
  }
  const SweepTable& get_constant_both() {
    if (!constant_both)
      constant_both = sweep(config(scenario_json("constant_p1.json")), SweepRegime::Both,
                            {1e-1, 1e-2, 1e-3}, 2.0);
    return *constant_both;
  }
  const SweepTable& get_scenario1_both() {
    if (!scenario1_both)
      scenario1_both = sweep(config(scenario_json("scenario1.json")), SweepRegime::Both,
                             {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}, 2.0);
    return *scenario1_both;
  }
  std::vector<const SweepTable*> sweeps() {
    return {&get_scenario1_dI(), &get_interval_dI(), &get_constant_both(), &get_scenario1_both()};
  }
};

bool all_ok(const SweepTable& t, std::string& why) {
  for (const auto& r : t.records)
    if (!r.ok) {
      why = r.error;
      return false;
    }
  return true;
}

std::string distances(const SweepTable& t) {
  std::string s;
  for (const auto& r : t.records) s += (s.empty() ? "" : ", ") + fmt("%.3e", r.metrics.headline());
  return "[" + s + "]";
}

Verdict c1_conservation(Shared& sh) {
  double worst = 0.0, worst_const = 0.0;
  std::size_t count = 0;
  for (const auto& b : sh.get_battery()) {
    worst = std::max(worst, b.out.ee.conservation_gap);
    const CoefficientSet c = b.cfg.coefficients(b.out.ee.S.domain());
    bool constant = true;
    for (const ScalarField* f : {&c.beta(), &c.gamma(), &c.eta(), &c.lambda()})
      constant = constant && f->min() == f->max();
    if (constant) worst_const = std::max(worst_const, b.out.ee.conservation_gap);
    ++count;
  }
  for (const SweepTable* t : sh.sweeps())
    for (const auto& r : t->records)
      if (r.ok) {
        worst = std::max(worst, r.gap);
        ++count;
      }
  return {worst <= 1e-6 && worst_const <= 1e-12,
          std::to_string(count) + " equilibria, max gap " + fmt("%.2e", worst) +
              ", constant-coefficient max " + fmt("%.2e", worst_const)};
}

Verdict c2_mass_action(Shared& sh) {
  const auto& b = sh.get_battery().front();
  const auto dom = b.out.ee.S.domain();
  double d = std::max(sup_distance(b.out.ee.S, ScalarField(dom, 1.0)),
                      sup_distance(b.out.ee.I, ScalarField(dom, 2.0)));
  return {d <= 1e-6, "sup distance to (1, 2) = " + fmt("%.2e", d)};
}

Verdict c3_saturating(Shared&) {
  // Stated parameters: S = sqrt(I) and S + I/2 = 1, so sqrt(I) = sqrt(3) - 1.
  auto cfg = config(scenario_json("constant_phalf.json"));
  auto dom = cfg.build_domain();
  auto e = find_ee(cfg.coefficients(dom), cfg.initial_state(dom), cfg.ee_options());
  const double s = std::sqrt(3.0) - 1.0;
  double d1 = std::max(sup_distance(e.S, ScalarField(dom, s)),
                       sup_distance(e.I, ScalarField(dom, s * s)));
  // With eta = 1 and h = 1 the relation is I + sqrt(I) = 1.
  auto g = config(constant_json("golden", 1.5, 0.5, 1.0, 1.0, 0.5, 1.0));
  auto gd = g.build_domain();
  auto eg = find_ee(g.coefficients(gd), g.initial_state(gd), g.ee_options());
  double d2 = std::max(sup_distance(eg.S, ScalarField(gd, 0.618034)),
                       sup_distance(eg.I, ScalarField(gd, 0.381966)));
  return {d1 <= 1e-5 && d2 <= 1e-5,
          "eta=0.5: (S, I) = (" + fmt("%.6f", e.S[0]) + ", " + fmt("%.6f", e.I[0]) +
              "), distance to (sqrt3-1, 4-2sqrt3) " + fmt("%.1e", d1) +
              "; eta=1, h=1: distance to (0.618034, 0.381966) " + fmt("%.1e", d2)};
}

Verdict c4_r0(Shared& sh) {
  auto d = build_domain(DomainSpec::rectangle(0, 1, 0, 1, 17, 17));
  double err = 0.0;
  for (auto [beta, gamma, eta, lam, q] :
       {std::tuple{1.0, 0.5, 0.5, 2.0, 1.0}, std::tuple{2.0, 0.5, 1.5, 4.0, 0.5},
        std::tuple{0.7, 0.2, 0.3, 3.0, 2.0}}) {
    for (double dI : {1e-3, 1.0}) {
      auto c = CoefficientSet::constant(d, beta, gamma, eta, lam, 0.3, dI, 1.0, q);
      err = std::max(err, std::abs(compute_R0(c).eigenvalue - beta * std::pow(lam, q) / (gamma + eta)));
    }
  }
  // R0 along d_I sweeps.
  auto s1 = config(scenario_json("scenario1.json"));
  auto dom = s1.build_domain();
  auto base = s1.coefficients(dom);
  std::vector<double> r0;
  for (double dI : {1e-1, 1e-2, 1e-3, 1e-4})
    r0.push_back(compute_R0(base.with_diffusion(1.0, dI)).eigenvalue);
  bool mono = true;
  for (std::size_t i = 1; i < r0.size(); ++i) mono = mono && r0[i] >= r0[i - 1] - 1e-9;
  const auto& t = sh.get_scenario1_dI();
  mono = mono && t.r0_monotone.value_or(false);
  // Threshold battery.
  std::size_t n = 0, agree = 0;
  std::string bad;
  for (const auto& b : sh.get_battery()) {
    if (!b.out.R0) continue;
    ++n;
    if (b.out.ee.endemic == (*b.out.R0 > 1.0)) ++agree;
    else bad += " " + b.cfg.name;
  }
  return {err <= 1e-6 && mono && n >= 10 && agree == n,
          "constant max error " + fmt("%.1e", err) + ", R0(d_I) " + fmt("%.4f", r0[0]) + " -> " +
              fmt("%.4f", r0.back()) + (mono ? " monotone" : " NOT monotone") + ", threshold " +
              std::to_string(agree) + "/" + std::to_string(n) + bad};
}

Verdict c5_lambda0(Shared&) {
  auto d = build_domain(DomainSpec::rectangle(0, 1, 0, 1, 17, 17));
  double err = 0.0;
  for (auto [beta, gamma, eta, lam, q] :
       {std::tuple{1.0, 0.5, 0.5, 2.0, 1.0}, std::tuple{2.0, 0.5, 1.5, 4.0, 0.5},
        std::tuple{0.7, 0.2, 0.3, 3.0, 2.0}}) {
    auto c = CoefficientSet::constant(d, beta, gamma, eta, lam, 1.0, 0.2, 1.0, q);
    err = std::max(err, std::abs(compute_lambda0(c).eigenvalue +
                                 (beta * std::pow(lam, q) - gamma - eta)));
  }
  return {err <= 1e-8, "max error " + fmt("%.1e", err)};
}

Verdict c6_dI_saturating(Shared& sh) {
  const auto& t = sh.get_interval_dI();
  std::string why;
  if (!all_ok(t, why)) return {false, "sweep row failed: " + why};
  double last = t.records.back().metrics.headline();
  return {t.trend_ok && last < 5e-2, "distances " + distances(t) +
                                         (t.trend_ok ? " nonincreasing" : " NOT nonincreasing")};
}

Verdict c7_both(Shared& sh) {
  const auto& tc = sh.get_constant_both();
  const auto& ts = sh.get_scenario1_both();
  std::string why;
  if (!all_ok(tc, why) || !all_ok(ts, why)) return {false, "sweep row failed: " + why};
  const double last = tc.records.back().metrics.headline();
  auto cfg = config(scenario_json("scenario1.json"));
  auto dom = ts.records.back().ee.I.domain();
  auto c = cfg.coefficients(dom);
  auto lp = limit_both_p1(c, 2.0);
  auto collar = zero_infection_collar(ts.records.back().ee.I, lp.masks.at("no_infection"),
                                      cfg.zero_infection_threshold, 2);
  return {tc.trend_ok && ts.trend_ok && last < 5e-2 && collar.passed,
          "constant " + distances(tc) + ", scenario1 " + distances(ts) +
              ", zero-infection set " + std::to_string(collar.observed) + " vs predicted " +
              std::to_string(collar.predicted) + " with " + std::to_string(collar.mismatches) +
              " mismatches outside the 2-cell collar"};
}

Verdict c8_vanishing(Shared& sh) {
  const BatteryEntry* s1 = nullptr;
  for (const auto& b : sh.get_battery())
    if (b.cfg.name == "scenario1") s1 = &b;
  if (!s1) return {false, "scenario1 missing from battery"};
  auto c = s1->cfg.coefficients(s1->out.ee.S.domain());
  auto m = compare(s1->out.ee, classify_dI0_p1(c), c, 2);
  auto mask = coincidence_mask(c, s1->out.ee.S, 1e-2);
  const DiscreteDomain& dom = *c.domain();
  auto hit = [&](double x, double y) {
    const std::size_t k = dom.nearest_node({x, y});
    if (mask[k]) return true;
    for (std::size_t j : dom.neighbors()[k])
      if (mask[j]) return true;
    return false;
  };
  bool a = hit(0.5, 0.5), b = hit(-0.5, -0.5);
  return {m.I_sup < 1e-2 && a && b,
          "interior max I over vanishing set " + fmt("%.2e", m.I_sup) + " on " +
              std::to_string(m.vanishing_interior_nodes) + " nodes; mask near (0.5,0.5) " +
              (a ? "yes" : "no") + ", near (-0.5,-0.5) " + (b ? "yes" : "no")};
}

// Per-node bisection root of Λ = (η/σ) v + H (v/σ)^e.
ScalarField sequence_oracle_plt1(const CoefficientSet& c, double sigma) {
  const ScalarField H = c.risk_root();
  const double e = (1.0 - c.p()) / c.q();
  ScalarField v(c.domain());
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double eta = c.eta()[k], h = H[k];
    auto g = [&](double t) { return eta / sigma * t + h * std::pow(t / sigma, e); };
    v[k] = solve_increasing(g, 0.0, sigma * c.lambda()[k] / eta + 1.0, c.lambda()[k]);
  }
  return v;
}

Verdict c9_sequences(Shared&) {
  const double sigma = 2.0;
  struct Case {
    std::string name;
    CoefficientSet c;
  };
  auto d1 = build_domain(DomainSpec::interval(0, 1, 9));
  auto s1 = config(scenario_json("scenario1.json"));
  auto dd = s1.build_domain();
  auto base = s1.coefficients(dd);
  std::vector<Case> p1 = {
      {"constant", CoefficientSet::constant(d1, 1.5, 0.5, 1.0, 2.0, 1e-3, 2e-3, 1.0, 1.0)},
      {"scenario1", base}};
  std::vector<Case> plt1 = {
      {"constant", CoefficientSet::constant(d1, 1.5, 0.5, 1.0, 1.0, 1e-3, 2e-3, 0.5, 1.0)},
      {"scenario1", CoefficientSet(base.beta(), base.gamma(), base.eta(), base.lambda(), 1e-3,
                                   2e-3, 0.5, 0.5)}};
  bool ok = true;
  double worst_gap = 0.0, worst_oracle = 0.0;
  std::size_t iters = 0;
  auto judge = [&](const MonotoneSequence& inc, const MonotoneSequence& dec, const ScalarField& ov,
                   const ScalarField& ou) {
    ok = ok && inc.converged && dec.converged && inc.is_monotone() && dec.is_monotone();
    worst_gap = std::max({worst_gap, sup_distance(inc.v.back(), dec.v.back()),
                          sup_distance(inc.u.back(), dec.u.back())});
    for (const auto* s : {&inc, &dec})
      worst_oracle = std::max({worst_oracle, sup_distance(s->v.back(), ov),
                               sup_distance(s->u.back(), ou)});
    iters = std::max({iters, inc.v.size(), dec.v.size()});
  };
  for (const auto& cs : p1) {
    auto inc = monotone_seq_p1(cs.c, sigma, 100000, Direction::Increasing);
    auto dec = monotone_seq_p1(cs.c, sigma, 100000, Direction::Decreasing);
    const ScalarField H = cs.c.risk_root();
    ScalarField ov(cs.c.domain()), ou(cs.c.domain());
    for (std::size_t k = 0; k < ov.size(); ++k) {
      const double lam = cs.c.lambda()[k];
      auto g = [&](double t) {  // v = σ/η (Λ + (1 - η/σ) v - H)_+ rearranged
        return t - std::max(lam + (1.0 - cs.c.eta()[k] / sigma) * t - H[k], 0.0);
      };
      ov[k] = solve_increasing(g, 0.0, sigma * lam / cs.c.eta()[k] + 1.0, 0.0);
      ou[k] = lam + (1.0 - cs.c.eta()[k] / sigma) * ov[k];
    }
    judge(inc, dec, ov, ou);
  }
  for (const auto& cs : plt1) {
    auto inc = monotone_seq_plt1(cs.c, sigma, 100000, Direction::Increasing);
    auto dec = monotone_seq_plt1(cs.c, sigma, 100000, Direction::Decreasing);
    ScalarField ov = sequence_oracle_plt1(cs.c, sigma), ou(cs.c.domain());
    for (std::size_t k = 0; k < ov.size(); ++k)
      ou[k] = cs.c.lambda()[k] + (1.0 - cs.c.eta()[k] / sigma) * ov[k];
    judge(inc, dec, ov, ou);
  }
  ok = ok && worst_gap <= 1e-8 && worst_oracle <= 1e-10;
  return {ok, "increasing/decreasing gap " + fmt("%.1e", worst_gap) + ", oracle distance " +
                  fmt("%.1e", worst_oracle) + ", up to " + std::to_string(iters) + " iterates"};
}

Verdict c10_audit(Shared& sh) {
  std::size_t n = 0, passed = 0;
  std::string bad;
  for (const auto& b : sh.get_battery()) {
    if (!b.out.ee.endemic) continue;
    ++n;
    if (b.out.audit && b.out.audit->all_passed()) ++passed;
    else bad += " " + b.cfg.name;
  }
  for (const SweepTable* t : sh.sweeps())
    for (const auto& r : t->records) {
      if (!r.ok || !r.endemic) continue;
      auto cfg = config(scenario_json(t == sh.sweeps()[1] ? "interval_phalf.json"
                                      : t == sh.sweeps()[2] ? "constant_p1.json"
                                                            : "scenario1.json"));
      auto c = cfg.coefficients(r.ee.S.domain()).with_diffusion(r.d_S, r.d_I);
      ++n;
      if (bounds_audit(c, r.ee).all_passed()) ++passed;
      else bad += " " + cfg.name + "@d_I=" + fmt("%g", r.d_I);
    }
  auto d = build_domain(DomainSpec::interval(0, 1, 9));
  const double c0 =
      susceptible_floor_c0(CoefficientSet::constant(d, 1.0, 0.5, 1.0, 1.0, 0.7, 0.7, 0.5, 1.0));
  const double exact = (std::sqrt(2.0) - 1.0) / 2.0;
  const bool c0_ok = std::abs(c0 - exact) <= 1e-9 && std::abs(c0 - 0.207107) <= 5e-7;
  return {passed == n && n > 0 && c0_ok,
          std::to_string(passed) + "/" + std::to_string(n) + " equilibria within bounds" + bad +
              "; c0 = " + fmt("%.12f", c0) + " vs (sqrt2-1)/2 = " + fmt("%.12f", exact)};
}

Verdict c11_determinism(Shared&) {
  const fs::path root = fs::temp_directory_path() / "sisrd_acceptance_determinism";
  fs::remove_all(root);
  std::size_t files = 0;
  std::string diff;
  auto cmp_bundles = [&](const std::string& tag, const OutputBundle& a, const OutputBundle& b) {
    write_bundle(root / (tag + "_a"), a);
    write_bundle(root / (tag + "_b"), b);
    for (const auto& [name, _] : a.files) {
      ++files;
      if (slurp(root / (tag + "_a") / name) != slurp(root / (tag + "_b") / name))
        diff += " " + tag + "/" + name;
    }
    if (a.files.size() != b.files.size()) diff += " " + tag + "(file set)";
  };
  for (const char* f : {"constant_p1.json", "constant_phalf.json", "scenario1.json"}) {
    auto cfg = config(scenario_json(f));
    cmp_bundles(cfg.name, run_scenario(cfg).bundle, run_scenario(cfg).bundle);
  }
  auto cc = config(scenario_json("constant_p1.json"));
  auto t1 = sweep(cc, SweepRegime::Both, {1e-1, 1e-2}, 2.0);
  auto t2 = sweep(cc, SweepRegime::Both, {1e-1, 1e-2}, 2.0);
  cmp_bundles("sweep", {{{"sweep.csv", t1.to_csv()}, {"summary.json", t1.summary_json()}}},
               {{{"sweep.csv", t2.to_csv()}, {"summary.json", t2.summary_json()}}});
  auto ic = config(scenario_json("interval_phalf.json"));
  cmp_bundles("asymptotics", asymptotics_bundle(ic, SweepRegime::DI, std::nullopt),
               asymptotics_bundle(ic, SweepRegime::DI, std::nullopt));
  fs::remove_all(root);
  return {diff.empty(), std::to_string(files) + " files compared" +
                            (diff.empty() ? ", all byte-identical" : ", differing:" + diff)};
}

}  // namespace

int main() {
  Shared sh;
  Gate gate;
  gate.check(1, "conservation identity", [&] { return c1_conservation(sh); });
  gate.check(2, "constant EE p=1", [&] { return c2_mass_action(sh); });
  gate.check(3, "constant EE p=1/2", [&] { return c3_saturating(sh); });
  gate.check(4, "R0 checks", [&] { return c4_r0(sh); });
  gate.check(5, "lambda0 constant", [&] { return c5_lambda0(sh); });
  gate.check(6, "d_I -> 0 limit, p<1", [&] { return c6_dI_saturating(sh); });
  gate.check(7, "joint limit, p=1, sigma=2", [&] { return c7_both(sh); });
  gate.check(8, "d_I -> 0 vanishing, p=1", [&] { return c8_vanishing(sh); });
  gate.check(9, "monotone sequences", [&] { return c9_sequences(sh); });
  gate.check(10, "bounds audit", [&] { return c10_audit(sh); });
  gate.check(11, "determinism", [&] { return c11_determinism(sh); });
  std::printf("%s: %d of 11 criteria failed\n", gate.failures() ? "FAIL" : "PASS",
              gate.failures());
  return gate.failures() ? 1 : 0;
}
