#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sisrd/asymptotics.hpp"
#include "sisrd/dynamics.hpp"
#include "sisrd/equilibrium.hpp"

namespace sisrd {

inline constexpr int kSchemaVersion = 1;

/// A formula given as text in the config, kept next to its parse.
struct Formula {
  std::string text;
  Expr expr;

  static Formula parse(std::string text);
};

/// Everything needed to run one scenario. Parsed completely (all formulas
/// included) before any computation starts.
struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  std::string name;
  std::string comment;
  DomainSpec domain;
  Formula beta, gamma, eta, lambda;
  double d_S = 1.0, d_I = 1.0, p = 1.0, q = 1.0;
  Formula S0, I0;
  StopRule stop = EeOptions::default_stop();
  bool newton = true;
  std::vector<double> mask_deltas{1e-2, 1e-4};
  /// Cells removed from the predicted vanishing set before measuring I.
  std::size_t erosion_cells = 2;
  /// I below this counts as zero infection in collar checks.
  double zero_infection_threshold = 1e-3;
  /// Write measured seconds into sweep tables (0 otherwise, keeping output
  /// byte-identical across runs).
  bool record_wall_time = false;
  std::string output_dir;

  static ScenarioConfig parse(std::string_view json_text);
  static ScenarioConfig load(const std::filesystem::path& path);

  DomainPtr build_domain() const;
  CoefficientSet coefficients(const DomainPtr& dom) const;
  CoefficientSet coefficients() const { return coefficients(build_domain()); }
  SimState initial_state(const DomainPtr& dom) const;
  EeOptions ee_options() const;
  /// True when every coefficient formula is a smooth expression.
  bool smooth_coefficients() const;
};

/// Named output files, written together or not at all.
struct OutputBundle {
  std::map<std::string, std::string> files;
};

/// Writes every file of the bundle into `dir` (created if missing). On any
/// failure the files already written are removed.
void write_bundle(const std::filesystem::path& dir, const OutputBundle& bundle);

struct ScenarioOutcome {
  EquilibriumResult ee;
  DiagnosticsReport diagnostics;
  std::optional<AuditReport> audit;
  std::optional<double> R0;
  double lambda0 = 0.0;
  /// p = 1 only: Ω̃ = {S̃ > h^{1/q}} is empty.
  bool omega_tilde_empty = false;
  std::map<std::string, NodeMask> masks;
  OutputBundle bundle;
};

/// DFE, endemic equilibrium, R0 (p = 1), λ0, diagnostics, bounds audit and
/// indicator masks {h^{1/q} - S < δ}. Files: S.csv, I.csv, dfe.csv,
/// infected_mass.csv, mask_delta_<δ>.csv, summary.json and, for smooth
/// coefficients, coincidence_density.csv.
ScenarioOutcome run_scenario(const ScenarioConfig& cfg);

/// Time-dependent run from the configured initial data to stop.t_final.
/// Files: S.csv, I.csv, trace.csv, summary.json.
OutputBundle simulate(const ScenarioConfig& cfg);

struct CompareMetrics {
  /// "fields": distances to predicted (S, I).
  /// "classification": S columns measure (S - h^{1/q})_+, I columns measure
  ///   I over the eroded predicted vanishing set.
  /// "envelope": distances outside the emitted lower/upper envelopes.
  std::string kind;
  double S_sup = 0.0;
  double I_sup = 0.0;
  double S_L1 = 0.0;
  double I_L1 = 0.0;
  std::size_t vanishing_interior_nodes = 0;

  /// max(S_sup, I_sup).
  double headline() const;
};

/// Distances between a computed equilibrium and a predicted limit. Throws
/// DomainMismatch when the domains differ.
CompareMetrics compare(const EquilibriumResult& ee, const LimitProfile& lp,
                       const CoefficientSet& c, std::size_t erosion_cells = 2);

/// Observed zero-infection set {I < threshold} against a predicted set,
/// ignoring disagreements inside a collar of `collar` cells around the
/// predicted set's edge.
struct CollarCheck {
  std::size_t predicted = 0;
  std::size_t observed = 0;
  std::size_t mismatches = 0;  // outside the collar
  bool passed = false;
};
CollarCheck zero_infection_collar(const ScalarField& I, const NodeMask& predicted,
                                  double threshold, std::size_t collar);

enum class SweepRegime { DI, DS, Both };
SweepRegime parse_regime(std::string_view s);
std::string_view regime_label(SweepRegime r);

struct SweepRecord {
  double d_S = 0.0, d_I = 0.0, sigma = 0.0;
  double dist_S_sup = 0.0, dist_I_sup = 0.0, dist_S_L1 = 0.0, dist_I_L1 = 0.0;
  double R0 = std::numeric_limits<double>::quiet_NaN();
  double gap = 0.0;
  double seconds = 0.0;
  bool ok = true;
  bool endemic = false;
  std::string error;
  CompareMetrics metrics;
  EquilibriumResult ee;
};

struct SweepTable {
  SweepRegime regime = SweepRegime::DI;
  double sigma = std::numeric_limits<double>::quiet_NaN();
  std::vector<SweepRecord> records;
  LimitProfile oracle;  // last oracle used
  /// Headline distance nonincreasing up to 10% slack over successful rows.
  bool trend_ok = true;
  /// dI regime with p = 1: R0 nondecreasing as d_I decreases.
  std::optional<bool> r0_monotone;

  std::string to_csv() const;
  std::string summary_json() const;
};

inline constexpr std::string_view kSweepHeader =
    "d_S,d_I,sigma,dist_S_sup,dist_I_sup,dist_S_L1,dist_I_L1,R0,gap,seconds";

/// Nonincreasing with relative slack; values below `floor` count as zero.
bool trend_nonincreasing(const std::vector<double>& d, double slack = 0.1, double floor = 1e-9);

/// Solve the EE for each value (a decreasing positive sequence) and compare
/// with the regime's limit profile:
///   DI:   d_I = value, d_S from the config
///   DS:   d_S = value, d_I from the config
///   Both: d_I = value, d_S = value/σ
/// Each solve is warm-started from the previous equilibrium. A failed row
/// records its error and the sweep continues.
SweepTable sweep(const ScenarioConfig& cfg, SweepRegime regime, const std::vector<double>& values,
                 std::optional<double> sigma = std::nullopt);

/// Limit profile for a regime at the config's diffusion rates.
LimitProfile regime_profile(const CoefficientSet& c, SweepRegime regime,
                            std::optional<double> sigma);

/// Profile fields and masks plus, when the both-regime sequences apply,
/// per-iterate gaps of the monotone sequences. Files: profile.json and CSVs.
OutputBundle asymptotics_bundle(const ScenarioConfig& cfg, SweepRegime regime,
                                std::optional<double> sigma);

/// Equilibrium plus bounds audit and diagnostics as audit.json.
OutputBundle audit_bundle(const ScenarioConfig& cfg);

/// Equilibrium against the regime's profile as compare.json.
OutputBundle compare_bundle(const ScenarioConfig& cfg, SweepRegime regime,
                            std::optional<double> sigma);

/// Parse a comma separated list of numbers ("1e-1,1e-2").
std::vector<double> parse_values(std::string_view text);

}  // namespace sisrd
