#pragma once

// Scenario files: a JSON description of one pinning experiment, the built-in
// experiments, and the check/run drivers used by pinctl.
//
// Node indices in scenario files and reports are 1-based.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pinning/conditions.hpp"
#include "pinning/model.hpp"
#include "pinning/simulate.hpp"

namespace pinning {

struct DynamicsSpec {
  std::string kind;
  std::map<std::string, double> params;
};

struct CouplingFunctionSpec {
  std::string kind = "identity";  ///< "identity" or "sine"
  std::optional<double> amplitude;
};

struct PinSpec {
  std::size_t node = 1;  ///< 1-based
  double epsilon = 0.0;
};

struct CertificateSpec {
  Vector p;
  Vector delta;
  double eta = 0.0;
  /// Half-width of the cube used by the sampled QUAD check.
  std::optional<double> box;
};

struct IntegrationSpec {
  double dt = 1e-3;
  double t_max = 20.0;
  std::optional<std::size_t> stride;
};

struct OutputSpec {
  std::optional<std::string> dir;
  std::optional<std::string> trajectory;
  std::optional<std::string> metrics;
  std::optional<std::string> summary;
};

struct AnalysisSpec {
  std::optional<std::pair<double, double>> decay_window;
  std::optional<double> tol_rate;
};

struct ScenarioConfig {
  std::string name;
  std::optional<std::string> description;
  /// Set when the coupling was given by built-in id.
  std::optional<std::string> coupling_id;
  Matrix coupling;
  double coupling_strength = 0.0;
  DynamicsSpec dynamics;
  CouplingFunctionSpec coupling_function;
  std::optional<PinSpec> pin;
  std::optional<CertificateSpec> certificate;
  StateMatrix initial_states;
  Vector reference_initial;
  IntegrationSpec integration;
  OutputSpec outputs;
  AnalysisSpec analysis;

  std::filesystem::path output_dir() const;
  std::string trajectory_file() const;
  std::string metrics_file() const;
  std::string summary_file() const;
  std::pair<double, double> decay_window() const;
  double tol_rate() const;
  std::size_t stride() const;
};

/// Built-in coupling matrices by id.
std::vector<std::string> builtin_coupling_ids();
std::optional<Matrix> builtin_coupling(const std::string& id);

std::vector<std::string> builtin_scenario_ids();
/// JSON text of a built-in scenario.
std::optional<std::string> builtin_scenario_text(const std::string& id);

/// Parses and validates scenario JSON. Throws ValidationError naming the
/// field; `source` prefixes every message.
ScenarioConfig parse_scenario_text(const std::string& text, const std::string& source);

/// `path_or_id` is a file path or a built-in scenario id.
ScenarioConfig parse_scenario(const std::string& path_or_id);

/// JSON text with exactly the fields present in `cfg`.
std::string serialize_scenario(const ScenarioConfig& cfg);

/// Throws ValidationError on inconsistent dimensions or values.
void validate_scenario(const ScenarioConfig& cfg);

Dynamics build_dynamics(const ScenarioConfig& cfg);
CouplingFunction build_coupling_function(const ScenarioConfig& cfg);
std::optional<PinPlan> build_pin(const ScenarioConfig& cfg);
std::optional<QuadCertificate> build_certificate(const ScenarioConfig& cfg);
NetworkSystem build_system(const ScenarioConfig& cfg);

struct CheckOptions {
  /// Pairs for the sampled QUAD check; 0 skips it.
  std::size_t quad_samples = 0;
  std::uint64_t seed = 1;
};

struct ConditionReport {
  bool symmetric = false;
  bool irreducible = false;
  bool pinned = false;
  std::optional<SpectralVerdict> proposition1;
  std::optional<Verdict> theorem1;
  std::optional<Verdict> theorem2;
  std::optional<Verdict> theorem3;
  std::optional<SpectralVerdict> theorem4;
  std::optional<ReducibleVerdict> reducible;
  std::optional<CouplingStrength> min_strength;
  std::optional<double> quad_eta_norm;
  std::optional<double> quad_eta_tight;
  std::optional<SampledQuadResult> quad_sampled;
  /// The check that decides pinnability for this scenario.
  std::optional<Verdict> governing;
  std::string governing_name;
  /// Weights for the Lyapunov function (xi in the asymmetric case).
  std::optional<Vector> lyapunov_weights;
  std::vector<std::string> notes;

  bool conditions_hold() const { return governing && governing->holds; }
};

/// Runs the applicable chain of checks. Never touches the filesystem.
ConditionReport check_scenario(const ScenarioConfig& cfg, const CheckOptions& options = {});

/// Plain-text rendering of a report.
std::string render_report(const ScenarioConfig& cfg, const ConditionReport& report);

struct RunOptions {
  bool write_files = true;
  /// Run the dt / dt/2 endpoint comparison over min(t_max, 10).
  bool step_check = true;
};

struct RunResult {
  ConditionReport conditions;
  Trajectory trajectory;
  MetricSeries metrics;
  std::optional<LyapunovReport> lyapunov;
  std::optional<double> decay_rate;
  std::optional<double> final_sync_ratio;
  std::optional<double> final_pin_ratio;
  std::optional<double> step_halving;
  bool diverged = false;
  std::string divergence;
  std::string summary;
  std::vector<std::filesystem::path> files;
};

/// Integrates the scenario, computes metrics, and writes the trajectory,
/// metrics and summary files under cfg.output_dir(). Divergence is reported
/// in the result (diverged = true) with the partial trajectory written.
RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& options = {});

/// `t,node,x1..xn`, one row per node and sample, 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
/// `t,sync_ratio,pin_ratio,lyapunov`; undefined ratios print as nan.
void write_metrics_csv(std::ostream& out, const MetricSeries& series);

struct SweepPoint {
  double c = 0.0;
  std::optional<Verdict> verdict;
  std::optional<double> final_pin_ratio;
  bool diverged = false;
};

/// Re-evaluates the scenario at each coupling strength. With `simulate` set
/// each point is also integrated (concurrently; results keep input order).
std::vector<SweepPoint> sweep_coupling_strength(const ScenarioConfig& cfg,
                                                const std::vector<double>& values, bool simulate);

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);

}  // namespace pinning
