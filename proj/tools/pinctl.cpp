// pinctl: check pinning conditions and simulate pinned networks from scenario
// files or built-in experiments.
//
// Exit codes: 0 success, 1 validation error, 2 conditions not satisfied (with
// --require-conditions), 3 divergence.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pinning/conditions.hpp"
#include "pinning/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitConditions = 2;
constexpr int kExitDivergence = 3;

struct CommonFlags {
  std::string scenario;
  std::optional<double> dt;
  std::optional<double> t_max;
  std::optional<double> c;
  std::optional<std::string> out;
  std::optional<std::string> sweep;
  bool require_conditions = false;
  bool dry_run = false;
  std::uint64_t seed = 1;
  std::size_t quad_samples = 0;
};

std::vector<double> parse_sweep(const std::string& spec) {
  // c=<a>:<b>:<n>
  const auto eq = spec.find('=');
  if (eq == std::string::npos || spec.substr(0, eq) != "c") {
    throw pinning::ValidationError("--sweep expects c=<a>:<b>:<n>, got '" + spec + "'");
  }
  const auto body = spec.substr(eq + 1);
  const auto first = body.find(':');
  const auto second = body.find(':', first == std::string::npos ? first : first + 1);
  if (first == std::string::npos || second == std::string::npos) {
    throw pinning::ValidationError("--sweep expects c=<a>:<b>:<n>, got '" + spec + "'");
  }
  double a = 0.0, b = 0.0;
  long n = 0;
  try {
    a = std::stod(body.substr(0, first));
    b = std::stod(body.substr(first + 1, second - first - 1));
    n = std::stol(body.substr(second + 1));
  } catch (const std::exception&) {
    throw pinning::ValidationError("--sweep: cannot parse '" + spec + "'");
  }
  if (n < 1 || !(b >= a) || !(a > 0.0)) {
    throw pinning::ValidationError("--sweep needs 0 < a <= b and n >= 1");
  }
  std::vector<double> values;
  for (long k = 0; k < n; ++k) {
    values.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
  }
  return values;
}

pinning::ScenarioConfig load(const CommonFlags& flags) {
  auto cfg = pinning::parse_scenario(flags.scenario);
  if (flags.dt) cfg.integration.dt = *flags.dt;
  if (flags.t_max) cfg.integration.t_max = *flags.t_max;
  if (flags.c) cfg.coupling_strength = *flags.c;
  if (flags.out) cfg.outputs.dir = *flags.out;
  pinning::validate_scenario(cfg);
  return cfg;
}

int write_sweep(const pinning::ScenarioConfig& cfg, const CommonFlags& flags, bool simulate) {
  const auto values = parse_sweep(*flags.sweep);
  const auto points = pinning::sweep_coupling_strength(cfg, values, simulate);
  const auto dir = cfg.output_dir();
  std::filesystem::create_directories(dir);
  const auto path = dir / "sweep.csv";
  std::ofstream out(path);
  pinning::write_sweep_csv(out, points);
  pinning::write_sweep_csv(std::cout, points);
  std::cout << "wrote " << path.string() << '\n';
  bool diverged = false;
  for (const auto& p : points) diverged = diverged || p.diverged;
  return diverged ? kExitDivergence : kExitOk;
}

int run_check(const CommonFlags& flags) {
  const auto cfg = load(flags);
  if (flags.dry_run) {
    std::cout << pinning::serialize_scenario(cfg) << '\n';
    return kExitOk;
  }
  if (flags.sweep) return write_sweep(cfg, flags, false);
  pinning::CheckOptions options;
  options.quad_samples = flags.quad_samples;
  options.seed = flags.seed;
  const auto report = pinning::check_scenario(cfg, options);
  std::cout << pinning::render_report(cfg, report);
  if (flags.require_conditions && !report.conditions_hold()) return kExitConditions;
  return kExitOk;
}

int run_run(const CommonFlags& flags) {
  const auto cfg = load(flags);
  if (flags.dry_run) {
    std::cout << pinning::serialize_scenario(cfg) << '\n';
    return kExitOk;
  }
  if (flags.require_conditions) {
    const auto report = pinning::check_scenario(cfg);
    if (!report.conditions_hold()) {
      std::cout << pinning::render_report(cfg, report);
      return kExitConditions;
    }
  }
  if (flags.sweep) return write_sweep(cfg, flags, true);
  const auto result = pinning::run_scenario(cfg);
  std::cout << result.summary;
  for (const auto& file : result.files) std::cout << "wrote " << file.string() << '\n';
  return result.diverged ? kExitDivergence : kExitOk;
}

// Proposition 1 over random symmetric pinned coupling matrices.
int run_fuzz(std::size_t cases, std::uint64_t seed) {
  std::size_t failures = 0;
  for (std::size_t k = 0; k < cases; ++k) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(k)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<int> size(2, 12);
    std::uniform_real_distribution<double> weight(0.0, 1.0);
    std::bernoulli_distribution edge(0.5);
    const int m = size(rng);
    pinning::Matrix a;
    do {
      a = pinning::Matrix::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
          if (edge(rng)) a(i, j) = a(j, i) = 1.0 - weight(rng);
        }
      }
      for (int i = 0; i < m; ++i) a(i, i) = -(a.row(i).sum() - a(i, i));
    } while (!pinning::scc_condensation(a).irreducible());
    const auto coupling = pinning::CouplingMatrix::validate(a);
    const double eps = 10.0 * (1.0 - weight(rng));
    const auto node = std::uniform_int_distribution<int>(0, m - 1)(rng);
    const auto res = pinning::proposition1_holds(
        pinning::pinned_matrix(coupling, static_cast<std::size_t>(node), eps));
    if (!res.verdict.holds) {
      ++failures;
      std::cout << fmt::format("case {}: m = {}, lambda1 = {:.6g}\n", k, m, res.report.lambda1);
    }
  }
  std::cout << fmt::format("proposition 1: {} of {} random pinned matrices negative definite\n",
                           cases - failures, cases);
  return failures == 0 ? kExitOk : kExitConditions;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("scenario", flags.scenario, "Scenario JSON file or built-in id")->required();
  cmd->add_option("--dt", flags.dt, "Override the integration step");
  cmd->add_option("--tmax", flags.t_max, "Override the integration horizon");
  cmd->add_option("--c", flags.c, "Override the coupling strength");
  cmd->add_option("--out", flags.out, "Output directory");
  cmd->add_option("--sweep", flags.sweep, "Coupling-strength sweep c=<a>:<b>:<n>");
  cmd->add_option("--seed", flags.seed, "Seed for sampled checks");
  cmd->add_flag("--require-conditions", flags.require_conditions,
                "Exit with 2 unless the governing condition holds");
  cmd->add_flag("--dry-run", flags.dry_run, "Validate and print the resolved scenario");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Check and simulate single-controller pinning of coupled networks"};
  app.require_subcommand(1);

  CommonFlags check_flags;
  auto* check = app.add_subcommand("check", "Evaluate the pinning conditions of a scenario");
  add_common(check, check_flags);
  check->add_option("--quad-samples", check_flags.quad_samples,
                    "Pairs for the sampled QUAD falsification check (0 = skip)");

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Simulate a scenario and write CSV outputs");
  add_common(run, run_flags);

  auto* list = app.add_subcommand("list", "List built-in scenarios and coupling matrices");

  std::size_t fuzz_cases = 1000;
  std::uint64_t fuzz_seed = 1;
  auto* fuzz = app.add_subcommand("fuzz", "Random-matrix check of proposition 1");
  fuzz->add_option("--cases", fuzz_cases, "Number of random matrices");
  fuzz->add_option("--seed", fuzz_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (check->parsed()) return run_check(check_flags);
    if (run->parsed()) return run_run(run_flags);
    if (fuzz->parsed()) return run_fuzz(fuzz_cases, fuzz_seed);
    if (list->parsed()) {
      std::cout << "scenarios:\n";
      for (const auto& id : pinning::builtin_scenario_ids()) std::cout << "  " << id << '\n';
      std::cout << "coupling matrices:\n";
      for (const auto& id : pinning::builtin_coupling_ids()) std::cout << "  " << id << '\n';
      return kExitOk;
    }
  } catch (const pinning::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const pinning::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const pinning::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
