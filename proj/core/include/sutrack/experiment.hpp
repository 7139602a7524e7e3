#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sutrack/process.hpp"
#include "sutrack/tracking.hpp"

namespace sutrack {

/// Grid of tracking configurations: the cartesian product of the axes below.
/// Every (s, p) pair must satisfy p | s; set p_all_divisors to sweep p over
/// the divisors of each s instead of listing values.
struct ExperimentSpec {
  std::vector<double> alphas{0.9};
  std::vector<double> sigma2s{1.0};
  std::vector<int> dims{8};
  std::vector<double> rates{1.0};
  std::vector<int> sampling_periods{4};
  std::vector<int> update_periods{1};
  bool p_all_divisors = false;
  std::vector<QuantizerSpec> quantizers{QuantizerSpec{}};
  Innovation innovation;
  int trials = 100;
  int horizon = 1000;
  std::uint64_t master_seed = 1;
  bool store_traces = false;
  int profile_trials = 2000;
  int profile_shells = 8;
  int codebook_cap_bits = 20;

  void validate() const;
};

/// Aggregated results for one grid point, with the matching theory columns.
struct SummaryRow {
  double alpha = 0.9;
  double sigma2 = 1.0;
  int n = 1;
  double rate = 1.0;
  int s = 1;
  int p = 1;
  QuantizerSpec quantizer;
  int trials = 0;
  int horizon = 0;
  std::string key;  // canonical parameter string; also the seed-derivation tag

  double mean_dbar = 0.0;
  double stderr_dbar = 0.0;
  double mean_delta = 0.0;
  double stderr_delta = 0.0;
  double beta_hat_sq = 0.0;  // fraction of trials with a failure before the horizon

  double theta_hat = 0.0;  // measured profile used for the prediction columns
  double eps_hat = 0.0;

  double delta0_g = 0.0;              // achievable/converse accuracy at this (alpha, R, s)
  double converse_floor = 0.0;        // sigma2 (1 - delta0 g)
  double gamma_pred_accuracy = 0.0;   // g(s) * Gamma(p) with the measured profile
  int lemma3_violations = 0;          // per-slot mean distortion above the bound + 3 SE

  bool skipped = false;
  std::string skip_reason;
};

using TrialSink = std::function<void(const SummaryRow& point, const TrialResult& trial)>;

/// Runs `spec.trials` independent tracking runs per grid point. Seeds derive
/// from (master_seed, canonical key, trial index), so results are invariant
/// to grid ordering. Infeasible points (codebook cap, fractional budgets)
/// become skipped rows instead of errors.
std::vector<SummaryRow> run_experiment(const ExperimentSpec& spec, const TrialSink& sink = {});

struct CompareRow {
  std::string key;
  bool simulated = false;
  double delta_hat = 0.0;
  double gamma_pred = 0.0;
  double delta_gap = 0.0;  // delta_hat - gamma_pred, simulated rows only
  double converse_floor = 0.0;
  bool converse_violation = false;  // mean_dbar < floor - 3 SE: implementation bug
  int lemma3_violations = 0;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  int converse_violations = 0;
  int lemma3_violation_rows = 0;
};

/// Theory-vs-simulation gaps and hard-bound violation flags per row.
CompareReport compare_report(std::span<const SummaryRow> rows);

/// Canonical parameter key for a grid point, stable across reorderings.
std::string grid_key(const SummaryRow& row, const Innovation& innovation);

}  // namespace sutrack
