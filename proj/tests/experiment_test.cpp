#include <doctest.h>

#include <cmath>

#include "sutrack/experiment.hpp"
#include "sutrack/io.hpp"
#include "sutrack/theory.hpp"

using namespace sutrack;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.alphas = {0.9};
  spec.sigma2s = {1.0};
  spec.dims = {4};
  spec.rates = {2.0};
  spec.sampling_periods = {2};
  spec.update_periods = {1};
  QuantizerSpec quant;
  quant.kind = QuantizerSpec::Kind::kGainShape;
  quant.gain_bits = 3;
  quant.shape_bits = -1;
  quant.m_over_sigma = 8.0;
  spec.quantizers = {quant};
  spec.trials = 10;
  spec.horizon = 200;
  spec.master_seed = 42;
  spec.profile_trials = 400;
  return spec;
}

}  // namespace

TEST_CASE("spec validation rejects non-divisor update periods") {
  ExperimentSpec spec = small_spec();
  spec.sampling_periods = {4};
  spec.update_periods = {3};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.p_all_divisors = true;
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("experiment aggregates and attaches theory columns") {
  const ExperimentSpec spec = small_spec();
  int trial_records = 0;
  const auto rows = run_experiment(
      spec, [&](const SummaryRow&, const TrialResult&) { ++trial_records; });
  REQUIRE(rows.size() == 1);
  CHECK(trial_records == 10);
  const SummaryRow& row = rows[0];
  CHECK_FALSE(row.skipped);
  CHECK(row.trials == 10);
  CHECK(row.mean_delta > 0.0);
  CHECK(row.mean_delta < 1.0);
  CHECK(row.stderr_delta > 0.0);
  CHECK(row.delta0_g ==
        doctest::Approx(eval_delta0(0.9, 2.0) * eval_g(0.9, 2)).epsilon(1e-12));
  CHECK(row.converse_floor == doctest::Approx(1.0 - row.delta0_g).epsilon(1e-12));
  // mean dbar respects the converse floor
  CHECK(row.mean_dbar >= row.converse_floor - 3.0 * row.stderr_dbar);
  // dominance bookkeeping stays at noise level
  CHECK(row.lemma3_violations <= spec.horizon / 100);
}

TEST_CASE("degenerate single-trial run on frozen process") {
  ExperimentSpec spec = small_spec();
  spec.trials = 1;
  spec.sigma2s = {1.0};
  // the quantizer sees a zero error vector only if the process is zero;
  // emulate via an explicit zero-trajectory tracking run instead
  ProcessParams params;
  params.alpha = 0.9;
  params.sigma2 = 0.0;
  params.n = 4;
  const Trajectory zero = generate(params, 50, 1);
  TrackingConfig cfg;
  cfg.rate = 2.0;
  cfg.s = 2;
  cfg.p = 1;
  cfg.horizon = 50;
  cfg.n = 4;
  cfg.alpha = 0.9;
  cfg.sigma2 = 1.0;
  cfg.quantizer = spec.quantizers[0];
  const TrialResult r = run_tracking(zero, cfg, 3);
  CHECK(r.delta_hat == 1.0);
  CHECK_FALSE(r.failed);
}

TEST_CASE("reproducibility: identical spec and seed give identical bytes") {
  const ExperimentSpec spec = small_spec();
  const Provenance prov{"0.1.0", experiment_spec_to_json(spec), spec.master_seed};

  const auto render = [&] {
    std::string jsonl = jsonl_header(prov);
    const auto rows = run_experiment(spec, [&](const SummaryRow& point, const TrialResult& trial) {
      jsonl += trial_record_jsonl(point, trial);
    });
    return jsonl + "\n---\n" + summary_csv(rows, prov);
  };
  CHECK(render() == render());
}

TEST_CASE("grid reordering does not change per-point results") {
  ExperimentSpec spec = small_spec();
  spec.sampling_periods = {2, 4};
  const auto rows_a = run_experiment(spec);
  spec.sampling_periods = {4, 2};
  const auto rows_b = run_experiment(spec);
  REQUIRE(rows_a.size() == 2);
  REQUIRE(rows_b.size() == 2);
  CHECK(rows_a[0].key == rows_b[1].key);
  CHECK(rows_a[0].mean_dbar == rows_b[1].mean_dbar);
  CHECK(rows_a[1].mean_dbar == rows_b[0].mean_dbar);
}

TEST_CASE("infeasible quantizer budgets become skipped rows") {
  ExperimentSpec spec = small_spec();
  QuantizerSpec big;
  big.kind = QuantizerSpec::Kind::kGainShape;
  big.gain_bits = 4;
  big.shape_bits = 22;  // over the 2^20 cap
  spec.rates = {26.0 / (4.0 * 1.0)};
  spec.quantizers = {big};
  const auto rows = run_experiment(spec);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].skipped);
  CHECK(rows[0].skip_reason.find("cap") != std::string::npos);
}

TEST_CASE("compare report flags hard-bound violations") {
  SummaryRow good;
  good.key = "good";
  good.trials = 10;
  good.mean_dbar = 0.5;
  good.stderr_dbar = 0.01;
  good.converse_floor = 0.4;
  good.mean_delta = 0.5;
  good.gamma_pred_accuracy = 0.45;

  SummaryRow bad = good;
  bad.key = "bad";
  bad.mean_dbar = 0.3;  // below the floor by 10 sigma: implementation bug
  SummaryRow theory_only = good;
  theory_only.key = "theory";
  theory_only.trials = 0;

  const std::vector<SummaryRow> rows{good, bad, theory_only};
  const CompareReport report = compare_report(rows);
  REQUIRE(report.rows.size() == 3);
  CHECK_FALSE(report.rows[0].converse_violation);
  CHECK(report.rows[1].converse_violation);
  CHECK_FALSE(report.rows[2].converse_violation);  // gaps omitted, still valid
  CHECK(report.rows[0].delta_gap == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(report.converse_violations == 1);
}

TEST_CASE("lossless rows use the infinite-rate accuracy in theory columns") {
  ExperimentSpec spec = small_spec();
  QuantizerSpec mock;
  mock.kind = QuantizerSpec::Kind::kLossless;
  spec.quantizers = {mock};
  spec.trials = 5;
  const auto rows = run_experiment(spec);
  REQUIRE(rows.size() == 1);
  const double expected = 0.9 * 0.9 * eval_g(0.9, 2);
  CHECK(rows[0].delta0_g == doctest::Approx(expected).epsilon(1e-12));
  CHECK(rows[0].gamma_pred_accuracy == doctest::Approx(expected).epsilon(1e-12));
  CHECK(rows[0].beta_hat_sq == 0.0);
}
