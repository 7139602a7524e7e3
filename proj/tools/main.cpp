// sutrack command line: theory evaluation, accuracy-speed curves, quantizer
// benchmarking, single tracking simulations and parameter sweeps.

#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sutrack/experiment.hpp"
#include "sutrack/io.hpp"
#include "sutrack/process.hpp"
#include "sutrack/profile.hpp"
#include "sutrack/rng.hpp"
#include "sutrack/quantizer.hpp"
#include "sutrack/theory.hpp"
#include "sutrack/tracking.hpp"
#include "sutrack/version.hpp"

namespace {

using nlohmann::json;
using namespace sutrack;

// Applies keys of a JSON config file to options the command line left unset,
// so precedence is flags > config file > built-in defaults.
class ConfigBinder {
 public:
  template <typename T>
  CLI::Option* bind(CLI::App* sub, const std::string& flag, T& target, const std::string& help) {
    CLI::Option* opt = sub->add_option(flag, target, help);
    const std::string key = flag.substr(2);
    setters_[key] = [opt, &target](const json& v) {
      if (opt->count() == 0) target = v.get<T>();
    };
    return opt;
  }

  CLI::Option* bind_flag(CLI::App* sub, const std::string& flag, bool& target,
                         const std::string& help) {
    CLI::Option* opt = sub->add_flag(flag, target, help);
    const std::string key = flag.substr(2);
    setters_[key] = [opt, &target](const json& v) {
      if (opt->count() == 0) target = v.get<bool>();
    };
    return opt;
  }

  void apply_file(const std::string& path) const {
    const json config = json::parse(read_text_file(path));
    if (!config.is_object()) throw std::invalid_argument("config file must hold a JSON object");
    for (const auto& [key, value] : config.items()) {
      const auto it = setters_.find(key);
      if (it == setters_.end()) throw std::invalid_argument("unknown config key: " + key);
      it->second(value);
    }
  }

 private:
  std::map<std::string, std::function<void(const json&)>> setters_;
};

QuantizerSpec::Kind parse_quantizer_kind(const std::string& s) {
  if (s == "gain-shape") return QuantizerSpec::Kind::kGainShape;
  if (s == "uniform") return QuantizerSpec::Kind::kUniform;
  if (s == "lossless") return QuantizerSpec::Kind::kLossless;
  throw std::invalid_argument("unknown quantizer kind: " + s);
}

Innovation parse_innovation(const std::string& s, double cutoff) {
  Innovation innovation;
  if (s == "gaussian") return innovation;
  if (s == "truncated-gaussian") {
    innovation.kind = InnovationKind::kTruncatedGaussian;
    innovation.cutoff = cutoff;
    return innovation;
  }
  throw std::invalid_argument("unknown innovation law: " + s);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
  }
}

// ---------------------------------------------------------------------------

struct ProfileOptions {
  std::string profile = "ideal";
  int n = 1;
  double m_over_sigma = 1.0;
  int gain_bits = 4;
  double theta = 0.0;
  double eps = 0.0;

  void register_options(CLI::App* sub, ConfigBinder& binder) {
    binder.bind(sub, "--profile", profile,
                "analytic profile: ideal | uniform-scalar | gain-shape | measured");
    binder.bind(sub, "--n", n, "profile dimension (uniform-scalar, gain-shape)");
    binder.bind(sub, "--m-over-sigma", m_over_sigma, "dynamic range M in units of sigma");
    binder.bind(sub, "--gain-bits", gain_bits, "gain bits (gain-shape profile)");
    binder.bind(sub, "--theta", theta, "theta for the measured profile");
    binder.bind(sub, "--eps", eps, "eps for the measured profile");
  }

  [[nodiscard]] QuantizerProfile build(double sigma2) const {
    const double M = m_over_sigma * std::sqrt(sigma2);
    if (profile == "ideal") return QuantizerProfile::ideal();
    if (profile == "uniform-scalar") return QuantizerProfile::uniform_scalar(n, M);
    if (profile == "gain-shape") return QuantizerProfile::gain_shape_analytic(n, M, gain_bits);
    if (profile == "measured") return QuantizerProfile::measured(theta, eps);
    throw std::invalid_argument("unknown profile: " + profile);
  }

  [[nodiscard]] json to_json() const {
    return {{"profile", profile}, {"n", n},         {"m_over_sigma", m_over_sigma},
            {"gain_bits", gain_bits}, {"theta", theta}, {"eps", eps}};
  }
};

int run_theory(const ProfileOptions& prof, double alpha, double sigma2, double rate, int s,
               double kappa, double beta, const std::string& out) {
  TheoryParams params;
  params.alpha = alpha;
  params.sigma2 = sigma2;
  params.rate = rate;
  params.s = s;
  params.kappa = kappa;
  params.beta = beta;
  params.profile = prof.build(sigma2);

  json config = prof.to_json();
  config["alpha"] = alpha;
  config["sigma2"] = sigma2;
  config["rate"] = rate;
  config["s"] = s;
  config["kappa"] = kappa;
  config["beta"] = beta;
  std::cerr << "config: " << config.dump() << "\n";

  const TheoryReport report = evaluate_theory(params);
  emit(theory_report_json(report, {kVersion, config.dump(), 0}), out);
  return 0;
}

int run_speed_curve(const ProfileOptions& prof, double alpha, double sigma2, double rate,
                    double pmax, double pstep, const std::string& out) {
  json config = prof.to_json();
  config["alpha"] = alpha;
  config["sigma2"] = sigma2;
  config["rate"] = rate;
  config["pmax"] = pmax;
  config["pstep"] = pstep;
  std::cerr << "config: " << config.dump() << "\n";

  emit(speed_curve_csv(prof.build(sigma2), alpha, sigma2, rate, pmax, pstep,
                       {kVersion, config.dump(), 0}),
       out);
  return 0;
}

int run_quantizer_bench(const std::string& kind, int n, double sigma2, double m_over_sigma,
                        int gain_bits, int shape_bits, int bits_per_coord, int trials, int shells,
                        std::uint64_t seed, const std::string& save_codebook_path,
                        const std::string& out) {
  const double M = m_over_sigma * std::sqrt(sigma2);
  std::unique_ptr<Quantizer> q;
  int grid_gain_bits = 8;
  if (kind == "gain-shape") {
    auto cb = ShapeCodebook::build(n, shape_bits, seed);
    if (!save_codebook_path.empty()) save_codebook(save_codebook_path, cb);
    q = std::make_unique<GainShapeQuantizer>(std::move(cb), M, gain_bits);
    grid_gain_bits = gain_bits;
  } else if (kind == "uniform") {
    q = std::make_unique<UniformVectorQuantizer>(n, M, bits_per_coord);
  } else {
    throw std::invalid_argument("quantizer-bench supports gain-shape or uniform, got " + kind);
  }

  json config = {{"kind", kind},           {"n", n},
                 {"sigma2", sigma2},       {"m_over_sigma", m_over_sigma},
                 {"gain_bits", gain_bits}, {"shape_bits", shape_bits},
                 {"bits_per_coord", bits_per_coord}, {"trials", trials},
                 {"shells", shells},       {"seed", seed}};
  std::cerr << "config: " << config.dump() << "\n";

  const auto grid = midcell_norm_grid(n, M, grid_gain_bits, shells);
  const ProfileFit fit =
      profile_quantizer(*q, M, grid, trials, derive_seed(seed, "bench-profile"));
  emit(quantizer_bench_csv(fit, n, {kVersion, config.dump(), seed}), out);
  return 0;
}

int run_experiment_to_files(const ExperimentSpec& spec, const std::string& out_prefix,
                            const std::string& trajectory_dump) {
  const std::string config = experiment_spec_to_json(spec);
  std::cerr << "config: " << config << "\n";
  const Provenance prov{kVersion, config, spec.master_seed};

  if (!trajectory_dump.empty()) {
    ProcessParams params;
    params.alpha = spec.alphas.front();
    params.sigma2 = spec.sigma2s.front();
    params.n = spec.dims.front();
    params.innovation = spec.innovation;
    const auto seed = SeedHasher().add(spec.master_seed).add("trajectory-dump").finish();
    write_trajectory(trajectory_dump, generate(params, spec.horizon, seed));
  }

  std::string jsonl = jsonl_header(prov);
  const TrialSink sink = [&jsonl](const SummaryRow& point, const TrialResult& trial) {
    jsonl += trial_record_jsonl(point, trial);
  };
  const auto rows = run_experiment(spec, sink);

  write_text_file(out_prefix + ".trials.jsonl", jsonl);
  write_text_file(out_prefix + ".summary.csv", summary_csv(rows, prov));
  write_text_file(out_prefix + ".compare.json", compare_report_json(compare_report(rows), prov));
  std::cerr << "wrote " << out_prefix << ".{trials.jsonl, summary.csv, compare.json}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"successive-update tracking of AR(1) processes over bit-budgeted slotted channels"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // --- theory ---------------------------------------------------------------
  auto* theory_cmd = app.add_subcommand("theory", "closed-form accuracy report as JSON");
  ConfigBinder theory_binder;
  ProfileOptions theory_prof;
  double th_alpha = 0.9, th_sigma2 = 1.0, th_rate = 1.0, th_kappa = 0.0, th_beta = 0.0;
  int th_s = 1;
  std::string th_out, th_config;
  theory_binder.bind(theory_cmd, "--alpha", th_alpha, "AR coefficient in (0,1)");
  theory_binder.bind(theory_cmd, "--sigma2", th_sigma2, "stationary per-coordinate variance");
  theory_binder.bind(theory_cmd, "--rate", th_rate, "bits per dimension per slot");
  theory_binder.bind(theory_cmd, "--s", th_s, "sampling period in slots");
  theory_binder.bind(theory_cmd, "--kappa", th_kappa, "fourth-moment bound (0: Gaussian value)");
  theory_binder.bind(theory_cmd, "--beta", th_beta, "failure-probability parameter");
  theory_prof.register_options(theory_cmd, theory_binder);
  theory_binder.bind(theory_cmd, "--out", th_out, "output path (default stdout)");
  theory_cmd->add_option("--config", th_config, "JSON config file; flags override");

  // --- speed-curve ----------------------------------------------------------
  auto* curve_cmd = app.add_subcommand("speed-curve", "accuracy-speed curve as CSV (p, gamma)");
  ConfigBinder curve_binder;
  ProfileOptions curve_prof;
  double cv_alpha = 0.9, cv_sigma2 = 1.0, cv_rate = 1.0, cv_pmax = 8.0, cv_pstep = 1.0;
  std::string cv_out, cv_config;
  curve_binder.bind(curve_cmd, "--alpha", cv_alpha, "AR coefficient in (0,1)");
  curve_binder.bind(curve_cmd, "--sigma2", cv_sigma2, "stationary per-coordinate variance");
  curve_binder.bind(curve_cmd, "--rate", cv_rate, "bits per dimension per slot");
  curve_binder.bind(curve_cmd, "--pmax", cv_pmax, "largest update period to tabulate");
  curve_binder.bind(curve_cmd, "--pstep", cv_pstep, "step of the period grid (real curves)");
  curve_prof.register_options(curve_cmd, curve_binder);
  curve_binder.bind(curve_cmd, "--out", cv_out, "output path (default stdout)");
  curve_cmd->add_option("--config", cv_config, "JSON config file; flags override");

  // --- quantizer-bench --------------------------------------------------------
  auto* bench_cmd =
      app.add_subcommand("quantizer-bench", "per-shell quantizer error and fitted profile as CSV");
  ConfigBinder bench_binder;
  std::string qb_kind = "gain-shape", qb_out, qb_config, qb_save_codebook;
  int qb_n = 8, qb_gain_bits = 4, qb_shape_bits = 12, qb_bits_per_coord = 4, qb_trials = 2000,
      qb_shells = 8;
  double qb_sigma2 = 1.0, qb_m = 8.0;
  std::uint64_t qb_seed = 1;
  bench_binder.bind(bench_cmd, "--kind", qb_kind, "gain-shape | uniform");
  bench_binder.bind(bench_cmd, "--n", qb_n, "dimension");
  bench_binder.bind(bench_cmd, "--sigma2", qb_sigma2, "variance scale used for M");
  bench_binder.bind(bench_cmd, "--m-over-sigma", qb_m, "dynamic range M in units of sigma");
  bench_binder.bind(bench_cmd, "--gain-bits", qb_gain_bits, "gain bits (gain-shape)");
  bench_binder.bind(bench_cmd, "--shape-bits", qb_shape_bits, "shape codebook bits (gain-shape)");
  bench_binder.bind(bench_cmd, "--bits-per-coord", qb_bits_per_coord, "bits per coordinate (uniform)");
  bench_binder.bind(bench_cmd, "--trials", qb_trials, "draws per norm shell");
  bench_binder.bind(bench_cmd, "--shells", qb_shells, "number of norm shells");
  bench_binder.bind(bench_cmd, "--seed", qb_seed, "codebook/profiling seed");
  bench_binder.bind(bench_cmd, "--save-codebook", qb_save_codebook,
                    "also serialize the shape codebook to this path");
  bench_binder.bind(bench_cmd, "--out", qb_out, "output path (default stdout)");
  bench_cmd->add_option("--config", qb_config, "JSON config file; flags override");

  // --- simulate ----------------------------------------------------------------
  auto* sim_cmd = app.add_subcommand("simulate", "tracking runs at one parameter point");
  ConfigBinder sim_binder;
  double si_alpha = 0.9, si_sigma2 = 1.0, si_rate = 1.0, si_m = 8.0, si_cutoff = 3.0;
  int si_n = 8, si_s = 4, si_p = 1, si_horizon = 2000, si_trials = 100, si_gain_bits = 4,
      si_shape_bits = -1, si_profile_trials = 2000, si_profile_shells = 8;
  std::uint64_t si_seed = 1;
  std::string si_quant = "gain-shape", si_innovation = "gaussian", si_out = "simulate",
              si_config, si_dump_traj;
  bool si_traces = false;
  sim_binder.bind(sim_cmd, "--alpha", si_alpha, "AR coefficient in (0,1)");
  sim_binder.bind(sim_cmd, "--sigma2", si_sigma2, "stationary per-coordinate variance");
  sim_binder.bind(sim_cmd, "--n", si_n, "dimension");
  sim_binder.bind(sim_cmd, "--rate", si_rate, "bits per dimension per slot");
  sim_binder.bind(sim_cmd, "--s", si_s, "sampling period in slots");
  sim_binder.bind(sim_cmd, "--p", si_p, "update period (must divide s)");
  sim_binder.bind(sim_cmd, "--horizon", si_horizon, "slots per trial");
  sim_binder.bind(sim_cmd, "--trials", si_trials, "independent trials");
  sim_binder.bind(sim_cmd, "--quantizer", si_quant, "gain-shape | uniform | lossless");
  sim_binder.bind(sim_cmd, "--m-over-sigma", si_m, "dynamic range M in units of sigma");
  sim_binder.bind(sim_cmd, "--gain-bits", si_gain_bits, "gain bits (gain-shape)");
  sim_binder.bind(sim_cmd, "--shape-bits", si_shape_bits,
                  "shape bits (gain-shape); -1 derives from the budget");
  sim_binder.bind(sim_cmd, "--innovation", si_innovation, "gaussian | truncated-gaussian");
  sim_binder.bind(sim_cmd, "--cutoff", si_cutoff, "truncation point in standard deviations");
  sim_binder.bind(sim_cmd, "--seed", si_seed, "master seed");
  sim_binder.bind(sim_cmd, "--profile-trials", si_profile_trials, "profiling draws per shell");
  sim_binder.bind(sim_cmd, "--profile-shells", si_profile_shells, "profiling norm shells");
  sim_binder.bind_flag(sim_cmd, "--traces", si_traces, "store per-slot error traces in the JSONL");
  sim_binder.bind(sim_cmd, "--dump-trajectory", si_dump_traj,
                  "also dump one generated trajectory to this path");
  sim_binder.bind(sim_cmd, "--out", si_out, "output prefix");
  sim_cmd->add_option("--config", si_config, "JSON config file; flags override");

  // --- sweep ------------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "grid experiment from a JSON spec");
  std::string sw_spec_path, sw_out = "sweep";
  std::uint64_t sw_seed = 0;
  bool sw_seed_set = false;
  sweep_cmd->add_option("--spec", sw_spec_path, "experiment spec JSON file")->required();
  sweep_cmd->add_option("--out", sw_out, "output prefix");
  auto* sw_seed_opt = sweep_cmd->add_option("--master-seed", sw_seed, "override the spec's seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand(theory_cmd)) {
      if (!th_config.empty()) theory_binder.apply_file(th_config);
      return run_theory(theory_prof, th_alpha, th_sigma2, th_rate, th_s, th_kappa, th_beta, th_out);
    }
    if (app.got_subcommand(curve_cmd)) {
      if (!cv_config.empty()) curve_binder.apply_file(cv_config);
      return run_speed_curve(curve_prof, cv_alpha, cv_sigma2, cv_rate, cv_pmax, cv_pstep, cv_out);
    }
    if (app.got_subcommand(bench_cmd)) {
      if (!qb_config.empty()) bench_binder.apply_file(qb_config);
      return run_quantizer_bench(qb_kind, qb_n, qb_sigma2, qb_m, qb_gain_bits, qb_shape_bits,
                                 qb_bits_per_coord, qb_trials, qb_shells, qb_seed,
                                 qb_save_codebook, qb_out);
    }
    if (app.got_subcommand(sim_cmd)) {
      if (!si_config.empty()) sim_binder.apply_file(si_config);
      ExperimentSpec spec;
      spec.alphas = {si_alpha};
      spec.sigma2s = {si_sigma2};
      spec.dims = {si_n};
      spec.rates = {si_rate};
      spec.sampling_periods = {si_s};
      spec.update_periods = {si_p};
      QuantizerSpec quant;
      quant.kind = parse_quantizer_kind(si_quant);
      quant.m_over_sigma = si_m;
      quant.gain_bits = si_gain_bits;
      quant.shape_bits = si_shape_bits;
      spec.quantizers = {quant};
      spec.innovation = parse_innovation(si_innovation, si_cutoff);
      spec.trials = si_trials;
      spec.horizon = si_horizon;
      spec.master_seed = si_seed;
      spec.store_traces = si_traces;
      spec.profile_trials = si_profile_trials;
      spec.profile_shells = si_profile_shells;
      spec.validate();
      // A single-point run should fail loudly, not emit a skipped row.
      TrackingConfig cfg;
      cfg.rate = si_rate;
      cfg.s = si_s;
      cfg.p = si_p;
      cfg.horizon = si_horizon;
      cfg.n = si_n;
      cfg.alpha = si_alpha;
      cfg.sigma2 = si_sigma2;
      cfg.quantizer = quant;
      cfg.validate();
      return run_experiment_to_files(spec, si_out, si_dump_traj);
    }
    if (app.got_subcommand(sweep_cmd)) {
      ExperimentSpec spec = experiment_spec_from_json(read_text_file(sw_spec_path));
      sw_seed_set = sw_seed_opt->count() > 0;
      if (sw_seed_set) spec.master_seed = sw_seed;
      return run_experiment_to_files(spec, sw_out, "");
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
