#include "sutrack/experiment.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sutrack/io.hpp"
#include "sutrack/rng.hpp"
#include "sutrack/theory.hpp"

namespace sutrack {
namespace {

const char* quantizer_kind_name(QuantizerSpec::Kind kind) {
  switch (kind) {
    case QuantizerSpec::Kind::kGainShape:
      return "gain-shape";
    case QuantizerSpec::Kind::kUniform:
      return "uniform";
    case QuantizerSpec::Kind::kLossless:
      return "lossless";
  }
  return "?";
}

// (1 - theta^j) / (1 - theta), continuous at theta = 1.
double geometric_sum(double theta, int j) {
  if (std::abs(1.0 - theta) < 1e-12) return static_cast<double>(j);
  return (1.0 - std::pow(theta, j)) / (1.0 - theta);
}

struct TraceStats {
  std::vector<double> sum;
  std::vector<double> sumsq;
  int count = 0;

  void init(int horizon) {
    sum.assign(static_cast<std::size_t>(horizon), 0.0);
    sumsq.assign(static_cast<std::size_t>(horizon), 0.0);
  }
  void add(const std::vector<double>& trace) {
    for (std::size_t t = 0; t < trace.size(); ++t) {
      sum[t] += trace[t];
      sumsq[t] += trace[t] * trace[t];
    }
    ++count;
  }
  [[nodiscard]] double mean(std::size_t t) const { return sum[t] / count; }
  [[nodiscard]] double stderr_of_mean(std::size_t t) const {
    if (count < 2) return 0.0;
    const double var = std::max(0.0, (sumsq[t] - sum[t] * sum[t] / count) / (count - 1));
    return std::sqrt(var / count);
  }
};

// Per-slot distortion recursion bound inside one sampling period, evaluated
// with the quantizer profile (theta, eps), the measured failure mass beta and
// the fourth-moment bound kappa. i = t - ks, j = completed sub-fragments.
double lemma3_bound(double d_ks, double alpha, double sigma2, double theta, double eps2,
                    double kappa, double beta, int i, int j) {
  const double a2i = std::pow(alpha, 2.0 * i);
  return a2i * std::pow(theta, j) * d_ks + sigma2 * (1.0 - a2i) +
         a2i * geometric_sum(theta, j) * eps2 + a2i * kappa * beta;
}

int count_lemma3_violations(const TraceStats& stats, const SummaryRow& row, double theta,
                            double eps, double kappa, double beta) {
  int violations = 0;
  for (int t = 0; t < row.horizon; ++t) {
    const int ks = (t / row.s) * row.s;
    const int i = t - ks;
    const int j = i / row.p;
    const double bound = lemma3_bound(stats.mean(static_cast<std::size_t>(ks)), row.alpha,
                                      row.sigma2, theta, eps * eps, kappa, beta, i, j);
    const double slack = 3.0 * stats.stderr_of_mean(static_cast<std::size_t>(t));
    if (stats.mean(static_cast<std::size_t>(t)) > bound + slack) ++violations;
  }
  return violations;
}

void fill_theory_columns(SummaryRow& row) {
  // The lossless mock is the infinite-rate limit: delta0 -> alpha^2.
  const double delta0 = row.quantizer.kind == QuantizerSpec::Kind::kLossless
                            ? row.alpha * row.alpha
                            : eval_delta0(row.alpha, row.rate);
  const double g = eval_g(row.alpha, row.s);
  row.delta0_g = delta0 * g;
  row.converse_floor = row.sigma2 * (1.0 - row.delta0_g);
  const QuantizerProfile measured = QuantizerProfile::measured(row.theta_hat, row.eps_hat);
  row.gamma_pred_accuracy = g * eval_gamma(measured, row.alpha, row.sigma2, row.rate, row.p);
}

void run_point(const TrackingConfig& cfg, const ExperimentSpec& spec, SummaryRow& row,
               const TrialSink& sink) {
  // Measured profile from an independent seed; the mock is exactly (0, 0).
  if (cfg.quantizer.kind != QuantizerSpec::Kind::kLossless) {
    const std::uint64_t profile_seed =
        SeedHasher().add(spec.master_seed).add(row.key).add("profile").finish();
    const auto q = make_quantizer(cfg, profile_seed);
    const double M = cfg.quantizer.m_over_sigma * std::sqrt(cfg.sigma2);
    const int gain_bits_for_grid =
        cfg.quantizer.kind == QuantizerSpec::Kind::kGainShape ? cfg.quantizer.gain_bits : 8;
    const auto grid = midcell_norm_grid(cfg.n, M, gain_bits_for_grid, spec.profile_shells);
    const ProfileFit fit = profile_quantizer(*q, M, grid, spec.profile_trials, profile_seed);
    row.theta_hat = fit.theta_hat;
    row.eps_hat = fit.eps_hat;
  }

  TraceStats stats;
  stats.init(cfg.horizon);
  double delta_sum = 0.0, delta_sumsq = 0.0;
  double dbar_sum = 0.0, dbar_sumsq = 0.0;
  int failures = 0;

  ProcessParams params;
  params.alpha = cfg.alpha;
  params.sigma2 = cfg.sigma2;
  params.n = cfg.n;
  params.innovation = spec.innovation;

  for (int trial = 0; trial < spec.trials; ++trial) {
    const std::uint64_t traj_seed =
        SeedHasher().add(spec.master_seed).add(row.key).add("traj").add(trial).finish();
    const std::uint64_t quant_seed =
        SeedHasher().add(spec.master_seed).add(row.key).add("quant").add(trial).finish();
    const Trajectory traj = generate(params, cfg.horizon, traj_seed);
    TrialResult result = run_tracking(traj, cfg, quant_seed, /*store_trace=*/true);

    stats.add(result.per_t_error);
    dbar_sum += result.dbar;
    dbar_sumsq += result.dbar * result.dbar;
    delta_sum += result.delta_hat;
    delta_sumsq += result.delta_hat * result.delta_hat;
    if (result.failed) ++failures;

    if (sink) {
      if (!spec.store_traces) result.per_t_error.clear();
      sink(row, result);
    }
  }

  const double trials = static_cast<double>(spec.trials);
  row.mean_dbar = dbar_sum / trials;
  row.mean_delta = delta_sum / trials;
  if (spec.trials > 1) {
    const double var_dbar =
        std::max(0.0, (dbar_sumsq - dbar_sum * dbar_sum / trials) / (trials - 1.0));
    const double var_delta =
        std::max(0.0, (delta_sumsq - delta_sum * delta_sum / trials) / (trials - 1.0));
    row.stderr_dbar = std::sqrt(var_dbar / trials);
    row.stderr_delta = std::sqrt(var_delta / trials);
  }
  row.beta_hat_sq = static_cast<double>(failures) / trials;

  fill_theory_columns(row);

  const double kappa = gaussian_kappa(cfg.sigma2, cfg.n);
  const double beta = std::sqrt(row.beta_hat_sq);
  row.lemma3_violations =
      count_lemma3_violations(stats, row, row.theta_hat, row.eps_hat, kappa, beta);
}

}  // namespace

void ExperimentSpec::validate() const {
  if (alphas.empty() || sigma2s.empty() || dims.empty() || rates.empty() ||
      sampling_periods.empty() || quantizers.empty()) {
    throw std::invalid_argument("experiment: every grid axis needs at least one value");
  }
  if (!p_all_divisors && update_periods.empty()) {
    throw std::invalid_argument("experiment: no update periods given");
  }
  if (trials < 1) throw std::invalid_argument("experiment: trials must be at least 1");
  if (horizon < 1) throw std::invalid_argument("experiment: horizon must be at least 1");
  if (profile_trials < 2 || profile_shells < 1) {
    throw std::invalid_argument("experiment: bad profiling settings");
  }
  if (!p_all_divisors) {
    for (int s : sampling_periods) {
      for (int p : update_periods) {
        if (p < 1 || p > s || s % p != 0) {
          throw std::invalid_argument("experiment: p=" + std::to_string(p) +
                                      " does not divide s=" + std::to_string(s));
        }
      }
    }
  }
}

std::string grid_key(const SummaryRow& row, const Innovation& innovation) {
  std::ostringstream os;
  os << "alpha=" << format_double(row.alpha) << "|sigma2=" << format_double(row.sigma2)
     << "|n=" << row.n << "|rate=" << format_double(row.rate) << "|s=" << row.s << "|p=" << row.p
     << "|T=" << row.horizon << "|quant=" << quantizer_kind_name(row.quantizer.kind)
     << "|m=" << format_double(row.quantizer.m_over_sigma) << "|gb=" << row.quantizer.gain_bits
     << "|sb=" << row.quantizer.shape_bits << "|innov="
     << (innovation.kind == InnovationKind::kGaussian
             ? "gaussian"
             : "truncated-gaussian(" + format_double(innovation.cutoff) + ")");
  return os.str();
}

std::vector<SummaryRow> run_experiment(const ExperimentSpec& spec, const TrialSink& sink) {
  spec.validate();
  std::vector<SummaryRow> rows;

  for (double alpha : spec.alphas) {
    for (double sigma2 : spec.sigma2s) {
      for (int n : spec.dims) {
        for (double rate : spec.rates) {
          for (int s : spec.sampling_periods) {
            const std::vector<int> periods =
                spec.p_all_divisors ? divisors(s) : spec.update_periods;
            for (int p : periods) {
              for (const QuantizerSpec& quant : spec.quantizers) {
                SummaryRow row;
                row.alpha = alpha;
                row.sigma2 = sigma2;
                row.n = n;
                row.rate = rate;
                row.s = s;
                row.p = p;
                row.quantizer = quant;
                row.trials = spec.trials;
                row.horizon = spec.horizon;
                row.key = grid_key(row, spec.innovation);

                TrackingConfig cfg;
                cfg.rate = rate;
                cfg.s = s;
                cfg.p = p;
                cfg.horizon = spec.horizon;
                cfg.n = n;
                cfg.alpha = alpha;
                cfg.sigma2 = sigma2;
                cfg.quantizer = quant;
                cfg.codebook_cap_bits = spec.codebook_cap_bits;
                try {
                  cfg.validate();
                } catch (const std::exception& e) {
                  row.skipped = true;
                  row.skip_reason = e.what();
                  rows.push_back(std::move(row));
                  continue;
                }

                run_point(cfg, spec, row, sink);
                rows.push_back(std::move(row));
              }
            }
          }
        }
      }
    }
  }
  return rows;
}

CompareReport compare_report(std::span<const SummaryRow> rows) {
  if (rows.empty()) throw std::invalid_argument("compare_report: no rows");
  CompareReport report;
  for (const SummaryRow& row : rows) {
    if (row.skipped) continue;
    CompareRow cmp;
    cmp.key = row.key;
    cmp.simulated = row.trials > 0;
    cmp.delta_hat = row.mean_delta;
    cmp.gamma_pred = row.gamma_pred_accuracy;
    cmp.converse_floor = row.converse_floor;
    cmp.lemma3_violations = row.lemma3_violations;
    if (cmp.simulated) {
      cmp.delta_gap = row.mean_delta - row.gamma_pred_accuracy;
      cmp.converse_violation = row.mean_dbar < row.converse_floor - 3.0 * row.stderr_dbar;
    }
    if (cmp.converse_violation) ++report.converse_violations;
    if (cmp.lemma3_violations > 0) ++report.lemma3_violation_rows;
    report.rows.push_back(std::move(cmp));
  }
  return report;
}

}  // namespace sutrack
