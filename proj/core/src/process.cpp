#include "sutrack/process.hpp"

#include <cmath>
#include <stdexcept>

#include "sutrack/rng.hpp"

namespace sutrack {
namespace {

double standard_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Variance of a standard normal truncated to [-c, c].
double truncated_variance(double c) {
  const double mass = 2.0 * standard_normal_cdf(c) - 1.0;
  return 1.0 - 2.0 * c * standard_normal_pdf(c) / mass;
}

// Zero-mean draw with the requested variance. The truncated law is rescaled
// so its variance is exactly `variance`, not just approximately.
double draw_innovation(Rng& rng, const Innovation& law, double variance) {
  if (variance == 0.0) return 0.0;
  const double sd = std::sqrt(variance);
  switch (law.kind) {
    case InnovationKind::kGaussian:
      return sd * rng.gaussian();
    case InnovationKind::kTruncatedGaussian: {
      double z;
      do {
        z = rng.gaussian();
      } while (std::abs(z) > law.cutoff);
      return sd * z / std::sqrt(truncated_variance(law.cutoff));
    }
  }
  throw std::logic_error("unknown innovation kind");
}

}  // namespace

void ProcessParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be nonnegative");
  if (n < 1) throw std::invalid_argument("dimension must be at least 1");
  if (innovation.kind == InnovationKind::kTruncatedGaussian && !(innovation.cutoff > 0.0)) {
    throw std::invalid_argument("truncation cutoff must be positive");
  }
}

Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& xi, double alpha) {
  if (x.size() != xi.size()) throw std::invalid_argument("step: dimension mismatch");
  return alpha * x + xi;
}

Trajectory generate(const ProcessParams& params, int horizon, std::uint64_t seed) {
  params.validate();
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");

  Rng rng(seed);
  Trajectory traj;
  traj.params = params;
  traj.seed = seed;
  traj.values.resize(horizon, params.n);

  const double xi_var = params.innovation_variance();
  for (int i = 0; i < params.n; ++i) {
    traj.values(0, i) = draw_innovation(rng, params.innovation, params.sigma2);
  }
  for (int t = 1; t < horizon; ++t) {
    for (int i = 0; i < params.n; ++i) {
      traj.values(t, i) =
          params.alpha * traj.values(t - 1, i) + draw_innovation(rng, params.innovation, xi_var);
    }
  }
  return traj;
}

std::vector<std::pair<int, Eigen::VectorXd>> subsample(const Trajectory& traj, int s) {
  if (s < 1) throw std::invalid_argument("sampling period must be at least 1");
  std::vector<std::pair<int, Eigen::VectorXd>> out;
  for (int k = 0; k * s < traj.horizon(); ++k) {
    out.emplace_back(k, traj.values.row(k * s).transpose());
  }
  return out;
}

MomentEstimate estimate_kappa(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) throw std::invalid_argument("estimate_kappa: no trajectories");
  const int horizon = trajectories.front().horizon();
  const int n = trajectories.front().dim();
  for (const auto& traj : trajectories) {
    if (traj.horizon() != horizon || traj.dim() != n) {
      throw std::invalid_argument("estimate_kappa: mismatched trajectory shapes");
    }
  }

  MomentEstimate est;
  est.high_variance = trajectories.size() < 2;
  double max_fourth = 0.0;
  double var_acc = 0.0;
  for (int t = 0; t < horizon; ++t) {
    double fourth = 0.0;
    for (const auto& traj : trajectories) {
      const double sq = traj.values.row(t).squaredNorm();
      fourth += sq * sq;
      var_acc += sq;
    }
    fourth /= static_cast<double>(trajectories.size());
    max_fourth = std::max(max_fourth, fourth);
  }
  est.kappa_hat = std::sqrt(max_fourth) / static_cast<double>(n);
  est.variance_hat =
      var_acc / (static_cast<double>(trajectories.size()) * horizon * n);
  return est;
}

double gaussian_kappa(double sigma2, int n) {
  return sigma2 * std::sqrt(1.0 + 2.0 / static_cast<double>(n));
}

}  // namespace sutrack
