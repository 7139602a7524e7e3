#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace sutrack {

enum class InnovationKind { kGaussian, kTruncatedGaussian };

/// Innovation law. Always zero-mean; the variance is set by the process
/// parameters, and the truncated variant is symmetric truncation at
/// `cutoff` standard deviations rescaled so the variance is exact.
struct Innovation {
  InnovationKind kind = InnovationKind::kGaussian;
  double cutoff = 3.0;
};

/// First-order autoregressive model x_t = alpha * x_{t-1} + xi_t with
/// per-coordinate stationary variance sigma2. The innovation variance is
/// sigma2 * (1 - alpha^2) per coordinate, which keeps Var(x_t) = sigma2
/// exactly for all t.
struct ProcessParams {
  double alpha = 0.9;
  double sigma2 = 1.0;  // sigma2 == 0 is the degenerate all-zero process
  int n = 1;
  Innovation innovation;

  [[nodiscard]] double innovation_variance() const { return sigma2 * (1.0 - alpha * alpha); }
  void validate() const;
};

struct Trajectory {
  Eigen::MatrixXd values;  // horizon x n, row t is the state at time t
  ProcessParams params;
  std::uint64_t seed = 0;

  [[nodiscard]] int horizon() const { return static_cast<int>(values.rows()); }
  [[nodiscard]] int dim() const { return static_cast<int>(values.cols()); }
};

struct MomentEstimate {
  double kappa_hat = 0.0;     // estimate of sup_t (1/n) sqrt(E ||x_t||^4)
  double variance_hat = 0.0;  // per-coordinate variance estimate
  bool high_variance = false; // set when estimated from a single trajectory
};

/// One step of the recursion: alpha * x + xi.
Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& xi, double alpha);

/// Generates x_0 .. x_{horizon-1}; x_0 is drawn zero-mean with per-coordinate
/// variance sigma2 from the same law family as the innovations. Deterministic
/// given the seed.
Trajectory generate(const ProcessParams& params, int horizon, std::uint64_t seed);

/// States at indices 0, s, 2s, ... as (sample index k, x_{ks}) pairs.
std::vector<std::pair<int, Eigen::VectorXd>> subsample(const Trajectory& traj, int s);

/// Fourth-moment estimate over an ensemble of independent trajectories with
/// identical parameters. kappa_hat = max_t (1/n) sqrt(mean_trials ||x_t||^4);
/// a single trajectory is accepted but flagged high-variance.
MomentEstimate estimate_kappa(std::span<const Trajectory> trajectories);

inline MomentEstimate estimate_kappa(const Trajectory& traj) {
  return estimate_kappa(std::span<const Trajectory>(&traj, 1));
}

/// Closed form kappa for iid Gaussian coordinates: sigma2 * sqrt(1 + 2/n).
double gaussian_kappa(double sigma2, int n);

}  // namespace sutrack
