#pragma once

#include <utility>
#include <vector>

#include "sutrack/profile.hpp"

namespace sutrack {

/// Rate factor: alpha^2 (1 - 2^-2R) / (1 - alpha^2 2^-2R), in [0, alpha^2).
double eval_delta0(double alpha, double rate);

/// Sampling factor: (1 - alpha^2s) / (s (1 - alpha^2)); g(1) = 1, decreasing
/// in s. Real s > 0 accepted for curve plotting.
double eval_g(double alpha, double s);

/// Accuracy-speed curve at update period p for a profiled quantizer family:
/// alpha^2p / (1 - alpha^2p theta(Rp)) * (1 - eps(Rp)^2/sigma2 - theta(Rp)).
/// Real p > 0 accepted.
double eval_gamma(const QuantizerProfile& profile, double alpha, double sigma2, double rate,
                  double p);

/// Divisors of s in ascending order.
std::vector<int> divisors(int s);

/// argmax of the accuracy-speed curve over the divisors of s; ties go to the
/// smaller period.
int select_p(const QuantizerProfile& profile, double alpha, double sigma2, double rate, int s);

/// Asymptotic time-averaged distortion bound of a p-update scheme, in
/// variance units, evaluated at fixed (theta, eps) with failure mass beta:
///   sigma2 [1 - g(s) a2p/(1 - a2p theta) (1 - eps^2/sigma2 - theta)]
///   + kappa beta g(s)/(1 - alpha^2s) (1 - alpha^2(s+p) (1-theta)/(1 - a2p theta)),
/// with a2p = alpha^2p. Requires theta in [0, 1) and beta in [0, 1].
double eval_bt_limit(double theta, double eps, double beta, double alpha, double sigma2,
                     double kappa, int s, int p);

struct DstarSequence {
  std::vector<double> values;  // d*_0 .. d*_K
  double limit = 0.0;          // closed-form fixed point
};

/// Converse recursion d*_k = 2^-2Rs (alpha^2s d*_{k-1} + sigma2 (1 - alpha^2s)),
/// d*_0 = 0, with its limit sigma2 (1 - alpha^2s) 2^-2Rs / (1 - alpha^2s 2^-2Rs).
DstarSequence converse_dstar(double alpha, double sigma2, double rate, int s, int iterations);

double dstar_limit(double alpha, double sigma2, double rate, int s);

/// Distortion floor assembled from the recursion fixed point (the long way
/// around); algebraically equal to sigma2 (1 - g(s) delta0(R)).
double converse_floor(double alpha, double sigma2, double rate, int s);

struct ConverseAccuracy {
  double accuracy = 0.0;  // g(s) delta0(R)
  double floor = 0.0;     // sigma2 (1 - g(s) delta0(R))
};

ConverseAccuracy converse_accuracy(double alpha, double rate, int s, double sigma2 = 1.0);

/// Limit of the running average of any sequence with x_k <= a x_{k-1} + b,
/// |a| < 1: b / (1 - a).
double lemma4_average_bound(double a, double b);

struct TheoryParams {
  double alpha = 0.9;
  double sigma2 = 1.0;
  double rate = 1.0;   // bits per dimension per slot
  int s = 1;           // sampling period in slots
  double kappa = 0.0;  // fourth-moment bound; defaults to the Gaussian value
  double beta = 0.0;   // failure-probability parameter
  QuantizerProfile profile;

  void validate() const;
};

struct TheoryReport {
  double delta0 = 0.0;
  double g = 0.0;
  double achievable_accuracy = 0.0;  // delta0 * g
  double converse_accuracy = 0.0;    // 1 - converse_floor / sigma2
  double converse_floor = 0.0;       // via the d* recursion route
  double dstar_limit = 0.0;
  std::vector<std::pair<int, double>> gamma_curve;  // (p, Gamma) over divisors of s
  int p_star = 1;
  double b_infinity = 0.0;  // eval_bt_limit at p = p_star
};

TheoryReport evaluate_theory(const TheoryParams& params);

}  // namespace sutrack
