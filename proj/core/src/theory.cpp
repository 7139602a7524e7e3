#include "sutrack/theory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "sutrack/process.hpp"

namespace sutrack {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
}

}  // namespace

double eval_delta0(double alpha, double rate) {
  check_alpha(alpha);
  if (rate < 0.0) throw std::invalid_argument("rate must be nonnegative");
  const double q = std::exp2(-2.0 * rate);
  return alpha * alpha * (1.0 - q) / (1.0 - alpha * alpha * q);
}

double eval_g(double alpha, double s) {
  check_alpha(alpha);
  if (!(s >= 1.0)) throw std::invalid_argument("sampling period must be at least 1");
  const double a2 = alpha * alpha;
  return (1.0 - std::pow(a2, s)) / (s * (1.0 - a2));
}

double eval_gamma(const QuantizerProfile& profile, double alpha, double sigma2, double rate,
                  double p) {
  check_alpha(alpha);
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  if (!(p > 0.0)) throw std::invalid_argument("update period must be positive");
  const double theta = profile.theta(rate * p);
  const double eps = profile.eps(rate * p);
  const double a2p = std::pow(alpha, 2.0 * p);
  return a2p / (1.0 - a2p * theta) * (1.0 - eps * eps / sigma2 - theta);
}

std::vector<int> divisors(int s) {
  if (s < 1) throw std::invalid_argument("s must be at least 1");
  std::vector<int> out;
  for (int p = 1; p <= s; ++p) {
    if (s % p == 0) out.push_back(p);
  }
  return out;
}

int select_p(const QuantizerProfile& profile, double alpha, double sigma2, double rate, int s) {
  int best_p = 1;
  double best = -std::numeric_limits<double>::infinity();
  for (int p : divisors(s)) {
    const double gamma = eval_gamma(profile, alpha, sigma2, rate, p);
    if (gamma > best) {  // strict: ties keep the smaller period
      best = gamma;
      best_p = p;
    }
  }
  return best_p;
}

double eval_bt_limit(double theta, double eps, double beta, double alpha, double sigma2,
                     double kappa, int s, int p) {
  check_alpha(alpha);
  if (!(theta >= 0.0 && theta < 1.0)) throw std::invalid_argument("theta must be in [0, 1)");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must be in [0, 1]");
  if (s < 1 || p < 1 || p > s) throw std::invalid_argument("need 1 <= p <= s");
  const double g = eval_g(alpha, s);
  const double a2p = std::pow(alpha, 2.0 * p);
  const double a2s = std::pow(alpha, 2.0 * s);
  const double tracking_term =
      sigma2 * (1.0 - g * a2p / (1.0 - a2p * theta) * (1.0 - eps * eps / sigma2 - theta));
  const double failure_term = kappa * beta * g / (1.0 - a2s) *
                              (1.0 - a2s * a2p * (1.0 - theta) / (1.0 - a2p * theta));
  return tracking_term + failure_term;
}

DstarSequence converse_dstar(double alpha, double sigma2, double rate, int s, int iterations) {
  check_alpha(alpha);
  if (s < 1) throw std::invalid_argument("s must be at least 1");
  if (iterations < 0) throw std::invalid_argument("iterations must be nonnegative");
  const double q = std::exp2(-2.0 * rate * s);
  const double a2s = std::pow(alpha, 2.0 * s);
  DstarSequence seq;
  seq.values.reserve(static_cast<std::size_t>(iterations) + 1);
  double d = 0.0;
  seq.values.push_back(d);
  for (int k = 1; k <= iterations; ++k) {
    d = q * (a2s * d + sigma2 * (1.0 - a2s));
    seq.values.push_back(d);
  }
  seq.limit = dstar_limit(alpha, sigma2, rate, s);
  return seq;
}

double dstar_limit(double alpha, double sigma2, double rate, int s) {
  check_alpha(alpha);
  const double q = std::exp2(-2.0 * rate * s);
  const double a2s = std::pow(alpha, 2.0 * s);
  return sigma2 * (1.0 - a2s) * q / (1.0 - a2s * q);
}

double converse_floor(double alpha, double sigma2, double rate, int s) {
  check_alpha(alpha);
  if (s < 1) throw std::invalid_argument("s must be at least 1");
  const double a2 = alpha * alpha;
  const double a2s = std::pow(a2, s);
  const double qs = std::exp2(-2.0 * rate * s);
  const double q1 = std::exp2(-2.0 * rate);
  const double davg = dstar_limit(alpha, 1.0, rate, s);  // limit of the averaged recursion
  const double term_recursion = a2s * (1.0 - a2s * qs) / (s * (1.0 - a2 * q1)) * davg;
  const double term_sampling = 1.0 - eval_g(alpha, s);
  const double term_rate = (1.0 - a2s) * (1.0 - a2s * qs) / (s * (1.0 - a2 * q1));
  return sigma2 * (term_recursion + term_sampling + term_rate);
}

ConverseAccuracy converse_accuracy(double alpha, double rate, int s, double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  ConverseAccuracy out;
  out.floor = converse_floor(alpha, sigma2, rate, s);
  out.accuracy = eval_g(alpha, s) * eval_delta0(alpha, rate);
  return out;
}

double lemma4_average_bound(double a, double b) {
  if (!(std::abs(a) < 1.0)) throw std::invalid_argument("|a| must be less than 1");
  if (!std::isfinite(b)) throw std::invalid_argument("b must be finite");
  return b / (1.0 - a);
}

void TheoryParams::validate() const {
  check_alpha(alpha);
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  if (s < 1) throw std::invalid_argument("sampling period must be at least 1");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must be in [0, 1]");
}

TheoryReport evaluate_theory(const TheoryParams& params) {
  params.validate();
  TheoryReport report;
  report.delta0 = eval_delta0(params.alpha, params.rate);
  report.g = eval_g(params.alpha, params.s);
  report.achievable_accuracy = report.delta0 * report.g;
  report.converse_floor = converse_floor(params.alpha, params.sigma2, params.rate, params.s);
  report.converse_accuracy = 1.0 - report.converse_floor / params.sigma2;
  report.dstar_limit = dstar_limit(params.alpha, params.sigma2, params.rate, params.s);
  for (int p : divisors(params.s)) {
    report.gamma_curve.emplace_back(
        p, eval_gamma(params.profile, params.alpha, params.sigma2, params.rate, p));
  }
  report.p_star = select_p(params.profile, params.alpha, params.sigma2, params.rate, params.s);
  const double kappa =
      params.kappa > 0.0 ? params.kappa : gaussian_kappa(params.sigma2, params.profile.n);
  const double theta = params.profile.theta(params.rate * report.p_star);
  const double eps = params.profile.eps(params.rate * report.p_star);
  report.b_infinity = eval_bt_limit(std::min(theta, 1.0 - 1e-15), eps, params.beta, params.alpha,
                                    params.sigma2, kappa, params.s, report.p_star);
  return report;
}

}  // namespace sutrack
