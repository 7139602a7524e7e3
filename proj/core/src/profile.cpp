#include "sutrack/profile.hpp"

#include <cmath>
#include <stdexcept>

namespace sutrack {

double QuantizerProfile::theta(double rate) const {
  switch (kind) {
    case Kind::kIdeal:
      return std::exp2(-2.0 * rate);
    case Kind::kUniformScalar:
      return 0.0;
    case Kind::kGainShapeAnalytic: {
      const double t = std::exp2(-2.0 * (rate - static_cast<double>(gain_bits) / n) + 1.0);
      return std::min(1.0, t);
    }
    case Kind::kMeasured:
      return theta_const;
  }
  throw std::logic_error("unknown profile kind");
}

double QuantizerProfile::eps(double rate) const {
  switch (kind) {
    case Kind::kIdeal:
      return 0.0;
    case Kind::kUniformScalar:
      return std::sqrt(static_cast<double>(n)) * M * std::exp2(-rate);
    case Kind::kGainShapeAnalytic:
      return M * std::sqrt(std::exp2(-2.0 * gain_bits - 1.0));
    case Kind::kMeasured:
      return eps_const;
  }
  throw std::logic_error("unknown profile kind");
}

std::string QuantizerProfile::name() const {
  switch (kind) {
    case Kind::kIdeal:
      return "ideal";
    case Kind::kUniformScalar:
      return "uniform-scalar";
    case Kind::kGainShapeAnalytic:
      return "gain-shape";
    case Kind::kMeasured:
      return "measured";
  }
  return "?";
}

QuantizerProfile QuantizerProfile::ideal() { return {}; }

QuantizerProfile QuantizerProfile::uniform_scalar(int n, double M) {
  if (n < 1 || !(M > 0.0)) throw std::invalid_argument("uniform-scalar profile: bad parameters");
  QuantizerProfile p;
  p.kind = Kind::kUniformScalar;
  p.n = n;
  p.M = M;
  return p;
}

QuantizerProfile QuantizerProfile::gain_shape_analytic(int n, double M, int gain_bits) {
  if (n < 1 || !(M > 0.0) || gain_bits < 1) {
    throw std::invalid_argument("gain-shape profile: bad parameters");
  }
  QuantizerProfile p;
  p.kind = Kind::kGainShapeAnalytic;
  p.n = n;
  p.M = M;
  p.gain_bits = gain_bits;
  return p;
}

QuantizerProfile QuantizerProfile::measured(double theta_hat, double eps_hat) {
  if (!(theta_hat >= 0.0 && theta_hat <= 1.0) || !(eps_hat >= 0.0)) {
    throw std::invalid_argument("measured profile: theta in [0,1], eps >= 0 required");
  }
  QuantizerProfile p;
  p.kind = Kind::kMeasured;
  p.theta_const = theta_hat;
  p.eps_const = eps_hat;
  return p;
}

}  // namespace sutrack
