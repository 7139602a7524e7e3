#pragma once

#include <string>

namespace sutrack {

/// Analytic description of a quantizer family for the theory evaluators:
/// theta(rate) in [0,1] nonincreasing, and an additive error eps(rate) >= 0
/// in coordinate units. Families with a rate-independent bias use a constant
/// eps. Rates are bits per dimension for one quantization.
struct QuantizerProfile {
  enum class Kind { kIdeal, kUniformScalar, kGainShapeAnalytic, kMeasured };

  Kind kind = Kind::kIdeal;
  int n = 1;            // dimension (uniform-scalar, gain-shape)
  double M = 1.0;       // dynamic range (uniform-scalar, gain-shape)
  int gain_bits = 0;    // gain-shape
  double theta_const = 0.0;  // measured
  double eps_const = 0.0;    // measured

  [[nodiscard]] double theta(double rate) const;
  [[nodiscard]] double eps(double rate) const;
  [[nodiscard]] std::string name() const;

  /// theta(R) = 2^-2R, eps = 0.
  static QuantizerProfile ideal();
  /// theta = 0, eps(R)^2 = n M^2 2^-2R (coordinate-wise uniform over [-M sqrt n, M sqrt n]).
  static QuantizerProfile uniform_scalar(int n, double M);
  /// theta(R) = 2^(-2(R - l/n) + 1) clamped to 1, eps^2 = M^2 2^(-2l - 1)
  /// (gain-shape with an ideal shape quantizer and l gain bits).
  static QuantizerProfile gain_shape_analytic(int n, double M, int gain_bits);
  /// Rate-independent (theta_hat, eps_hat), e.g. from profile_quantizer.
  static QuantizerProfile measured(double theta_hat, double eps_hat);
};

}  // namespace sutrack
