#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sutrack/bits.hpp"

namespace sutrack {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct CodebookStats {
  double mean_max_inner = 0.0;        // mean over probes of max_i <y, c_i>
  double mean_shape_distortion = 0.0; // mean over probes of 1 - <y, c_i*>^2
  int probes = 0;
};

/// Random spherical shape codebook: 2^bits iid uniform unit vectors. The
/// decode scale is calibrated at build time to the empirical mean of the
/// maximal inner product over fresh probes, which is the MMSE shrinkage for
/// a unit-norm decode. Immutable after construction.
class ShapeCodebook {
 public:
  /// Throws if 2^bits would exceed the size cap (default 2^20 vectors).
  static ShapeCodebook build(int n, int bits, std::uint64_t seed, int probe_count = 1024,
                             int size_cap_bits = 20);

  [[nodiscard]] int dim() const { return static_cast<int>(vectors_.cols()); }
  [[nodiscard]] int bits() const { return bits_; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(vectors_.rows()); }
  [[nodiscard]] double scale() const { return scale_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] const RowMatrixXd& vectors() const { return vectors_; }
  [[nodiscard]] const CodebookStats& stats() const { return stats_; }

  /// Index of the codeword with maximal inner product; ties resolve to the
  /// lowest index. `unit` must have unit norm to within 1e-9.
  [[nodiscard]] int encode(const Eigen::VectorXd& unit) const;

  /// scale * codeword; the result has norm == scale.
  [[nodiscard]] Eigen::VectorXd decode(int index) const;

  /// Used by serialization; trusts the caller to provide unit rows.
  static ShapeCodebook from_raw(RowMatrixXd vectors, int bits, double scale, std::uint64_t seed);

 private:
  ShapeCodebook() = default;

  RowMatrixXd vectors_;
  int bits_ = 0;
  double scale_ = 1.0;
  std::uint64_t seed_ = 0;
  CodebookStats stats_;
};

struct GainQuant {
  int index = 0;
  double value = 0.0;
};

/// Uniform quantizer of [0, M] with 2^gain_bits cells of width M * 2^-gain_bits.
/// value = step * floor(a / step); a == M lands in the top cell (the dynamic
/// range check upstream already admitted it). Never overshoots: value <= a.
GainQuant quantize_gain(double a, double M, int gain_bits);

struct QuantizeResult {
  bool failed = false;  // dynamic range exceeded: the failure symbol
  BitVec bits;
  Eigen::VectorXd reconstruction;
};

/// Operational n-dimensional quantizer with a hard dynamic range: inputs with
/// ||y||^2 > n M^2 yield the failure symbol, everything else an index of
/// total_bits() bits plus the reconstruction the decoder will compute from
/// that index. Implementations are deterministic given their construction
/// seed, so an encoder and a decoder built from the same seed agree bit for bit.
class Quantizer {
 public:
  virtual ~Quantizer() = default;

  [[nodiscard]] virtual int dim() const = 0;
  [[nodiscard]] virtual int total_bits() const = 0;
  [[nodiscard]] virtual double dynamic_range() const = 0;  // M

  [[nodiscard]] virtual QuantizeResult quantize(const Eigen::VectorXd& y) const = 0;
  [[nodiscard]] virtual Eigen::VectorXd reconstruct(const BitVec& bits) const = 0;

  /// True for the lossless mock, whose reconstruction travels out of band.
  [[nodiscard]] virtual bool conveys_exact() const { return false; }
};

/// Gain-shape composition: gain ||y||/sqrt(n) through the uniform gain
/// quantizer, shape y/||y|| through the spherical codebook. Index layout is
/// gain bits then shape bits, MSB first.
class GainShapeQuantizer final : public Quantizer {
 public:
  GainShapeQuantizer(ShapeCodebook codebook, double M, int gain_bits);

  [[nodiscard]] int dim() const override { return codebook_.dim(); }
  [[nodiscard]] int total_bits() const override { return gain_bits_ + codebook_.bits(); }
  [[nodiscard]] double dynamic_range() const override { return M_; }
  [[nodiscard]] int gain_bits() const { return gain_bits_; }
  [[nodiscard]] const ShapeCodebook& codebook() const { return codebook_; }

  [[nodiscard]] QuantizeResult quantize(const Eigen::VectorXd& y) const override;
  [[nodiscard]] Eigen::VectorXd reconstruct(const BitVec& bits) const override;

 private:
  ShapeCodebook codebook_;
  double M_;
  int gain_bits_;
};

/// Coordinate-wise uniform quantizer over [-M sqrt(n), M sqrt(n)] with
/// 2^bits_per_coord cells per coordinate, reproducing at cell midpoints.
class UniformVectorQuantizer final : public Quantizer {
 public:
  UniformVectorQuantizer(int n, double M, int bits_per_coord);

  [[nodiscard]] int dim() const override { return n_; }
  [[nodiscard]] int total_bits() const override { return n_ * bits_per_coord_; }
  [[nodiscard]] double dynamic_range() const override { return M_; }
  [[nodiscard]] int bits_per_coord() const { return bits_per_coord_; }

  [[nodiscard]] QuantizeResult quantize(const Eigen::VectorXd& y) const override;
  [[nodiscard]] Eigen::VectorXd reconstruct(const BitVec& bits) const override;

 private:
  int n_;
  double M_;
  int bits_per_coord_;
};

/// Infinite-rate mock: reconstruction equals the input and is attached to the
/// message out of band; the declared bit budget is padded with zeros.
class LosslessQuantizer final : public Quantizer {
 public:
  LosslessQuantizer(int n, int declared_bits) : n_(n), declared_bits_(declared_bits) {}

  [[nodiscard]] int dim() const override { return n_; }
  [[nodiscard]] int total_bits() const override { return declared_bits_; }
  [[nodiscard]] double dynamic_range() const override { return 0.0; }  // never fails
  [[nodiscard]] bool conveys_exact() const override { return true; }

  [[nodiscard]] QuantizeResult quantize(const Eigen::VectorXd& y) const override;
  [[nodiscard]] Eigen::VectorXd reconstruct(const BitVec& bits) const override;

 private:
  int n_;
  int declared_bits_;
};

struct ShellStat {
  double norm = 0.0;
  double mean_error = 0.0;  // mean squared quantization error on the shell
  double std_error = 0.0;   // standard error of that mean
  int trials = 0;
};

struct ProfileFit {
  double theta_hat = 0.0;
  double eps_hat = 0.0;
  std::vector<ShellStat> shells;
  bool degenerate = false;  // single-norm grid: slope through origin only
};

/// Empirical profile of a quantizer against the additive-error model
/// d(rho) = theta * rho^2 + n * eps^2. Draws `trials_per_shell` vectors
/// uniformly on each norm shell, measures the mean squared error, and fits
/// the two parameters by least squares with theta clamped to [0,1] and
/// eps^2 clamped to >= 0. Norms must lie in (0, sqrt(n) * M].
ProfileFit profile_quantizer(const Quantizer& q, double M, std::span<const double> norm_grid,
                             int trials_per_shell, std::uint64_t seed);

/// Shell grid for profiling a gain-shape quantizer: norms whose gains sit at
/// gain-cell midpoints, spread over (0, M]. The additive-error model is exact
/// on such a grid up to shape noise; arbitrary norms see a sawtooth in the
/// gain phase that the two-parameter model cannot follow.
std::vector<double> midcell_norm_grid(int n, double M, int gain_bits, int shells);

}  // namespace sutrack
