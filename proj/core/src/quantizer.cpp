#include "sutrack/quantizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sutrack/rng.hpp"

namespace sutrack {

ShapeCodebook ShapeCodebook::build(int n, int bits, std::uint64_t seed, int probe_count,
                                   int size_cap_bits) {
  if (n < 1) throw std::invalid_argument("codebook: dimension must be at least 1");
  if (bits < 1) throw std::invalid_argument("codebook: need at least 1 bit");
  if (bits > size_cap_bits) {
    throw std::invalid_argument("codebook: 2^" + std::to_string(bits) +
                                " vectors exceeds the size cap of 2^" +
                                std::to_string(size_cap_bits));
  }
  if (probe_count < 1) throw std::invalid_argument("codebook: probe_count must be positive");

  ShapeCodebook cb;
  cb.bits_ = bits;
  cb.seed_ = seed;
  const std::size_t count = std::size_t{1} << bits;
  cb.vectors_.resize(static_cast<Eigen::Index>(count), n);

  Rng rng(derive_seed(seed, "shape-codebook"));
  if (n == 1) {
    // S^0 has exactly two points; enumerate them instead of sampling so the
    // 1-bit codebook is the sign quantizer {+1, -1}.
    for (std::size_t i = 0; i < count; ++i) cb.vectors_(static_cast<Eigen::Index>(i), 0) = (i % 2 == 0) ? 1.0 : -1.0;
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      cb.vectors_.row(static_cast<Eigen::Index>(i)) = rng.unit_vector(n).transpose();
    }
  }

  // Calibrate the decode scale on fresh probes.
  Rng probe_rng(derive_seed(seed, "scale-probes"));
  double sum_max = 0.0;
  double sum_dist = 0.0;
  for (int p = 0; p < probe_count; ++p) {
    const Eigen::VectorXd y = probe_rng.unit_vector(n);
    double best = -2.0;
    for (Eigen::Index i = 0; i < cb.vectors_.rows(); ++i) {
      const double ip = cb.vectors_.row(i).dot(y);
      if (ip > best) best = ip;
    }
    sum_max += best;
    sum_dist += 1.0 - best * best;
  }
  cb.stats_.mean_max_inner = sum_max / probe_count;
  cb.stats_.mean_shape_distortion = sum_dist / probe_count;
  cb.stats_.probes = probe_count;
  cb.scale_ = std::min(1.0, std::max(cb.stats_.mean_max_inner, 1e-12));
  return cb;
}

ShapeCodebook ShapeCodebook::from_raw(RowMatrixXd vectors, int bits, double scale,
                                      std::uint64_t seed) {
  if (vectors.rows() != static_cast<Eigen::Index>(std::size_t{1} << bits)) {
    throw std::invalid_argument("codebook: row count does not match bits");
  }
  if (!(scale > 0.0 && scale <= 1.0)) throw std::invalid_argument("codebook: scale out of (0, 1]");
  ShapeCodebook cb;
  cb.vectors_ = std::move(vectors);
  cb.bits_ = bits;
  cb.scale_ = scale;
  cb.seed_ = seed;
  return cb;
}

int ShapeCodebook::encode(const Eigen::VectorXd& unit) const {
  if (unit.size() != dim()) throw std::invalid_argument("encode: dimension mismatch");
  if (std::abs(unit.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("encode: input is not a unit vector");
  }
  int best_index = 0;
  double best = vectors_.row(0).dot(unit);
  for (Eigen::Index i = 1; i < vectors_.rows(); ++i) {
    const double ip = vectors_.row(i).dot(unit);
    if (ip > best) {  // strict: ties keep the lowest index
      best = ip;
      best_index = static_cast<int>(i);
    }
  }
  return best_index;
}

Eigen::VectorXd ShapeCodebook::decode(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= size()) {
    throw std::invalid_argument("decode: index out of range");
  }
  return scale_ * vectors_.row(index).transpose();
}

GainQuant quantize_gain(double a, double M, int gain_bits) {
  if (gain_bits < 1 || gain_bits > 62) throw std::invalid_argument("gain_bits out of range");
  if (!(M > 0.0)) throw std::invalid_argument("dynamic range must be positive");
  if (a < 0.0 || a > M * (1.0 + 1e-12)) {
    throw std::invalid_argument("gain outside [0, M]; dynamic range check belongs upstream");
  }
  const double step = M * std::ldexp(1.0, -gain_bits);
  const std::int64_t top = (std::int64_t{1} << gain_bits) - 1;
  std::int64_t idx = static_cast<std::int64_t>(std::floor(a / step));
  if (idx > top) idx = top;  // a == M maps to the top cell
  GainQuant g;
  g.index = static_cast<int>(idx);
  g.value = step * static_cast<double>(idx);
  return g;
}

GainShapeQuantizer::GainShapeQuantizer(ShapeCodebook codebook, double M, int gain_bits)
    : codebook_(std::move(codebook)), M_(M), gain_bits_(gain_bits) {
  if (!(M > 0.0)) throw std::invalid_argument("dynamic range must be positive");
  if (gain_bits < 1) throw std::invalid_argument("need at least 1 gain bit");
}

QuantizeResult GainShapeQuantizer::quantize(const Eigen::VectorXd& y) const {
  const int n = dim();
  if (y.size() != n) throw std::invalid_argument("quantize: dimension mismatch");
  QuantizeResult r;
  const double sq = y.squaredNorm();
  if (sq > static_cast<double>(n) * M_ * M_) {
    r.failed = true;
    return r;
  }
  int shape_index = 0;
  int gain_index = 0;
  if (sq > 0.0) {
    const double norm = std::sqrt(sq);
    double a = norm / std::sqrt(static_cast<double>(n));
    if (a > M_) a = M_;  // rounding guard; the range test above admitted y
    gain_index = quantize_gain(a, M_, gain_bits_).index;
    shape_index = codebook_.encode(y / norm);
  }
  r.bits = BitVec::from_uint(static_cast<std::uint64_t>(gain_index), gain_bits_);
  r.bits.append(BitVec::from_uint(static_cast<std::uint64_t>(shape_index), codebook_.bits()));
  r.reconstruction = reconstruct(r.bits);
  return r;
}

Eigen::VectorXd GainShapeQuantizer::reconstruct(const BitVec& bits) const {
  if (static_cast<int>(bits.size()) != total_bits()) {
    throw std::invalid_argument("reconstruct: wrong index width");
  }
  const auto gain_index = bits.slice(0, static_cast<std::size_t>(gain_bits_)).to_uint();
  const auto shape_index =
      bits.slice(static_cast<std::size_t>(gain_bits_), static_cast<std::size_t>(codebook_.bits()))
          .to_uint();
  const double step = M_ * std::ldexp(1.0, -gain_bits_);
  const double value = step * static_cast<double>(gain_index);
  return std::sqrt(static_cast<double>(dim())) * value *
         codebook_.decode(static_cast<int>(shape_index));
}

UniformVectorQuantizer::UniformVectorQuantizer(int n, double M, int bits_per_coord)
    : n_(n), M_(M), bits_per_coord_(bits_per_coord) {
  if (n < 1) throw std::invalid_argument("dimension must be at least 1");
  if (!(M > 0.0)) throw std::invalid_argument("dynamic range must be positive");
  if (bits_per_coord < 1 || bits_per_coord > 30) {
    throw std::invalid_argument("bits_per_coord out of range");
  }
}

QuantizeResult UniformVectorQuantizer::quantize(const Eigen::VectorXd& y) const {
  if (y.size() != n_) throw std::invalid_argument("quantize: dimension mismatch");
  QuantizeResult r;
  if (y.squaredNorm() > static_cast<double>(n_) * M_ * M_) {
    r.failed = true;
    return r;
  }
  const double half_range = M_ * std::sqrt(static_cast<double>(n_));
  const double width = 2.0 * half_range * std::ldexp(1.0, -bits_per_coord_);
  const std::int64_t top = (std::int64_t{1} << bits_per_coord_) - 1;
  for (int i = 0; i < n_; ++i) {
    std::int64_t cell = static_cast<std::int64_t>(std::floor((y[i] + half_range) / width));
    if (cell < 0) cell = 0;
    if (cell > top) cell = top;
    r.bits.append(BitVec::from_uint(static_cast<std::uint64_t>(cell), bits_per_coord_));
  }
  r.reconstruction = reconstruct(r.bits);
  return r;
}

Eigen::VectorXd UniformVectorQuantizer::reconstruct(const BitVec& bits) const {
  if (static_cast<int>(bits.size()) != total_bits()) {
    throw std::invalid_argument("reconstruct: wrong index width");
  }
  const double half_range = M_ * std::sqrt(static_cast<double>(n_));
  const double width = 2.0 * half_range * std::ldexp(1.0, -bits_per_coord_);
  Eigen::VectorXd out(n_);
  for (int i = 0; i < n_; ++i) {
    const auto cell = bits
                          .slice(static_cast<std::size_t>(i) * bits_per_coord_,
                                 static_cast<std::size_t>(bits_per_coord_))
                          .to_uint();
    out[i] = -half_range + (static_cast<double>(cell) + 0.5) * width;
  }
  return out;
}

QuantizeResult LosslessQuantizer::quantize(const Eigen::VectorXd& y) const {
  if (y.size() != n_) throw std::invalid_argument("quantize: dimension mismatch");
  QuantizeResult r;
  r.bits = BitVec(static_cast<std::size_t>(declared_bits_));  // zero padding
  r.reconstruction = y;
  return r;
}

Eigen::VectorXd LosslessQuantizer::reconstruct(const BitVec&) const {
  throw std::logic_error("lossless mock conveys its reconstruction out of band");
}

ProfileFit profile_quantizer(const Quantizer& q, double M, std::span<const double> norm_grid,
                             int trials_per_shell, std::uint64_t seed) {
  if (norm_grid.empty()) throw std::invalid_argument("profile: empty norm grid");
  if (trials_per_shell < 2) throw std::invalid_argument("profile: need at least 2 trials per shell");
  const int n = q.dim();
  const double max_norm = std::sqrt(static_cast<double>(n)) * M;
  for (double rho : norm_grid) {
    if (!(rho > 0.0 && rho <= max_norm * (1.0 + 1e-12))) {
      throw std::invalid_argument("profile: norms must lie in (0, sqrt(n)*M]");
    }
  }

  ProfileFit fit;
  fit.shells.reserve(norm_grid.size());
  for (std::size_t si = 0; si < norm_grid.size(); ++si) {
    const double rho = norm_grid[si];
    Rng rng(derive_seed(seed, "profile-shell", si));
    double sum = 0.0;
    double sumsq = 0.0;
    for (int t = 0; t < trials_per_shell; ++t) {
      const Eigen::VectorXd y = rho * rng.unit_vector(n);
      const QuantizeResult r = q.quantize(y);
      if (r.failed) throw std::logic_error("profile: failure inside the dynamic range");
      const double err = (y - r.reconstruction).squaredNorm();
      sum += err;
      sumsq += err * err;
    }
    ShellStat stat;
    stat.norm = rho;
    stat.trials = trials_per_shell;
    stat.mean_error = sum / trials_per_shell;
    const double var =
        std::max(0.0, (sumsq - sum * sum / trials_per_shell) / (trials_per_shell - 1));
    stat.std_error = std::sqrt(var / trials_per_shell);
    fit.shells.push_back(stat);
  }

  // Least squares for d = theta * rho^2 + E against the shell means,
  // inverse-variance weighted: the per-draw error scale grows like rho^4, so
  // an unweighted fit would let high-norm noise leak into the intercept.
  // theta is clamped to [0,1] and E to >= 0, refitting the free parameter.
  double min_var = std::numeric_limits<double>::max();
  for (const auto& s : fit.shells) {
    min_var = std::min(min_var, std::max(s.std_error * s.std_error, 1e-30));
  }
  double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
  for (const auto& s : fit.shells) {
    const double w = min_var / std::max(s.std_error * s.std_error, 1e-30);
    const double x = s.norm * s.norm;
    sw += w;
    swx += w * x;
    swy += w * s.mean_error;
    swxx += w * x * x;
    swxy += w * x * s.mean_error;
  }
  const auto theta_through_origin = [&]() { return swxx > 0.0 ? swxy / swxx : 0.0; };

  double theta = 0.0;
  double E = 0.0;
  if (norm_grid.size() == 1) {
    fit.degenerate = true;
    theta = theta_through_origin();
  } else {
    const double det = sw * swxx - swx * swx;
    if (det <= 0.0) {
      fit.degenerate = true;  // duplicate norms: fall back to slope through origin
      theta = theta_through_origin();
    } else {
      theta = (sw * swxy - swx * swy) / det;
      E = (swy - theta * swx) / sw;
    }
  }
  if (theta < 0.0) {
    theta = 0.0;
    E = swy / sw;
  } else if (theta > 1.0) {
    theta = 1.0;
    E = (swy - swx) / sw;
  }
  if (E < 0.0) {
    E = 0.0;
    theta = std::min(1.0, std::max(0.0, theta_through_origin()));
  }
  fit.theta_hat = theta;
  fit.eps_hat = std::sqrt(E / static_cast<double>(n));
  return fit;
}

std::vector<double> midcell_norm_grid(int n, double M, int gain_bits, int shells) {
  if (shells < 1) throw std::invalid_argument("need at least one shell");
  const double step = M * std::ldexp(1.0, -gain_bits);
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(shells));
  for (int j = 1; j <= shells; ++j) {
    double a = (static_cast<double>(j) - 0.5) * M / static_cast<double>(shells) + 0.5 * step;
    // snap to the midpoint of the gain cell containing a, staying inside (0, M]
    a = (std::floor(a / step) + 0.5) * step;
    if (a > M) a -= step;
    grid.push_back(a * root_n);
  }
  return grid;
}

}  // namespace sutrack
