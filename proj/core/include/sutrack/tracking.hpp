#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sutrack/bits.hpp"
#include "sutrack/process.hpp"
#include "sutrack/quantizer.hpp"

namespace sutrack {

struct QuantizerSpec {
  enum class Kind { kGainShape, kUniform, kLossless };

  Kind kind = Kind::kGainShape;
  double m_over_sigma = 8.0;  // dynamic range M in units of sigma
  int gain_bits = 4;
  int shape_bits = -1;  // -1: derive from the bit budget (budget - gain_bits)
};

/// Parameters of one tracking run. The slot timeline: the process is sampled
/// every s slots; each sampling period splits into m = s/p sub-fragments of p
/// slots; each sub-fragment carries one n*rate*p-bit quantizer index, rate
/// bits per dimension per slot. A message sent in slot t is received in slot
/// t+1.
struct TrackingConfig {
  double rate = 1.0;
  int s = 1;
  int p = 1;
  int horizon = 1000;
  int n = 1;
  double alpha = 0.9;
  double sigma2 = 1.0;
  QuantizerSpec quantizer;
  int codebook_cap_bits = 20;

  [[nodiscard]] int bits_per_update() const;  // n * rate * p, validated integral
  [[nodiscard]] int fragments_per_sample() const { return s / p; }
  void validate() const;
};

/// Builds the operational quantizer for a config. Encoder and decoder each
/// call this with the same seed; the construction is deterministic, which is
/// what "shared randomness" means operationally.
std::unique_ptr<Quantizer> make_quantizer(const TrackingConfig& cfg, std::uint64_t seed);

/// One slot of channel payload: n*rate bits, or the failure marker. The
/// lossless mock additionally rides its reconstruction out of band on the
/// final chunk of a sub-fragment.
struct SlotMessage {
  bool bottom = false;
  BitVec payload;
  std::optional<Eigen::VectorXd> exact;
};

/// Receiver state machine. Call tick() once per slot with the message sent in
/// the previous slot (nullopt at t = 0). Returns the causal estimate of the
/// current state.
///
/// Timeline at slot t:
///   - the message sent at t-1 arrives and extends the current sub-fragment;
///   - if t is a multiple of p, the sub-fragment completed exactly now and its
///     decoded correction is added to the estimate of the sample it refines;
///   - if t is also a sampling instant, the estimate is advanced to the new
///     sample by scaling with alpha^s;
///   - the output is alpha^(t - ks) times the estimate of the latest sample.
/// After the failure marker arrives every output is zero.
class Decoder {
 public:
  Decoder(const TrackingConfig& cfg, std::shared_ptr<const Quantizer> quantizer);

  Eigen::VectorXd tick(std::int64_t t, const std::optional<SlotMessage>& arrived);

  [[nodiscard]] const Eigen::VectorXd& latest_sample_estimate() const { return estimate_; }
  [[nodiscard]] bool failed() const { return failed_; }

 private:
  TrackingConfig cfg_;
  std::shared_ptr<const Quantizer> quantizer_;
  Eigen::VectorXd estimate_;   // estimate of the latest sample X_{ks}
  std::int64_t next_t_ = 0;
  std::int64_t ks_ = 0;
  BitVec fragment_;
  std::optional<Eigen::VectorXd> fragment_exact_;
  std::vector<double> alpha_pow_;  // alpha^0 .. alpha^s by repeated multiply
  bool failed_ = false;
};

/// Transmitter state machine. Runs a shadow decoder on its own past messages,
/// so at every update instant t = ks + jp it can quantize the receiver-side
/// estimation error of the latest sample and queue the index across the next
/// p slots. Once the quantizer fails, the failure marker is sent forever.
class Encoder {
 public:
  Encoder(const TrackingConfig& cfg, std::shared_ptr<const Quantizer> quantizer);

  /// `sample` must be non-null exactly at sampling instants (t % s == 0).
  SlotMessage tick(std::int64_t t, const Eigen::VectorXd* sample);

  [[nodiscard]] const Decoder& shadow() const { return shadow_; }
  [[nodiscard]] std::optional<std::int64_t> failure_time() const { return failure_time_; }

 private:
  TrackingConfig cfg_;
  std::shared_ptr<const Quantizer> quantizer_;
  Decoder shadow_;
  std::optional<SlotMessage> last_sent_;
  std::deque<SlotMessage> queue_;
  Eigen::VectorXd current_sample_;
  std::int64_t next_t_ = 0;
  std::optional<std::int64_t> failure_time_;
};

struct TrialResult {
  std::uint64_t quantizer_seed = 0;
  std::uint64_t trajectory_seed = 0;
  std::optional<std::int64_t> tau;  // first slot whose quantization failed
  double dbar = 0.0;                // time-averaged per-dimension squared error
  double delta_hat = 0.0;           // 1 - dbar / sigma2
  bool failed = false;
  std::vector<double> per_t_error;  // ||x_t - xhat_t||^2 / n, when requested
};

/// Lockstep simulation of encoder, channel (one-slot delay) and decoder over
/// t = 0 .. horizon-1. Encoder and decoder quantizers are constructed
/// independently from the same seed; the shadow decoder is checked against
/// the real one bit for bit at every slot.
TrialResult run_tracking(const Trajectory& traj, const TrackingConfig& cfg,
                         std::uint64_t quantizer_seed, bool store_trace = false);

}  // namespace sutrack
