#include "sutrack/tracking.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sutrack {

int TrackingConfig::bits_per_update() const {
  const double budget = static_cast<double>(n) * rate * static_cast<double>(p);
  const double rounded = std::round(budget);
  if (std::abs(budget - rounded) > 1e-9 || rounded < 1.0) {
    throw std::invalid_argument("bit budget n*rate*p must be a positive integer, got " +
                                std::to_string(budget));
  }
  return static_cast<int>(rounded);
}

void TrackingConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  if (n < 1) throw std::invalid_argument("dimension must be at least 1");
  if (s < 1) throw std::invalid_argument("sampling period must be at least 1");
  if (p < 1 || p > s) throw std::invalid_argument("update period must satisfy 1 <= p <= s");
  if (s % p != 0) {
    throw std::invalid_argument("update period " + std::to_string(p) +
                                " must divide the sampling period " + std::to_string(s));
  }
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  const int budget = bits_per_update();

  switch (quantizer.kind) {
    case QuantizerSpec::Kind::kGainShape: {
      if (quantizer.gain_bits < 1) throw std::invalid_argument("need at least 1 gain bit");
      const int shape =
          quantizer.shape_bits >= 0 ? quantizer.shape_bits : budget - quantizer.gain_bits;
      if (shape < 1) throw std::invalid_argument("bit budget leaves no shape bits");
      if (quantizer.gain_bits + shape != budget) {
        throw std::invalid_argument("gain_bits + shape_bits must equal the bit budget " +
                                    std::to_string(budget));
      }
      if (shape > codebook_cap_bits) {
        throw std::invalid_argument("shape codebook 2^" + std::to_string(shape) +
                                    " exceeds the cap 2^" + std::to_string(codebook_cap_bits));
      }
      break;
    }
    case QuantizerSpec::Kind::kUniform: {
      if (budget % n != 0) {
        throw std::invalid_argument("uniform quantizer needs an integer bit count per coordinate");
      }
      break;
    }
    case QuantizerSpec::Kind::kLossless:
      break;
  }
  if (!(quantizer.m_over_sigma > 0.0) && quantizer.kind != QuantizerSpec::Kind::kLossless) {
    throw std::invalid_argument("dynamic range must be positive");
  }
}

std::unique_ptr<Quantizer> make_quantizer(const TrackingConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int budget = cfg.bits_per_update();
  const double M = cfg.quantizer.m_over_sigma * std::sqrt(cfg.sigma2);
  switch (cfg.quantizer.kind) {
    case QuantizerSpec::Kind::kGainShape: {
      const int shape = cfg.quantizer.shape_bits >= 0 ? cfg.quantizer.shape_bits
                                                      : budget - cfg.quantizer.gain_bits;
      auto cb = ShapeCodebook::build(cfg.n, shape, seed, 1024, cfg.codebook_cap_bits);
      return std::make_unique<GainShapeQuantizer>(std::move(cb), M, cfg.quantizer.gain_bits);
    }
    case QuantizerSpec::Kind::kUniform:
      return std::make_unique<UniformVectorQuantizer>(cfg.n, M, budget / cfg.n);
    case QuantizerSpec::Kind::kLossless:
      return std::make_unique<LosslessQuantizer>(cfg.n, budget);
  }
  throw std::logic_error("unknown quantizer kind");
}

Decoder::Decoder(const TrackingConfig& cfg, std::shared_ptr<const Quantizer> quantizer)
    : cfg_(cfg), quantizer_(std::move(quantizer)), estimate_(Eigen::VectorXd::Zero(cfg.n)) {
  alpha_pow_.resize(static_cast<std::size_t>(cfg_.s) + 1);
  alpha_pow_[0] = 1.0;
  for (int i = 1; i <= cfg_.s; ++i) alpha_pow_[i] = alpha_pow_[i - 1] * cfg_.alpha;
}

Eigen::VectorXd Decoder::tick(std::int64_t t, const std::optional<SlotMessage>& arrived) {
  if (t != next_t_) throw std::invalid_argument("decoder ticks must advance t by exactly 1");
  ++next_t_;
  if (t == 0 && arrived) throw std::invalid_argument("no message can arrive at t = 0");

  if (arrived && !failed_) {
    if (arrived->bottom) {
      failed_ = true;
      estimate_.setZero();
      fragment_ = BitVec();
      fragment_exact_.reset();
    } else {
      fragment_.append(arrived->payload);
      if (arrived->exact) fragment_exact_ = arrived->exact;
    }
  }

  if (!failed_ && t >= 1) {
    if (t % cfg_.p == 0) {
      // The sub-fragment sent over slots [t-p, t-1] completed just now; it
      // refines the sample that was current when it was quantized.
      if (static_cast<int>(fragment_.size()) != cfg_.bits_per_update()) {
        throw std::logic_error("malformed sub-fragment: expected " +
                               std::to_string(cfg_.bits_per_update()) + " bits, have " +
                               std::to_string(fragment_.size()));
      }
      estimate_ += fragment_exact_ ? *fragment_exact_ : quantizer_->reconstruct(fragment_);
      fragment_ = BitVec();
      fragment_exact_.reset();
    }
    if (t % cfg_.s == 0) {
      estimate_ *= alpha_pow_[static_cast<std::size_t>(cfg_.s)];
      ks_ = t;
    }
  }
  if (failed_) return Eigen::VectorXd::Zero(cfg_.n);
  return alpha_pow_[static_cast<std::size_t>(t - ks_)] * estimate_;
}

Encoder::Encoder(const TrackingConfig& cfg, std::shared_ptr<const Quantizer> quantizer)
    : cfg_(cfg),
      quantizer_(std::move(quantizer)),
      shadow_(cfg, quantizer_),
      current_sample_(Eigen::VectorXd::Zero(cfg.n)) {
  if (quantizer_->dim() != cfg.n) throw std::invalid_argument("quantizer dimension mismatch");
  if (quantizer_->total_bits() != cfg.bits_per_update()) {
    throw std::invalid_argument("quantizer bit width does not match the budget");
  }
}

SlotMessage Encoder::tick(std::int64_t t, const Eigen::VectorXd* sample) {
  if (t != next_t_) throw std::invalid_argument("encoder ticks must advance t by exactly 1");
  ++next_t_;

  // Replicate the receiver: feed the shadow decoder the message sent at t-1.
  shadow_.tick(t, last_sent_);

  if (t % cfg_.s == 0) {
    if (sample == nullptr) throw std::invalid_argument("sample required at a sampling instant");
    if (sample->size() != cfg_.n) throw std::invalid_argument("sample dimension mismatch");
    current_sample_ = *sample;
  } else if (sample != nullptr) {
    throw std::invalid_argument("sample provided between sampling instants");
  }

  SlotMessage bottom;
  bottom.bottom = true;
  if (failure_time_) {
    last_sent_ = bottom;
    return bottom;
  }

  if (t % cfg_.p == 0) {
    const Eigen::VectorXd error = current_sample_ - shadow_.latest_sample_estimate();
    const QuantizeResult qr = quantizer_->quantize(error);
    if (qr.failed) {
      failure_time_ = t;
      queue_.clear();
      last_sent_ = bottom;
      return bottom;
    }
    auto chunks = split_chunks(qr.bits, cfg_.p);
    for (auto& chunk : chunks) {
      SlotMessage msg;
      msg.payload = std::move(chunk);
      queue_.push_back(std::move(msg));
    }
    if (quantizer_->conveys_exact()) queue_.back().exact = qr.reconstruction;
  }

  if (queue_.empty()) throw std::logic_error("slot without a queued payload chunk");
  SlotMessage out = std::move(queue_.front());
  queue_.pop_front();
  last_sent_ = out;
  return out;
}

TrialResult run_tracking(const Trajectory& traj, const TrackingConfig& cfg,
                         std::uint64_t quantizer_seed, bool store_trace) {
  cfg.validate();
  if (traj.horizon() < cfg.horizon) throw std::invalid_argument("trajectory shorter than horizon");
  if (traj.dim() != cfg.n) throw std::invalid_argument("trajectory dimension mismatch");

  // Independent constructions from the same seed: the shared-randomness model.
  std::shared_ptr<const Quantizer> enc_q = make_quantizer(cfg, quantizer_seed);
  std::shared_ptr<const Quantizer> dec_q = make_quantizer(cfg, quantizer_seed);
  Encoder encoder(cfg, enc_q);
  Decoder decoder(cfg, dec_q);

  TrialResult result;
  result.quantizer_seed = quantizer_seed;
  result.trajectory_seed = traj.seed;
  if (store_trace) result.per_t_error.reserve(static_cast<std::size_t>(cfg.horizon));

  std::optional<SlotMessage> in_flight;
  double err_sum = 0.0;
  Eigen::VectorXd sample_buf;
  for (std::int64_t t = 0; t < cfg.horizon; ++t) {
    const Eigen::VectorXd* sample = nullptr;
    if (t % cfg.s == 0) {
      sample_buf = traj.values.row(t).transpose();
      sample = &sample_buf;
    }
    SlotMessage sent = encoder.tick(t, sample);
    const Eigen::VectorXd estimate = decoder.tick(t, in_flight);
    // Shadow-decoder equality, checked every slot (exact, not approximate).
    const bool shadow_matches =
        (encoder.shadow().latest_sample_estimate().array() ==
         decoder.latest_sample_estimate().array())
            .all() &&
        encoder.shadow().failed() == decoder.failed();
    if (!shadow_matches) throw std::logic_error("shadow decoder diverged from the receiver");
    const double err = (traj.values.row(t).transpose() - estimate).squaredNorm() /
                       static_cast<double>(cfg.n);
    err_sum += err;
    if (store_trace) result.per_t_error.push_back(err);
    in_flight = std::move(sent);
  }

  result.dbar = err_sum / static_cast<double>(cfg.horizon);
  result.delta_hat = 1.0 - result.dbar / cfg.sigma2;
  result.tau = encoder.failure_time();
  result.failed = result.tau.has_value();
  return result;
}

}  // namespace sutrack
