#include <doctest.h>

#include <cmath>
#include <deque>
#include <memory>
#include <vector>

#include "sutrack/process.hpp"
#include "sutrack/rng.hpp"
#include "sutrack/tracking.hpp"

using namespace sutrack;

namespace {

TrackingConfig lossless_config(int n, int s, int p, int horizon, double alpha) {
  TrackingConfig cfg;
  cfg.rate = 1.0;
  cfg.s = s;
  cfg.p = p;
  cfg.horizon = horizon;
  cfg.n = n;
  cfg.alpha = alpha;
  cfg.sigma2 = 1.0;
  cfg.quantizer.kind = QuantizerSpec::Kind::kLossless;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  TrackingConfig cfg = lossless_config(4, 4, 2, 100, 0.9);
  CHECK_NOTHROW(cfg.validate());

  cfg.p = 3;  // does not divide s
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.p = 8;  // exceeds s
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.p = 2;

  cfg.rate = 0.3;  // budget 4*0.3*2 = 2.4 bits
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.rate = 1.0;

  cfg.quantizer.kind = QuantizerSpec::Kind::kGainShape;
  cfg.quantizer.gain_bits = 4;
  cfg.quantizer.shape_bits = 3;  // 4 + 3 != 8
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.quantizer.shape_bits = -1;  // derived: 8 - 4 = 4
  CHECK_NOTHROW(cfg.validate());

  cfg.rate = 4.0;  // budget 32, shape 28 > cap 20
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg.quantizer.kind = QuantizerSpec::Kind::kUniform;
  cfg.rate = 1.0;
  cfg.p = 2;
  CHECK_NOTHROW(cfg.validate());  // 2 bits per coordinate
  cfg.n = 3;
  cfg.rate = 0.5;
  cfg.p = 2;
  // budget 3 bits over 3 coords is 1 bit each; fine
  CHECK_NOTHROW(cfg.validate());
  cfg.rate = 2.0 / 3.0;
  // budget 4 bits over 3 coords is fractional
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("first update quantizes the raw sample") {
  // At t = 0 the receiver estimate is 0, so Y_{0,0} = X_0.
  const TrackingConfig cfg = lossless_config(3, 2, 1, 10, 0.8);
  auto q = std::shared_ptr<const Quantizer>(make_quantizer(cfg, 1));
  Encoder enc(cfg, q);
  Eigen::VectorXd x0(3);
  x0 << 0.3, -1.2, 2.0;
  const SlotMessage msg = enc.tick(0, &x0);
  CHECK_FALSE(msg.bottom);
  REQUIRE(msg.exact.has_value());
  CHECK((*msg.exact - x0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lossless scheme follows the exact scaling timeline") {
  // s=4, p=2: fragments complete at even slots; between them the decoder
  // scales the last completed estimate by alpha^(t-ks).
  const double alpha = 0.9;
  const TrackingConfig cfg = lossless_config(2, 4, 2, 12, alpha);
  ProcessParams params;
  params.alpha = alpha;
  params.n = 2;
  const Trajectory traj = generate(params, 12, 5);

  auto q = std::shared_ptr<const Quantizer>(make_quantizer(cfg, 1));
  Encoder enc(cfg, q);
  Decoder dec(cfg, q);
  std::optional<SlotMessage> in_flight;
  std::vector<Eigen::VectorXd> outputs;
  for (int t = 0; t < 12; ++t) {
    const Eigen::VectorXd sample = traj.values.row((t / 4) * 4).transpose();
    const SlotMessage sent = enc.tick(t, t % 4 == 0 ? &sample : nullptr);
    outputs.push_back(dec.tick(t, in_flight));
    in_flight = sent;
  }

  std::vector<double> pow_alpha{1.0};
  for (int i = 1; i <= 4; ++i) pow_alpha.push_back(pow_alpha.back() * alpha);
  const Eigen::VectorXd x0 = traj.values.row(0).transpose();
  const Eigen::VectorXd x4 = traj.values.row(4).transpose();

  CHECK(outputs[0].isZero(0.0));  // nothing received yet
  CHECK(outputs[1].isZero(0.0));  // partial codeword ignored
  for (int t : {2, 3}) CHECK((outputs[t] - pow_alpha[t] * x0).cwiseAbs().maxCoeff() == 0.0);
  // t = 4: the second (zero-error) fragment of sample 0 arrives, then the
  // estimate advances to sample 1 as alpha^4 x0
  CHECK((outputs[4] - pow_alpha[4] * x0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(outputs[5] == alpha * outputs[4]);
  // from t = 6 the first fragment about x4 has arrived: exact tracking again
  for (int t : {6, 7}) {
    CHECK((outputs[t] - pow_alpha[t - 4] * x4).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("outputs are exactly alpha^(t-ks) times the sample estimate") {
  TrackingConfig cfg = lossless_config(4, 6, 3, 60, 0.95);
  cfg.quantizer.kind = QuantizerSpec::Kind::kGainShape;
  cfg.quantizer.gain_bits = 4;
  cfg.quantizer.shape_bits = -1;  // budget 4*1*3 = 12, shape 8
  cfg.rate = 1.0;
  cfg.n = 4;
  ProcessParams params;
  params.alpha = cfg.alpha;
  params.n = 4;
  const Trajectory traj = generate(params, cfg.horizon, 3);

  auto qe = std::shared_ptr<const Quantizer>(make_quantizer(cfg, 9));
  auto qd = std::shared_ptr<const Quantizer>(make_quantizer(cfg, 9));
  Encoder enc(cfg, qe);
  Decoder dec(cfg, qd);
  std::optional<SlotMessage> in_flight;
  std::vector<double> pow_alpha{1.0};
  for (int i = 1; i <= cfg.s; ++i) pow_alpha.push_back(pow_alpha.back() * cfg.alpha);

  for (int t = 0; t < cfg.horizon; ++t) {
    const Eigen::VectorXd sample = traj.values.row((t / cfg.s) * cfg.s).transpose();
    const SlotMessage sent = enc.tick(t, t % cfg.s == 0 ? &sample : nullptr);
    const Eigen::VectorXd out = dec.tick(t, in_flight);
    const int i = t % cfg.s;
    CHECK((out - pow_alpha[i] * dec.latest_sample_estimate()).cwiseAbs().maxCoeff() == 0.0);
    // shadow replica agrees bit for bit
    CHECK((enc.shadow().latest_sample_estimate().array() ==
           dec.latest_sample_estimate().array())
              .all());
    in_flight = sent;
  }
}

TEST_CASE("rate accounting: nR bits per slot, nRp per fragment, nRs per period") {
  TrackingConfig cfg;
  cfg.rate = 1.0;
  cfg.s = 4;
  cfg.p = 2;
  cfg.horizon = 40;
  cfg.n = 8;
  cfg.alpha = 0.9;
  cfg.sigma2 = 1.0;
  cfg.quantizer.kind = QuantizerSpec::Kind::kGainShape;
  cfg.quantizer.gain_bits = 4;  // shape 12
  cfg.quantizer.m_over_sigma = 8.0;

  ProcessParams params;
  params.alpha = cfg.alpha;
  params.n = cfg.n;
  const Trajectory traj = generate(params, cfg.horizon, 21);
  auto q = std::shared_ptr<const Quantizer>(make_quantizer(cfg, 2));
  Encoder enc(cfg, q);

  std::size_t period_bits = 0;
  for (int t = 0; t < cfg.horizon; ++t) {
    const Eigen::VectorXd sample = traj.values.row((t / cfg.s) * cfg.s).transpose();
    const SlotMessage msg = enc.tick(t, t % cfg.s == 0 ? &sample : nullptr);
    REQUIRE_FALSE(msg.bottom);
    CHECK(msg.payload.size() == static_cast<std::size_t>(cfg.n) * 1);  // nR per slot
    period_bits += msg.payload.size();
    if ((t + 1) % cfg.s == 0) {
      CHECK(period_bits == static_cast<std::size_t>(cfg.n) * cfg.s);  // nRs per period
      period_bits = 0;
    }
  }
}

TEST_CASE("failure latches the encoder and zeroes the decoder") {
  TrackingConfig cfg;
  cfg.rate = 1.0;
  cfg.s = 2;
  cfg.p = 1;
  cfg.horizon = 20;
  cfg.n = 4;
  cfg.alpha = 0.9;
  cfg.sigma2 = 1.0;
  cfg.quantizer.kind = QuantizerSpec::Kind::kGainShape;
  cfg.quantizer.gain_bits = 2;
  cfg.quantizer.m_over_sigma = 0.05;  // guaranteed out of range at t = 0

  ProcessParams params;
  params.alpha = cfg.alpha;
  params.n = cfg.n;
  const Trajectory traj = generate(params, cfg.horizon, 8);
  REQUIRE(traj.values.row(0).norm() > 0.05 * 2.0);

  const TrialResult result = run_tracking(traj, cfg, 5, /*store_trace=*/true);
  REQUIRE(result.failed);
  REQUIRE(result.tau.has_value());
  CHECK(*result.tau == 0);
  CHECK(result.delta_hat < 1.0);
  // after tau the decoder outputs zero, so the error is ||x_t||^2 / n
  for (int t = static_cast<int>(*result.tau) + 1; t < cfg.horizon; ++t) {
    const double expected = traj.values.row(t).squaredNorm() / cfg.n;
    CHECK(result.per_t_error[static_cast<std::size_t>(t)] ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  // messages after the failure are the failure marker forever
  auto q = std::shared_ptr<const Quantizer>(make_quantizer(cfg, 5));
  Encoder enc(cfg, q);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd sample = traj.values.row((t / cfg.s) * cfg.s).transpose();
    const SlotMessage msg = enc.tick(t, t % cfg.s == 0 ? &sample : nullptr);
    CHECK(msg.bottom == true);  // fails at t = 0 already
  }
}

TEST_CASE("messages depend only on observed samples") {
  TrackingConfig cfg;
  cfg.rate = 1.0;
  cfg.s = 4;
  cfg.p = 2;
  cfg.horizon = 8;
  cfg.n = 4;
  cfg.alpha = 0.9;
  cfg.sigma2 = 1.0;
  cfg.quantizer.kind = QuantizerSpec::Kind::kGainShape;
  cfg.quantizer.gain_bits = 2;
  cfg.quantizer.m_over_sigma = 8.0;

  ProcessParams params;
  params.alpha = cfg.alpha;
  params.n = cfg.n;
  Trajectory a = generate(params, cfg.horizon, 99);
  Trajectory b = a;
  // perturbing rows the encoder never observes changes nothing
  for (int t : {1, 2, 3, 5, 6, 7}) b.values.row(t).array() += 10.0;

  const auto run_messages = [&](const Trajectory& traj) {
    auto q = std::shared_ptr<const Quantizer>(make_quantizer(cfg, 13));
    Encoder enc(cfg, q);
    std::vector<SlotMessage> messages;
    for (int t = 0; t < cfg.horizon; ++t) {
      const Eigen::VectorXd sample = traj.values.row((t / cfg.s) * cfg.s).transpose();
      messages.push_back(enc.tick(t, t % cfg.s == 0 ? &sample : nullptr));
    }
    return messages;
  };

  const auto ma = run_messages(a);
  const auto mb = run_messages(b);
  for (int t = 0; t < cfg.horizon; ++t) {
    CHECK(ma[static_cast<std::size_t>(t)].payload == mb[static_cast<std::size_t>(t)].payload);
  }

  // changing the second sample changes messages only from its slot onward
  Trajectory c = a;
  c.values.row(4).array() += 1.0;
  const auto mc = run_messages(c);
  for (int t = 0; t < 4; ++t) {
    CHECK(ma[static_cast<std::size_t>(t)].payload == mc[static_cast<std::size_t>(t)].payload);
  }
  bool any_diff = false;
  for (int t = 4; t < 8; ++t) {
    any_diff = any_diff ||
               !(ma[static_cast<std::size_t>(t)].payload == mc[static_cast<std::size_t>(t)].payload);
  }
  CHECK(any_diff);
}

TEST_CASE("all-zero trajectory tracks perfectly") {
  TrackingConfig cfg;
  cfg.rate = 1.0;
  cfg.s = 2;
  cfg.p = 1;
  cfg.horizon = 100;
  cfg.n = 4;
  cfg.alpha = 0.9;
  cfg.sigma2 = 1.0;
  cfg.quantizer.kind = QuantizerSpec::Kind::kGainShape;
  cfg.quantizer.gain_bits = 2;

  ProcessParams params;
  params.alpha = cfg.alpha;
  params.sigma2 = 0.0;
  params.n = cfg.n;
  const Trajectory traj = generate(params, cfg.horizon, 1);
  const TrialResult result = run_tracking(traj, cfg, 1);
  CHECK(result.dbar == 0.0);
  CHECK(result.delta_hat == 1.0);
  CHECK_FALSE(result.failed);
}

TEST_CASE("lossless per-slot distortion matches the closed form") {
  // E D_t = sigma2 (1 - alpha^(2(t-ks))) for t-ks >= p once estimates are exact.
  const double alpha = 0.9;
  TrackingConfig cfg = lossless_config(16, 4, 1, 200, alpha);
  ProcessParams params;
  params.alpha = alpha;
  params.n = 16;

  const int trials = 300;
  std::vector<double> sum(200, 0.0), sumsq(200, 0.0);
  for (int trial = 0; trial < trials; ++trial) {
    const Trajectory traj = generate(params, cfg.horizon, 3000 + trial);
    const TrialResult r = run_tracking(traj, cfg, trial, /*store_trace=*/true);
    for (int t = 0; t < cfg.horizon; ++t) {
      sum[static_cast<std::size_t>(t)] += r.per_t_error[static_cast<std::size_t>(t)];
      sumsq[static_cast<std::size_t>(t)] +=
          r.per_t_error[static_cast<std::size_t>(t)] * r.per_t_error[static_cast<std::size_t>(t)];
    }
  }
  for (int t = 8; t < 200; ++t) {  // skip the start-up transient
    const int i = t % 4 == 0 ? 4 : t % 4;  // at sample slots the previous-sample error applies
    const double expected = 1.0 - std::pow(alpha, 2.0 * i);
    const double mean = sum[static_cast<std::size_t>(t)] / trials;
    const double var =
        std::max(0.0, (sumsq[static_cast<std::size_t>(t)] -
                       sum[static_cast<std::size_t>(t)] * sum[static_cast<std::size_t>(t)] / trials) /
                          (trials - 1));
    const double se = std::sqrt(var / trials);
    CHECK(std::abs(mean - expected) <= 3.5 * se + 1e-12);
  }
}

TEST_CASE("lossless accuracy approaches alpha^2 g(s)") {
  const double alpha = 0.9;
  TrackingConfig cfg = lossless_config(16, 4, 1, 2000, alpha);
  ProcessParams params;
  params.alpha = alpha;
  params.n = 16;
  double acc = 0.0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const Trajectory traj = generate(params, cfg.horizon, 4000 + trial);
    acc += run_tracking(traj, cfg, trial).delta_hat;
  }
  acc /= trials;
  const double g4 = (1.0 - std::pow(alpha, 8.0)) / (4.0 * (1.0 - alpha * alpha));
  CHECK(std::abs(acc - alpha * alpha * g4) <= 0.02);
}

TEST_CASE("scalar sign-quantizer run matches an independent reference simulation") {
  // Plain-double reimplementation of the slot protocol for n = 1, p = 1,
  // with the 1-bit shape codebook {+1, -1} and an l-bit gain quantizer.
  const double alpha = 0.8;
  const double M = 4.0;
  const int gain_bits = 3;
  const int s = 2;
  const int horizon = 400;

  TrackingConfig cfg;
  cfg.rate = 4.0;  // budget 1*4*1 = 4 bits: 3 gain + 1 shape
  cfg.s = s;
  cfg.p = 1;
  cfg.horizon = horizon;
  cfg.n = 1;
  cfg.alpha = alpha;
  cfg.sigma2 = 1.0;
  cfg.quantizer.kind = QuantizerSpec::Kind::kGainShape;
  cfg.quantizer.gain_bits = gain_bits;
  cfg.quantizer.m_over_sigma = M;

  ProcessParams params;
  params.alpha = alpha;
  params.n = 1;
  const Trajectory traj = generate(params, horizon, 314);
  const TrialResult lib = run_tracking(traj, cfg, 7);

  // reference simulation
  const double step = M * std::ldexp(1.0, -gain_bits);
  double est = 0.0;
  double in_flight = 0.0;
  bool have_in_flight = false;
  bool failed = false;
  double cur_sample = 0.0;
  double err_sum = 0.0;
  const double alpha_s = [&] {
    double a = 1.0;
    for (int i = 0; i < s; ++i) a *= alpha;
    return a;
  }();
  for (int t = 0; t < horizon; ++t) {
    if (!failed) {
      if (t >= 1 && have_in_flight) est += in_flight;
      if (t >= 1 && t % s == 0) est *= alpha_s;
    }
    if (t % s == 0) cur_sample = traj.values(t, 0);
    const double out = failed ? 0.0 : (t % s == 0 ? est : alpha * est);  // s = 2
    const double y = cur_sample - est;
    if (!failed) {
      if (y * y > M * M) {
        failed = true;
        have_in_flight = false;
      } else {
        const double a = std::abs(y);
        double idx = std::floor(a / step);
        if (idx > std::ldexp(1.0, gain_bits) - 1) idx = std::ldexp(1.0, gain_bits) - 1;
        const double value = step * idx;
        in_flight = value * (y >= 0.0 ? 1.0 : -1.0);
        have_in_flight = true;
      }
    }
    const double e = traj.values(t, 0) - out;
    err_sum += e * e;
  }
  const double ref_dbar = err_sum / horizon;
  CHECK(std::abs(lib.dbar - ref_dbar) <= 1e-12);
}
