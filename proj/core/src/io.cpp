#include "sutrack/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "sutrack/version.hpp"

namespace sutrack {

using nlohmann::json;

namespace {

void put_u32_le(std::ostream& os, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(buf, 4);
}

std::uint32_t get_u32_le(std::istream& is) {
  char buf[4];
  is.read(buf, 4);
  if (!is) throw std::runtime_error("truncated binary header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

void put_f64_le(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  os.write(buf, 8);
}

double get_f64_le(std::istream& is) {
  char buf[8];
  is.read(buf, 8);
  if (!is) throw std::runtime_error("truncated binary payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

json innovation_to_json(const Innovation& innovation) {
  if (innovation.kind == InnovationKind::kGaussian) return {{"kind", "gaussian"}};
  return {{"kind", "truncated-gaussian"}, {"cutoff", innovation.cutoff}};
}

Innovation innovation_from_json(const json& j) {
  Innovation innovation;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "gaussian") return innovation;
    throw std::invalid_argument("unknown innovation law: " + s);
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") return innovation;
  if (kind == "truncated-gaussian") {
    innovation.kind = InnovationKind::kTruncatedGaussian;
    innovation.cutoff = j.value("cutoff", 3.0);
    return innovation;
  }
  throw std::invalid_argument("unknown innovation law: " + kind);
}

std::string quantizer_kind_string(QuantizerSpec::Kind kind) {
  switch (kind) {
    case QuantizerSpec::Kind::kGainShape:
      return "gain-shape";
    case QuantizerSpec::Kind::kUniform:
      return "uniform";
    case QuantizerSpec::Kind::kLossless:
      return "lossless";
  }
  return "?";
}

QuantizerSpec::Kind quantizer_kind_from_string(const std::string& s) {
  if (s == "gain-shape") return QuantizerSpec::Kind::kGainShape;
  if (s == "uniform") return QuantizerSpec::Kind::kUniform;
  if (s == "lossless") return QuantizerSpec::Kind::kLossless;
  throw std::invalid_argument("unknown quantizer kind: " + s);
}

json quantizer_to_json(const QuantizerSpec& q) {
  return {{"kind", quantizer_kind_string(q.kind)},
          {"m_over_sigma", q.m_over_sigma},
          {"gain_bits", q.gain_bits},
          {"shape_bits", q.shape_bits}};
}

QuantizerSpec quantizer_from_json(const json& j) {
  QuantizerSpec q;
  q.kind = quantizer_kind_from_string(j.at("kind").get<std::string>());
  q.m_over_sigma = j.value("m_over_sigma", 8.0);
  q.gain_bits = j.value("gain_bits", 4);
  q.shape_bits = j.value("shape_bits", -1);
  return q;
}

std::string provenance_comment(const Provenance& prov) {
  std::ostringstream os;
  os << "# version=" << prov.version << "\n";
  os << "# master_seed=" << prov.master_seed << "\n";
  os << "# config=" << prov.config_json << "\n";
  return os.str();
}

json provenance_json(const Provenance& prov) {
  return {{"version", prov.version},
          {"master_seed", prov.master_seed},
          {"config", json::parse(prov.config_json.empty() ? "null" : prov.config_json)}};
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, res.ptr);
}

void write_trajectory(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path);
  put_u32_le(os, static_cast<std::uint32_t>(traj.dim()));
  put_u32_le(os, static_cast<std::uint32_t>(traj.horizon()));
  for (int t = 0; t < traj.horizon(); ++t) {
    for (int i = 0; i < traj.dim(); ++i) put_f64_le(os, traj.values(t, i));
  }
  if (!os) throw std::runtime_error("failed writing " + path);

  json sidecar = {{"version", kVersion},
                  {"seed", traj.seed},
                  {"horizon", traj.horizon()},
                  {"params",
                   {{"alpha", traj.params.alpha},
                    {"sigma2", traj.params.sigma2},
                    {"n", traj.params.n},
                    {"innovation", innovation_to_json(traj.params.innovation)}}}};
  write_text_file(path + ".json", sidecar.dump(2) + "\n");
}

Trajectory read_trajectory(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  const auto n = get_u32_le(is);
  const auto horizon = get_u32_le(is);
  Trajectory traj;
  traj.values.resize(horizon, n);
  for (std::uint32_t t = 0; t < horizon; ++t) {
    for (std::uint32_t i = 0; i < n; ++i) traj.values(t, i) = get_f64_le(is);
  }

  const json sidecar = json::parse(read_text_file(path + ".json"));
  traj.seed = sidecar.at("seed").get<std::uint64_t>();
  const json& p = sidecar.at("params");
  traj.params.alpha = p.at("alpha").get<double>();
  traj.params.sigma2 = p.at("sigma2").get<double>();
  traj.params.n = p.at("n").get<int>();
  traj.params.innovation = innovation_from_json(p.at("innovation"));
  if (traj.params.n != static_cast<int>(n)) throw std::runtime_error("sidecar/binary dimension mismatch");
  return traj;
}

void save_codebook(const std::string& path, const ShapeCodebook& cb) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path);
  json header = {{"version", kVersion},
                 {"n", cb.dim()},
                 {"bits", cb.bits()},
                 {"scale", cb.scale()},
                 {"seed", cb.seed()}};
  os << header.dump() << "\n";
  for (Eigen::Index r = 0; r < cb.vectors().rows(); ++r) {
    for (Eigen::Index c = 0; c < cb.vectors().cols(); ++c) put_f64_le(os, cb.vectors()(r, c));
  }
  if (!os) throw std::runtime_error("failed writing " + path);
}

ShapeCodebook load_codebook(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("missing codebook header");
  const json header = json::parse(line);
  const int n = header.at("n").get<int>();
  const int bits = header.at("bits").get<int>();
  const double scale = header.at("scale").get<double>();
  const auto seed = header.at("seed").get<std::uint64_t>();
  RowMatrixXd vectors(static_cast<Eigen::Index>(std::size_t{1} << bits), n);
  for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) vectors(r, c) = get_f64_le(is);
  }
  return ShapeCodebook::from_raw(std::move(vectors), bits, scale, seed);
}

std::string summary_csv(std::span<const SummaryRow> rows, const Provenance& prov) {
  std::ostringstream os;
  os << provenance_comment(prov);
  os << "alpha,sigma2,n,rate,s,p,quantizer,m_over_sigma,gain_bits,shape_bits,trials,horizon,"
        "mean_dbar,stderr_dbar,mean_delta,stderr_delta,beta_hat_sq,theta_hat,eps_hat,"
        "delta0_g,converse_floor,gamma_pred_accuracy,lemma3_violations,skipped,skip_reason\n";
  for (const SummaryRow& r : rows) {
    os << format_double(r.alpha) << ',' << format_double(r.sigma2) << ',' << r.n << ','
       << format_double(r.rate) << ',' << r.s << ',' << r.p << ','
       << quantizer_kind_string(r.quantizer.kind) << ',' << format_double(r.quantizer.m_over_sigma)
       << ',' << r.quantizer.gain_bits << ',' << r.quantizer.shape_bits << ',' << r.trials << ','
       << r.horizon << ',' << format_double(r.mean_dbar) << ',' << format_double(r.stderr_dbar)
       << ',' << format_double(r.mean_delta) << ',' << format_double(r.stderr_delta) << ','
       << format_double(r.beta_hat_sq) << ',' << format_double(r.theta_hat) << ','
       << format_double(r.eps_hat) << ',' << format_double(r.delta0_g) << ','
       << format_double(r.converse_floor) << ',' << format_double(r.gamma_pred_accuracy) << ','
       << r.lemma3_violations << ',' << (r.skipped ? 1 : 0) << ',' << '"' << r.skip_reason << '"'
       << "\n";
  }
  return os.str();
}

std::string jsonl_header(const Provenance& prov) {
  json j = provenance_json(prov);
  j["type"] = "header";
  return j.dump() + "\n";
}

std::string trial_record_jsonl(const SummaryRow& point, const TrialResult& trial) {
  json j = {{"type", "trial"},
            {"key", point.key},
            {"seed", trial.trajectory_seed},
            {"quantizer_seed", trial.quantizer_seed},
            {"tau", trial.tau ? json(*trial.tau) : json(nullptr)},
            {"dbar", trial.dbar},
            {"delta_hat", trial.delta_hat},
            {"failed", trial.failed}};
  if (!trial.per_t_error.empty()) j["per_t_error"] = trial.per_t_error;
  return j.dump() + "\n";
}

std::string theory_report_json(const TheoryReport& report, const Provenance& prov) {
  json gamma = json::array();
  for (const auto& [p, value] : report.gamma_curve) gamma.push_back({{"p", p}, {"gamma", value}});
  json j = {{"provenance", provenance_json(prov)},
            {"delta0", report.delta0},
            {"g", report.g},
            {"achievable_accuracy", report.achievable_accuracy},
            {"converse_accuracy", report.converse_accuracy},
            {"converse_floor", report.converse_floor},
            {"dstar_limit", report.dstar_limit},
            {"gamma_curve", gamma},
            {"p_star", report.p_star},
            {"b_infinity", report.b_infinity}};
  return j.dump(2) + "\n";
}

std::string compare_report_json(const CompareReport& report, const Provenance& prov) {
  json rows = json::array();
  for (const CompareRow& r : report.rows) {
    json row = {{"key", r.key},
                {"simulated", r.simulated},
                {"gamma_pred", r.gamma_pred},
                {"converse_floor", r.converse_floor},
                {"lemma3_violations", r.lemma3_violations}};
    if (r.simulated) {
      row["delta_hat"] = r.delta_hat;
      row["delta_gap"] = r.delta_gap;
      row["converse_violation"] = r.converse_violation;
    }
    rows.push_back(std::move(row));
  }
  json j = {{"provenance", provenance_json(prov)},
            {"rows", rows},
            {"summary",
             {{"rows", report.rows.size()},
              {"converse_violations", report.converse_violations},
              {"lemma3_violation_rows", report.lemma3_violation_rows}}}};
  return j.dump(2) + "\n";
}

std::string speed_curve_csv(const QuantizerProfile& profile, double alpha, double sigma2,
                            double rate, double p_max, double p_step, const Provenance& prov) {
  if (!(p_step > 0.0) || !(p_max >= 1.0)) throw std::invalid_argument("bad speed-curve range");
  std::ostringstream os;
  os << provenance_comment(prov);
  os << "p,gamma\n";
  for (double p = 1.0; p <= p_max * (1.0 + 1e-12); p += p_step) {
    os << format_double(p) << ',' << format_double(eval_gamma(profile, alpha, sigma2, rate, p))
       << "\n";
  }
  return os.str();
}

std::string quantizer_bench_csv(const ProfileFit& fit, int n, const Provenance& prov) {
  std::ostringstream os;
  os << provenance_comment(prov);
  os << "# theta_hat=" << format_double(fit.theta_hat)
     << " eps_hat=" << format_double(fit.eps_hat) << (fit.degenerate ? " degenerate=1" : "")
     << "\n";
  os << "norm,mean_error,std_error,bound\n";
  for (const ShellStat& s : fit.shells) {
    const double bound =
        fit.theta_hat * s.norm * s.norm + static_cast<double>(n) * fit.eps_hat * fit.eps_hat;
    os << format_double(s.norm) << ',' << format_double(s.mean_error) << ','
       << format_double(s.std_error) << ',' << format_double(bound) << "\n";
  }
  return os.str();
}

ExperimentSpec experiment_spec_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentSpec spec;
  const auto get_doubles = [&](const char* key, std::vector<double>& out) {
    if (!j.contains(key)) return;
    out.clear();
    for (const auto& v : j.at(key)) out.push_back(v.get<double>());
  };
  const auto get_ints = [&](const char* key, std::vector<int>& out) {
    if (!j.contains(key)) return;
    out.clear();
    for (const auto& v : j.at(key)) out.push_back(v.get<int>());
  };
  get_doubles("alpha", spec.alphas);
  get_doubles("sigma2", spec.sigma2s);
  get_ints("n", spec.dims);
  get_doubles("rate", spec.rates);
  get_ints("s", spec.sampling_periods);
  if (j.contains("p")) {
    if (j.at("p").is_string() && j.at("p").get<std::string>() == "divisors") {
      spec.p_all_divisors = true;
      spec.update_periods.clear();
    } else {
      get_ints("p", spec.update_periods);
    }
  }
  if (j.contains("quantizer")) {
    spec.quantizers.clear();
    for (const auto& q : j.at("quantizer")) spec.quantizers.push_back(quantizer_from_json(q));
  }
  if (j.contains("innovation")) spec.innovation = innovation_from_json(j.at("innovation"));
  spec.trials = j.value("trials", spec.trials);
  spec.horizon = j.value("horizon", spec.horizon);
  spec.master_seed = j.value("master_seed", spec.master_seed);
  spec.store_traces = j.value("store_traces", spec.store_traces);
  spec.profile_trials = j.value("profile_trials", spec.profile_trials);
  spec.profile_shells = j.value("profile_shells", spec.profile_shells);
  spec.codebook_cap_bits = j.value("codebook_cap_bits", spec.codebook_cap_bits);
  spec.validate();
  return spec;
}

std::string experiment_spec_to_json(const ExperimentSpec& spec) {
  json quantizers = json::array();
  for (const auto& q : spec.quantizers) quantizers.push_back(quantizer_to_json(q));
  json j = {{"alpha", spec.alphas},
            {"sigma2", spec.sigma2s},
            {"n", spec.dims},
            {"rate", spec.rates},
            {"s", spec.sampling_periods},
            {"quantizer", quantizers},
            {"innovation", innovation_to_json(spec.innovation)},
            {"trials", spec.trials},
            {"horizon", spec.horizon},
            {"master_seed", spec.master_seed},
            {"store_traces", spec.store_traces},
            {"profile_trials", spec.profile_trials},
            {"profile_shells", spec.profile_shells},
            {"codebook_cap_bits", spec.codebook_cap_bits}};
  if (spec.p_all_divisors) {
    j["p"] = "divisors";
  } else {
    j["p"] = spec.update_periods;
  }
  return j.dump();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace sutrack
