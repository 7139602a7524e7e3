#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sutrack/experiment.hpp"
#include "sutrack/process.hpp"
#include "sutrack/quantizer.hpp"
#include "sutrack/theory.hpp"
#include "sutrack/tracking.hpp"

namespace sutrack {

/// Shortest round-trip decimal text for a double; '.' decimal point, no
/// grouping, locale-independent. All file formats go through this, so
/// identical runs produce byte-identical outputs.
std::string format_double(double value);

/// Stamped into every output file: tool version, the resolved configuration
/// (a JSON object, serialized), and the master seed.
struct Provenance {
  std::string version;
  std::string config_json;  // must be a valid JSON value
  std::uint64_t master_seed = 0;
};

// --- trajectory dump: little-endian binary + JSON sidecar ------------------

/// Binary layout: u32 n, u32 horizon, then horizon*n float64, row-major.
/// A `path + ".json"` sidecar records the parameters and seed.
void write_trajectory(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory(const std::string& path);

// --- codebook serialization -------------------------------------------------

/// One JSON header line (n, bits, scale, seed, version), then the raw
/// float64 vector block, row-major.
void save_codebook(const std::string& path, const ShapeCodebook& cb);
ShapeCodebook load_codebook(const std::string& path);

// --- report builders ---------------------------------------------------------

std::string summary_csv(std::span<const SummaryRow> rows, const Provenance& prov);
std::string jsonl_header(const Provenance& prov);
std::string trial_record_jsonl(const SummaryRow& point, const TrialResult& trial);
std::string theory_report_json(const TheoryReport& report, const Provenance& prov);
std::string compare_report_json(const CompareReport& report, const Provenance& prov);
std::string speed_curve_csv(const QuantizerProfile& profile, double alpha, double sigma2,
                            double rate, double p_max, double p_step, const Provenance& prov);
std::string quantizer_bench_csv(const ProfileFit& fit, int n, const Provenance& prov);

// --- experiment spec (JSON file format of the sweep subcommand) -------------

ExperimentSpec experiment_spec_from_json(const std::string& text);
std::string experiment_spec_to_json(const ExperimentSpec& spec);

/// Writes text to path, replacing any existing file.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace sutrack
