#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wdmair/air.hpp"
#include "wdmair/config.hpp"
#include "wdmair/core.hpp"

namespace wdmair {

/// Transmitted and received symbols of the COI for one sweep point. The
/// first `training_symbols` columns of both grids are the training pair.
struct PointData {
  SymbolGrid tx;
  SymbolGrid rx;
  TxConfig tx_config;
  LinkSpec link;
  double input_var = 0.0;   // design sigma_x^2 per polarization component
  double sigma_ase2 = 0.0;  // linearly accumulated ASE at the matched-filter output
  std::size_t training_symbols = 0;
  std::uint64_t seed = 0;
};

std::uint64_t point_seed(const ExperimentConfig& cfg, const SweepPoint& point);

TxConfig point_tx(const ExperimentConfig& cfg, const SweepPoint& point);
LinkSpec point_link(const ExperimentConfig& cfg, const SweepPoint& point);

/// Steps 1-2 and the receiver: draw the symbols of every channel, propagate
/// with ASE, demultiplex the COI, backpropagate and apply the matched filters.
PointData simulate_point(const ExperimentConfig& cfg, const SweepPoint& point);

/// Fitted parameters and AIR of one detector on one subcarrier. For
/// per-polarization detectors the parameters are averaged over both.
struct SubcarrierResult {
  AirEstimate air;
  double gain = 0.0;
  double noise_var = 0.0;
  double walk_var = 0.0;      // NaN for the AWGN detector
  double pol_walk_var = 0.0;  // NaN unless PPN
};

SubcarrierResult evaluate_detector(const PointData& data, std::size_t subcarrier, Detector detector,
                                   const ExperimentConfig& cfg);

struct ResultRow {
  SweepPoint point;
  Amplification amplification = Amplification::kIda;
  bool dispersion_managed = false;
  int pol_count = 2;
  Detector detector = Detector::kAwgn;
  bool failed = false;
  std::string message;
  double se = 0.0;
  double se_std_error = 0.0;
  std::vector<double> airs;
  std::vector<double> air_std_errors;
  std::vector<double> gain;
  std::vector<double> noise_var;
  std::vector<double> walk_var;
  std::vector<double> pol_walk_var;
  double sigma_ase2 = 0.0;
  double input_var = 0.0;
  std::size_t symbols = 0;
  std::size_t training_symbols = 0;
  int particles = 0;
  double low_ess_fraction = 0.0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;

  double length_km() const { return point.span_count * point.span_length_km; }
};

/// Steps 1-6 for one sweep point; one row per detector. Failures are
/// reported in the rows, never thrown.
std::vector<ResultRow> run_point(const ExperimentConfig& cfg, const SweepPoint& point);

std::vector<std::string> result_header();
std::vector<std::string> result_fields(const ResultRow& row);
ResultRow parse_result(const std::vector<std::string>& header, const std::vector<std::string>& fields);
std::vector<ResultRow> read_results(const std::filesystem::path& path);
void write_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows);

struct DetectorOptimum {
  Detector detector = Detector::kAwgn;
  double se = 0.0;
  double se_std_error = 0.0;
  double launch_power_dbm = 0.0;
  int subcarriers = 0;
  int span_count = 0;
  double span_length_km = 0.0;
};

struct SweepSummary {
  std::vector<DetectorOptimum> best;  // one per detector with at least one good row
  std::size_t rows = 0;
  std::size_t failed_rows = 0;
};

SweepSummary summarize(const std::vector<ResultRow>& rows);
std::string summary_json(const SweepSummary& s);

struct SweepOutcome {
  std::vector<ResultRow> rows;  // canonical order: point index, then detector
  SweepSummary summary;
};

/// Run every sweep point on up to `workers` threads. Rows are appended to
/// `csv_path` as points finish and the file is rewritten in canonical order
/// at the end, next to a summary JSON file. Progress goes to `log`.
SweepOutcome run_sweep(const ExperimentConfig& cfg, int workers, const std::filesystem::path& csv_path,
                       std::ostream* log);

/// Worker count from the WDMAIR_WORKERS environment variable, else the
/// hardware concurrency.
int default_workers();

}  // namespace wdmair
