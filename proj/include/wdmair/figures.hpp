#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wdmair/config.hpp"
#include "wdmair/experiments.hpp"

namespace wdmair {

/// One plotted series: a CSV table with x, y and optional y_err columns.
struct FigureSeries {
  std::string name;
  std::string table;  // file name inside the bundle
  std::string x_column = "x";
  std::string y_column = "y";
  std::string y_err_column;  // empty when absent
};

struct FigureManifest {
  std::string figure;  // 4a, 4b, ...
  std::string title;
  std::string x_label;
  std::string x_unit;
  std::string y_label;
  std::string y_unit;
  std::vector<FigureSeries> series;
  std::vector<std::string> notes;
};

struct FigureTable {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct FigureBundle {
  FigureManifest manifest;
  std::vector<FigureTable> tables;

  /// Every series must reference an existing table that holds its columns.
  void validate() const;
  /// Writes manifest.json and the tables into `dir` (created if needed).
  void write(const std::filesystem::path& dir) const;
};

const std::vector<std::string>& figure_ids();

/// SE versus launch power, one series per (detector, N).
FigureBundle figure_se_vs_power(const std::vector<ResultRow>& rows);

/// Fitted PPN parameters versus N at one power: residual noise
/// (sigma_n^2 - sigma_ase^2) / (a^2 sigma_x^2), sigma_theta^2 and
/// 3 sigma_p^2, averaged over the central subcarriers.
FigureBundle figure_params_vs_n(const std::vector<ResultRow>& rows, double power_dbm);

/// Launch power maximizing the PPN SE (falls back to the best detector).
double optimal_power(const std::vector<ResultRow>& rows, Detector detector);

/// Indices of the central subcarriers: N/2 - 1 and N/2 for even N, N/2 for odd.
std::vector<std::size_t> central_subcarriers(int n);

enum class DistanceAxis { kLength, kSpanLength };

/// Maximum SE over power and N versus link length or amplifier spacing.
FigureBundle figure_max_se(const std::vector<ResultRow>& rows, const std::string& id, DistanceAxis axis);

/// Phase trace with autocorrelation (4b) or Stokes scatter (4c) from the
/// PPN (2 pol) or PN (1 pol) filter on a central subcarrier at
/// cfg.track_power_dbm and cfg.track_subcarriers.
FigureBundle figure_state_track(const ExperimentConfig& cfg, const std::string& id);

/// Produce the bundle for `id` into out_dir/<id>. Sweep-based figures reuse
/// `results` when non-empty, otherwise they run the sweep of `cfg`.
FigureBundle export_figure_data(const ExperimentConfig& cfg, const std::string& id,
                                const std::filesystem::path& out_dir, const std::vector<ResultRow>& results,
                                int workers, std::ostream* log);

}  // namespace wdmair
