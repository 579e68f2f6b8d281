#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wdmair/air.hpp"
#include "wdmair/core.hpp"
#include "wdmair/fiber.hpp"
#include "wdmair/tx.hpp"

namespace wdmair {

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kConfigSchemaVersion = 1;

struct SweepAxes {
  std::vector<double> launch_power_dbm;
  std::vector<int> subcarriers;
  std::vector<int> span_count;
  std::vector<double> span_length_km;
  /// When set, the span count of every point is total_length_km / span_length
  /// and the span_count axis is ignored.
  std::optional<double> total_length_km;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  LinkSpec link;
  TxConfig tx;  // subcarriers, symbols and power come from the sweep point
  std::vector<Detector> detectors{Detector::kAwgn, Detector::kPnPerPol, Detector::kPpn};
  SweepAxes sweep;
  std::size_t symbols = 100000;          // K, measurement symbols per subcarrier
  std::size_t training_symbols = 10000;  // K'
  int particles_pn = 256;
  int particles_ppn = 1024;
  int acquisition_steps = 2;
  double acquisition_var = 0.05;
  int acquisition_particles_ppn = 65536;  // initial PPN cloud, shrunk after the window
  int acquisition_window = 30;
  WalkSearch walk_search;
  SsfmControl ssfm;
  bool dbp = true;
  std::string output_path = "results.csv";
  bool desk_scale = false;
  /// State-track export (phase trace, Stokes scatter).
  double track_power_dbm = -7.0;
  int track_subcarriers = 4;
  /// Power at which fitted parameters are reported versus N; the PPN-optimal
  /// power of the sweep when unset.
  std::optional<double> param_power_dbm;

  /// Throws ConfigError on any violation.
  void validate() const;
  /// Reduce to the desk-scale preset: 3 channels, K = 20000, K' = 5000,
  /// P = 256 / 1024 and the desk split-step control.
  void apply_desk_scale();

  ParticleOptions pn_options() const;
  ParticleOptions ppn_options() const;
};

/// Built-in desk-scale reproduction of the SE-versus-power sweep: 2-pol IDA
/// 1000 km, powers -12..-2 dBm, N in {1, 2, 4, 8}.
ExperimentConfig desk_preset();

/// Split-step control used at desk scale.
SsfmControl desk_ssfm_control();

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_json(const ExperimentConfig& cfg);

struct SweepPoint {
  std::size_t index = 0;
  double launch_power_dbm = 0.0;
  int subcarriers = 1;
  int span_count = 1;
  double span_length_km = 100.0;
};

/// Cartesian product of the sweep axes, in canonical order.
std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg);

}  // namespace wdmair
