#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wdmair/auxch.hpp"
#include "wdmair/core.hpp"

namespace wdmair {

enum class Detector { kAwgn, kPn, kPnPerPol, kPpn };

std::string_view detector_name(Detector d);
std::optional<Detector> parse_detector(std::string_view name);

/// Symbol sequences of one subcarrier, one row per polarization.
struct SymbolRows {
  std::array<std::span<const Complex>, 2> pol{};
  std::size_t pol_count = 0;

  static SymbolRows single(std::span<const Complex> row) { return {{row, {}}, 1}; }
  static SymbolRows dual(std::span<const Complex> row0, std::span<const Complex> row1) {
    return {{row0, row1}, 2};
  }
  static SymbolRows of(const SymbolGrid& grid, std::size_t subcarrier);

  std::size_t size() const { return pol_count == 0 ? 0 : pol[0].size(); }
  /// Mean of |.|^2 per polarization component.
  double mean_power() const;
  void check_compatible(const SymbolRows& other, const char* who) const;
};

struct AirEstimate {
  double value = 0.0;      // bit per channel use per polarization
  double std_error = 0.0;  // batch-means standard error of `value`
  Detector model = Detector::kAwgn;
  int subcarrier = 0;
  int particles = 0;  // 0 for the AWGN detector
  std::size_t symbols = 0;
  double low_ess_fraction = 0.0;  // share of steps with ESS < 0.1 P
  /// Means of consecutive equal batches of the per-symbol terms, in the
  /// units of `value`. Empty when the block is too short for batching.
  std::vector<double> batch_means;
};

struct SeResult {
  double se = 0.0;  // bit/s/Hz per polarization
  double std_error = 0.0;
  std::vector<AirEstimate> airs;
  double bandwidth_hz = 0.0;
  double symbol_time_s = 0.0;
  int subcarriers = 0;
};

/// SE = sum_n AIR_n / (W T). When every estimate carries batch means over the
/// same symbol windows, the standard error comes from the summed batch means,
/// which keeps the correlation between subcarriers (common slow phase noise).
/// Otherwise the estimates are treated as independent.
SeResult spectral_efficiency(std::vector<AirEstimate> airs, double bandwidth_hz, double symbol_time_s);

// ---------------------------------------------------------------------------
// Parameter estimation

/// log I_nu(x) for nu in {0, 1}, x >= 0, without overflow.
double log_bessel_i(double nu, double x);

struct GainNoise {
  double gain = 1.0;
  double noise_var = 1.0;
  double input_var = 1.0;   // empirical, per polarization component
  double output_var = 1.0;  // empirical, per polarization component
};

/// Maximum-likelihood fit of (a, sigma_n^2) from the squared moduli of the
/// training pair: ||y||^2 given ||x||^2 is noncentral chi-squared with 2 or
/// 4 degrees of freedom (1 or 2 polarizations), the gain being tied to the
/// noise by a^2 = (sigma_y^2 - sigma_n^2) / sigma_x^2.
GainNoise estimate_gain_noise(const SymbolRows& x, const SymbolRows& y);

/// Log-likelihood maximized by estimate_gain_noise, as a function of
/// sigma_n^2.
double gain_noise_loglik(const SymbolRows& x, const SymbolRows& y, double noise_var);

/// ML fit of the AWGN model on one polarization: c = <y x*> / <|x|^2> and
/// sigma_n^2 the residual variance.
AwgnParams fit_awgn(std::span<const Complex> x, std::span<const Complex> y);

// ---------------------------------------------------------------------------
// Information rates

/// AIR of the AWGN auxiliary channel on one polarization; the output density
/// is CSCG with variance a^2 input_var + sigma_n^2.
AirEstimate air_awgn(std::span<const Complex> x, std::span<const Complex> y, const AwgnParams& p,
                     double input_var, std::size_t batches = 20);

struct ParticleOptions {
  int particles = 256;
  double resample_threshold = 0.5;  // resample when ESS < threshold * P
  bool force_resample = false;      // resample every step
  /// Acquisition: the walk variances are increased by
  /// acquisition_var / (1 + k / acquisition_steps)^2 at symbol k, so the
  /// particle cloud can find the initial state and keeps enough spread while
  /// the posterior narrows (roughly as 1 / k). The schedule does not depend on
  /// the data, so the result is still the AIR of a valid auxiliary channel.
  /// acquisition_steps = 0 disables it.
  int acquisition_steps = 0;
  double acquisition_var = 0.05;
  /// The filter starts with acquisition_particles (0: same as particles) and
  /// resamples down to `particles` after acquisition_window symbols. A uniform
  /// prior over the PPN state is too sparse for 1024 particles at high SNR.
  int acquisition_particles = 0;
  int acquisition_window = 30;
  std::size_t batches = 20;  // batch means for the standard error

  void validate() const;
  static ParticleOptions pn_default();
  static ParticleOptions ppn_default();
};

/// Particle-method AIR of the PN model on a single polarization.
AirEstimate air_particle(std::span<const Complex> x, std::span<const Complex> y, const PnParams& p, double input_var,
                         const ParticleOptions& opts, std::uint64_t seed);

/// Particle-method AIR of the PPN model on both polarizations, reported per
/// polarization (half the joint rate).
AirEstimate air_particle(const SymbolRows& x, const SymbolRows& y, const PpnParams& p, double input_var,
                         const ParticleOptions& opts, std::uint64_t seed);

struct WalkSearch {
  double log10_min = -8.0;
  double log10_max = 0.0;
  double tolerance_decades = 0.05;
  int rounds = 2;  // coordinate-ascent rounds for the PPN model
};

struct WalkFit {
  double walk_var = 0.0;
  double pol_walk_var = 0.0;
  double air = 0.0;  // training AIR at the optimum
  int evaluations = 0;
};

/// sigma_theta^2 maximizing the particle AIR on the training pair, found by
/// golden-section search in log10 with common random numbers.
WalkFit estimate_walk_variances(std::span<const Complex> x, std::span<const Complex> y, const GainNoise& gn,
                                double input_var, const ParticleOptions& opts, std::uint64_t seed,
                                const WalkSearch& search = {});

/// (sigma_theta^2, sigma_p^2) for the PPN model by coordinate ascent.
WalkFit estimate_walk_variances(const SymbolRows& x, const SymbolRows& y, const GainNoise& gn, double input_var,
                                const ParticleOptions& opts, std::uint64_t seed, const WalkSearch& search = {});

// ---------------------------------------------------------------------------
// State tracking

struct StateTrack {
  std::vector<double> theta;  // posterior mean phase, unwrapped
  std::vector<double> autocorrelation;  // biased estimate, lag 0 = variance
  /// Per symbol, the posterior-mean Stokes images of S1, S2, S3 (2 pol only).
  std::vector<std::array<Vec3, 3>> stokes;
  AirEstimate air;
};

/// Run the PN filter and record the posterior state means.
StateTrack export_state_track(std::span<const Complex> x, std::span<const Complex> y, const PnParams& p,
                              double input_var, const ParticleOptions& opts, std::uint64_t seed,
                              std::size_t max_lag = 2000);

/// Run the PPN filter and record the posterior state means. The phase of the
/// PPN model is defined modulo pi (theta + pi with -J is the same state), so
/// the track is unwrapped with period pi.
StateTrack export_state_track(const SymbolRows& x, const SymbolRows& y, const PpnParams& p, double input_var,
                              const ParticleOptions& opts, std::uint64_t seed, std::size_t max_lag = 2000);

/// Biased autocorrelation of the demeaned sequence for lags 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> v, std::size_t max_lag);

/// Means of `batches` consecutive equal batches (a remainder is dropped).
/// Empty if batches < 2 or there are fewer than 2 terms per batch.
std::vector<double> batch_means(std::span<const double> terms, std::size_t batches);

/// Standard error of the grand mean from batch means.
double std_error_of_batches(std::span<const double> means);

/// Batch-means standard error of the mean of `terms`; the i.i.d. formula
/// when the block is too short to batch.
double batch_means_std_error(std::span<const double> terms, std::size_t batches);

}  // namespace wdmair
