#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wdmair/aligned.hpp"

namespace wdmair {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex, AlignedAllocator<Complex>>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace constants {
inline constexpr double kPlanck = 6.62607015e-34;  // J*s
inline constexpr double kCenterFrequency = 193.41e12;  // Hz, 1550 nm
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
}  // namespace constants

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// dB/km -> 1/km (power attenuation coefficient).
double db_per_km_to_linear(double alpha_db_per_km);

/// Complex baseband waveform on a uniform cyclic time grid.
///
/// Every polarization holds the same number of samples. The grid is one
/// period of a periodic signal, which is what the FFT-based operators assume.
class SampledField {
 public:
  SampledField() = default;

  /// `content_bandwidth_hz` is the two-sided width of the occupied band; it
  /// must be strictly below the sample rate.
  SampledField(std::vector<ComplexVector> pols, double sample_rate_hz,
               double content_bandwidth_hz, double center_offset_hz = 0.0);

  static SampledField zeros(std::size_t pol_count, std::size_t samples, double sample_rate_hz,
                            double content_bandwidth_hz, double center_offset_hz = 0.0);

  std::size_t pol_count() const { return pols_.size(); }
  std::size_t size() const { return pols_.empty() ? 0 : pols_.front().size(); }
  double sample_rate() const { return sample_rate_; }
  double content_bandwidth() const { return content_bandwidth_; }
  double center_offset() const { return center_offset_; }
  double duration() const { return static_cast<double>(size()) / sample_rate_; }

  std::span<const Complex> samples(std::size_t pol) const { return pols_.at(pol); }
  std::span<Complex> samples(std::size_t pol) { return pols_.at(pol); }

  /// Mean of ||u||^2 over the grid (sum over polarizations), in W.
  double mean_power() const;
  /// Peak of ||u||^2 over the grid, in W.
  double peak_power() const;

  void set_content_bandwidth(double hz);
  void set_center_offset(double hz) { center_offset_ = hz; }

 private:
  std::vector<ComplexVector> pols_;
  double sample_rate_ = 1.0;
  double content_bandwidth_ = 0.0;
  double center_offset_ = 0.0;
};

/// Symbols x_{n,k} for N subcarriers, K time slots and 1 or 2 polarizations.
class SymbolGrid {
 public:
  SymbolGrid() = default;
  SymbolGrid(std::size_t subcarriers, std::size_t symbols, std::size_t pol_count,
             double subcarrier_spacing_hz, double symbol_time_s);

  std::size_t subcarriers() const { return subcarriers_; }
  std::size_t symbols() const { return symbols_; }
  std::size_t pol_count() const { return pol_count_; }
  double subcarrier_spacing() const { return spacing_; }
  double symbol_time() const { return symbol_time_; }

  std::span<const Complex> row(std::size_t subcarrier, std::size_t pol) const;
  std::span<Complex> row(std::size_t subcarrier, std::size_t pol);

  Complex& operator()(std::size_t n, std::size_t k, std::size_t pol) {
    return data_[(n * pol_count_ + pol) * symbols_ + k];
  }
  Complex operator()(std::size_t n, std::size_t k, std::size_t pol) const {
    return data_[(n * pol_count_ + pol) * symbols_ + k];
  }

  /// Symbols [first, first + count) of every row.
  SymbolGrid slice(std::size_t first, std::size_t count) const;

 private:
  std::size_t subcarriers_ = 0;
  std::size_t symbols_ = 0;
  std::size_t pol_count_ = 0;
  double spacing_ = 0.0;
  double symbol_time_ = 0.0;
  std::vector<Complex> data_;
};

enum class Amplification { kIda, kLa };

struct FiberParams {
  double alpha_db_per_km = 0.2;
  double beta2_ps2_per_km = -21.7;
  double gamma_per_w_km = 1.27;
};

struct DcfParams {
  /// 0 selects the length that cancels the span dispersion exactly (10.21 km
  /// for 60 km spans of the default fiber).
  double length_km = 0.0;
  FiberParams fiber{0.57, 127.5, 6.5};
  double launch_offset_db = -4.0;
  double amp_eta = 1.6;
};

struct LinkSpec {
  Amplification amplification = Amplification::kIda;
  double span_length_km = 100.0;
  int span_count = 10;
  FiberParams fiber;
  double eta = 1.0;
  std::optional<DcfParams> dcf;
  double center_frequency_hz = constants::kCenterFrequency;

  void validate() const;
  double transmission_length_km() const { return span_length_km * span_count; }
  /// Length of the per-span DCF actually used.
  double dcf_length_km() const;
};

/// One fiber piece with a smooth power profile
/// a(z) = launch_level * exp(-alpha * z) (or a constant level for IDA).
struct FiberSegment {
  double length_km = 0.0;
  double alpha_per_km = 0.0;     // power attenuation, 1/km
  double beta2_s2_per_km = 0.0;  // s^2/km
  double gamma_per_w_km = 0.0;
  double launch_level = 1.0;     // a(z) at the segment input
  bool distributed_gain = false; // IDA: a(z) held at launch_level
  double distributed_ase_psd_per_km = 0.0;  // W/Hz per km, normalized domain
  double output_ase_psd = 0.0;  // W/Hz added after the segment, normalized domain

  double level_at(double z_local_km) const;
  /// (1/dz) * integral of a(z) over [z0, z0 + dz].
  double mean_level(double z0_km, double dz_km) const;
};

/// The link unrolled into an ordered list of fiber segments.
std::vector<FiberSegment> link_layout(const LinkSpec& link);

double total_length_km(const std::vector<FiberSegment>& layout);

/// Power profile a(z) relative to the transmission-fiber launch power.
double power_profile(const LinkSpec& link, double z_km);

/// Effective length: integral of a(z) over the whole link, in km.
double effective_length_km(const LinkSpec& link);

/// ASE power spectral density accumulated over the link, per polarization,
/// in the normalized (launch-referred) domain, W/Hz.
double accumulated_ase_psd(const LinkSpec& link);

double photon_energy(const LinkSpec& link);

/// Master seed plus labelled substreams.
///
/// stream() hashes the label and coordinates, so a substream seed depends
/// only on what it is for and never on the order in which it is requested.
class RunSeed {
 public:
  explicit RunSeed(std::uint64_t master = 0) : master_(master) {}
  std::uint64_t master() const { return master_; }
  std::uint64_t stream(std::string_view label, std::initializer_list<std::int64_t> coords = {}) const;
  RunSeed child(std::string_view label, std::initializer_list<std::int64_t> coords = {}) const {
    return RunSeed(stream(label, coords));
  }

 private:
  std::uint64_t master_;
};

}  // namespace wdmair
