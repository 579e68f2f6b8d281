#pragma once

#include <cstdint>
#include <vector>

#include "wdmair/core.hpp"

namespace wdmair {

struct TxConfig {
  int channel_count = 5;              // 2M + 1, odd
  double channel_spacing_hz = 50e9;   // W
  int subcarriers = 1;                // N
  int symbols_per_subcarrier = 1024;  // K
  double launch_power_w = 1e-3;       // per polarization per WDM channel
  int pol_count = 2;
  int oversampling = 2;  // aggregate sample rate = oversampling * channel_count * W

  void validate() const;

  int half_count() const { return channel_count / 2; }  // M
  double subcarrier_spacing() const { return channel_spacing_hz / subcarriers; }
  double symbol_time() const { return subcarriers / channel_spacing_hz; }
  double sample_rate() const { return static_cast<double>(oversampling) * channel_count * channel_spacing_hz; }
  /// Samples on the aggregate grid: one K-symbol block of the cyclic signal.
  std::size_t sample_count() const {
    return static_cast<std::size_t>(oversampling) * static_cast<std::size_t>(channel_count) *
           static_cast<std::size_t>(subcarriers) * static_cast<std::size_t>(symbols_per_subcarrier);
  }
  /// Per-subcarrier symbol variance giving the configured launch power.
  double symbol_variance() const { return launch_power_w / subcarriers; }
};

/// i.i.d. CSCG symbols with E|x|^2 = variance per polarization component.
SymbolGrid draw_cscg_symbols(std::size_t symbols, std::size_t subcarriers, std::size_t pol_count,
                             double variance, std::uint64_t seed, double subcarrier_spacing_hz = 1.0,
                             double symbol_time_s = 1.0);

/// First DFT bin (signed, relative to the channel center) occupied by
/// subcarrier `n` (0-based) of an N-subcarrier channel with K symbols.
long long subcarrier_first_bin(std::size_t n, std::size_t subcarriers, std::size_t symbols);

/// Subcarrier-multiplexed baseband waveform of one WDM channel at
/// `sample_rate`. Sinc pulses are realized exactly in the frequency domain on
/// the cyclic K-symbol grid, so the waveform at t = kT (subcarrier n
/// demodulated) returns x_{n,k}.
SampledField scm_modulate(const SymbolGrid& grid, double sample_rate_hz);
SampledField scm_modulate(const SymbolGrid& grid, const TxConfig& cfg);

/// Sum of the channels translated to m*W, m = -M..M; channels[M] is the COI.
SampledField wdm_multiplex(const std::vector<SampledField>& channels, double channel_spacing_hz);

/// Shift a field by an integer number of DFT bins (exact on the cyclic grid).
SampledField frequency_shift(const SampledField& field, double offset_hz);

}  // namespace wdmair
