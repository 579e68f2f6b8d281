#include "wdmair/tx.hpp"

#include <cmath>

#include "wdmair/fft.hpp"
#include "wdmair/rng.hpp"

namespace wdmair {

void TxConfig::validate() const {
  if (channel_count < 1 || channel_count % 2 == 0) throw Error("tx: channel count must be odd and >= 1");
  if (!(channel_spacing_hz > 0.0)) throw Error("tx: channel spacing must be positive");
  if (subcarriers < 1) throw Error("tx: subcarrier count must be >= 1");
  if (symbols_per_subcarrier < 1) throw Error("tx: symbols per subcarrier must be >= 1");
  if (!(launch_power_w > 0.0)) throw Error("tx: launch power must be positive");
  if (pol_count != 1 && pol_count != 2) throw Error("tx: pol_count must be 1 or 2");
  if (oversampling < 2) throw Error("tx: oversampling must be >= 2 to leave room above the WDM band");
}

SymbolGrid draw_cscg_symbols(std::size_t symbols, std::size_t subcarriers, std::size_t pol_count,
                             double variance, std::uint64_t seed, double subcarrier_spacing_hz,
                             double symbol_time_s) {
  if (!(variance > 0.0)) throw Error("draw_cscg_symbols: variance must be positive");
  SymbolGrid grid(subcarriers, symbols, pol_count, subcarrier_spacing_hz, symbol_time_s);
  const RunSeed base(seed);
  for (std::size_t n = 0; n < subcarriers; ++n) {
    for (std::size_t p = 0; p < pol_count; ++p) {
      Rng rng(base.stream("cscg", {static_cast<std::int64_t>(n), static_cast<std::int64_t>(p)}));
      for (auto& x : grid.row(n, p)) x = rng.cscg(variance);
    }
  }
  return grid;
}

long long subcarrier_first_bin(std::size_t n, std::size_t subcarriers, std::size_t symbols) {
  const auto k = static_cast<long long>(symbols);
  const auto total = static_cast<long long>(subcarriers) * k;
  return static_cast<long long>(n) * k - total / 2;
}

SampledField scm_modulate(const SymbolGrid& grid, double sample_rate_hz) {
  const std::size_t big_k = grid.symbols();
  const std::size_t big_n = grid.subcarriers();
  const double block = static_cast<double>(big_k) * grid.symbol_time();
  const double exact = sample_rate_hz * block;
  const auto samples = static_cast<std::size_t>(std::llround(exact));
  if (std::abs(exact - static_cast<double>(samples)) > 1e-6 * exact || samples % big_k != 0) {
    throw Error("scm_modulate: sample rate must give an integer number of samples per symbol");
  }
  const double bandwidth = static_cast<double>(big_n) * grid.subcarrier_spacing();
  if (static_cast<double>(big_n * big_k) >= static_cast<double>(samples)) {
    throw Error("scm_modulate: signal band does not fit below the sample rate");
  }

  const double scale = static_cast<double>(samples) / static_cast<double>(big_k);
  const auto half_k = static_cast<long long>(big_k / 2);
  std::vector<ComplexVector> pols;
  ComplexVector symbol_spectrum(big_k);
  for (std::size_t p = 0; p < grid.pol_count(); ++p) {
    ComplexVector spectrum(samples, Complex{});
    for (std::size_t n = 0; n < big_n; ++n) {
      auto row = grid.row(n, p);
      std::copy(row.begin(), row.end(), symbol_spectrum.begin());
      fft::forward(symbol_spectrum);
      const long long first = subcarrier_first_bin(n, big_n, big_k);
      for (long long b = -half_k; b < static_cast<long long>(big_k) - half_k; ++b) {
        spectrum[fft::wrap_bin(first + half_k + b, samples)] = scale * symbol_spectrum[fft::wrap_bin(b, big_k)];
      }
    }
    fft::inverse(spectrum);
    pols.push_back(std::move(spectrum));
  }
  return SampledField(std::move(pols), sample_rate_hz, bandwidth, 0.0);
}

SampledField scm_modulate(const SymbolGrid& grid, const TxConfig& cfg) {
  cfg.validate();
  if (grid.subcarriers() != static_cast<std::size_t>(cfg.subcarriers) ||
      grid.symbols() != static_cast<std::size_t>(cfg.symbols_per_subcarrier) ||
      grid.pol_count() != static_cast<std::size_t>(cfg.pol_count)) {
    throw Error("scm_modulate: symbol grid dimensions do not match the tx configuration");
  }
  return scm_modulate(grid, cfg.sample_rate());
}

SampledField frequency_shift(const SampledField& field, double offset_hz) {
  const std::size_t n = field.size();
  const double exact = offset_hz * field.duration();
  const long long bins = std::llround(exact);
  if (std::abs(exact - static_cast<double>(bins)) > 1e-6) {
    throw Error("frequency_shift: offset is not an integer number of bins");
  }
  std::vector<ComplexVector> pols;
  const auto nn = static_cast<long long>(n);
  const long long step = ((bins % nn) + nn) % nn;
  for (std::size_t p = 0; p < field.pol_count(); ++p) {
    auto src = field.samples(p);
    ComplexVector out(n);
    long long phase_index = 0;  // (i * bins) mod n, kept exact in integers
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = constants::kTwoPi * static_cast<double>(phase_index) / static_cast<double>(n);
      out[i] = src[i] * std::polar(1.0, arg);
      phase_index += step;
      if (phase_index >= nn) phase_index -= nn;
    }
    pols.push_back(std::move(out));
  }
  SampledField shifted(std::move(pols), field.sample_rate(), field.content_bandwidth(),
                       field.center_offset() + offset_hz);
  return shifted;
}

SampledField wdm_multiplex(const std::vector<SampledField>& channels, double channel_spacing_hz) {
  if (channels.empty() || channels.size() % 2 == 0) throw Error("wdm_multiplex: need 2M+1 channels");
  const auto& ref = channels.front();
  for (const auto& c : channels) {
    if (c.size() != ref.size() || c.pol_count() != ref.pol_count() || c.sample_rate() != ref.sample_rate()) {
      throw Error("wdm_multiplex: channels must share sample rate, length and polarization count");
    }
    if (c.content_bandwidth() > channel_spacing_hz * (1.0 + 1e-12)) {
      throw Error("wdm_multiplex: channel content wider than the channel spacing");
    }
  }
  const long long half = static_cast<long long>(channels.size() / 2);
  const double total_band = static_cast<double>(channels.size()) * channel_spacing_hz;
  if (!(total_band < ref.sample_rate())) {
    throw Error("wdm_multiplex: aggregate band overflows the sample rate");
  }
  auto out = SampledField::zeros(ref.pol_count(), ref.size(), ref.sample_rate(), total_band, 0.0);
  for (long long m = -half; m <= half; ++m) {
    const auto& ch = channels[static_cast<std::size_t>(m + half)];
    const SampledField shifted = m == 0 ? ch : frequency_shift(ch, static_cast<double>(m) * channel_spacing_hz);
    for (std::size_t p = 0; p < ref.pol_count(); ++p) {
      auto dst = out.samples(p);
      auto src = shifted.samples(p);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
  return out;
}

}  // namespace wdmair
