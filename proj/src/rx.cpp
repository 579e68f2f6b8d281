#include "wdmair/rx.hpp"

#include <cmath>

#include "wdmair/fft.hpp"
#include "wdmair/tx.hpp"

namespace wdmair {

void DemuxSpec::validate() const {
  if (!(channel_spacing_hz > 0.0)) throw Error("demux: channel spacing must be positive");
  if (!(bandwidth_hz > 0.0) || bandwidth_hz > channel_spacing_hz * (1.0 + 1e-12)) {
    throw Error("demux: bandwidth must lie in (0, channel spacing]");
  }
  if (output_oversampling < 1) throw Error("demux: output oversampling must be >= 1");
}

namespace {

long long to_bins(double hz, double duration, const char* what) {
  const double exact = hz * duration;
  const long long bins = std::llround(exact);
  if (std::abs(exact - static_cast<double>(bins)) > 1e-6) {
    throw Error(std::string("demux: ") + what + " is not an integer number of DFT bins");
  }
  return bins;
}

}  // namespace

SampledField demux(const SampledField& field, const DemuxSpec& spec) {
  spec.validate();
  const std::size_t n_in = field.size();
  const double duration = field.duration();
  const long long width = to_bins(spec.bandwidth_hz, duration, "bandwidth");
  const long long center = to_bins(spec.center_offset() - field.center_offset(), duration, "channel offset");
  const long long lo = center - width / 2;
  const long long hi = lo + width;
  const auto half_grid = static_cast<long long>(n_in) / 2;
  if (lo < -half_grid || hi > static_cast<long long>(n_in) - half_grid) {
    throw Error("demux: channel band lies outside the simulated band");
  }
  const auto n_out = static_cast<std::size_t>(spec.output_oversampling * width);
  if (n_out > n_in) throw Error("demux: output grid would be finer than the input grid");

  const double scale = static_cast<double>(n_out) / static_cast<double>(n_in);
  std::vector<ComplexVector> pols;
  ComplexVector spectrum(n_in);
  for (std::size_t p = 0; p < field.pol_count(); ++p) {
    auto src = field.samples(p);
    std::copy(src.begin(), src.end(), spectrum.begin());
    fft::forward(spectrum);
    ComplexVector out(n_out, Complex{});
    for (long long b = -width / 2; b < width - width / 2; ++b) {
      out[fft::wrap_bin(b, n_out)] = scale * spectrum[fft::wrap_bin(center + b, n_in)];
    }
    fft::inverse(out);
    pols.push_back(std::move(out));
  }
  const double rate = field.sample_rate() * static_cast<double>(n_out) / static_cast<double>(n_in);
  return SampledField(std::move(pols), rate, spec.bandwidth_hz, spec.center_offset());
}

SampledField dbp(SampledField field, const LinkSpec& link, const SsfmControl& ctrl, const PropagationTrace* matched) {
  const auto layout = link_layout(link);
  detail::propagate_layout(field, layout, ctrl, detail::Direction::kBackward, false, 0, matched, nullptr);
  return field;
}

SymbolGrid matched_filter_bank(const SampledField& field, std::size_t subcarriers, double symbol_time_s) {
  if (subcarriers == 0) throw Error("matched_filter_bank: need at least one subcarrier");
  const double periods = field.duration() / symbol_time_s;
  const auto big_k = static_cast<std::size_t>(std::llround(periods));
  if (big_k == 0 || std::abs(periods - static_cast<double>(big_k)) > 1e-6 * periods) {
    throw Error("matched_filter_bank: field duration is not an integer number of symbol times");
  }
  const std::size_t n = field.size();
  if (subcarriers * big_k > n) throw Error("matched_filter_bank: subcarrier band exceeds the field grid");

  const double spacing = 1.0 / symbol_time_s;
  SymbolGrid grid(subcarriers, big_k, field.pol_count(), spacing, symbol_time_s);
  const double scale = static_cast<double>(big_k) / static_cast<double>(n);
  const auto half_k = static_cast<long long>(big_k / 2);
  ComplexVector spectrum(n);
  ComplexVector band(big_k);
  for (std::size_t p = 0; p < field.pol_count(); ++p) {
    auto src = field.samples(p);
    std::copy(src.begin(), src.end(), spectrum.begin());
    fft::forward(spectrum);
    for (std::size_t sc = 0; sc < subcarriers; ++sc) {
      const long long first = subcarrier_first_bin(sc, subcarriers, big_k);
      for (long long b = -half_k; b < static_cast<long long>(big_k) - half_k; ++b) {
        band[fft::wrap_bin(b, big_k)] = scale * spectrum[fft::wrap_bin(first + half_k + b, n)];
      }
      fft::inverse(band);
      std::copy(band.begin(), band.end(), grid.row(sc, p).begin());
    }
  }
  return grid;
}

}  // namespace wdmair
