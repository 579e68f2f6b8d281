#pragma once

#include "wdmair/core.hpp"
#include "wdmair/fiber.hpp"

namespace wdmair {

/// Ideal rectangular demultiplexer H(f) for WDM channel `channel_index`
/// (center offset channel_index * channel_spacing).
struct DemuxSpec {
  int channel_index = 0;
  double channel_spacing_hz = 50e9;
  double bandwidth_hz = 50e9;  // <= channel spacing
  int output_oversampling = 2;  // output sample rate = oversampling * bandwidth

  double center_offset() const { return channel_index * channel_spacing_hz; }
  void validate() const;
};

/// Select one channel with a brick-wall filter, translate it to zero
/// frequency and resample onto output_oversampling * bandwidth.
SampledField demux(const SampledField& field, const DemuxSpec& spec);

/// Single-channel digital backpropagation: the split-step solver run over the
/// reversed link with negated beta2 and gamma and no noise. When `matched` is
/// given, its per-segment step counts are replayed (in reverse).
SampledField dbp(SampledField field, const LinkSpec& link, const SsfmControl& ctrl,
                 const PropagationTrace* matched = nullptr);

/// Bank of N matched filters sampled at t = kT. The field must be centered on
/// the channel and hold an integer number K of symbol periods.
SymbolGrid matched_filter_bank(const SampledField& field, std::size_t subcarriers, double symbol_time_s);

}  // namespace wdmair
