#pragma once

#include <span>

#include "wdmair/core.hpp"

namespace wdmair::fft {

/// In-place forward DFT, X[m] = sum_i x[i] exp(-j 2 pi m i / n). Unnormalized.
void forward(std::span<Complex> data);

/// In-place inverse DFT including the 1/n factor.
void inverse(std::span<Complex> data);

/// Frequency (Hz) of DFT bin `m` for an n-point grid at `sample_rate`,
/// using the signed convention m >= n/2 -> negative frequencies.
double bin_frequency(std::size_t m, std::size_t n, double sample_rate);

/// Signed bin index -> storage index.
std::size_t wrap_bin(long long signed_bin, std::size_t n);

}  // namespace wdmair::fft
