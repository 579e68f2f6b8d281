#pragma once

#include <cstdint>
#include <vector>

#include "wdmair/core.hpp"

namespace wdmair {

/// Step-size policy of the symmetric split-step solver.
///
/// Within each fiber segment the step is uniform and equal to the largest
/// value not exceeding `max_step_km` such that the per-step nonlinear phase
/// gamma * a_max * max||u||^2 * dz stays below `max_nl_phase_rad`, with the
/// peak power taken at the segment input. A segment with gamma = 0 is a
/// single step.
struct SsfmControl {
  double max_step_km = 0.1;
  double max_nl_phase_rad = 1e-3;
  double convergence_tolerance = 1e-6;
  double convergence_factor = 0.5;

  void validate() const;
  SsfmControl refined() const;
};

enum class AseMode { kOff, kDistributed, kLumped };

/// Amplifier noise in the normalized-envelope domain. Distributed noise
/// (IDA) is injected every step with PSD psd * dz; lumped noise is added at
/// every amplifier output.
struct AseModel {
  AseMode mode = AseMode::kOff;
  double psd = 0.0;  // W/Hz per km (distributed) or per amplifier (lumped)

  static AseModel off() { return {}; }
  static AseModel for_link(const LinkSpec& link);
  bool enabled() const { return mode != AseMode::kOff; }
};

/// Step counts actually used, one entry per layout segment.
struct PropagationTrace {
  std::vector<int> steps_per_segment;
  int total_steps() const;
};

/// Add i.i.d. CSCG noise with variance psd * sample_rate per sample and
/// polarization.
SampledField add_ase(SampledField field, double psd_w_per_hz, std::uint64_t seed);

/// Solve the NLSE (1 pol) or Manakov equation (2 pol) over the link.
SampledField ssfm_propagate(SampledField field, const LinkSpec& link, const SsfmControl& ctrl,
                            const AseModel& ase, std::uint64_t seed, PropagationTrace* trace = nullptr);

/// Apply only the dispersion of `length_km` of fiber with `beta2_ps2_per_km`
/// (exact all-pass filter).
SampledField apply_dispersion(SampledField field, double beta2_ps2_per_km, double length_km);

struct ConvergenceReport {
  double deviation = 0.0;  // relative L2 distance between the two resolutions
  double tolerance = 0.0;
  int coarse_steps = 0;
  int fine_steps = 0;
  bool passed = false;
};

/// Re-propagate noise-free with the refined control and compare.
ConvergenceReport convergence_self_check(const SampledField& field, const LinkSpec& link, const SsfmControl& ctrl);

/// Low-level entry points shared with digital backpropagation.
namespace detail {

enum class Direction { kForward, kBackward };

void propagate_layout(SampledField& field, const std::vector<FiberSegment>& layout, const SsfmControl& ctrl,
                      Direction direction, bool with_ase, std::uint64_t seed, const PropagationTrace* matched,
                      PropagationTrace* trace);

}  // namespace detail

double relative_l2_distance(const SampledField& a, const SampledField& b);

}  // namespace wdmair
