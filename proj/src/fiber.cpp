#include "wdmair/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wdmair/fft.hpp"
#include "wdmair/rng.hpp"

namespace wdmair {

void SsfmControl::validate() const {
  if (!(max_step_km > 0.0)) throw Error("ssfm: max_step must be positive");
  if (!(max_nl_phase_rad > 0.0)) throw Error("ssfm: max_nl_phase must be positive");
  if (!(convergence_factor > 0.0 && convergence_factor < 1.0)) {
    throw Error("ssfm: convergence factor must lie in (0, 1)");
  }
}

SsfmControl SsfmControl::refined() const {
  SsfmControl out = *this;
  out.max_step_km *= convergence_factor;
  out.max_nl_phase_rad *= convergence_factor;
  return out;
}

AseModel AseModel::for_link(const LinkSpec& link) {
  const double h_nu = photon_energy(link);
  const double alpha = db_per_km_to_linear(link.fiber.alpha_db_per_km);
  if (link.amplification == Amplification::kIda) return {AseMode::kDistributed, link.eta * h_nu * alpha};
  return {AseMode::kLumped, link.eta * h_nu * std::expm1(alpha * link.span_length_km)};
}

int PropagationTrace::total_steps() const {
  return std::accumulate(steps_per_segment.begin(), steps_per_segment.end(), 0);
}

double relative_l2_distance(const SampledField& a, const SampledField& b) {
  if (a.size() != b.size() || a.pol_count() != b.pol_count()) throw Error("relative_l2_distance: shape mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t p = 0; p < a.pol_count(); ++p) {
    auto x = a.samples(p);
    auto y = b.samples(p);
    for (std::size_t i = 0; i < x.size(); ++i) {
      num += std::norm(x[i] - y[i]);
      den += std::norm(y[i]);
    }
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::sqrt(num);
  return std::sqrt(num / den);
}

namespace {

void add_noise_inplace(SampledField& field, double variance, std::uint64_t seed) {
  if (variance <= 0.0) return;
  const RunSeed base(seed);
  for (std::size_t p = 0; p < field.pol_count(); ++p) {
    Rng rng(base.stream("pol", {static_cast<std::int64_t>(p)}));
    for (auto& v : field.samples(p)) v += rng.cscg(variance);
  }
}

std::vector<double> angular_frequency_squared(const SampledField& field) {
  const std::size_t n = field.size();
  std::vector<double> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double w = constants::kTwoPi * (fft::bin_frequency(m, n, field.sample_rate()) + field.center_offset());
    out[m] = w * w;
  }
  return out;
}

int choose_steps(const FiberSegment& seg, double peak_power, const SsfmControl& ctrl) {
  const double nl = std::abs(seg.gamma_per_w_km) * seg.launch_level * peak_power;
  if (nl == 0.0) return 1;
  const double h = std::min(ctrl.max_step_km, ctrl.max_nl_phase_rad / nl);
  return std::max(1, static_cast<int>(std::ceil(seg.length_km / h - 1e-9)));
}

void propagate_segment(SampledField& field, const FiberSegment& seg, int steps, detail::Direction direction,
                       bool with_ase, const std::vector<double>& omega2, const RunSeed& seed) {
  const bool forward = direction == detail::Direction::kForward;
  const double sign = forward ? 1.0 : -1.0;
  const double h = seg.length_km / steps;
  const double beta2 = sign * seg.beta2_s2_per_km;
  const double gamma = sign * seg.gamma_per_w_km;
  const std::size_t n = field.size();
  const std::size_t pols = field.pol_count();

  ComplexVector half(n);
  ComplexVector full(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double phi = -0.5 * beta2 * omega2[m] * h;
    half[m] = std::polar(1.0, 0.5 * phi);
    full[m] = std::polar(1.0, phi);
  }

  std::vector<std::span<Complex>> u;
  for (std::size_t p = 0; p < pols; ++p) u.push_back(field.samples(p));
  for (auto& s : u) fft::forward(s);

  const double distributed_var = with_ase ? seg.distributed_ase_psd_per_km * h * field.sample_rate() : 0.0;
  for (int i = 0; i < steps; ++i) {
    const ComplexVector& lin = i == 0 ? half : full;
    for (auto& s : u) {
      for (std::size_t m = 0; m < n; ++m) s[m] *= lin[m];
      fft::inverse(s);
    }

    const int fi = forward ? i : steps - 1 - i;
    const double coeff = -gamma * seg.mean_level(fi * h, h) * h;
    if (coeff != 0.0) {
      double check = 0.0;
      if (pols == 1) {
        auto& s = u[0];
        for (std::size_t t = 0; t < n; ++t) {
          const double pw = std::norm(s[t]);
          check += pw;
          s[t] *= std::polar(1.0, coeff * pw);
        }
      } else {
        auto& s0 = u[0];
        auto& s1 = u[1];
        for (std::size_t t = 0; t < n; ++t) {
          const double pw = std::norm(s0[t]) + std::norm(s1[t]);
          check += pw;
          const Complex rot = std::polar(1.0, coeff * pw);
          s0[t] *= rot;
          s1[t] *= rot;
        }
      }
      if (!std::isfinite(check)) {
        throw Error("ssfm: non-finite field at step " + std::to_string(i) + " of segment (dz = " +
                    std::to_string(h) + " km); reduce max_step or max_nl_phase");
      }
    }
    if (distributed_var > 0.0) add_noise_inplace(field, distributed_var, seed.stream("step", {i}));

    for (auto& s : u) fft::forward(s);
  }
  for (auto& s : u) {
    for (std::size_t m = 0; m < n; ++m) s[m] *= half[m];
    fft::inverse(s);
  }
  if (with_ase && seg.output_ase_psd > 0.0) {
    add_noise_inplace(field, seg.output_ase_psd * field.sample_rate(), seed.stream("amplifier"));
  }
}

}  // namespace

namespace detail {

void propagate_layout(SampledField& field, const std::vector<FiberSegment>& layout, const SsfmControl& ctrl,
                      Direction direction, bool with_ase, std::uint64_t seed, const PropagationTrace* matched,
                      PropagationTrace* trace) {
  ctrl.validate();
  if (matched != nullptr && matched->steps_per_segment.size() != layout.size()) {
    throw Error("ssfm: matched step trace does not fit the link layout");
  }
  const auto omega2 = angular_frequency_squared(field);
  const RunSeed base(seed);
  std::vector<int> used(layout.size(), 0);
  const std::size_t count = layout.size();
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t s = direction == Direction::kForward ? j : count - 1 - j;
    const FiberSegment& seg = layout[s];
    const int steps = matched != nullptr ? matched->steps_per_segment[s] : choose_steps(seg, field.peak_power(), ctrl);
    used[s] = steps;
    propagate_segment(field, seg, steps, direction, with_ase, omega2, base.child("segment", {static_cast<std::int64_t>(s)}));
  }
  if (trace != nullptr) trace->steps_per_segment = std::move(used);
}

}  // namespace detail

SampledField add_ase(SampledField field, double psd_w_per_hz, std::uint64_t seed) {
  if (psd_w_per_hz < 0.0) throw Error("add_ase: PSD must be non-negative");
  add_noise_inplace(field, psd_w_per_hz * field.sample_rate(), seed);
  return field;
}

SampledField ssfm_propagate(SampledField field, const LinkSpec& link, const SsfmControl& ctrl, const AseModel& ase,
                            std::uint64_t seed, PropagationTrace* trace) {
  const auto layout = link_layout(link);
  detail::propagate_layout(field, layout, ctrl, detail::Direction::kForward, ase.enabled(), seed, nullptr, trace);
  return field;
}

SampledField apply_dispersion(SampledField field, double beta2_ps2_per_km, double length_km) {
  FiberSegment seg;
  seg.length_km = length_km;
  seg.beta2_s2_per_km = beta2_ps2_per_km * 1e-24;
  const auto omega2 = angular_frequency_squared(field);
  propagate_segment(field, seg, 1, detail::Direction::kForward, false, omega2, RunSeed(0));
  return field;
}

ConvergenceReport convergence_self_check(const SampledField& field, const LinkSpec& link, const SsfmControl& ctrl) {
  PropagationTrace coarse_trace;
  PropagationTrace fine_trace;
  const SampledField coarse = ssfm_propagate(field, link, ctrl, AseModel::off(), 0, &coarse_trace);
  const SampledField fine = ssfm_propagate(field, link, ctrl.refined(), AseModel::off(), 0, &fine_trace);
  ConvergenceReport report;
  report.deviation = relative_l2_distance(coarse, fine);
  report.tolerance = ctrl.convergence_tolerance;
  report.coarse_steps = coarse_trace.total_steps();
  report.fine_steps = fine_trace.total_steps();
  report.passed = report.deviation < report.tolerance;
  return report;
}

}  // namespace wdmair
