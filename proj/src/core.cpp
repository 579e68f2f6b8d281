#include "wdmair/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wdmair {

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

double db_per_km_to_linear(double alpha_db_per_km) { return alpha_db_per_km * std::log(10.0) / 10.0; }

// ---------------------------------------------------------------------------
// SampledField

SampledField::SampledField(std::vector<ComplexVector> pols, double sample_rate_hz,
                           double content_bandwidth_hz, double center_offset_hz)
    : pols_(std::move(pols)),
      sample_rate_(sample_rate_hz),
      content_bandwidth_(content_bandwidth_hz),
      center_offset_(center_offset_hz) {
  if (pols_.empty() || pols_.size() > 2) throw Error("SampledField: pol_count must be 1 or 2");
  if (pols_.front().empty()) throw Error("SampledField: empty sample vector");
  for (const auto& p : pols_) {
    if (p.size() != pols_.front().size()) throw Error("SampledField: polarizations differ in length");
  }
  if (!(sample_rate_ > 0.0)) throw Error("SampledField: sample rate must be positive");
  set_content_bandwidth(content_bandwidth_hz);
}

SampledField SampledField::zeros(std::size_t pol_count, std::size_t samples, double sample_rate_hz,
                                 double content_bandwidth_hz, double center_offset_hz) {
  std::vector<ComplexVector> pols(pol_count, ComplexVector(samples, Complex{}));
  return SampledField(std::move(pols), sample_rate_hz, content_bandwidth_hz, center_offset_hz);
}

void SampledField::set_content_bandwidth(double hz) {
  if (hz < 0.0 || !(hz < sample_rate_)) {
    throw Error("SampledField: content bandwidth " + std::to_string(hz) +
                " Hz does not fit below sample rate " + std::to_string(sample_rate_) + " Hz");
  }
  content_bandwidth_ = hz;
}

double SampledField::mean_power() const {
  double acc = 0.0;
  for (const auto& p : pols_) {
    for (const auto& v : p) acc += std::norm(v);
  }
  return acc / static_cast<double>(size());
}

double SampledField::peak_power() const {
  double peak = 0.0;
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& p : pols_) s += std::norm(p[i]);
    peak = std::max(peak, s);
  }
  return peak;
}

// ---------------------------------------------------------------------------
// SymbolGrid

SymbolGrid::SymbolGrid(std::size_t subcarriers, std::size_t symbols, std::size_t pol_count,
                       double subcarrier_spacing_hz, double symbol_time_s)
    : subcarriers_(subcarriers),
      symbols_(symbols),
      pol_count_(pol_count),
      spacing_(subcarrier_spacing_hz),
      symbol_time_(symbol_time_s),
      data_(subcarriers * symbols * pol_count) {
  if (subcarriers == 0 || symbols == 0) throw Error("SymbolGrid: N and K must be >= 1");
  if (pol_count != 1 && pol_count != 2) throw Error("SymbolGrid: pol_count must be 1 or 2");
  if (spacing_ * symbol_time_ < 1.0 - 1e-12) {
    throw Error("SymbolGrid: F*T below 1 violates the orthogonality bound");
  }
}

std::span<const Complex> SymbolGrid::row(std::size_t subcarrier, std::size_t pol) const {
  return {data_.data() + (subcarrier * pol_count_ + pol) * symbols_, symbols_};
}

std::span<Complex> SymbolGrid::row(std::size_t subcarrier, std::size_t pol) {
  return {data_.data() + (subcarrier * pol_count_ + pol) * symbols_, symbols_};
}

SymbolGrid SymbolGrid::slice(std::size_t first, std::size_t count) const {
  if (first + count > symbols_) throw Error("SymbolGrid::slice out of range");
  SymbolGrid out(subcarriers_, count, pol_count_, spacing_, symbol_time_);
  for (std::size_t n = 0; n < subcarriers_; ++n) {
    for (std::size_t p = 0; p < pol_count_; ++p) {
      auto src = row(n, p).subspan(first, count);
      std::copy(src.begin(), src.end(), out.row(n, p).begin());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Link

double LinkSpec::dcf_length_km() const {
  if (!dcf) return 0.0;
  if (dcf->length_km > 0.0) return dcf->length_km;
  return -fiber.beta2_ps2_per_km * span_length_km / dcf->fiber.beta2_ps2_per_km;
}

void LinkSpec::validate() const {
  if (!(span_length_km > 0.0)) throw Error("link: span length must be positive");
  if (span_count < 1) throw Error("link: span count must be >= 1");
  if (eta < 0.0) throw Error("link: spontaneous emission coefficient must be >= 0");
  if (!(center_frequency_hz > 0.0)) throw Error("link: center frequency must be positive");
  if (dcf) {
    if (amplification != Amplification::kLa) throw Error("link: DCF requires lumped amplification");
    if (dcf->length_km < 0.0) throw Error("link: DCF length must be positive");
    if (dcf->fiber.beta2_ps2_per_km * fiber.beta2_ps2_per_km >= 0.0) {
      throw Error("link: DCF dispersion must have the opposite sign of the span");
    }
    const double residual = fiber.beta2_ps2_per_km * span_length_km + dcf->fiber.beta2_ps2_per_km * dcf_length_km();
    const double scale = std::abs(fiber.beta2_ps2_per_km * span_length_km);
    if (std::abs(residual) > 1e-9 * std::max(scale, 1e-30)) {
      throw Error("link: DCF does not cancel the span dispersion (residual " + std::to_string(residual) +
                  " ps^2)");
    }
  }
}

double FiberSegment::level_at(double z_local_km) const {
  if (distributed_gain) return launch_level;
  return launch_level * std::exp(-alpha_per_km * z_local_km);
}

double FiberSegment::mean_level(double z0_km, double dz_km) const {
  if (distributed_gain || alpha_per_km == 0.0 || dz_km == 0.0) return level_at(z0_km);
  // (a(z0) - a(z0 + dz)) / (alpha dz), written to stay accurate for small alpha*dz
  const double x = alpha_per_km * dz_km;
  return level_at(z0_km) * (-std::expm1(-x)) / x;
}

std::vector<FiberSegment> link_layout(const LinkSpec& link) {
  link.validate();
  const double h_nu = photon_energy(link);
  const double alpha = db_per_km_to_linear(link.fiber.alpha_db_per_km);
  const double beta2 = link.fiber.beta2_ps2_per_km * 1e-24;
  std::vector<FiberSegment> out;
  for (int s = 0; s < link.span_count; ++s) {
    FiberSegment seg;
    seg.length_km = link.span_length_km;
    seg.alpha_per_km = alpha;
    seg.beta2_s2_per_km = beta2;
    seg.gamma_per_w_km = link.fiber.gamma_per_w_km;
    if (link.amplification == Amplification::kIda) {
      seg.distributed_gain = true;
      seg.distributed_ase_psd_per_km = link.eta * h_nu * alpha;
      out.push_back(seg);
      continue;
    }
    const double span_gain = std::exp(alpha * link.span_length_km);
    if (!link.dcf) {
      seg.output_ase_psd = link.eta * h_nu * (span_gain - 1.0);
      out.push_back(seg);
      continue;
    }
    const DcfParams& dcf = *link.dcf;
    const double dcf_level = std::pow(10.0, dcf.launch_offset_db / 10.0);
    // Pre-DCF amplifier: from exp(-alpha Ls) up to the DCF launch level.
    const double pre_gain = dcf_level * span_gain;
    seg.output_ase_psd = dcf.amp_eta * h_nu * std::max(pre_gain - 1.0, 0.0) / dcf_level;
    out.push_back(seg);

    FiberSegment comp;
    comp.length_km = link.dcf_length_km();
    comp.alpha_per_km = db_per_km_to_linear(dcf.fiber.alpha_db_per_km);
    comp.beta2_s2_per_km = dcf.fiber.beta2_ps2_per_km * 1e-24;
    comp.gamma_per_w_km = dcf.fiber.gamma_per_w_km;
    comp.launch_level = dcf_level;
    const double post_gain = 1.0 / comp.level_at(comp.length_km);
    comp.output_ase_psd = link.eta * h_nu * std::max(post_gain - 1.0, 0.0);
    out.push_back(comp);
  }
  return out;
}

double total_length_km(const std::vector<FiberSegment>& layout) {
  double total = 0.0;
  for (const auto& s : layout) total += s.length_km;
  return total;
}

double power_profile(const LinkSpec& link, double z_km) {
  const auto layout = link_layout(link);
  const double total = total_length_km(layout);
  if (!(z_km >= 0.0) || z_km > total * (1.0 + 1e-12)) {
    throw Error("power_profile: z = " + std::to_string(z_km) + " km outside [0, " + std::to_string(total) + "]");
  }
  double start = 0.0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const double end = start + layout[i].length_km;
    const bool last = i + 1 == layout.size();
    if (z_km < end || last) return layout[i].level_at(std::min(z_km - start, layout[i].length_km));
    start = end;
  }
  return 1.0;
}

double effective_length_km(const LinkSpec& link) {
  double acc = 0.0;
  for (const auto& s : link_layout(link)) acc += s.mean_level(0.0, s.length_km) * s.length_km;
  return acc;
}

double accumulated_ase_psd(const LinkSpec& link) {
  double acc = 0.0;
  for (const auto& s : link_layout(link)) acc += s.distributed_ase_psd_per_km * s.length_km + s.output_ase_psd;
  return acc;
}

double photon_energy(const LinkSpec& link) { return constants::kPlanck * link.center_frequency_hz; }

// ---------------------------------------------------------------------------
// RunSeed

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t RunSeed::stream(std::string_view label, std::initializer_list<std::int64_t> coords) const {
  std::uint64_t h = splitmix64(master_ ^ splitmix64(fnv1a(label)));
  for (auto c : coords) h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(c) + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace wdmair
