#include "wdmair/air.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wdmair/fft.hpp"
#include "wdmair/rng.hpp"

namespace wdmair {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

}  // namespace

std::string_view detector_name(Detector d) {
  switch (d) {
    case Detector::kAwgn:
      return "awgn";
    case Detector::kPn:
      return "pn";
    case Detector::kPnPerPol:
      return "pn_per_pol";
    case Detector::kPpn:
      return "ppn";
  }
  return "unknown";
}

std::optional<Detector> parse_detector(std::string_view name) {
  for (Detector d : {Detector::kAwgn, Detector::kPn, Detector::kPnPerPol, Detector::kPpn}) {
    if (detector_name(d) == name) return d;
  }
  return std::nullopt;
}

SymbolRows SymbolRows::of(const SymbolGrid& grid, std::size_t subcarrier) {
  if (grid.pol_count() == 1) return single(grid.row(subcarrier, 0));
  return dual(grid.row(subcarrier, 0), grid.row(subcarrier, 1));
}

double SymbolRows::mean_power() const {
  double acc = 0.0;
  for (std::size_t p = 0; p < pol_count; ++p) {
    for (const auto& v : pol[p]) acc += std::norm(v);
  }
  return acc / static_cast<double>(pol_count * size());
}

void SymbolRows::check_compatible(const SymbolRows& other, const char* who) const {
  if (pol_count == 0 || pol_count > 2) throw Error(std::string(who) + ": need 1 or 2 polarizations");
  if (pol_count != other.pol_count) throw Error(std::string(who) + ": polarization count mismatch");
  for (std::size_t p = 0; p < pol_count; ++p) {
    if (pol[p].size() != pol[0].size() || other.pol[p].size() != pol[0].size()) {
      throw Error(std::string(who) + ": sequence length mismatch");
    }
  }
  if (size() == 0) throw Error(std::string(who) + ": empty sequences");
}

SeResult spectral_efficiency(std::vector<AirEstimate> airs, double bandwidth_hz, double symbol_time_s) {
  SeResult out;
  const double wt = bandwidth_hz * symbol_time_s;
  if (!(wt > 0.0)) throw Error("spectral_efficiency: W T must be positive");
  double sum = 0.0;
  double var = 0.0;
  for (const auto& a : airs) {
    sum += a.value;
    var += a.std_error * a.std_error;
  }
  out.se = sum / wt;
  out.std_error = std::sqrt(var) / wt;
  const std::size_t b = airs.empty() ? 0 : airs.front().batch_means.size();
  const bool aligned = b >= 2 && std::all_of(airs.begin(), airs.end(), [&](const AirEstimate& a) {
    return a.batch_means.size() == b && a.symbols == airs.front().symbols;
  });
  if (aligned) {
    std::vector<double> joint(b, 0.0);
    for (const auto& a : airs) {
      for (std::size_t i = 0; i < b; ++i) joint[i] += a.batch_means[i];
    }
    out.std_error = std_error_of_batches(joint) / wt;
  }
  out.bandwidth_hz = bandwidth_hz;
  out.symbol_time_s = symbol_time_s;
  out.subcarriers = static_cast<int>(airs.size());
  out.airs = std::move(airs);
  return out;
}

std::vector<double> batch_means(std::span<const double> terms, std::size_t batches) {
  const std::size_t n = terms.size();
  if (batches < 2 || n < 2 * batches) return {};
  const std::size_t m = n / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    means[b] = std::accumulate(terms.begin() + static_cast<std::ptrdiff_t>(b * m),
                               terms.begin() + static_cast<std::ptrdiff_t>((b + 1) * m), 0.0) /
               static_cast<double>(m);
  }
  return means;
}

double std_error_of_batches(std::span<const double> means) {
  const std::size_t b = means.size();
  if (b < 2) return 0.0;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(b);
  double ss = 0.0;
  for (double v : means) ss += (v - grand) * (v - grand);
  return std::sqrt(ss / static_cast<double>(b * (b - 1)));
}

double batch_means_std_error(std::span<const double> terms, std::size_t batches) {
  const std::size_t n = terms.size();
  if (n < 2) return 0.0;
  const std::vector<double> means = batch_means(terms, batches);
  if (!means.empty()) return std_error_of_batches(means);
  const double mean = std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double t : terms) ss += (t - mean) * (t - mean);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Gain and noise

double log_bessel_i(double nu, double x) {
  if (nu != 0.0 && nu != 1.0) throw Error("log_bessel_i: only orders 0 and 1 are supported");
  if (!(x >= 0.0)) throw Error("log_bessel_i: argument must be non-negative");
  if (x == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (x < 600.0) return std::log(std::cyl_bessel_i(nu, x));
  // Hankel expansion, mu = 4 nu^2
  const double mu = 4.0 * nu * nu;
  const double t = 1.0 / (8.0 * x);
  const double series = 1.0 - (mu - 1.0) * t + (mu - 1.0) * (mu - 9.0) * t * t / 2.0 -
                        (mu - 1.0) * (mu - 9.0) * (mu - 25.0) * t * t * t / 6.0;
  return x - 0.5 * std::log(constants::kTwoPi * x) + std::log(series);
}

namespace {

struct ModulusData {
  std::vector<double> r;  // ||x_k||^2
  std::vector<double> s;  // ||y_k||^2
  double input_var = 0.0;
  double output_var = 0.0;
  double p = 0.0;
};

ModulusData modulus_data(const SymbolRows& x, const SymbolRows& y) {
  x.check_compatible(y, "estimate_gain_noise");
  ModulusData d;
  const std::size_t k = x.size();
  d.r.assign(k, 0.0);
  d.s.assign(k, 0.0);
  for (std::size_t p = 0; p < x.pol_count; ++p) {
    for (std::size_t i = 0; i < k; ++i) {
      d.r[i] += std::norm(x.pol[p][i]);
      d.s[i] += std::norm(y.pol[p][i]);
    }
  }
  d.input_var = x.mean_power();
  d.output_var = y.mean_power();
  d.p = x.pol_count == 1 ? 0.0 : 0.5;
  if (!(d.input_var > 0.0)) throw Error("estimate_gain_noise: training input has zero power");
  if (!(d.output_var > 1e-300)) throw Error("estimate_gain_noise: degenerate training output (zero power)");
  return d;
}

double modulus_loglik(const ModulusData& d, double noise_var) {
  const double a2 = std::max(0.0, (d.output_var - noise_var) / d.input_var);
  const double a = std::sqrt(a2);
  const double order = 2.0 * d.p;
  double acc = 0.0;
  for (std::size_t i = 0; i < d.r.size(); ++i) {
    const double m2 = std::max(a2 * d.r[i], 1e-300);
    const double s = std::max(d.s[i], 1e-300);
    const double z = 2.0 * a * std::sqrt(d.r[i] * s) / noise_var;
    acc += -std::log(noise_var) - (s + m2) / noise_var + log_bessel_i(order, z);
    if (d.p != 0.0) acc += d.p * std::log(s / m2);
  }
  return acc;
}

/// Golden-section maximization of f on [lo, hi] down to `tol`; returns the
/// best abscissa seen.
template <class F>
double golden_max(F&& f, double lo, double hi, double tol, int* evaluations = nullptr) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int evals = 2;
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  if (evaluations != nullptr) *evaluations += evals;
  return fc >= fd ? c : d;
}

}  // namespace

double gain_noise_loglik(const SymbolRows& x, const SymbolRows& y, double noise_var) {
  if (!(noise_var > 0.0)) throw Error("gain_noise_loglik: noise variance must be > 0");
  return modulus_loglik(modulus_data(x, y), noise_var);
}

GainNoise estimate_gain_noise(const SymbolRows& x, const SymbolRows& y) {
  const ModulusData d = modulus_data(x, y);
  const double lo = std::log(1e-10 * d.output_var);
  const double hi = std::log(d.output_var * (1.0 - 1e-9));
  const double best = golden_max(
      [&](double u) {
        const double v = modulus_loglik(d, std::exp(u));
        if (std::isnan(v)) throw Error("estimate_gain_noise: likelihood evaluated to NaN");
        return v;
      },
      lo, hi, 1e-7);
  GainNoise out;
  out.noise_var = std::exp(best);
  out.gain = std::sqrt(std::max(0.0, (d.output_var - out.noise_var) / d.input_var));
  out.input_var = d.input_var;
  out.output_var = d.output_var;
  return out;
}

AwgnParams fit_awgn(std::span<const Complex> x, std::span<const Complex> y) {
  if (x.size() != y.size() || x.empty()) throw Error("fit_awgn: need equal, non-empty sequences");
  Complex cross{};
  double px = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    cross += y[k] * std::conj(x[k]);
    px += std::norm(x[k]);
  }
  if (!(px > 0.0)) throw Error("fit_awgn: input has zero power");
  const Complex c = cross / px;
  double res = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) res += std::norm(y[k] - c * x[k]);
  AwgnParams p;
  p.gain = std::abs(c);
  p.phase = std::arg(c);
  p.noise_var = std::max(res / static_cast<double>(x.size()), 1e-300);
  return p;
}

AirEstimate air_awgn(std::span<const Complex> x, std::span<const Complex> y, const AwgnParams& p, double input_var,
                     std::size_t batches) {
  p.validate();
  if (x.size() != y.size() || x.empty()) throw Error("air_awgn: need equal, non-empty sequences");
  if (!(input_var > 0.0)) throw Error("air_awgn: input variance must be > 0");
  const Complex c = p.coefficient();
  const double out_var = p.output_var(input_var);
  const double log_n = std::log(constants::kPi * p.noise_var);
  const double log_y = std::log(constants::kPi * out_var);
  std::vector<double> terms(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double cond = -log_n - std::norm(y[k] - c * x[k]) / p.noise_var;
    const double marg = -log_y - std::norm(y[k]) / out_var;
    terms[k] = (cond - marg) / kLn2;
  }
  AirEstimate est;
  est.value = std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(terms.size());
  est.std_error = batch_means_std_error(terms, batches);
  est.batch_means = batch_means(terms, batches);
  est.model = Detector::kAwgn;
  est.symbols = x.size();
  if (!std::isfinite(est.value)) throw Error("air_awgn: non-finite AIR");
  return est;
}

// ---------------------------------------------------------------------------
// Particle filters

void ParticleOptions::validate() const {
  if (particles < 2) throw Error("particle filter: need at least 2 particles");
  if (!(resample_threshold >= 0.0 && resample_threshold <= 1.0)) {
    throw Error("particle filter: resample threshold must lie in [0, 1]");
  }
  if (acquisition_steps < 0 || !(acquisition_var >= 0.0)) throw Error("particle filter: invalid acquisition schedule");
  if (acquisition_particles < 0 || acquisition_window < 0) {
    throw Error("particle filter: invalid acquisition particle count or window");
  }
}

ParticleOptions ParticleOptions::pn_default() {
  ParticleOptions o;
  o.particles = 256;
  return o;
}

ParticleOptions ParticleOptions::ppn_default() {
  ParticleOptions o;
  o.particles = 1024;
  return o;
}

namespace {

double acquisition_extra(const ParticleOptions& o, std::size_t k) {
  if (o.acquisition_steps == 0) return 0.0;
  const double r = 1.0 + static_cast<double>(k) / o.acquisition_steps;
  return o.acquisition_var / (r * r);
}

std::size_t initial_particles(const ParticleOptions& o) {
  return static_cast<std::size_t>(std::max(o.particles, o.acquisition_particles));
}

/// Resample at the end of step k when the ESS is low, and shrink the
/// acquisition cloud to its nominal size once the window has passed.
void maybe_resample(ParticleSet& set, const ParticleOptions& o, std::size_t k, double ess, Rng& rng) {
  const auto nominal = static_cast<std::size_t>(o.particles);
  if (set.size() != nominal && k + 1 >= static_cast<std::size_t>(o.acquisition_window)) {
    set.resample_systematic(rng.uniform(), nominal);
  } else if (o.force_resample || ess < o.resample_threshold * static_cast<double>(set.size())) {
    set.resample_systematic(rng.uniform());
  }
}

struct Recorder {
  bool pol = false;
  std::vector<Complex> phasor;  // weighted mean of e^{j theta} (or e^{j 2 theta})
  std::vector<std::array<Vec3, 3>> stokes;
};

/// Add the increment to the log-weights, normalize, and return the log of
/// sum_i w_i exp(increment_i). Also reports the effective sample size.
double update_weights(std::vector<double>& lw, const std::vector<double>& inc, double& ess) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lw.size(); ++i) {
    lw[i] += inc[i];
    if (std::isnan(lw[i])) throw Error("particle filter: NaN weight");
    mx = std::max(mx, lw[i]);
  }
  if (!std::isfinite(mx)) {
    throw Error("particle filter: weight collapse (all particle weights are zero); increase the particle count");
  }
  double s = 0.0;
  double s2 = 0.0;
  for (double w : lw) {
    const double e = std::exp(w - mx);
    s += e;
    s2 += e * e;
  }
  const double log_sum = mx + std::log(s);
  for (double& w : lw) w -= log_sum;
  ess = s * s / s2;
  return log_sum;
}

void finish_estimate(AirEstimate& est, const std::vector<double>& terms, double scale, const ParticleOptions& opts,
                     std::size_t low_ess_steps) {
  est.value = std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(terms.size()) * scale;
  est.std_error = batch_means_std_error(terms, opts.batches) * scale;
  est.batch_means = batch_means(terms, opts.batches);
  for (double& v : est.batch_means) v *= scale;
  est.particles = opts.particles;
  est.symbols = terms.size();
  est.low_ess_fraction = static_cast<double>(low_ess_steps) / static_cast<double>(terms.size());
  if (!std::isfinite(est.value)) throw Error("particle filter: non-finite AIR");
}

AirEstimate run_pn(std::span<const Complex> x, std::span<const Complex> y, const PnParams& p, double input_var,
                   const ParticleOptions& opts, std::uint64_t seed, Recorder* rec) {
  p.validate();
  opts.validate();
  if (x.size() != y.size() || x.empty()) throw Error("air_particle: need equal, non-empty sequences");
  if (!(input_var > 0.0)) throw Error("air_particle: input variance must be > 0");

  Rng rng(seed);
  ParticleSet set;
  set.theta.resize(initial_particles(opts));
  for (auto& t : set.theta) t = constants::kTwoPi * rng.uniform();
  set.log_weights.assign(set.size(), -std::log(static_cast<double>(set.size())));

  const double out_var = p.gain * p.gain * input_var + p.noise_var;
  const double log_n = std::log(constants::kPi * p.noise_var);
  const double log_y = std::log(constants::kPi * out_var);
  const double g = 2.0 * p.gain / p.noise_var;
  std::vector<double> inc;
  std::vector<double> terms(x.size());
  std::size_t low_ess = 0;

  for (std::size_t k = 0; k < x.size(); ++k) {
    const double var = p.walk_var + acquisition_extra(opts, k);
    const double sd = std::sqrt(var);
    const Complex z = std::conj(y[k]) * x[k];
    const std::size_t n_part = set.size();
    inc.resize(n_part);
    for (std::size_t i = 0; i < n_part; ++i) {
      if (var > 0.0) set.theta[i] += sd * rng.normal();
      const double th = set.theta[i];
      inc[i] = g * (z.real() * std::cos(th) - z.imag() * std::sin(th));
    }
    double ess = 0.0;
    const double log_sum = update_weights(set.log_weights, inc, ess);
    const double yy = std::norm(y[k]);
    const double cond = -log_n - (yy + p.gain * p.gain * std::norm(x[k])) / p.noise_var + log_sum;
    const double marg = -log_y - yy / out_var;
    terms[k] = cond - marg;
    set.log_evidence += cond;
    if (ess < 0.1 * static_cast<double>(n_part)) ++low_ess;

    if (rec != nullptr) {
      Complex m{};
      for (std::size_t i = 0; i < n_part; ++i) m += std::exp(set.log_weights[i]) * std::polar(1.0, set.theta[i]);
      rec->phasor.push_back(m);
    }
    maybe_resample(set, opts, k, ess, rng);
  }
  AirEstimate est;
  est.model = Detector::kPn;
  finish_estimate(est, terms, 1.0 / kLn2, opts, low_ess);
  return est;
}

void reproject_su2(Jones& j) {
  const Complex a = 0.5 * (j.m[0] + std::conj(j.m[3]));
  const Complex b = 0.5 * (j.m[1] - std::conj(j.m[2]));
  const double n = std::sqrt(std::norm(a) + std::norm(b));
  j.m = {a / n, b / n, -std::conj(b) / n, std::conj(a) / n};
}

AirEstimate run_ppn(const SymbolRows& x, const SymbolRows& y, const PpnParams& p, double input_var,
                    const ParticleOptions& opts, std::uint64_t seed, Recorder* rec) {
  p.validate();
  opts.validate();
  x.check_compatible(y, "air_particle");
  if (x.pol_count != 2) throw Error("air_particle: the PPN model needs two polarizations");
  if (!(input_var > 0.0)) throw Error("air_particle: input variance must be > 0");

  Rng rng(seed);
  ParticleSet set;
  set.theta.resize(initial_particles(opts));
  set.jones.resize(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    set.theta[i] = constants::kTwoPi * rng.uniform();
    set.jones[i] = haar_jones(rng);
  }
  set.log_weights.assign(set.size(), -std::log(static_cast<double>(set.size())));

  const double out_var = p.gain * p.gain * input_var + p.noise_var;
  const double log_n = 2.0 * std::log(constants::kPi * p.noise_var);
  const double log_y = 2.0 * std::log(constants::kPi * out_var);
  const double g = 2.0 * p.gain / p.noise_var;
  std::vector<double> inc;
  std::vector<double> terms(x.size());
  std::size_t low_ess = 0;

  for (std::size_t k = 0; k < x.size(); ++k) {
    const double extra = acquisition_extra(opts, k);
    const double var = p.walk_var + extra;
    const double pvar = p.pol_walk_var + extra;
    const double sd = std::sqrt(var);
    const double psd = std::sqrt(pvar);
    const Complex x0 = x.pol[0][k];
    const Complex x1 = x.pol[1][k];
    const Complex y0 = y.pol[0][k];
    const Complex y1 = y.pol[1][k];
    // y^H J x = sum_ij conj(y_i) J_ij x_j
    const std::array<Complex, 4> m{std::conj(y0) * x0, std::conj(y0) * x1, std::conj(y1) * x0, std::conj(y1) * x1};
    const bool renorm = (k & 255U) == 255U;
    const std::size_t n_part = set.size();
    inc.resize(n_part);
    for (std::size_t i = 0; i < n_part; ++i) {
      if (var > 0.0) set.theta[i] += sd * rng.normal();
      Jones& j = set.jones[i];
      if (pvar > 0.0) {
        const Vec3 alpha{psd * rng.normal(), psd * rng.normal(), psd * rng.normal()};
        j = pauli_exponential(alpha) * j;
        if (renorm) reproject_su2(j);
      }
      const Complex t = j.m[0] * m[0] + j.m[1] * m[1] + j.m[2] * m[2] + j.m[3] * m[3];
      const double th = set.theta[i];
      inc[i] = g * (t.real() * std::cos(th) - t.imag() * std::sin(th));
    }
    double ess = 0.0;
    const double log_sum = update_weights(set.log_weights, inc, ess);
    const double yy = std::norm(y0) + std::norm(y1);
    const double xx = std::norm(x0) + std::norm(x1);
    const double cond = -log_n - (yy + p.gain * p.gain * xx) / p.noise_var + log_sum;
    const double marg = -log_y - yy / out_var;
    terms[k] = cond - marg;
    set.log_evidence += cond;
    if (ess < 0.1 * static_cast<double>(n_part)) ++low_ess;

    if (rec != nullptr) {
      Complex ph{};
      std::array<Vec3, 3> img{};
      for (std::size_t i = 0; i < n_part; ++i) {
        const double w = std::exp(set.log_weights[i]);
        ph += w * std::polar(1.0, 2.0 * set.theta[i]);
        const Mat3 r = stokes_rotation(set.jones[i]);
        for (std::size_t c = 0; c < 3; ++c) {
          for (std::size_t row = 0; row < 3; ++row) img[c][row] += w * r[row][c];
        }
      }
      for (auto& v : img) {
        const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        if (n > 0.0) {
          for (double& e : v) e /= n;
        }
      }
      rec->phasor.push_back(ph);
      rec->stokes.push_back(img);
    }
    maybe_resample(set, opts, k, ess, rng);
  }
  AirEstimate est;
  est.model = Detector::kPpn;
  finish_estimate(est, terms, 0.5 / kLn2, opts, low_ess);
  return est;
}

std::vector<double> unwrap_phasors(const std::vector<Complex>& phasors, double period) {
  std::vector<double> out(phasors.size());
  const double scale = period / constants::kTwoPi;
  double prev = 0.0;
  for (std::size_t k = 0; k < phasors.size(); ++k) {
    double v = std::arg(phasors[k]) * scale;
    if (k > 0) v += period * std::round((prev - v) / period);
    out[k] = v;
    prev = v;
  }
  return out;
}

}  // namespace

AirEstimate air_particle(std::span<const Complex> x, std::span<const Complex> y, const PnParams& p, double input_var,
                         const ParticleOptions& opts, std::uint64_t seed) {
  return run_pn(x, y, p, input_var, opts, seed, nullptr);
}

AirEstimate air_particle(const SymbolRows& x, const SymbolRows& y, const PpnParams& p, double input_var,
                         const ParticleOptions& opts, std::uint64_t seed) {
  return run_ppn(x, y, p, input_var, opts, seed, nullptr);
}

WalkFit estimate_walk_variances(std::span<const Complex> x, std::span<const Complex> y, const GainNoise& gn,
                                double input_var, const ParticleOptions& opts, std::uint64_t seed,
                                const WalkSearch& search) {
  WalkFit fit;
  double best_air = -std::numeric_limits<double>::infinity();
  auto f = [&](double u) {
    const PnParams p{gn.gain, gn.noise_var, std::pow(10.0, u)};
    const double v = run_pn(x, y, p, input_var, opts, seed, nullptr).value;
    if (!std::isfinite(v)) throw Error("estimate_walk_variances: non-finite AIR during the search");
    best_air = std::max(best_air, v);
    return v;
  };
  const double u = golden_max(f, search.log10_min, search.log10_max, search.tolerance_decades, &fit.evaluations);
  fit.walk_var = std::pow(10.0, u);
  fit.air = best_air;
  return fit;
}

WalkFit estimate_walk_variances(const SymbolRows& x, const SymbolRows& y, const GainNoise& gn, double input_var,
                                const ParticleOptions& opts, std::uint64_t seed, const WalkSearch& search) {
  WalkFit fit;
  double log_theta = 0.5 * (search.log10_min + search.log10_max);
  double log_pol = log_theta;
  double best_air = -std::numeric_limits<double>::infinity();
  auto eval = [&](double lt, double lp) {
    const PpnParams p{gn.gain, gn.noise_var, std::pow(10.0, lt), std::pow(10.0, lp)};
    const double v = run_ppn(x, y, p, input_var, opts, seed, nullptr).value;
    if (!std::isfinite(v)) throw Error("estimate_walk_variances: non-finite AIR during the search");
    if (v > best_air) {
      best_air = v;
      fit.walk_var = std::pow(10.0, lt);
      fit.pol_walk_var = std::pow(10.0, lp);
    }
    return v;
  };
  for (int round = 0; round < search.rounds; ++round) {
    log_theta = golden_max([&](double u) { return eval(u, log_pol); }, search.log10_min, search.log10_max,
                           search.tolerance_decades, &fit.evaluations);
    log_pol = golden_max([&](double u) { return eval(log_theta, u); }, search.log10_min, search.log10_max,
                         search.tolerance_decades, &fit.evaluations);
  }
  fit.air = best_air;
  return fit;
}

// ---------------------------------------------------------------------------

std::vector<double> autocorrelation(std::span<const double> v, std::size_t max_lag) {
  const std::size_t n = v.size();
  if (n == 0) return {};
  max_lag = std::min(max_lag, n - 1);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
  ComplexVector buf(2 * n, Complex{});
  for (std::size_t i = 0; i < n; ++i) buf[i] = v[i] - mean;
  fft::forward(buf);
  for (auto& c : buf) c = std::norm(c);
  fft::inverse(buf);
  std::vector<double> out(max_lag + 1);
  for (std::size_t l = 0; l <= max_lag; ++l) out[l] = buf[l].real() / static_cast<double>(n);
  return out;
}

StateTrack export_state_track(std::span<const Complex> x, std::span<const Complex> y, const PnParams& p,
                              double input_var, const ParticleOptions& opts, std::uint64_t seed, std::size_t max_lag) {
  Recorder rec;
  StateTrack track;
  track.air = run_pn(x, y, p, input_var, opts, seed, &rec);
  track.theta = unwrap_phasors(rec.phasor, constants::kTwoPi);
  track.autocorrelation = autocorrelation(track.theta, max_lag);
  return track;
}

StateTrack export_state_track(const SymbolRows& x, const SymbolRows& y, const PpnParams& p, double input_var,
                              const ParticleOptions& opts, std::uint64_t seed, std::size_t max_lag) {
  Recorder rec;
  rec.pol = true;
  StateTrack track;
  track.air = run_ppn(x, y, p, input_var, opts, seed, &rec);
  track.theta = unwrap_phasors(rec.phasor, constants::kPi);
  track.autocorrelation = autocorrelation(track.theta, max_lag);
  track.stokes = std::move(rec.stokes);
  return track;
}

}  // namespace wdmair
