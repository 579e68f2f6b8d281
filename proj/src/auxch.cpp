#include "wdmair/auxch.hpp"

#include <algorithm>
#include <limits>

namespace wdmair {

void AwgnParams::validate() const {
  if (!(gain >= 0.0)) throw Error("AwgnParams: gain must be >= 0");
  if (!(noise_var > 0.0)) throw Error("AwgnParams: noise variance must be > 0");
}

void PnParams::validate() const {
  if (!(gain >= 0.0)) throw Error("PnParams: gain must be >= 0");
  if (!(noise_var > 0.0)) throw Error("PnParams: noise variance must be > 0");
  if (!(walk_var >= 0.0)) throw Error("PnParams: walk variance must be >= 0");
}

void PpnParams::validate() const {
  phase_part().validate();
  if (!(pol_walk_var >= 0.0)) throw Error("PpnParams: polarization walk variance must be >= 0");
}

double Jones::unitarity_error() const {
  const Jones g = adjoint() * (*this);
  return std::sqrt(std::norm(g.m[0] - 1.0) + std::norm(g.m[1]) + std::norm(g.m[2]) + std::norm(g.m[3] - 1.0));
}

double awgn_loglik(std::span<const Complex> x, std::span<const Complex> y, const AwgnParams& p) {
  p.validate();
  if (x.size() != y.size()) throw Error("awgn_loglik: length mismatch");
  const Complex c = p.coefficient();
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) acc += std::norm(y[k] - c * x[k]);
  return -static_cast<double>(x.size()) * std::log(constants::kPi * p.noise_var) - acc / p.noise_var;
}

double cscg_output_logpdf(std::span<const Complex> y, double output_var) {
  if (!(output_var > 0.0)) throw Error("cscg_output_logpdf: variance must be > 0");
  double acc = 0.0;
  for (const auto& v : y) acc += std::norm(v);
  return -static_cast<double>(y.size()) * std::log(constants::kPi * output_var) - acc / output_var;
}

double pn_sample_transition(double theta_prev, double walk_var, Rng& rng) {
  if (walk_var <= 0.0) return theta_prev;
  return theta_prev + std::sqrt(walk_var) * rng.normal();
}

double pn_transition_logpdf(double theta, double theta_prev, double walk_var) {
  if (!(walk_var > 0.0)) throw Error("pn_transition_logpdf: walk variance must be > 0");
  const double d = theta - theta_prev;
  return -0.5 * std::log(constants::kTwoPi * walk_var) - d * d / (2.0 * walk_var);
}

Jones pauli_exponential(const Vec3& alpha) {
  const double r = std::sqrt(alpha[0] * alpha[0] + alpha[1] * alpha[1] + alpha[2] * alpha[2]);
  if (r == 0.0) return Jones::identity();
  const double c = std::cos(r);
  const double s = std::sin(r) / r;
  // cos|a| I + j sin|a|/|a| (a1 s1 + a2 s2 + a3 s3)
  const Complex p{c, s * alpha[0]};
  const Complex q{s * alpha[2], s * alpha[1]};
  return {{p, q, -std::conj(q), std::conj(p)}};
}

Jones ppn_step(const Jones& prev, const Vec3& alpha) {
  if (prev.unitarity_error() > 1e-9) throw Error("ppn_step: previous Jones matrix is not unitary");
  return pauli_exponential(alpha) * prev;
}

double ppn_emission_loglik(const std::array<Complex, 2>& y, const std::array<Complex, 2>& x, double theta,
                           const Jones& j, double gain, double noise_var) {
  if (!(noise_var > 0.0)) throw Error("ppn_emission_loglik: noise variance must be > 0");
  const auto jx = j.apply(x[0], x[1]);
  const Complex c = gain * std::polar(1.0, theta);
  const double dist = std::norm(y[0] - c * jx[0]) + std::norm(y[1] - c * jx[1]);
  return -2.0 * std::log(constants::kPi * noise_var) - dist / noise_var;
}

Jones haar_jones(Rng& rng) {
  // A uniformly random point on S^3 is a Haar-random unit quaternion.
  double q[4];
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : q) {
      v = rng.normal();
      norm += v * v;
    }
  } while (norm < 1e-300);
  norm = std::sqrt(norm);
  const Complex a{q[0] / norm, q[1] / norm};
  const Complex b{q[2] / norm, q[3] / norm};
  return {{a, b, -std::conj(b), std::conj(a)}};
}

Mat3 stokes_rotation(const Jones& j) {
  using M = Jones;
  const M s[3] = {{{Complex{1, 0}, Complex{}, Complex{}, Complex{-1, 0}}},
                  {{Complex{}, Complex{1, 0}, Complex{1, 0}, Complex{}}},
                  {{Complex{}, Complex{0, -1}, Complex{0, 1}, Complex{}}}};
  const M jh = j.adjoint();
  Mat3 r{};
  for (int a = 0; a < 3; ++a) {
    const M left = jh * s[a] * j;
    for (int b = 0; b < 3; ++b) {
      const M prod = left * s[b];
      r[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = 0.5 * (prod.m[0] + prod.m[3]).real();
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

double ParticleSet::normalize() {
  if (log_weights.empty()) throw Error("ParticleSet: empty");
  double mx = -std::numeric_limits<double>::infinity();
  for (double w : log_weights) {
    if (std::isnan(w)) throw Error("ParticleSet: NaN weight");
    mx = std::max(mx, w);
  }
  if (!std::isfinite(mx)) {
    throw Error("ParticleSet: weight collapse (all particle weights are zero); increase the particle count");
  }
  double sum = 0.0;
  for (double w : log_weights) sum += std::exp(w - mx);
  const double log_sum = mx + std::log(sum);
  for (double& w : log_weights) w -= log_sum;
  return log_sum;
}

double ParticleSet::effective_sample_size() const {
  double s2 = 0.0;
  for (double w : log_weights) {
    const double e = std::exp(w);
    s2 += e * e;
  }
  return 1.0 / s2;
}

std::vector<double> ParticleSet::weights() const {
  std::vector<double> out(log_weights.size());
  std::transform(log_weights.begin(), log_weights.end(), out.begin(), [](double w) { return std::exp(w); });
  return out;
}

void ParticleSet::resample_systematic(double u, std::size_t count) {
  const std::size_t old_n = size();
  const std::size_t n = count == 0 ? old_n : count;
  std::vector<double> new_theta(n);
  std::vector<Jones> new_jones(jones.empty() ? 0 : n);
  const double step = 1.0 / static_cast<double>(n);
  double target = u * step;
  double cumulative = std::exp(log_weights[0]);
  std::size_t src = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (cumulative < target && src + 1 < old_n) {
      ++src;
      cumulative += std::exp(log_weights[src]);
    }
    new_theta[i] = theta[src];
    if (!jones.empty()) new_jones[i] = jones[src];
    target += step;
  }
  theta = std::move(new_theta);
  jones = std::move(new_jones);
  log_weights.assign(n, -std::log(static_cast<double>(n)));
}

}  // namespace wdmair
