#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "wdmair/core.hpp"
#include "wdmair/rng.hpp"

namespace wdmair {

/// y_k = a e^{j theta} x_k + n_k with E|n_k|^2 = noise_var.
struct AwgnParams {
  double gain = 1.0;
  double phase = 0.0;
  double noise_var = 1.0;

  void validate() const;
  Complex coefficient() const { return std::polar(gain, phase); }
  /// Output variance of the model for CSCG input of variance input_var.
  double output_var(double input_var) const { return gain * gain * input_var + noise_var; }
};

/// y_k = a e^{j theta_k} x_k + n_k, theta_k a Gaussian random walk.
struct PnParams {
  double gain = 1.0;
  double noise_var = 1.0;
  double walk_var = 0.0;

  void validate() const;
};

/// y_k = a e^{j theta_k} J_k x_k + n_k with J_k an isotropic random walk on
/// the Poincare sphere. Two polarizations only.
struct PpnParams {
  double gain = 1.0;
  double noise_var = 1.0;
  double walk_var = 0.0;
  double pol_walk_var = 0.0;

  void validate() const;
  PnParams phase_part() const { return {gain, noise_var, walk_var}; }
};

/// 2x2 complex matrix, row-major.
struct Jones {
  std::array<Complex, 4> m{Complex{1.0, 0.0}, Complex{}, Complex{}, Complex{1.0, 0.0}};

  static Jones identity() { return {}; }
  Complex operator()(int r, int c) const { return m[static_cast<std::size_t>(2 * r + c)]; }

  Jones operator*(const Jones& o) const {
    return {{m[0] * o.m[0] + m[1] * o.m[2], m[0] * o.m[1] + m[1] * o.m[3], m[2] * o.m[0] + m[3] * o.m[2],
             m[2] * o.m[1] + m[3] * o.m[3]}};
  }
  Jones adjoint() const { return {{std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])}}; }
  Complex det() const { return m[0] * m[3] - m[1] * m[2]; }
  std::array<Complex, 2> apply(Complex x0, Complex x1) const {
    return {m[0] * x0 + m[1] * x1, m[2] * x0 + m[3] * x1};
  }
  /// Frobenius norm of J^H J - I.
  double unitarity_error() const;
};

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// ---------------------------------------------------------------------------
// Densities (natural log)

double awgn_loglik(std::span<const Complex> x, std::span<const Complex> y, const AwgnParams& p);

double cscg_output_logpdf(std::span<const Complex> y, double output_var);

inline double pn_emission_loglik(Complex y, Complex x, double theta, double gain, double noise_var) {
  const Complex r = y - gain * std::polar(1.0, theta) * x;
  return -std::log(constants::kPi * noise_var) - std::norm(r) / noise_var;
}

double pn_sample_transition(double theta_prev, double walk_var, Rng& rng);

double pn_transition_logpdf(double theta, double theta_prev, double walk_var);

/// exp(j alpha . sigma) J_prev in closed form.
Jones ppn_step(const Jones& prev, const Vec3& alpha);

/// The rotation exp(j alpha . sigma) alone; no unitarity check.
Jones pauli_exponential(const Vec3& alpha);

double ppn_emission_loglik(const std::array<Complex, 2>& y, const std::array<Complex, 2>& x, double theta,
                           const Jones& j, double gain, double noise_var);

/// Haar-distributed element of SU(2).
Jones haar_jones(Rng& rng);

/// Stokes-space rotation R with R_ij = tr(s_i J s_j J^H) / 2, where
/// s_1 = diag(1,-1), s_2 = [[0,1],[1,0]], s_3 = [[0,-j],[j,0]]. Column j is
/// the image of the Stokes basis vector S_j.
Mat3 stokes_rotation(const Jones& j);

// ---------------------------------------------------------------------------
// Particle representation of the hidden state

struct ParticleSet {
  std::vector<double> theta;
  std::vector<Jones> jones;  // empty for single-polarization models
  std::vector<double> log_weights;
  double log_evidence = 0.0;

  std::size_t size() const { return theta.size(); }
  bool has_polarization() const { return !jones.empty(); }

  /// Normalize the weights to unit sum; returns log of the pre-normalization
  /// sum. Throws if every weight is zero or any is NaN.
  double normalize();
  double effective_sample_size() const;
  std::vector<double> weights() const;
  /// Systematic resampling driven by one uniform draw in [0, 1). A nonzero
  /// count changes the set size.
  void resample_systematic(double u, std::size_t count = 0);
};

}  // namespace wdmair
