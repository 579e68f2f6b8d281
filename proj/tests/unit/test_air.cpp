#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "support/grid_forward.hpp"
#include "support/synthetic.hpp"
#include "wdmair/air.hpp"
#include "wdmair/config.hpp"
#include "wdmair/rng.hpp"

using namespace wdmair;

namespace {

AirEstimate est(double v, double se) {
  AirEstimate a;
  a.value = v;
  a.std_error = se;
  return a;
}

std::vector<Complex> cscg(std::size_t n, double var, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Complex> v(n);
  for (auto& z : v) z = rng.cscg(var);
  return v;
}

}  // namespace

TEST_CASE("spectral efficiency") {
  CHECK(spectral_efficiency({est(4, 0), est(4, 0), est(4, 0), est(4, 0)}, 1.0, 4.0).se == doctest::Approx(4.0));
  CHECK(spectral_efficiency({est(3.3, 0.1)}, 50e9, 1.0 / 50e9).se == doctest::Approx(3.3));
  const SeResult r = spectral_efficiency({est(3, 0.3), est(5, 0.4)}, 1.0, 2.0);
  CHECK(r.se == doctest::Approx(4.0));
  CHECK(r.std_error == doctest::Approx(0.25));

  SUBCASE("aligned batch means keep the correlation between subcarriers") {
    AirEstimate a = est(2, 0.0);
    a.batch_means = {1, 3, 1, 3};
    a.symbols = 400;
    a.std_error = std_error_of_batches(a.batch_means);
    CHECK(a.std_error == doctest::Approx(std::sqrt(4.0 / 12.0)));
    const SeResult same = spectral_efficiency({a, a}, 1.0, 1.0);
    CHECK(same.std_error == doctest::Approx(std::sqrt(16.0 / 12.0)));
    AirEstimate opposite = a;
    opposite.batch_means = {3, 1, 3, 1};
    CHECK(spectral_efficiency({a, opposite}, 1.0, 1.0).std_error == doctest::Approx(0.0));
    AirEstimate shorter = a;
    shorter.batch_means = {1, 3};
    CHECK(spectral_efficiency({a, shorter}, 1.0, 1.0).std_error == doctest::Approx(std::sqrt(2.0) * a.std_error));
  }
}

TEST_CASE("log bessel") {
  for (double x : {0.0, 1e-3, 0.5, 3.0, 40.0, 300.0}) {
    CHECK(log_bessel_i(0.0, x) == doctest::Approx(std::log(std::cyl_bessel_i(0.0, x))).epsilon(1e-12));
    if (x > 0.0) {
      CHECK(log_bessel_i(1.0, x) == doctest::Approx(std::log(std::cyl_bessel_i(1.0, x))).epsilon(1e-12));
    }
  }
  // 30-digit reference values on both sides of the switch to the asymptotic expansion
  CHECK(log_bessel_i(0.0, 599.0) == doctest::Approx(594.883639523367805).epsilon(1e-13));
  CHECK(log_bessel_i(1.0, 599.0) == doctest::Approx(594.882804100993130).epsilon(1e-13));
  CHECK(log_bessel_i(0.0, 600.0) == doctest::Approx(595.882805146433893).epsilon(1e-13));
  CHECK(log_bessel_i(1.0, 600.0) == doctest::Approx(595.881971117592740).epsilon(1e-13));
  CHECK(log_bessel_i(0.0, 1000.0) == doctest::Approx(995.627308889869465).epsilon(1e-13));
  CHECK(log_bessel_i(1.0, 1000.0) == doctest::Approx(995.626808639639985).epsilon(1e-13));
  const double big = 1e6;
  CHECK(log_bessel_i(0.0, big) == doctest::Approx(big - 0.5 * std::log(constants::kTwoPi * big)).epsilon(1e-12));
  CHECK_THROWS_AS(log_bessel_i(0.5, 1.0), Error);
}

TEST_CASE("gain and noise from squared moduli") {
  const std::size_t k = 10000;
  const double sx = 2.0;
  const auto x = cscg(k, sx, 1);
  const auto n = cscg(k, 0.1 * sx, 2);
  std::vector<Complex> y(k);
  for (std::size_t i = 0; i < k; ++i) y[i] = 0.8 * std::polar(1.0, 0.4) * x[i] + n[i];
  const GainNoise g = estimate_gain_noise(SymbolRows::single(x), SymbolRows::single(y));
  CHECK(g.gain == doctest::Approx(0.8).epsilon(0.01));
  CHECK(g.noise_var == doctest::Approx(0.2).epsilon(0.05));

  // moduli only: a common rotation changes nothing
  std::vector<Complex> yr = y;
  for (auto& v : yr) v *= std::polar(1.0, -2.0);
  const GainNoise gr = estimate_gain_noise(SymbolRows::single(x), SymbolRows::single(yr));
  CHECK(gr.noise_var == doctest::Approx(g.noise_var).epsilon(1e-6));

  // noiseless
  const GainNoise g0 = estimate_gain_noise(SymbolRows::single(x), SymbolRows::single(x));
  CHECK(g0.gain == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(g0.noise_var < 1e-6 * sx);

  // the estimate maximizes the likelihood
  const double l0 = gain_noise_loglik(SymbolRows::single(x), SymbolRows::single(y), g.noise_var);
  CHECK(l0 >= gain_noise_loglik(SymbolRows::single(x), SymbolRows::single(y), 0.9 * g.noise_var));
  CHECK(l0 >= gain_noise_loglik(SymbolRows::single(x), SymbolRows::single(y), 1.1 * g.noise_var));

  // two polarizations
  const auto x1 = cscg(k, sx, 3);
  const auto n1 = cscg(k, 0.1 * sx, 4);
  std::vector<Complex> y1(k);
  for (std::size_t i = 0; i < k; ++i) y1[i] = 0.8 * x1[i] + n1[i];
  const GainNoise g2 = estimate_gain_noise(SymbolRows::dual(x, x1), SymbolRows::dual(y, y1));
  CHECK(g2.gain == doctest::Approx(0.8).epsilon(0.01));
  CHECK(g2.noise_var == doctest::Approx(0.2).epsilon(0.05));

  const std::vector<Complex> zero(k);
  CHECK_THROWS_AS(estimate_gain_noise(SymbolRows::single(x), SymbolRows::single(zero)), Error);
}

TEST_CASE("awgn fit and rate") {
  const std::size_t k = 100000;
  const auto x = cscg(k, 1.0, 5);
  const auto n = cscg(k, 0.1, 6);
  std::vector<Complex> y(k);
  for (std::size_t i = 0; i < k; ++i) y[i] = std::polar(1.0, 0.7) * x[i] + n[i];
  const AwgnParams p = fit_awgn(x, y);
  CHECK(p.gain == doctest::Approx(1.0).epsilon(0.01));
  CHECK(p.phase == doctest::Approx(0.7).epsilon(0.01));
  CHECK(p.noise_var == doctest::Approx(0.1).epsilon(0.02));
  const AirEstimate a = air_awgn(x, y, p, 1.0);
  CHECK(a.value == doctest::Approx(std::log2(11.0)).epsilon(0.05 / 3.459));
  CHECK(a.value <= std::log2(11.0) + 3.0 * a.std_error);

  // no information
  const AirEstimate none = air_awgn(x, n, AwgnParams{1.0, 0.0, 1e6}, 1.0);
  CHECK(std::abs(none.value) < 0.01);
  const auto indep = cscg(k, 1.1, 7);
  const AirEstimate mis = air_awgn(x, indep, fit_awgn(x, indep), 1.0);
  CHECK(mis.value <= 3.0 * mis.std_error);
}

TEST_CASE("batch means") {
  std::vector<double> v(1000, 2.0);
  CHECK(batch_means_std_error(v, 20) == 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 2 == 0) ? 1.0 : -1.0;
  CHECK(batch_means_std_error(v, 20) == doctest::Approx(0.0).epsilon(1e-12));
  const auto z = cscg(100000, 2.0, 8);
  std::vector<double> re(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) re[i] = z[i].real();
  CHECK(batch_means_std_error(re, 20) == doctest::Approx(1.0 / std::sqrt(1e5)).epsilon(0.5));

  // Slowly varying terms: runs of 500 equal values. The i.i.d. formula sees
  // 10^4 samples, the batches see the 20 runs.
  Rng rng(9);
  std::vector<double> slow(10000);
  for (std::size_t i = 0; i < slow.size(); i += 500) {
    const double level = rng.normal();
    std::fill(slow.begin() + static_cast<std::ptrdiff_t>(i), slow.begin() + static_cast<std::ptrdiff_t>(i + 500), level);
  }
  CHECK(batch_means_std_error(slow, 20) > 10.0 * batch_means_std_error(slow, 1));
  CHECK(batch_means(slow, 20).size() == 20);
  CHECK(batch_means(slow, 1).empty());
  CHECK(batch_means(std::vector<double>(30, 1.0), 20).empty());
}

TEST_CASE("awgn rate under slow phase drift") {
  // A phase that wanders slowly is noise for the AWGN detector, and its error
  // bar has to see the drift.
  const std::size_t k = 20000;
  const auto x = cscg(k, 1.0, 12);
  const auto n = cscg(k, 0.01, 13);
  Rng rng(14);
  std::vector<Complex> y(k);
  double phase = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    phase += 0.003 * rng.normal();
    y[i] = std::polar(1.0, phase) * x[i] + n[i];
  }
  const AirEstimate a = air_awgn(x, y, fit_awgn(x, y), 1.0);
  const AirEstimate iid = air_awgn(x, y, fit_awgn(x, y), 1.0, 1);
  CHECK(a.value == iid.value);
  CHECK(a.batch_means.size() == 20);
  CHECK(iid.batch_means.empty());
  CHECK(a.std_error > 3.0 * iid.std_error);
}

TEST_CASE("particle rate against the grid forward algorithm") {
  const PnParams p{1.0, std::pow(10.0, -1.5), 0.0025};
  const auto ch = oracle::pn_channel(4000, 1.0, p, 2.0, 9);
  ParticleOptions o;
  o.particles = 512;
  const AirEstimate pf = air_particle(ch.x0, ch.y0, p, 1.0, o, 1);
  const double grid = oracle::grid_forward_air(ch.x0, ch.y0, p, 1.0, 2048);
  CHECK(std::abs(pf.value - grid) < 0.02);
  CHECK(pf.particles == 512);
  CHECK(pf.symbols == 4000);

  SUBCASE("deterministic under the seed") {
    CHECK(air_particle(ch.x0, ch.y0, p, 1.0, o, 1).value == pf.value);
    CHECK(air_particle(ch.x0, ch.y0, p, 1.0, o, 2).value != pf.value);
  }
  SUBCASE("doubling the particles stays within the standard error") {
    ParticleOptions o2 = o;
    o2.particles = 1024;
    const AirEstimate pf2 = air_particle(ch.x0, ch.y0, p, 1.0, o2, 3);
    CHECK(std::abs(pf2.value - pf.value) < std::hypot(pf.std_error, pf2.std_error));
  }
  SUBCASE("a larger acquisition cloud shrinks to the nominal size") {
    ParticleOptions oa = o;
    oa.acquisition_particles = 8192;
    oa.acquisition_window = 20;
    const AirEstimate pfa = air_particle(ch.x0, ch.y0, p, 1.0, oa, 6);
    CHECK(pfa.particles == 512);
    CHECK(std::abs(pfa.value - grid) < 0.02);
  }
  SUBCASE("forced resampling agrees with adaptive resampling") {
    ParticleOptions of = o;
    of.force_resample = true;
    const AirEstimate pff = air_particle(ch.x0, ch.y0, p, 1.0, of, 4);
    CHECK(std::abs(pff.value - pf.value) < 3.0 * std::hypot(pf.std_error, pff.std_error));
  }
}

TEST_CASE("particle rates nest the awgn rate") {
  const PpnParams p{0.9, 0.05, 0.0, 0.0};
  Rng rng(10);
  const auto ch = oracle::ppn_channel(6000, 1.0, p, -1.3, haar_jones(rng), 11);
  const double aw = 0.5 * (air_awgn(ch.x0, ch.y0, fit_awgn(ch.x0, ch.y0), 1.0).value +
                           air_awgn(ch.x1, ch.y1, fit_awgn(ch.x1, ch.y1), 1.0).value);
  ParticleOptions o = ParticleOptions::ppn_default();
  o.acquisition_steps = 2;
  const double ppn = air_particle(SymbolRows::dual(ch.x0, ch.x1), SymbolRows::dual(ch.y0, ch.y1), p, 1.0, o, 5).value;
  // The AWGN detector cannot undo the polarization rotation, PPN can.
  CHECK(ppn > aw);
  const double bound = std::log2(1.0 + 0.81 / 0.05);
  CHECK(ppn < bound + 0.02);
  CHECK(ppn > bound - 0.05);
}

TEST_CASE("ppn acquisition at high snr") {
  // 25 dB, slow walks: a bare 1024-particle cloud drawn from the uniform
  // prior sometimes fails to lock within the first symbols and loses bits.
  const PpnParams p{1.0, std::pow(10.0, -2.5), 1e-5, 1e-6};
  const double bound = std::log2(1.0 + 1.0 / p.noise_var);
  ExperimentConfig defaults;
  double lo = INFINITY;
  double hi = -INFINITY;
  for (std::uint64_t s = 0; s < 6; ++s) {
    Rng rng(40 + s);
    const auto ch = oracle::ppn_channel(3000, 1.0, p, 6.0 * rng.uniform(), haar_jones(rng), 50 + s);
    const double air = air_particle(SymbolRows::dual(ch.x0, ch.x1), SymbolRows::dual(ch.y0, ch.y1), p, 1.0,
                                    defaults.ppn_options(), 60 + s)
                           .value;
    lo = std::min(lo, air);
    hi = std::max(hi, air);
  }
  CHECK(lo > bound - 0.15);
  CHECK(hi - lo < 0.05);
}

TEST_CASE("walk variance estimation") {
  ParticleOptions o = ParticleOptions::pn_default();
  o.acquisition_steps = 2;
  SUBCASE("wiener phase noise") {
    const PnParams p{1.0, std::pow(10.0, -1.5), 2.5e-3};
    const auto ch = oracle::pn_channel(5000, 1.0, p, 0.0, 12);
    const GainNoise gn = estimate_gain_noise(SymbolRows::single(ch.x0), SymbolRows::single(ch.y0));
    const WalkFit f = estimate_walk_variances(ch.x0, ch.y0, gn, 1.0, o, 6);
    CHECK(f.walk_var > p.walk_var / 2.0);
    CHECK(f.walk_var < p.walk_var * 2.0);
    const double at_truth = air_particle(ch.x0, ch.y0, p, 1.0, o, 6).value;
    CHECK(f.air >= at_truth - 0.01);
    CHECK(f.evaluations > 5);
    const WalkFit again = estimate_walk_variances(ch.x0, ch.y0, gn, 1.0, o, 6);
    CHECK(again.walk_var == f.walk_var);
  }
  SUBCASE("constant phase") {
    const PnParams p{1.0, std::pow(10.0, -1.5), 0.0};
    const auto ch = oracle::pn_channel(5000, 1.0, p, 0.5, 13);
    const GainNoise gn = estimate_gain_noise(SymbolRows::single(ch.x0), SymbolRows::single(ch.y0));
    const WalkFit f = estimate_walk_variances(ch.x0, ch.y0, gn, 1.0, o, 7);
    CHECK(f.walk_var < 1e-6);
    const double aw = air_awgn(ch.x0, ch.y0, fit_awgn(ch.x0, ch.y0), 1.0).value;
    const double pn = air_particle(ch.x0, ch.y0, PnParams{gn.gain, gn.noise_var, f.walk_var}, 1.0, o, 8).value;
    CHECK(std::abs(pn - aw) < 0.01);
  }
}

TEST_CASE("state tracking") {
  ParticleOptions o = ParticleOptions::pn_default();
  o.acquisition_steps = 2;
  SUBCASE("constant phase gives a flat track") {
    const PnParams p{1.0, 0.03, 1e-6};
    const auto ch = oracle::pn_channel(4000, 1.0, PnParams{1.0, 0.03, 0.0}, 0.9, 14);
    const StateTrack t = export_state_track(ch.x0, ch.y0, p, 1.0, o, 9);
    CHECK(t.theta.size() == 4000);
    CHECK(t.stokes.empty());
    // after acquisition the estimate stays put
    const std::span<const double> tail(t.theta.data() + 500, t.theta.size() - 500);
    const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(tail.size());
    double var = 0.0;
    for (double v : tail) var += (v - mean) * (v - mean);
    var /= static_cast<double>(tail.size());
    CHECK(std::sqrt(var) < 0.02);
    CHECK(std::remainder(mean - 0.9, constants::kTwoPi) == doctest::Approx(0.0).epsilon(0.02).scale(1.0));
    CHECK(t.autocorrelation.front() == doctest::Approx(var).epsilon(0.5));
  }
  SUBCASE("wiener phase is followed") {
    const PnParams p{1.0, std::pow(10.0, -1.5), 2.5e-3};
    const auto ch = oracle::pn_channel(4000, 1.0, p, 0.0, 15);
    const StateTrack t = export_state_track(ch.x0, ch.y0, p, 1.0, o, 10, 100);
    double se = 0.0;
    double proxy = 0.0;
    // the track is unwrapped from the first estimate, align by the mean offset
    double offset = 0.0;
    for (std::size_t k = 200; k < t.theta.size(); ++k) offset += t.theta[k] - ch.theta[k];
    offset /= static_cast<double>(t.theta.size() - 200);
    const double wrap = constants::kTwoPi * std::round(offset / constants::kTwoPi);
    for (std::size_t k = 200; k < t.theta.size(); ++k) {
      const double d = t.theta[k] - wrap - ch.theta[k];
      se += d * d;
      proxy += std::sqrt(p.noise_var) / (p.gain * std::abs(ch.x0[k]) * std::sqrt(2.0));
    }
    const double n = static_cast<double>(t.theta.size() - 200);
    CHECK(std::sqrt(se / n) < 2.0 * proxy / n);
    CHECK(t.autocorrelation.size() == 101);
    const double mean = std::accumulate(t.theta.begin(), t.theta.end(), 0.0) / static_cast<double>(t.theta.size());
    double var = 0.0;
    for (double v : t.theta) var += (v - mean) * (v - mean);
    CHECK(t.autocorrelation[0] == doctest::Approx(var / static_cast<double>(t.theta.size())).epsilon(1e-9));
  }
  SUBCASE("dual polarization track") {
    const PpnParams p{1.0, 0.03, 1e-4, 1e-5};
    const auto ch = oracle::ppn_channel(2000, 1.0, p, 0.2, Jones::identity(), 16);
    ParticleOptions op = ParticleOptions::ppn_default();
    op.acquisition_steps = 2;
    const StateTrack t =
        export_state_track(SymbolRows::dual(ch.x0, ch.x1), SymbolRows::dual(ch.y0, ch.y1), p, 1.0, op, 11, 50);
    CHECK(t.stokes.size() == 2000);
    for (const auto& s : t.stokes)
      for (const auto& v : s) CHECK(std::hypot(v[0], v[1], v[2]) == doctest::Approx(1.0).epsilon(1e-9));
    // S1 image follows the true rotation
    const Mat3 r = stokes_rotation(ch.jones.back());
    const auto& img = t.stokes.back()[0];
    CHECK(img[0] * r[0][0] + img[1] * r[1][0] + img[2] * r[2][0] > 0.95);
  }
}

TEST_CASE("autocorrelation definition") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto a = autocorrelation(v, 3);
  CHECK(a[0] == doctest::Approx(1.25));
  CHECK(a[1] == doctest::Approx((-1.5 * -0.5 + -0.5 * 0.5 + 0.5 * 1.5) / 4.0));
  CHECK(a[3] == doctest::Approx(-1.5 * 1.5 / 4.0));
}

TEST_CASE("detector names") {
  for (Detector d : {Detector::kAwgn, Detector::kPn, Detector::kPnPerPol, Detector::kPpn}) {
    CHECK(parse_detector(detector_name(d)) == d);
  }
  CHECK_FALSE(parse_detector("coherent").has_value());
}
