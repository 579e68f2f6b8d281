#include <cmath>

#include "doctest.h"
#include "wdmair/rng.hpp"
#include "wdmair/rx.hpp"
#include "wdmair/tx.hpp"

using namespace wdmair;

namespace {

TxConfig tx_for(int channels, int n, int k, int pols = 2) {
  TxConfig t;
  t.channel_count = channels;
  t.subcarriers = n;
  t.symbols_per_subcarrier = k;
  t.pol_count = pols;
  return t;
}

SymbolGrid symbols(const TxConfig& t, std::uint64_t seed) {
  return draw_cscg_symbols(static_cast<std::size_t>(t.symbols_per_subcarrier), static_cast<std::size_t>(t.subcarriers),
                           static_cast<std::size_t>(t.pol_count), t.symbol_variance(), seed, t.subcarrier_spacing(),
                           t.symbol_time());
}

double grid_distance(const SymbolGrid& a, const SymbolGrid& b) {
  double e = 0.0;
  double r = 0.0;
  for (std::size_t n = 0; n < a.subcarriers(); ++n)
    for (std::size_t p = 0; p < a.pol_count(); ++p)
      for (std::size_t k = 0; k < a.symbols(); ++k) {
        e += std::norm(a(n, k, p) - b(n, k, p));
        r += std::norm(b(n, k, p));
      }
  return std::sqrt(e / r);
}

}  // namespace

TEST_CASE("demux of a single channel is the identity") {
  const TxConfig t = tx_for(1, 2, 64);
  const SampledField f = scm_modulate(symbols(t, 1), t);
  const SampledField d = demux(f, DemuxSpec{});
  CHECK(d.size() == f.size());
  CHECK(relative_l2_distance(d, f) < 1e-9);
}

TEST_CASE("demux rejects the neighbours") {
  const TxConfig t = tx_for(3, 1, 64);
  const SampledField other = scm_modulate(symbols(t, 2), t);
  const SampledField zero = SampledField::zeros(2, other.size(), other.sample_rate(), other.content_bandwidth());
  const SampledField mux = wdm_multiplex({other, zero, other}, t.channel_spacing_hz);
  const SampledField d = demux(mux, DemuxSpec{});
  CHECK(d.mean_power() < 1e-30 * mux.mean_power());
}

TEST_CASE("demux validation") {
  DemuxSpec s;
  s.bandwidth_hz = 60e9;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("linear dbp is the inverse dispersion filter") {
  const TxConfig t = tx_for(1, 1, 128);
  const SampledField f = scm_modulate(symbols(t, 3), t);
  LinkSpec l;
  l.span_count = 2;
  l.fiber.gamma_per_w_km = 0.0;
  const SampledField fwd = ssfm_propagate(f, l, SsfmControl{}, AseModel::off(), 0);
  CHECK(relative_l2_distance(dbp(fwd, l, SsfmControl{}), f) < 1e-10);
  CHECK(relative_l2_distance(dbp(fwd, l, SsfmControl{}), apply_dispersion(fwd, -l.fiber.beta2_ps2_per_km, 200.0)) <
        1e-12);
  const SampledField zero = SampledField::zeros(2, f.size(), f.sample_rate(), f.content_bandwidth());
  CHECK(dbp(zero, l, SsfmControl{}).mean_power() == 0.0);
}

TEST_CASE("dbp error shrinks as the control tightens") {
  TxConfig t = tx_for(1, 1, 256);
  t.launch_power_w = 4e-3;
  const SampledField f = scm_modulate(symbols(t, 4), t);
  LinkSpec l;
  l.span_count = 2;
  SsfmControl truth_ctrl;
  truth_ctrl.max_step_km = 0.05;
  truth_ctrl.max_nl_phase_rad = 1e-4;
  const SampledField fwd = ssfm_propagate(f, l, truth_ctrl, AseModel::off(), 0);
  double prev = 1e9;
  for (double step : {20.0, 5.0, 1.0}) {
    SsfmControl c;
    c.max_step_km = step;
    c.max_nl_phase_rad = 1.0;
    const double e = relative_l2_distance(dbp(fwd, l, c), f);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("matched filters on white noise") {
  // Noise with PSD N0 over the sample band gives variance N0 / T per output.
  const TxConfig t = tx_for(1, 4, 25000, 1);
  const double n0 = 1e-15;
  const SampledField zero = SampledField::zeros(1, t.sample_count(), t.sample_rate(), t.channel_spacing_hz);
  const SampledField noise = add_ase(zero, n0, 12);
  const SymbolGrid r = matched_filter_bank(noise, 4, t.symbol_time());
  for (std::size_t n = 0; n < 4; ++n) {
    double v = 0.0;
    for (auto y : r.row(n, 0)) v += std::norm(y);
    v /= static_cast<double>(r.symbols());
    CHECK(v == doctest::Approx(n0 / t.symbol_time()).epsilon(0.02));
  }
}

// Only FFT round-off of the unit tone remains.
TEST_CASE("out-of-band tone does not reach the matched filters") {
  const TxConfig t = tx_for(3, 2, 32, 1);
  SampledField f = SampledField::zeros(1, t.sample_count(), t.sample_rate(), 3 * t.channel_spacing_hz);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.samples(0)[i] = std::polar(1.0, constants::kTwoPi * 37.5e9 * static_cast<double>(i) / f.sample_rate());
  }
  const SymbolGrid r = matched_filter_bank(demux(f, DemuxSpec{}), 2, t.symbol_time());
  for (std::size_t n = 0; n < 2; ++n)
    for (auto y : r.row(n, 0)) CHECK(std::abs(y) < 1e-13);
}

TEST_CASE("linear chain is the identity up to known noise") {
  const TxConfig t = tx_for(3, 2, 4000);
  std::vector<SampledField> ch;
  std::vector<SymbolGrid> grids;
  for (int m = 0; m < 3; ++m) {
    grids.push_back(symbols(t, 20 + static_cast<std::uint64_t>(m)));
    ch.push_back(scm_modulate(grids.back(), t));
  }
  LinkSpec l;
  l.fiber.gamma_per_w_km = 0.0;
  SsfmControl c;
  c.max_step_km = 25.0;
  SampledField rx = ssfm_propagate(wdm_multiplex(ch, t.channel_spacing_hz), l, c, AseModel::for_link(l), 5);
  DemuxSpec d;
  d.bandwidth_hz = t.channel_spacing_hz;
  rx = dbp(demux(rx, d), l, c);
  const SymbolGrid y = matched_filter_bank(rx, 2, t.symbol_time());
  const double expected = accumulated_ase_psd(l) / t.symbol_time();
  double var = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t p = 0; p < 2; ++p)
      for (std::size_t k = 0; k < y.symbols(); ++k) {
        var += std::norm(y(n, k, p) - grids[1](n, k, p));
        ++count;
      }
  CHECK(var / static_cast<double>(count) == doctest::Approx(expected).epsilon(0.03));
  CHECK(grid_distance(y, grids[1]) < 0.1);
}
