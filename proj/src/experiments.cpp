#include "wdmair/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "wdmair/csv.hpp"
#include "wdmair/fiber.hpp"
#include "wdmair/rx.hpp"
#include "wdmair/tx.hpp"

namespace wdmair {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::int64_t milli(double v) { return static_cast<std::int64_t>(std::llround(v * 1000.0)); }

}  // namespace

std::uint64_t point_seed(const ExperimentConfig& cfg, const SweepPoint& point) {
  return RunSeed(cfg.seed).stream("point", {milli(point.launch_power_dbm), point.subcarriers, point.span_count,
                                            milli(point.span_length_km)});
}

TxConfig point_tx(const ExperimentConfig& cfg, const SweepPoint& point) {
  TxConfig t = cfg.tx;
  t.subcarriers = point.subcarriers;
  t.symbols_per_subcarrier = static_cast<int>(cfg.symbols + cfg.training_symbols);
  t.launch_power_w = dbm_to_watts(point.launch_power_dbm);
  t.validate();
  return t;
}

LinkSpec point_link(const ExperimentConfig& cfg, const SweepPoint& point) {
  LinkSpec l = cfg.link;
  l.span_count = point.span_count;
  l.span_length_km = point.span_length_km;
  l.validate();
  return l;
}

PointData simulate_point(const ExperimentConfig& cfg, const SweepPoint& point) {
  PointData out;
  out.tx_config = point_tx(cfg, point);
  out.link = point_link(cfg, point);
  out.seed = point_seed(cfg, point);
  out.training_symbols = cfg.training_symbols;
  const TxConfig& t = out.tx_config;
  out.input_var = t.symbol_variance();
  out.sigma_ase2 = accumulated_ase_psd(out.link) / t.symbol_time();
  const RunSeed seed(out.seed);

  const auto k_total = static_cast<std::size_t>(t.symbols_per_subcarrier);
  const auto n = static_cast<std::size_t>(t.subcarriers);
  const auto pols = static_cast<std::size_t>(t.pol_count);
  const int m_half = t.half_count();
  std::vector<SampledField> channels;
  channels.reserve(static_cast<std::size_t>(t.channel_count));
  for (int m = -m_half; m <= m_half; ++m) {
    SymbolGrid grid = draw_cscg_symbols(k_total, n, pols, out.input_var, seed.stream("symbols", {m}),
                                        t.subcarrier_spacing(), t.symbol_time());
    channels.push_back(scm_modulate(grid, t));
    if (m == 0) out.tx = std::move(grid);
  }
  SampledField field = wdm_multiplex(channels, t.channel_spacing_hz);
  channels.clear();
  channels.shrink_to_fit();

  field = ssfm_propagate(std::move(field), out.link, cfg.ssfm, AseModel::for_link(out.link), seed.stream("ase"));
  DemuxSpec spec;
  spec.channel_index = 0;
  spec.channel_spacing_hz = t.channel_spacing_hz;
  spec.bandwidth_hz = t.channel_spacing_hz;
  SampledField coi = demux(field, spec);
  field = SampledField();
  if (cfg.dbp) coi = dbp(std::move(coi), out.link, cfg.ssfm);
  out.rx = matched_filter_bank(coi, n, t.symbol_time());
  return out;
}

namespace {

struct Split {
  SymbolGrid x_train, y_train, x_meas, y_meas;
};

Split split(const PointData& d) {
  const std::size_t k_total = d.tx.symbols();
  const std::size_t kt = d.training_symbols;
  if (kt >= k_total) throw Error("training block leaves no measurement symbols");
  return {d.tx.slice(0, kt), d.rx.slice(0, kt), d.tx.slice(kt, k_total - kt), d.rx.slice(kt, k_total - kt)};
}

std::uint64_t detector_seed(const PointData& d, Detector det, std::size_t subcarrier, std::size_t pol,
                            std::string_view stage) {
  return RunSeed(d.seed)
      .child("detector", {static_cast<std::int64_t>(det), static_cast<std::int64_t>(subcarrier),
                          static_cast<std::int64_t>(pol)})
      .stream(stage);
}

SubcarrierResult combine_pols(const std::vector<SubcarrierResult>& per_pol) {
  SubcarrierResult out = per_pol.front();
  const auto n = static_cast<double>(per_pol.size());
  double value = 0.0, var = 0.0, gain = 0.0, noise = 0.0, walk = 0.0, low = 0.0;
  for (const auto& r : per_pol) {
    value += r.air.value;
    var += r.air.std_error * r.air.std_error;
    gain += r.gain;
    noise += r.noise_var;
    walk += r.walk_var;
    low = std::max(low, r.air.low_ess_fraction);
  }
  out.air.value = value / n;
  out.air.std_error = std::sqrt(var) / n;
  // Both polarizations share the symbol windows, so their batch means add up
  // directly and keep the correlation between them.
  const std::size_t b = out.air.batch_means.size();
  const bool aligned = b >= 2 && std::all_of(per_pol.begin(), per_pol.end(),
                                              [&](const SubcarrierResult& r) { return r.air.batch_means.size() == b; });
  if (aligned) {
    std::vector<double> joint(b, 0.0);
    for (const auto& r : per_pol) {
      for (std::size_t i = 0; i < b; ++i) joint[i] += r.air.batch_means[i] / n;
    }
    out.air.std_error = std_error_of_batches(joint);
    out.air.batch_means = std::move(joint);
  } else {
    out.air.batch_means.clear();
  }
  out.air.low_ess_fraction = low;
  out.gain = gain / n;
  out.noise_var = noise / n;
  out.walk_var = walk / n;
  return out;
}

}  // namespace

SubcarrierResult evaluate_detector(const PointData& data, std::size_t subcarrier, Detector detector,
                                   const ExperimentConfig& cfg) {
  const Split s = split(data);
  const std::size_t pols = data.tx.pol_count();
  auto row = [&](const SymbolGrid& g, std::size_t p) { return g.row(subcarrier, p); };

  if (detector == Detector::kAwgn || detector == Detector::kPn || detector == Detector::kPnPerPol) {
    if (detector == Detector::kPn && pols != 1) throw Error("pn detector needs a single polarization");
    if (detector == Detector::kPnPerPol && pols != 2) throw Error("pn_per_pol detector needs two polarizations");
    std::vector<SubcarrierResult> per_pol;
    for (std::size_t p = 0; p < pols; ++p) {
      SubcarrierResult r;
      if (detector == Detector::kAwgn) {
        const AwgnParams params = fit_awgn(row(s.x_train, p), row(s.y_train, p));
        r.air = air_awgn(row(s.x_meas, p), row(s.y_meas, p), params, data.input_var);
        r.gain = params.gain;
        r.noise_var = params.noise_var;
        r.walk_var = kNaN;
      } else {
        const ParticleOptions opts = cfg.pn_options();
        const GainNoise gn =
            estimate_gain_noise(SymbolRows::single(row(s.x_train, p)), SymbolRows::single(row(s.y_train, p)));
        const WalkFit wf = estimate_walk_variances(row(s.x_train, p), row(s.y_train, p), gn, gn.input_var, opts,
                                                   detector_seed(data, detector, subcarrier, p, "train"),
                                                   cfg.walk_search);
        const PnParams params{gn.gain, gn.noise_var, wf.walk_var};
        r.air = air_particle(row(s.x_meas, p), row(s.y_meas, p), params, data.input_var, opts,
                             detector_seed(data, detector, subcarrier, p, "measure"));
        r.gain = gn.gain;
        r.noise_var = gn.noise_var;
        r.walk_var = wf.walk_var;
      }
      r.pol_walk_var = kNaN;
      per_pol.push_back(r);
    }
    SubcarrierResult out = combine_pols(per_pol);
    out.air.model = detector;
    out.air.subcarrier = static_cast<int>(subcarrier);
    return out;
  }

  if (pols != 2) throw Error("ppn detector needs two polarizations");
  const ParticleOptions opts = cfg.ppn_options();
  const SymbolRows xt = SymbolRows::of(s.x_train, subcarrier);
  const SymbolRows yt = SymbolRows::of(s.y_train, subcarrier);
  const GainNoise gn = estimate_gain_noise(xt, yt);
  const WalkFit wf = estimate_walk_variances(xt, yt, gn, gn.input_var, opts,
                                             detector_seed(data, detector, subcarrier, 0, "train"), cfg.walk_search);
  const PpnParams params{gn.gain, gn.noise_var, wf.walk_var, wf.pol_walk_var};
  SubcarrierResult out;
  out.air = air_particle(SymbolRows::of(s.x_meas, subcarrier), SymbolRows::of(s.y_meas, subcarrier), params,
                         data.input_var, opts, detector_seed(data, detector, subcarrier, 0, "measure"));
  out.air.subcarrier = static_cast<int>(subcarrier);
  out.gain = gn.gain;
  out.noise_var = gn.noise_var;
  out.walk_var = wf.walk_var;
  out.pol_walk_var = wf.pol_walk_var;
  return out;
}

std::vector<ResultRow> run_point(const ExperimentConfig& cfg, const SweepPoint& point) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  std::vector<ResultRow> rows;
  for (Detector d : cfg.detectors) {
    ResultRow r;
    r.point = point;
    r.amplification = cfg.link.amplification;
    r.dispersion_managed = cfg.link.dcf.has_value();
    r.pol_count = cfg.tx.pol_count;
    r.detector = d;
    r.symbols = cfg.symbols;
    r.training_symbols = cfg.training_symbols;
    r.particles = d == Detector::kAwgn ? 0 : (d == Detector::kPpn ? cfg.particles_ppn : cfg.particles_pn);
    r.seed = point_seed(cfg, point);
    rows.push_back(r);
  }

  PointData data;
  try {
    data = simulate_point(cfg, point);
  } catch (const std::exception& e) {
    for (auto& r : rows) {
      r.failed = true;
      r.message = std::string("simulation failed: ") + e.what();
      r.wall_time_s = elapsed();
    }
    return rows;
  }

  for (auto& r : rows) {
    const auto det_start = std::chrono::steady_clock::now();
    r.sigma_ase2 = data.sigma_ase2;
    r.input_var = data.input_var;
    try {
      std::vector<AirEstimate> airs;
      for (std::size_t n = 0; n < data.tx.subcarriers(); ++n) {
        const SubcarrierResult sr = evaluate_detector(data, n, r.detector, cfg);
        airs.push_back(sr.air);
        r.airs.push_back(sr.air.value);
        r.air_std_errors.push_back(sr.air.std_error);
        r.gain.push_back(sr.gain);
        r.noise_var.push_back(sr.noise_var);
        r.walk_var.push_back(sr.walk_var);
        r.pol_walk_var.push_back(sr.pol_walk_var);
        r.low_ess_fraction = std::max(r.low_ess_fraction, sr.air.low_ess_fraction);
      }
      const SeResult se = spectral_efficiency(std::move(airs), data.tx_config.channel_spacing_hz,
                                              data.tx_config.symbol_time());
      r.se = se.se;
      r.se_std_error = se.std_error;
    } catch (const std::exception& e) {
      r.failed = true;
      r.message = e.what();
    }
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - det_start).count();
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ';';
    out += csv::format(v[i]);
  }
  return out;
}

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(';', pos);
    const std::string item = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    out.push_back(std::stod(item));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

std::vector<std::string> result_header() {
  return {"point_index", "amplification", "dispersion_managed", "span_count", "span_length_km", "length_km",
          "pol_count", "subcarriers", "launch_power_dbm", "detector", "status", "se", "se_std_error", "airs",
          "air_std_errors", "gain", "noise_var", "walk_var", "pol_walk_var", "sigma_ase2", "input_var", "symbols",
          "training_symbols", "particles", "low_ess_fraction", "wall_time_s", "seed", "message"};
}

std::vector<std::string> result_fields(const ResultRow& r) {
  return {std::to_string(r.point.index),
          r.amplification == Amplification::kIda ? "ida" : "la",
          r.dispersion_managed ? "1" : "0",
          std::to_string(r.point.span_count),
          csv::format(r.point.span_length_km),
          csv::format(r.length_km()),
          std::to_string(r.pol_count),
          std::to_string(r.point.subcarriers),
          csv::format(r.point.launch_power_dbm),
          std::string(detector_name(r.detector)),
          r.failed ? "FAILED" : "ok",
          csv::format(r.failed ? kNaN : r.se),
          csv::format(r.failed ? kNaN : r.se_std_error),
          join(r.airs),
          join(r.air_std_errors),
          join(r.gain),
          join(r.noise_var),
          join(r.walk_var),
          join(r.pol_walk_var),
          csv::format(r.sigma_ase2),
          csv::format(r.input_var),
          std::to_string(r.symbols),
          std::to_string(r.training_symbols),
          std::to_string(r.particles),
          csv::format(r.low_ess_fraction),
          csv::format(r.wall_time_s),
          std::to_string(r.seed),
          r.message};
}

ResultRow parse_result(const std::vector<std::string>& header, const std::vector<std::string>& fields) {
  csv::Table t({header, fields});
  ResultRow r;
  r.point.index = static_cast<std::size_t>(t.number(0, "point_index"));
  r.amplification = t.at(0, "amplification") == "ida" ? Amplification::kIda : Amplification::kLa;
  r.dispersion_managed = t.at(0, "dispersion_managed") == "1";
  r.point.span_count = static_cast<int>(t.number(0, "span_count"));
  r.point.span_length_km = t.number(0, "span_length_km");
  r.pol_count = static_cast<int>(t.number(0, "pol_count"));
  r.point.subcarriers = static_cast<int>(t.number(0, "subcarriers"));
  r.point.launch_power_dbm = t.number(0, "launch_power_dbm");
  const auto det = parse_detector(t.at(0, "detector"));
  if (!det) throw Error("results: unknown detector '" + t.at(0, "detector") + "'");
  r.detector = *det;
  r.failed = t.at(0, "status") != "ok";
  r.se = t.number(0, "se");
  r.se_std_error = t.number(0, "se_std_error");
  r.airs = split_numbers(t.at(0, "airs"));
  r.air_std_errors = split_numbers(t.at(0, "air_std_errors"));
  r.gain = split_numbers(t.at(0, "gain"));
  r.noise_var = split_numbers(t.at(0, "noise_var"));
  r.walk_var = split_numbers(t.at(0, "walk_var"));
  r.pol_walk_var = split_numbers(t.at(0, "pol_walk_var"));
  r.sigma_ase2 = t.number(0, "sigma_ase2");
  r.input_var = t.number(0, "input_var");
  r.symbols = static_cast<std::size_t>(t.number(0, "symbols"));
  r.training_symbols = static_cast<std::size_t>(t.number(0, "training_symbols"));
  r.particles = static_cast<int>(t.number(0, "particles"));
  r.low_ess_fraction = t.number(0, "low_ess_fraction");
  r.wall_time_s = t.number(0, "wall_time_s");
  r.seed = std::stoull(t.at(0, "seed"));
  r.message = t.at(0, "message");
  return r;
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open results file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto rows = csv::parse(ss.str());
  if (rows.empty()) throw Error("results file " + path.string() + " is empty");
  const auto header = rows.front();
  std::vector<ResultRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) out.push_back(parse_result(header, rows[i]));
  return out;
}

void write_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    csv::write_row(out, result_header());
    for (const auto& r : rows) csv::write_row(out, result_fields(r));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------

SweepSummary summarize(const std::vector<ResultRow>& rows) {
  SweepSummary s;
  s.rows = rows.size();
  for (const auto& r : rows) {
    if (r.failed) {
      ++s.failed_rows;
      continue;
    }
    auto it = std::find_if(s.best.begin(), s.best.end(), [&](const auto& b) { return b.detector == r.detector; });
    if (it == s.best.end()) {
      s.best.push_back({r.detector, -std::numeric_limits<double>::infinity()});
      it = s.best.end() - 1;
    }
    if (r.se > it->se) {
      *it = {r.detector, r.se, r.se_std_error, r.point.launch_power_dbm, r.point.subcarriers, r.point.span_count,
             r.point.span_length_km};
    }
  }
  std::sort(s.best.begin(), s.best.end(), [](const auto& a, const auto& b) { return a.detector < b.detector; });
  return s;
}

std::string summary_json(const SweepSummary& s) {
  nlohmann::json j;
  j["rows"] = s.rows;
  j["failed_rows"] = s.failed_rows;
  j["best"] = nlohmann::json::array();
  for (const auto& b : s.best) {
    j["best"].push_back({{"detector", detector_name(b.detector)},
                         {"se", b.se},
                         {"se_std_error", b.se_std_error},
                         {"launch_power_dbm", b.launch_power_dbm},
                         {"subcarriers", b.subcarriers},
                         {"span_count", b.span_count},
                         {"span_length_km", b.span_length_km}});
  }
  return j.dump(2) + "\n";
}

int default_workers() {
  if (const char* env = std::getenv("WDMAIR_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

SweepOutcome run_sweep(const ExperimentConfig& cfg, int workers, const std::filesystem::path& csv_path,
                       std::ostream* log) {
  cfg.validate();
  const auto points = sweep_points(cfg);
  std::vector<std::vector<ResultRow>> results(points.size());
  std::mutex io;
  std::ofstream partial;
  if (!csv_path.empty()) {
    if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
    partial.open(csv_path, std::ios::binary | std::ios::trunc);
    if (!partial) throw Error("cannot write " + csv_path.string());
    csv::write_row(partial, result_header());
    partial.flush();
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      auto rows = run_point(cfg, points[i]);
      std::lock_guard<std::mutex> lock(io);
      if (partial.is_open()) {
        for (const auto& r : rows) csv::write_row(partial, result_fields(r));
        partial.flush();
      }
      const std::size_t finished = ++done;
      if (log != nullptr) {
        *log << "[" << finished << "/" << points.size() << "] P=" << points[i].launch_power_dbm
             << " dBm N=" << points[i].subcarriers << " Ns=" << points[i].span_count
             << " Ls=" << points[i].span_length_km << " km:";
        for (const auto& r : rows) {
          *log << ' ' << detector_name(r.detector) << '=';
          if (r.failed) {
            *log << "FAILED(" << r.message << ')';
          } else {
            *log << r.se;
          }
        }
        *log << std::endl;
      }
      results[i] = std::move(rows);
    }
  };
  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(points.size())));
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  SweepOutcome out;
  for (auto& rows : results) {
    for (auto& r : rows) out.rows.push_back(std::move(r));
  }
  out.summary = summarize(out.rows);
  if (!csv_path.empty()) {
    partial.close();
    write_results(csv_path, out.rows);
    std::ofstream js(csv_path.string() + ".summary.json", std::ios::binary | std::ios::trunc);
    js << summary_json(out.summary);
  }
  return out;
}

}  // namespace wdmair
