#include "wdmair/figures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include <json.hpp>

#include "wdmair/csv.hpp"

namespace wdmair {

namespace {

std::string num(double v) { return csv::format(v); }

std::string n_label(int n) { return "N=" + std::to_string(n); }

}  // namespace

void FigureBundle::validate() const {
  if (manifest.series.empty()) throw Error("figure " + manifest.figure + ": bundle has no series");
  for (const auto& s : manifest.series) {
    auto t = std::find_if(tables.begin(), tables.end(), [&](const auto& tb) { return tb.file == s.table; });
    if (t == tables.end()) throw Error("figure " + manifest.figure + ": series '" + s.name + "' has no table");
    for (const auto& col : {s.x_column, s.y_column, s.y_err_column}) {
      if (col.empty()) continue;
      if (std::find(t->header.begin(), t->header.end(), col) == t->header.end()) {
        throw Error("figure " + manifest.figure + ": table " + s.table + " lacks column '" + col + "'");
      }
    }
    if (t->rows.empty()) throw Error("figure " + manifest.figure + ": series '" + s.name + "' is empty");
  }
}

void FigureBundle::write(const std::filesystem::path& dir) const {
  validate();
  std::filesystem::create_directories(dir);
  nlohmann::json m;
  m["figure"] = manifest.figure;
  m["title"] = manifest.title;
  m["x"] = {{"label", manifest.x_label}, {"unit", manifest.x_unit}};
  m["y"] = {{"label", manifest.y_label}, {"unit", manifest.y_unit}};
  m["series"] = nlohmann::json::array();
  for (const auto& s : manifest.series) {
    nlohmann::json js = {{"name", s.name}, {"table", s.table}, {"x", s.x_column}, {"y", s.y_column}};
    if (!s.y_err_column.empty()) js["y_err"] = s.y_err_column;
    m["series"].push_back(js);
  }
  m["tables"] = nlohmann::json::array();
  for (const auto& t : tables) m["tables"].push_back({{"file", t.file}, {"columns", t.header}});
  m["notes"] = manifest.notes;
  {
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    out << m.dump(2) << "\n";
  }
  for (const auto& t : tables) {
    std::ofstream out(dir / t.file, std::ios::binary | std::ios::trunc);
    csv::write_row(out, t.header);
    for (const auto& r : t.rows) csv::write_row(out, r);
    if (!out) throw Error("cannot write " + (dir / t.file).string());
  }
}

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"4a", "4b", "4c", "4d", "5a", "5b", "6a", "6b"};
  return ids;
}

std::vector<std::size_t> central_subcarriers(int n) {
  if (n < 1) throw Error("central_subcarriers: N must be >= 1");
  const auto h = static_cast<std::size_t>(n / 2);
  if (n % 2 == 1) return {h};
  return {h - 1, h};
}

FigureBundle figure_se_vs_power(const std::vector<ResultRow>& rows) {
  FigureBundle b;
  b.manifest = {"4a", "SE vs launch power", "launch power", "dBm", "SE", "bit/s/Hz/pol", {}, {}};
  std::map<std::pair<Detector, int>, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    if (!r.failed) groups[{r.detector, r.point.subcarriers}].push_back(&r);
  }
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(),
              [](const auto* a, const auto* c) { return a->point.launch_power_dbm < c->point.launch_power_dbm; });
    FigureTable t;
    t.file = "se_" + std::string(detector_name(key.first)) + "_N" + std::to_string(key.second) + ".csv";
    t.header = {"launch_power_dbm", "se", "se_std_error"};
    for (const auto* r : members) t.rows.push_back({num(r->point.launch_power_dbm), num(r->se), num(r->se_std_error)});
    b.manifest.series.push_back({std::string(detector_name(key.first)) + " " + n_label(key.second), t.file,
                                 "launch_power_dbm", "se", "se_std_error"});
    b.tables.push_back(std::move(t));
  }
  return b;
}

double optimal_power(const std::vector<ResultRow>& rows, Detector detector) {
  double best = -std::numeric_limits<double>::infinity();
  double power = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    if (!r.failed && r.detector == detector && r.se > best) {
      best = r.se;
      power = r.point.launch_power_dbm;
    }
  }
  if (std::isnan(power)) throw Error("no successful rows for detector " + std::string(detector_name(detector)));
  return power;
}

FigureBundle figure_params_vs_n(const std::vector<ResultRow>& rows, double power_dbm) {
  FigureBundle b;
  b.manifest = {"4d", "PPN parameters vs N", "subcarriers N", "", "parameter", "", {}, {}};
  b.manifest.notes = {"launch_power_dbm=" + num(power_dbm),
                      "sigma_n2_normalized = (sigma_n^2 - sigma_ase^2) / (a^2 sigma_x^2)",
                      "sigma_p2_tripled = 3 sigma_p^2",
                      "values are means over the central subcarriers"};
  FigureTable t;
  t.file = "params_vs_n.csv";
  t.header = {"subcarriers", "sigma_n2_normalized", "sigma_theta2", "sigma_p2_tripled"};
  std::vector<const ResultRow*> sel;
  for (const auto& r : rows) {
    if (!r.failed && r.detector == Detector::kPpn && std::abs(r.point.launch_power_dbm - power_dbm) < 1e-9) {
      sel.push_back(&r);
    }
  }
  std::sort(sel.begin(), sel.end(), [](const auto* a, const auto* c) { return a->point.subcarriers < c->point.subcarriers; });
  for (const auto* r : sel) {
    double sn = 0.0, st = 0.0, sp = 0.0;
    const auto idx = central_subcarriers(r->point.subcarriers);
    for (auto i : idx) {
      const double a2 = r->gain.at(i) * r->gain.at(i);
      sn += (r->noise_var.at(i) - r->sigma_ase2) / (a2 * r->input_var);
      st += r->walk_var.at(i);
      sp += 3.0 * r->pol_walk_var.at(i);
    }
    const auto c = static_cast<double>(idx.size());
    t.rows.push_back({std::to_string(r->point.subcarriers), num(sn / c), num(st / c), num(sp / c)});
  }
  b.manifest.series = {{"sigma_n^2 normalized", t.file, "subcarriers", "sigma_n2_normalized", ""},
                       {"sigma_theta^2", t.file, "subcarriers", "sigma_theta2", ""},
                       {"3 sigma_p^2", t.file, "subcarriers", "sigma_p2_tripled", ""}};
  b.tables.push_back(std::move(t));
  return b;
}

FigureBundle figure_max_se(const std::vector<ResultRow>& rows, const std::string& id, DistanceAxis axis) {
  FigureBundle b;
  const bool length = axis == DistanceAxis::kLength;
  b.manifest = {id,
                length ? "maximum SE vs link length" : "maximum SE vs amplifier spacing",
                length ? "link length" : "amplifier spacing",
                "km",
                "maximum SE",
                "bit/s/Hz/pol",
                {},
                {"maximum over launch power and N; argmax columns give the optimizer"}};
  std::map<std::pair<Detector, double>, const ResultRow*> best;
  for (const auto& r : rows) {
    if (r.failed) continue;
    const double x = length ? r.length_km() : r.point.span_length_km;
    auto& slot = best[{r.detector, x}];
    if (slot == nullptr || r.se > slot->se) slot = &r;
  }
  std::map<Detector, FigureTable> tables;
  for (const auto& [key, r] : best) {
    FigureTable& t = tables[key.first];
    t.file = "max_se_" + std::string(detector_name(key.first)) + ".csv";
    t.header = {"x_km", "max_se", "se_std_error", "argmax_power_dbm", "argmax_subcarriers"};
    t.rows.push_back({num(key.second), num(r->se), num(r->se_std_error), num(r->point.launch_power_dbm),
                      std::to_string(r->point.subcarriers)});
  }
  for (auto& [det, t] : tables) {
    b.manifest.series.push_back({std::string(detector_name(det)), t.file, "x_km", "max_se", "se_std_error"});
    b.tables.push_back(std::move(t));
  }
  return b;
}

FigureBundle figure_state_track(const ExperimentConfig& cfg, const std::string& id) {
  if (id != "4b" && id != "4c") throw Error("figure_state_track: id must be 4b or 4c");
  const bool dual = cfg.tx.pol_count == 2;
  if (id == "4c" && !dual) throw Error("figure 4c needs a 2-pol configuration");
  SweepPoint point;
  point.launch_power_dbm = cfg.track_power_dbm;
  point.subcarriers = cfg.track_subcarriers;
  point.span_length_km = cfg.sweep.span_length_km.front();
  point.span_count = cfg.sweep.total_length_km
                         ? static_cast<int>(std::llround(*cfg.sweep.total_length_km / point.span_length_km))
                         : cfg.sweep.span_count.front();
  const PointData data = simulate_point(cfg, point);
  const std::size_t sc = central_subcarriers(point.subcarriers).back();
  const std::size_t kt = data.training_symbols;
  const std::size_t km = data.tx.symbols() - kt;
  const SymbolGrid xt = data.tx.slice(0, kt), yt = data.rx.slice(0, kt);
  const SymbolGrid xm = data.tx.slice(kt, km), ym = data.rx.slice(kt, km);
  const RunSeed seed = RunSeed(data.seed).child("track");

  StateTrack track;
  if (dual) {
    const GainNoise gn = estimate_gain_noise(SymbolRows::of(xt, sc), SymbolRows::of(yt, sc));
    const WalkFit wf = estimate_walk_variances(SymbolRows::of(xt, sc), SymbolRows::of(yt, sc), gn, gn.input_var,
                                               cfg.ppn_options(), seed.stream("train"), cfg.walk_search);
    track = export_state_track(SymbolRows::of(xm, sc), SymbolRows::of(ym, sc),
                               PpnParams{gn.gain, gn.noise_var, wf.walk_var, wf.pol_walk_var}, data.input_var,
                               cfg.ppn_options(), seed.stream("measure"));
  } else {
    const GainNoise gn = estimate_gain_noise(SymbolRows::single(xt.row(sc, 0)), SymbolRows::single(yt.row(sc, 0)));
    const WalkFit wf = estimate_walk_variances(xt.row(sc, 0), yt.row(sc, 0), gn, gn.input_var, cfg.pn_options(),
                                               seed.stream("train"), cfg.walk_search);
    track = export_state_track(xm.row(sc, 0), ym.row(sc, 0), PnParams{gn.gain, gn.noise_var, wf.walk_var},
                               data.input_var, cfg.pn_options(), seed.stream("measure"));
  }

  FigureBundle b;
  const std::vector<std::string> notes{"launch_power_dbm=" + num(point.launch_power_dbm),
                                       "subcarriers=" + std::to_string(point.subcarriers),
                                       "subcarrier_index=" + std::to_string(sc),
                                       std::string("detector=") + (dual ? "ppn" : "pn"),
                                       "air=" + num(track.air.value)};
  if (id == "4b") {
    b.manifest = {"4b", "estimated phase", "symbol index", "", "phase", "rad", {}, notes};
    FigureTable trace{"phase_trace.csv", {"k", "theta_rad"}, {}};
    for (std::size_t k = 0; k < track.theta.size(); ++k) trace.rows.push_back({std::to_string(k), num(track.theta[k])});
    FigureTable ac{"autocorrelation.csv", {"lag", "autocorrelation_rad2", "normalized"}, {}};
    const double r0 = track.autocorrelation.empty() ? 0.0 : track.autocorrelation[0];
    for (std::size_t l = 0; l < track.autocorrelation.size(); ++l) {
      const double r = track.autocorrelation[l];
      ac.rows.push_back({std::to_string(l), num(r), num(r0 > 0.0 ? r / r0 : 0.0)});
    }
    b.manifest.series = {{"theta", trace.file, "k", "theta_rad", ""},
                         {"autocorrelation", ac.file, "lag", "normalized", ""}};
    b.tables = {std::move(trace), std::move(ac)};
  } else {
    b.manifest = {"4c", "Stokes-space rotations of S1, S2, S3", "S1", "", "S2", "", {}, notes};
    b.manifest.notes.push_back("columns s<i>_<c>: component c of the rotated basis vector S_i; unit sphere");
    FigureTable t{"stokes.csv", {"k"}, {}};
    for (int i = 1; i <= 3; ++i) {
      for (const char* c : {"x", "y", "z"}) t.header.push_back("s" + std::to_string(i) + "_" + c);
    }
    for (std::size_t k = 0; k < track.stokes.size(); ++k) {
      std::vector<std::string> row{std::to_string(k)};
      for (const auto& v : track.stokes[k]) {
        for (double e : v) row.push_back(num(e));
      }
      t.rows.push_back(std::move(row));
    }
    b.manifest.series = {{"S1", t.file, "s1_x", "s1_y", ""}, {"S2", t.file, "s2_x", "s2_y", ""},
                         {"S3", t.file, "s3_x", "s3_y", ""}};
    b.tables = {std::move(t)};
  }
  return b;
}

FigureBundle export_figure_data(const ExperimentConfig& cfg, const std::string& id,
                                const std::filesystem::path& out_dir, const std::vector<ResultRow>& results,
                                int workers, std::ostream* log) {
  if (std::find(figure_ids().begin(), figure_ids().end(), id) == figure_ids().end()) {
    throw Error("unknown figure id '" + id + "'");
  }
  cfg.validate();
  FigureBundle b;
  if (id == "4b" || id == "4c") {
    b = figure_state_track(cfg, id);
  } else {
    std::vector<ResultRow> rows = results;
    if (rows.empty()) rows = run_sweep(cfg, workers, out_dir / (id + "_results.csv"), log).rows;
    if (id == "4a") {
      b = figure_se_vs_power(rows);
    } else if (id == "4d") {
      double p = cfg.param_power_dbm ? *cfg.param_power_dbm : optimal_power(rows, Detector::kPpn);
      b = figure_params_vs_n(rows, p);
    } else if (id == "5b") {
      b = figure_max_se(rows, id, DistanceAxis::kSpanLength);
    } else {
      b = figure_max_se(rows, id, DistanceAxis::kLength);
    }
  }
  b.write(out_dir / id);
  return b;
}

}  // namespace wdmair
