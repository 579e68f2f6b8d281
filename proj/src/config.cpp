#include "wdmair/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace wdmair {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (allowed.count(it.key()) == 0) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where + ": " + e.what());
  }
}

std::string amplification_name(Amplification a) { return a == Amplification::kIda ? "ida" : "la"; }

}  // namespace

SsfmControl desk_ssfm_control() {
  SsfmControl c;
  c.max_step_km = 0.5;
  c.max_nl_phase_rad = 0.01;
  c.convergence_tolerance = 1e-3;
  return c;
}

ParticleOptions ExperimentConfig::pn_options() const {
  ParticleOptions o = ParticleOptions::pn_default();
  o.particles = particles_pn;
  o.acquisition_steps = acquisition_steps;
  o.acquisition_var = acquisition_var;
  return o;
}

ParticleOptions ExperimentConfig::ppn_options() const {
  ParticleOptions o = ParticleOptions::ppn_default();
  o.particles = particles_ppn;
  o.acquisition_steps = acquisition_steps;
  o.acquisition_var = acquisition_var;
  o.acquisition_particles = acquisition_particles_ppn;
  o.acquisition_window = acquisition_window;
  return o;
}

void ExperimentConfig::validate() const {
  require(!detectors.empty(), "at least one detector is required");
  require(!sweep.launch_power_dbm.empty(), "sweep axis launch_power_dbm is empty");
  require(!sweep.subcarriers.empty(), "sweep axis subcarriers is empty");
  require(!sweep.span_length_km.empty(), "sweep axis span_length_km is empty");
  require(sweep.total_length_km.has_value() || !sweep.span_count.empty(), "sweep axis span_count is empty");
  for (double p : sweep.launch_power_dbm) require(std::isfinite(p), "launch powers must be finite");
  for (int n : sweep.subcarriers) require(n >= 1, "subcarrier counts must be >= 1");
  for (int n : sweep.span_count) require(n >= 1, "span counts must be >= 1");
  for (double l : sweep.span_length_km) require(l > 0.0, "span lengths must be positive");
  if (sweep.total_length_km) {
    require(*sweep.total_length_km > 0.0, "total_length_km must be positive");
    for (double l : sweep.span_length_km) {
      const double count = *sweep.total_length_km / l;
      require(std::abs(count - std::round(count)) < 1e-9 && std::round(count) >= 1.0,
              "total_length_km must be an integer multiple of every span length");
    }
  }
  for (Detector d : detectors) {
    if (d == Detector::kPpn || d == Detector::kPnPerPol) {
      require(tx.pol_count == 2, std::string(detector_name(d)) + " detector requires pol_count = 2");
    }
    if (d == Detector::kPn) require(tx.pol_count == 1, "pn detector requires pol_count = 1 (use pn_per_pol)");
  }
  require(symbols >= 1 && training_symbols >= 1, "symbols and training_symbols must be >= 1");
  require(particles_pn >= 2 && particles_ppn >= 2, "particle counts must be >= 2");
  require(acquisition_steps >= 0 && acquisition_var >= 0.0, "acquisition schedule must be non-negative");
  require(acquisition_particles_ppn >= 0 && acquisition_window >= 0,
          "acquisition_particles_ppn and acquisition_window must be non-negative");
  require(walk_search.log10_min < walk_search.log10_max && walk_search.tolerance_decades > 0.0 &&
              walk_search.rounds >= 1,
          "invalid walk-variance search range");
  require(track_subcarriers >= 1, "track_subcarriers must be >= 1");
  try {
    ssfm.validate();
    TxConfig t = tx;
    t.subcarriers = sweep.subcarriers.front();
    t.symbols_per_subcarrier = static_cast<int>(symbols + training_symbols);
    t.validate();
    LinkSpec l = link;
    l.span_length_km = sweep.span_length_km.front();
    l.span_count = sweep.total_length_km
                       ? static_cast<int>(std::llround(*sweep.total_length_km / l.span_length_km))
                       : sweep.span_count.front();
    l.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

void ExperimentConfig::apply_desk_scale() {
  desk_scale = true;
  tx.channel_count = 3;
  symbols = 20000;
  training_symbols = 5000;
  particles_pn = 256;
  particles_ppn = 1024;
  ssfm = desk_ssfm_control();
}

ExperimentConfig desk_preset() {
  ExperimentConfig c;
  c.name = "desk_ida_1000km";
  c.link.amplification = Amplification::kIda;
  c.link.span_length_km = 100.0;
  c.link.span_count = 10;
  c.link.eta = 1.0;
  c.tx.pol_count = 2;
  c.detectors = {Detector::kAwgn, Detector::kPnPerPol, Detector::kPpn};
  c.sweep.launch_power_dbm = {-12.0, -10.0, -8.0, -6.0, -4.0, -2.0};
  c.sweep.subcarriers = {1, 2, 4, 8};
  c.sweep.span_count = {10};
  c.sweep.span_length_km = {100.0};
  c.output_path = "desk_ida_1000km.csv";
  c.apply_desk_scale();
  return c;
}

// ---------------------------------------------------------------------------

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require(root.is_object(), "config root must be an object");
  reject_unknown(root,
                 {"schema_version", "name", "seed", "link", "tx", "detectors", "sweep", "symbols", "training_symbols",
                  "particles_pn", "particles_ppn", "acquisition_steps", "acquisition_var",
                  "acquisition_particles_ppn", "acquisition_window", "walk_search", "ssfm", "dbp",
                  "output_path", "desk_scale", "track_power_dbm", "track_subcarriers", "param_power_dbm"},
                 "config");
  require(root.contains("schema_version"), "missing schema_version");
  require(root.at("schema_version") == kConfigSchemaVersion,
          "unsupported schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");

  ExperimentConfig c;
  // The preset goes first so that explicit keys override it.
  bool desk = false;
  read(root, "desk_scale", desk, "config");
  if (desk) c.apply_desk_scale();
  read(root, "name", c.name, "config");
  read(root, "seed", c.seed, "config");
  read(root, "symbols", c.symbols, "config");
  read(root, "training_symbols", c.training_symbols, "config");
  read(root, "particles_pn", c.particles_pn, "config");
  read(root, "particles_ppn", c.particles_ppn, "config");
  read(root, "acquisition_steps", c.acquisition_steps, "config");
  read(root, "acquisition_var", c.acquisition_var, "config");
  read(root, "acquisition_particles_ppn", c.acquisition_particles_ppn, "config");
  read(root, "acquisition_window", c.acquisition_window, "config");
  read(root, "dbp", c.dbp, "config");
  read(root, "output_path", c.output_path, "config");
  read(root, "track_power_dbm", c.track_power_dbm, "config");
  read(root, "track_subcarriers", c.track_subcarriers, "config");
  if (root.contains("param_power_dbm") && !root.at("param_power_dbm").is_null()) {
    double p = 0.0;
    read(root, "param_power_dbm", p, "config");
    c.param_power_dbm = p;
  }

  if (root.contains("link")) {
    const json& l = root.at("link");
    reject_unknown(l,
                   {"amplification", "span_length_km", "span_count", "alpha_db_per_km", "beta2_ps2_per_km",
                    "gamma_per_w_km", "eta", "dcf", "center_frequency_hz"},
                   "link");
    std::string amp = "ida";
    read(l, "amplification", amp, "link");
    require(amp == "ida" || amp == "la", "link.amplification must be 'ida' or 'la'");
    c.link.amplification = amp == "ida" ? Amplification::kIda : Amplification::kLa;
    read(l, "span_length_km", c.link.span_length_km, "link");
    read(l, "span_count", c.link.span_count, "link");
    read(l, "alpha_db_per_km", c.link.fiber.alpha_db_per_km, "link");
    read(l, "beta2_ps2_per_km", c.link.fiber.beta2_ps2_per_km, "link");
    read(l, "gamma_per_w_km", c.link.fiber.gamma_per_w_km, "link");
    read(l, "eta", c.link.eta, "link");
    read(l, "center_frequency_hz", c.link.center_frequency_hz, "link");
    if (l.contains("dcf") && !l.at("dcf").is_null()) {
      const json& d = l.at("dcf");
      reject_unknown(d,
                     {"length_km", "alpha_db_per_km", "beta2_ps2_per_km", "gamma_per_w_km", "launch_offset_db",
                      "amp_eta"},
                     "link.dcf");
      DcfParams dcf;
      read(d, "length_km", dcf.length_km, "link.dcf");
      read(d, "alpha_db_per_km", dcf.fiber.alpha_db_per_km, "link.dcf");
      read(d, "beta2_ps2_per_km", dcf.fiber.beta2_ps2_per_km, "link.dcf");
      read(d, "gamma_per_w_km", dcf.fiber.gamma_per_w_km, "link.dcf");
      read(d, "launch_offset_db", dcf.launch_offset_db, "link.dcf");
      read(d, "amp_eta", dcf.amp_eta, "link.dcf");
      c.link.dcf = dcf;
    }
  }
  if (root.contains("tx")) {
    const json& t = root.at("tx");
    reject_unknown(t, {"channel_count", "channel_spacing_hz", "pol_count", "oversampling"}, "tx");
    read(t, "channel_count", c.tx.channel_count, "tx");
    read(t, "channel_spacing_hz", c.tx.channel_spacing_hz, "tx");
    read(t, "pol_count", c.tx.pol_count, "tx");
    read(t, "oversampling", c.tx.oversampling, "tx");
  }
  if (root.contains("detectors")) {
    std::vector<std::string> names;
    read(root, "detectors", names, "config");
    c.detectors.clear();
    for (const auto& n : names) {
      const auto d = parse_detector(n);
      require(d.has_value(), "unknown detector '" + n + "' (expected awgn, pn, pn_per_pol or ppn)");
      c.detectors.push_back(*d);
    }
  }
  if (root.contains("sweep")) {
    const json& s = root.at("sweep");
    reject_unknown(s, {"launch_power_dbm", "subcarriers", "span_count", "span_length_km", "total_length_km"},
                   "sweep");
    read(s, "launch_power_dbm", c.sweep.launch_power_dbm, "sweep");
    read(s, "subcarriers", c.sweep.subcarriers, "sweep");
    read(s, "span_count", c.sweep.span_count, "sweep");
    read(s, "span_length_km", c.sweep.span_length_km, "sweep");
    if (s.contains("total_length_km") && !s.at("total_length_km").is_null()) {
      double t = 0.0;
      read(s, "total_length_km", t, "sweep");
      c.sweep.total_length_km = t;
    }
  }
  // Axes left out default to the single value from the link block.
  if (c.sweep.span_count.empty()) c.sweep.span_count = {c.link.span_count};
  if (c.sweep.span_length_km.empty()) c.sweep.span_length_km = {c.link.span_length_km};
  if (root.contains("walk_search")) {
    const json& w = root.at("walk_search");
    reject_unknown(w, {"log10_min", "log10_max", "tolerance_decades", "rounds"}, "walk_search");
    read(w, "log10_min", c.walk_search.log10_min, "walk_search");
    read(w, "log10_max", c.walk_search.log10_max, "walk_search");
    read(w, "tolerance_decades", c.walk_search.tolerance_decades, "walk_search");
    read(w, "rounds", c.walk_search.rounds, "walk_search");
  }
  if (root.contains("ssfm")) {
    const json& s = root.at("ssfm");
    reject_unknown(s, {"max_step_km", "max_nl_phase_rad", "convergence_tolerance", "convergence_factor"}, "ssfm");
    read(s, "max_step_km", c.ssfm.max_step_km, "ssfm");
    read(s, "max_nl_phase_rad", c.ssfm.max_nl_phase_rad, "ssfm");
    read(s, "convergence_tolerance", c.ssfm.convergence_tolerance, "ssfm");
    read(s, "convergence_factor", c.ssfm.convergence_factor, "ssfm");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const ExperimentConfig& c) {
  json root;
  root["schema_version"] = kConfigSchemaVersion;
  root["name"] = c.name;
  root["seed"] = c.seed;
  json l;
  l["amplification"] = amplification_name(c.link.amplification);
  l["span_length_km"] = c.link.span_length_km;
  l["span_count"] = c.link.span_count;
  l["alpha_db_per_km"] = c.link.fiber.alpha_db_per_km;
  l["beta2_ps2_per_km"] = c.link.fiber.beta2_ps2_per_km;
  l["gamma_per_w_km"] = c.link.fiber.gamma_per_w_km;
  l["eta"] = c.link.eta;
  l["center_frequency_hz"] = c.link.center_frequency_hz;
  if (c.link.dcf) {
    const DcfParams& d = *c.link.dcf;
    l["dcf"] = {{"length_km", d.length_km},
                {"alpha_db_per_km", d.fiber.alpha_db_per_km},
                {"beta2_ps2_per_km", d.fiber.beta2_ps2_per_km},
                {"gamma_per_w_km", d.fiber.gamma_per_w_km},
                {"launch_offset_db", d.launch_offset_db},
                {"amp_eta", d.amp_eta}};
  } else {
    l["dcf"] = nullptr;
  }
  root["link"] = l;
  root["tx"] = {{"channel_count", c.tx.channel_count},
                {"channel_spacing_hz", c.tx.channel_spacing_hz},
                {"pol_count", c.tx.pol_count},
                {"oversampling", c.tx.oversampling}};
  std::vector<std::string> det;
  for (Detector d : c.detectors) det.emplace_back(detector_name(d));
  root["detectors"] = det;
  json s;
  s["launch_power_dbm"] = c.sweep.launch_power_dbm;
  s["subcarriers"] = c.sweep.subcarriers;
  s["span_count"] = c.sweep.span_count;
  s["span_length_km"] = c.sweep.span_length_km;
  s["total_length_km"] = c.sweep.total_length_km ? json(*c.sweep.total_length_km) : json(nullptr);
  root["sweep"] = s;
  root["symbols"] = c.symbols;
  root["training_symbols"] = c.training_symbols;
  root["particles_pn"] = c.particles_pn;
  root["particles_ppn"] = c.particles_ppn;
  root["acquisition_steps"] = c.acquisition_steps;
  root["acquisition_var"] = c.acquisition_var;
  root["acquisition_particles_ppn"] = c.acquisition_particles_ppn;
  root["acquisition_window"] = c.acquisition_window;
  root["walk_search"] = {{"log10_min", c.walk_search.log10_min},
                         {"log10_max", c.walk_search.log10_max},
                         {"tolerance_decades", c.walk_search.tolerance_decades},
                         {"rounds", c.walk_search.rounds}};
  root["ssfm"] = {{"max_step_km", c.ssfm.max_step_km},
                  {"max_nl_phase_rad", c.ssfm.max_nl_phase_rad},
                  {"convergence_tolerance", c.ssfm.convergence_tolerance},
                  {"convergence_factor", c.ssfm.convergence_factor}};
  root["dbp"] = c.dbp;
  root["output_path"] = c.output_path;
  root["desk_scale"] = c.desk_scale;
  root["track_power_dbm"] = c.track_power_dbm;
  root["track_subcarriers"] = c.track_subcarriers;
  root["param_power_dbm"] = c.param_power_dbm ? json(*c.param_power_dbm) : json(nullptr);
  return root.dump(2) + "\n";
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg) {
  std::vector<SweepPoint> out;
  const std::vector<int> counts = cfg.sweep.total_length_km ? std::vector<int>{0} : cfg.sweep.span_count;
  for (double length : cfg.sweep.span_length_km) {
    for (int count : counts) {
      const int n_span = cfg.sweep.total_length_km
                             ? static_cast<int>(std::llround(*cfg.sweep.total_length_km / length))
                             : count;
      for (int n : cfg.sweep.subcarriers) {
        for (double p : cfg.sweep.launch_power_dbm) {
          SweepPoint sp;
          sp.index = out.size();
          sp.launch_power_dbm = p;
          sp.subcarriers = n;
          sp.span_count = n_span;
          sp.span_length_km = length;
          out.push_back(sp);
        }
      }
    }
  }
  return out;
}

}  // namespace wdmair
