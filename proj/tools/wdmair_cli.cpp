#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "acceptance/criteria.hpp"
#include "wdmair/config.hpp"
#include "wdmair/experiments.hpp"
#include "wdmair/figures.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailedRows = 1;
constexpr int kExitBadConfig = 2;

wdmair::ExperimentConfig load_or_preset(const std::string& path, bool desk_scale) {
  wdmair::ExperimentConfig cfg = path.empty() ? wdmair::desk_preset() : wdmair::load_config(path);
  if (desk_scale) cfg.apply_desk_scale();
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Achievable information rates of auxiliary channels on simulated WDM links"};
  app.require_subcommand(1);
  app.fallthrough();
  int workers = wdmair::default_workers();
  bool quiet = false;
  app.add_option("--workers", workers, "worker threads (default: WDMAIR_WORKERS or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "no progress output");

  auto* run = app.add_subcommand("run", "run the sweep of a config (desk preset when omitted)");
  std::string run_config;
  std::string run_out;
  bool run_desk = false;
  run->add_option("config", run_config, "JSON config")->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "result CSV (default: output_path of the config)");
  run->add_flag("--desk-scale", run_desk, "apply the desk-scale reduction");

  auto* selftest = app.add_subcommand("selftest", "run the oracle criteria");
  bool selftest_all = false;
  std::string selftest_csv = "desk_ida_1000km.csv";
  selftest->add_flag("--all", selftest_all, "also run the desk-scale sweep criteria (hours)");
  selftest->add_option("--sweep-csv", selftest_csv, "where the sweep rows go with --all");

  auto* figure = app.add_subcommand("figure", "export the data bundle of one figure");
  std::string fig_id;
  std::string fig_config;
  std::string fig_out = "figures";
  std::string fig_results;
  bool fig_desk = false;
  figure->add_option("--figure", fig_id, "figure id")->required()->check(CLI::IsMember(wdmair::figure_ids()));
  figure->add_option("--config", fig_config, "JSON config (desk preset when omitted)")->check(CLI::ExistingFile);
  figure->add_option("--out", fig_out, "output directory");
  figure->add_option("--results", fig_results, "reuse an existing result CSV")->check(CLI::ExistingFile);
  figure->add_flag("--desk-scale", fig_desk, "apply the desk-scale reduction");

  CLI11_PARSE(app, argc, argv);
  std::ostream* log = quiet ? nullptr : &std::cerr;

  try {
    if (*run) {
      wdmair::ExperimentConfig cfg;
      try {
        cfg = load_or_preset(run_config, run_desk);
      } catch (const wdmair::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
      }
      const std::filesystem::path out = run_out.empty() ? std::filesystem::path(cfg.output_path) : std::filesystem::path(run_out);
      const auto outcome = wdmair::run_sweep(cfg, workers, out, log);
      std::cout << wdmair::summary_json(outcome.summary) << "\n";
      return outcome.summary.failed_rows == 0 ? kExitOk : kExitFailedRows;
    }
    if (*selftest) {
      wdmair::acceptance::CriteriaOptions opts;
      opts.workers = workers;
      opts.sweep_csv = selftest_csv;
      opts.log = log;
      const auto ids = wdmair::acceptance::parse_selection(selftest_all ? "1-11" : "1-7");
      const auto results = wdmair::acceptance::run_criteria(ids, opts, std::cout);
      for (const auto& r : results) {
        if (!r.passed) return kExitFailedRows;
      }
      return kExitOk;
    }
    wdmair::ExperimentConfig cfg;
    try {
      cfg = load_or_preset(fig_config, fig_desk);
    } catch (const wdmair::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitBadConfig;
    }
    std::vector<wdmair::ResultRow> rows;
    if (!fig_results.empty()) rows = wdmair::read_results(fig_results);
    wdmair::export_figure_data(cfg, fig_id, fig_out, rows, workers, log);
    std::cout << (std::filesystem::path(fig_out) / fig_id).string() << "\n";
    return kExitOk;
  } catch (const wdmair::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailedRows;
  }
}
