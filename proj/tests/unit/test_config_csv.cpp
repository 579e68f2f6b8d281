#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "wdmair/config.hpp"
#include "wdmair/csv.hpp"

using namespace wdmair;

TEST_CASE("csv escaping and formatting") {
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv::escape("two\nlines") == "\"two\nlines\"");
  CHECK(csv::format(0.1) == "0.1");
  CHECK(csv::format(-7.0) == "-7");
  CHECK(csv::format(1e-33) == "1e-33");
  CHECK(std::stod(csv::format(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(csv::format(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("csv rows round trip") {
  std::ostringstream out;
  csv::write_row(out, {"a", "b,c", "d\"e"});
  csv::write_row(out, {"1", "", "x\r\ny"});
  CHECK(out.str() == "a,\"b,c\",\"d\"\"e\"\r\n1,,\"x\r\ny\"\r\n");
  const auto rows = csv::parse(out.str());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "d\"e"});
  CHECK(rows[1] == std::vector<std::string>{"1", "", "x\r\ny"});
  CHECK(csv::parse("h1,h2\nv1,v2\n").size() == 2);
  CHECK_THROWS_AS(csv::parse("\"unterminated"), Error);
}

TEST_CASE("csv table lookup names the missing column") {
  csv::Table t(csv::parse("se,detector\r\n4.5,ppn\r\n"));
  CHECK(t.size() == 1);
  CHECK(t.number(0, "se") == 4.5);
  CHECK(t.at(0, "detector") == "ppn");
  try {
    t.at(0, "walk_var");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("walk_var") != std::string::npos);
  }
}

TEST_CASE("config defaults and desk preset") {
  const ExperimentConfig d = desk_preset();
  CHECK(d.tx.channel_count == 3);
  CHECK(d.symbols == 20000);
  CHECK(d.training_symbols == 5000);
  CHECK(d.particles_pn == 256);
  CHECK(d.particles_ppn == 1024);
  CHECK(d.sweep.launch_power_dbm.size() == 6);
  CHECK(d.sweep.subcarriers == std::vector<int>{1, 2, 4, 8});
  CHECK(d.link.transmission_length_km() == 1000.0);
  CHECK_NOTHROW(d.validate());
  CHECK(d.pn_options().particles == 256);
  CHECK(d.ppn_options().particles == 1024);
}

TEST_CASE("config parsing") {
  const std::string text = R"({
    "schema_version": 1,
    "name": "la_sweep",
    "seed": 7,
    "link": {"amplification": "la", "span_length_km": 60, "span_count": 4, "eta": 1.6},
    "tx": {"channel_count": 5},
    "detectors": ["awgn", "pn_per_pol"],
    "sweep": {"launch_power_dbm": [-4, -2], "subcarriers": [1, 4]},
    "symbols": 1000,
    "training_symbols": 500
  })";
  const ExperimentConfig c = parse_config(text);
  CHECK(c.name == "la_sweep");
  CHECK(c.seed == 7);
  CHECK(c.link.amplification == Amplification::kLa);
  CHECK(c.link.eta == 1.6);
  CHECK(c.tx.channel_count == 5);
  CHECK(c.detectors == std::vector<Detector>{Detector::kAwgn, Detector::kPnPerPol});
  CHECK(c.sweep.span_count == std::vector<int>{4});
  CHECK(c.sweep.span_length_km == std::vector<double>{60.0});
  CHECK(c.symbols == 1000);

  const auto pts = sweep_points(c);
  REQUIRE(pts.size() == 4);
  CHECK(pts[1].launch_power_dbm == -2.0);
  CHECK(pts[2].subcarriers == 4);
  CHECK(pts[3].index == 3);

  // round trip through the serializer
  const ExperimentConfig back = parse_config(to_json(c));
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("desk flag keeps explicit overrides") {
  const ExperimentConfig c = parse_config(R"({"schema_version": 1, "desk_scale": true, "symbols": 3000,
    "sweep": {"launch_power_dbm": [-7], "subcarriers": [4]}})");
  CHECK(c.desk_scale);
  CHECK(c.tx.channel_count == 3);
  CHECK(c.symbols == 3000);
  CHECK(c.training_symbols == 5000);
}

TEST_CASE("total length sweep") {
  const ExperimentConfig c = parse_config(R"({"schema_version": 1, "link": {"amplification": "la"},
    "sweep": {"launch_power_dbm": [0], "subcarriers": [1], "span_length_km": [50, 100], "total_length_km": 1000}})");
  const auto pts = sweep_points(c);
  CHECK(pts.front().span_count == 20);
  CHECK(pts.back().span_count == 10);
}

TEST_CASE("config errors") {
  auto bad = [](const std::string& t) { CHECK_THROWS_AS(parse_config(t), ConfigError); };
  bad("not json");
  bad(R"({"name": "x"})");
  bad(R"({"schema_version": 2})");
  bad(R"({"schema_version": 1, "mystery": 1})");
  bad(R"({"schema_version": 1, "link": {"span_km": 5}})");
  bad(R"({"schema_version": 1, "sweep": {"launch_power_dbm": []}})");
  bad(R"({"schema_version": 1, "detectors": []})");
  bad(R"({"schema_version": 1, "detectors": ["magic"]})");
  bad(R"({"schema_version": 1, "tx": {"pol_count": 1}, "detectors": ["ppn"]})");
  bad(R"({"schema_version": 1, "tx": {"channel_count": 4}})");
  bad(R"({"schema_version": 1, "symbols": "many"})");
  bad(R"({"schema_version": 1, "link": {"amplification": "ida", "dcf": {}}})");
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}
