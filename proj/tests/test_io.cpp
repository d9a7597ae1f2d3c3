#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "support.hpp"
#include "vpm/error.hpp"
#include "vpm/io.hpp"
#include "vpm/synth.hpp"

using namespace vpm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("vpm_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

synth::SimulationResult small_sim(Topology& topo, synth::GroundTruth& truth) {
  topo = synth::make_topology({"A", "B"}, 2, 2);
  truth = synth::default_truth(topo, 3);
  truth.noise = {0.02, 0.02, 0.02};
  synth::SimulationSettings s;
  s.days = 4;
  return synth::simulate(topo, truth, s);
}

}  // namespace

TEST_CASE("numbers print with 17 significant digits and round-trip") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<double>(static_cast<int>(rng() % 40) - 20));
    CHECK(std::stod(io::format_number(v)) == v);
  }
  CHECK(io::format_number(kMissing).empty());
}

TEST_CASE("measurement CSV and catalog round-trip through ingestion") {
  Topology topo;
  synth::GroundTruth truth;
  const auto sim = small_sim(topo, truth);
  const auto readings = io::parse_readings_csv(io::readings_csv(sim.frame));
  const auto catalog = io::parse_catalog_csv(io::catalog_csv(sim.frame));
  CHECK(catalog.points().size() == sim.frame.columns().size());
  const auto back = align_channels(readings, catalog, sim.frame.interval_s());
  CHECK(back == sim.frame);
}

TEST_CASE("measurement CSV schema errors") {
  auto kind = [](const std::string& text) {
    try {
      io::parse_readings_csv(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Internal;
  };
  CHECK(kind("") == ErrorKind::Input);
  CHECK(kind("time,point,value\n") == ErrorKind::Input);
  CHECK(kind("timestamp,point_id,value\n2021-06-22T00:00:00Z,x,abc\n") == ErrorKind::Input);
  CHECK(kind("timestamp,point_id,value\nnot-a-time,x,1\n") == ErrorKind::Input);
  CHECK(io::parse_readings_csv("timestamp,point_id,value\n").empty());
  const auto r = io::parse_readings_csv("value,timestamp,point_id\r\n1.5,2021-06-22T00:05:00+02:00,p\r\n,2021-06-22T00:10:00Z,p\n");
  REQUIRE(r.size() == 1);
  CHECK(r[0].value == 1.5);
  CHECK(r[0].point_id == "p");
}

TEST_CASE("catalog schema errors") {
  CHECK_THROWS_AS(io::parse_catalog_csv(""), Error);
  CHECK_THROWS_AS(io::parse_catalog_csv("point_id,building,ahu,zone,variable,unit\np,B,,,q_b,degC\n"), Error);
  CHECK_THROWS_AS(io::parse_catalog_csv("point_id,building,ahu,zone,variable,unit\np,B,,,power,kW\n"), Error);
  const auto c = io::parse_catalog_csv(
      "point_id,building,ahu,zone,variable,unit\n"
      "oat,,,,OAT,degF\n"
      "z,B,AHU1,Z1,v_z,CFM\n");
  REQUIRE(c.find("oat"));
  CHECK(c.find("oat")->key == ChannelKey{Level::District, "", Variable::OAT});
  CHECK(c.find("z")->key == ChannelKey{Level::Zone, "B/AHU1/Z1", Variable::VZ});
  CHECK(c.find("z")->unit == Unit::Cfm);
}

TEST_CASE("topology JSON round-trips and validates") {
  auto topo = synth::make_topology({"A", "B"}, 2, 3);
  topo.buildings[1].ahus[0].zones[2].excluded = true;
  const auto back = io::topology_from_json(io::topology_to_json(topo));
  CHECK(io::topology_to_json(back) == io::topology_to_json(topo));
  CHECK(back.buildings[1].ahus[0].zones[2].excluded);

  auto bad = io::topology_to_json(topo);
  bad["buildings"][0]["ahus"][0]["fan_rated_power"] = -3;
  CHECK_THROWS_AS(io::topology_from_json(bad), Error);
  CHECK_THROWS_AS(io::topology_from_json(io::json::parse("{\"buildings\": 3}")), Error);
}

TEST_CASE("models JSON round-trips bit-exactly") {
  regression::FittedModels m;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int i = 0; i < 3; ++i) {
    regression::FreshAirModel f;
    f.ahu = "A/AHU" + std::to_string(i);
    f.k = g(rng);
    f.alpha = g(rng);
    f.r2 = std::abs(g(rng)) / 10;
    f.std_err_k = std::abs(g(rng));
    f.std_err_alpha = std::abs(g(rng));
    f.p_value_k = 1e-300 * std::abs(g(rng));
    f.p_value_alpha = 0.3;
    f.n_obs = 475 + i;
    f.f_statistic_p = 1e-17;
    f.k_out_of_range = f.k < 0 || f.k > 1;
    m.fresh_air.push_back(f);
  }
  regression::BuildingModel b;
  b.building = "A";
  b.l = 1.258;
  b.beta = 30.036;
  b.r2 = 0.902;
  b.n_obs = 1296;
  m.buildings.push_back(b);
  regression::FanModel fan;
  fan.ahu = "B/AHU1";
  fan.a = {13.45, 0.00077, 4.3e-8, -1.33e-12};
  fan.std_err = {g(rng), g(rng), g(rng), g(rng)};
  fan.flow_min = 1500;
  fan.flow_max = 30000;
  fan.donor = "A/AHU1";
  m.fans.push_back(fan);
  regression::FanModel kw = fan;
  kw.ahu = "A/AHU1";
  kw.flow_unit = regression::FlowUnit::CubicMetresPerSecond;
  kw.power_unit = regression::PowerUnit::Kilowatt;
  kw.donor.reset();
  m.fans.push_back(kw);

  const auto text = io::models_to_json(m).dump(2);
  const auto back = io::models_from_json(io::json::parse(text));
  CHECK(io::models_to_json(back).dump(2) == text);
  CHECK(back.fresh_air[1].k == m.fresh_air[1].k);
  CHECK(back.fresh_air[0].p_value_k == m.fresh_air[0].p_value_k);
  CHECK(back.fans[0].a[3] == fan.a[3]);
  CHECK(back.fans[0].donor == std::optional<std::string>("A/AHU1"));
  CHECK_FALSE(back.fans[1].donor.has_value());
  CHECK(back.fans[1].power_unit == regression::PowerUnit::Kilowatt);
  CHECK_THROWS_AS(io::models_from_json(io::json::parse("{\"fresh_air\": [{}]}")), Error);
}

TEST_CASE("fan point CSV round-trips") {
  std::map<std::string, io::FanPointSet> sets;
  sets["A/AHU1"] = {regression::FlowUnit::Cfm, regression::PowerUnit::Horsepower, {{1000, 14.2}, {2000, 15.1}}};
  sets["B/AHU2"] = {regression::FlowUnit::CubicMetresPerSecond, regression::PowerUnit::Kilowatt, {{0.5, 3.25}}};
  const auto back = io::parse_fan_points_csv(io::fan_points_csv(sets));
  REQUIRE(back.size() == 2);
  CHECK(back.at("A/AHU1").points.size() == 2);
  CHECK(back.at("A/AHU1").points[1].power == 15.1);
  CHECK(back.at("B/AHU2").flow_unit == regression::FlowUnit::CubicMetresPerSecond);
  CHECK(io::parse_fan_points_csv("").empty());
  CHECK_THROWS_AS(io::parse_fan_points_csv("building,ahu,flow,power,flow_unit,power_unit\nA,AHU1,1,2,CFM,HP\n"
                                           "A,AHU1,3,4,m3/s,HP\n"),
                  Error);
}

TEST_CASE("zone load CSV has one row per timestamp and zone and parses back") {
  Topology topo;
  synth::GroundTruth truth;
  const auto sim = small_sim(topo, truth);
  const auto text = io::zone_loads_csv(sim.truth, "A");
  std::size_t rows = 0;
  for (char c : text) rows += c == '\n';
  CHECK(rows - 1 == sim.frame.size() * 4);
  CHECK(text.rfind("timestamp,zone_id,q_z_kw,q_ec_kw,q_eb_kw,p_fan_kw,p_total_kw\n", 0) == 0);

  io::ZoneLoadTable table;
  io::parse_zone_loads_csv(text, table);
  io::parse_zone_loads_csv(io::zone_loads_csv(sim.truth, "B"), table);
  CHECK(table.p_total.size() == 8);
  CHECK(table.timestamps.size() == sim.frame.size());
  for (const auto& z : sim.truth.zones) {
    const auto& got = table.p_total.at(z.zone);
    for (std::size_t t = 0; t < got.size(); ++t)
      CHECK((got[t] == z.p_total[t] || (is_missing(got[t]) && is_missing(z.p_total[t]))));
  }

  const auto diag = io::diagnostics_csv(sim.truth, "A");
  CHECK(diag.rfind("timestamp,building_id,residual_kw,cop,coverage_flags\n", 0) == 0);
  CHECK_THROWS_AS(io::parse_zone_loads_csv("", table), Error);
}

TEST_CASE("atomic writes replace files and leave no temporaries") {
  const auto dir = scratch("atomic");
  const auto p = dir / "sub" / "x.txt";
  io::write_atomic(p, "one");
  io::write_atomic(p, "two");
  CHECK(io::read_file(p) == "two");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "sub")) ++files;
  CHECK(files == 1);
  CHECK_THROWS_AS(io::read_file(dir / "missing.txt"), Error);
  fs::remove_all(dir);
}
