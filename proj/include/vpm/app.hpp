#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "vpm/core.hpp"
#include "vpm/disaggregation.hpp"
#include "vpm/io.hpp"
#include "vpm/regression.hpp"
#include "vpm/report.hpp"
#include "vpm/synth.hpp"

namespace vpm::app {

namespace fs = std::filesystem;

struct SimulateConfig {
  int days = 54;
  std::uint64_t seed = 42;
  std::vector<std::string> buildings{"A", "B", "C"};
  int ahus_per_building = 3;
  int zones_per_ahu = 10;
  std::vector<std::string> commissioned;  // empty: every building has commissioning points
  synth::NoiseLevels noise;
  int fan_points = 20;
  synth::SetpointSchedule schedule = synth::SetpointSchedule::Alternating;
};

struct RunConfig {
  fs::path output_dir = "out";
  // Empty input paths resolve to the simulate outputs inside output_dir.
  fs::path data_csv, catalog_csv, topology_json, fan_points_csv, models_json;
  AirProperties air;
  std::int64_t interval_s = 900;
  DaytimeWindow daytime;
  double flow_threshold = 0.1;
  double lsp = 23.3;
  double hsp = 24.4;
  disagg::CascadeOptions cascade;
  double coverage_threshold = 0.8;
  double top_fraction = 0.3;
  std::map<std::string, std::string> fan_donors;  // AHU path -> donor AHU path
  report::EnergyWindow zone_window = report::EnergyWindow::Operating;
  report::EnergyWindow building_window = report::EnergyWindow::FullDay;
  bool building_fit_all_hours = true;
  SimulateConfig simulate;

  fs::path data_path() const;
  fs::path catalog_path() const;
  fs::path topology_path() const;
  fs::path fan_points_path() const;
  fs::path models_path() const;
};

io::json default_config_json();
// Sets a dotted key ("simulate.seed=7"); the value is parsed as JSON when possible.
void apply_override(io::json& config, const std::string& assignment);
RunConfig parse_config(const io::json& config);

ChannelFrame load_frame(const RunConfig& cfg);
Topology load_topology(const RunConfig& cfg);

regression::FittedModels fit_models(const ChannelFrame& frame, const Topology& topology,
                                    const std::map<std::string, io::FanPointSet>& fan_points, const RunConfig& cfg);
std::string fit_report_text(const regression::FittedModels& models);

void cmd_simulate(const RunConfig& cfg, std::ostream& log);
void cmd_fit(const RunConfig& cfg, std::ostream& log);
void cmd_disaggregate(const RunConfig& cfg, std::ostream& log);
void cmd_report(const RunConfig& cfg, std::ostream& log);
void cmd_pipeline(const RunConfig& cfg, std::ostream& log);

}  // namespace vpm::app
