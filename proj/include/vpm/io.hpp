#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpm/core.hpp"
#include "vpm/disaggregation.hpp"
#include "vpm/regression.hpp"
#include "vpm/synth.hpp"

namespace vpm::io {

namespace fs = std::filesystem;
using nlohmann::json;

// Writes to a sibling temporary file and renames it into place.
void write_atomic(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

std::string format_number(double v);  // 17 significant digits, empty for missing

// Long-format measurements: timestamp,point_id,value
std::vector<Reading> parse_readings_csv(const std::string& text);
std::string readings_csv(const ChannelFrame& frame);

// Point catalog: point_id,building,ahu,zone,variable,unit
PointCatalog parse_catalog_csv(const std::string& text);
std::string catalog_csv(const ChannelFrame& frame);
std::string point_id(const ChannelKey& key);

json topology_to_json(const Topology& topology);
Topology topology_from_json(const json& j);

json models_to_json(const regression::FittedModels& models);
regression::FittedModels models_from_json(const json& j);

json truth_to_json(const synth::GroundTruth& truth);

// Commissioning points: building,ahu,flow,power,flow_unit,power_unit
struct FanPointSet {
  regression::FlowUnit flow_unit = regression::FlowUnit::Cfm;
  regression::PowerUnit power_unit = regression::PowerUnit::Horsepower;
  std::vector<regression::FanPoint> points;
};
std::map<std::string, FanPointSet> parse_fan_points_csv(const std::string& text);
std::string fan_points_csv(const std::map<std::string, FanPointSet>& sets);

// timestamp,zone_id,q_z_kw,q_ec_kw,q_eb_kw,p_fan_kw,p_total_kw for the zones of one building.
std::string zone_loads_csv(const disagg::CascadeResult& result, const std::string& building);
std::string diagnostics_csv(const disagg::CascadeResult& result, const std::string& building);

struct ZoneLoadTable {
  std::vector<Timestamp> timestamps;
  std::map<std::string, std::vector<double>> p_total;  // zone path -> kW
};
// Merges into `table`; zone rows must share the table's timestamp index.
void parse_zone_loads_csv(const std::string& text, ZoneLoadTable& table);

}  // namespace vpm::io
