#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vpm/core.hpp"
#include "vpm/disaggregation.hpp"
#include "vpm/regression.hpp"

namespace vpm::synth {

struct ZoneParams {
  double capacitance = 3000.0;  // kJ/K
  double ua = 0.3;              // kW/K
  double gain_base = 0.5;       // kW, always present
  double gain_occupied = 2.0;   // kW, added on weekdays 08:00-18:00
  double v_min = 0.08;          // m3/s
  double v_max = 1.0;           // m3/s
  double kp = 0.6;              // m3/s per K above set-point
};

struct AhuTruth {
  std::string ahu;  // entity path
  double k = 0.3;
  double alpha = -0.5;
  std::array<double, 4> fan_a{};
  regression::FlowUnit flow_unit = regression::FlowUnit::Cfm;
  regression::PowerUnit power_unit = regression::PowerUnit::Horsepower;
  double dat_min = 12.8;  // supply-air reset band, degC
  double dat_max = 15.5;
  std::vector<ZoneParams> zones;
};

struct BuildingTruth {
  std::string building;
  double l = 1.2;
  double beta = 30.0;
  std::vector<AhuTruth> ahus;
};

struct CopProfile {
  double mean = 5.0;
  double amplitude = 0.5;   // diurnal swing
  double oat_slope = -0.05; // per degC above the mean outdoor temperature
};

struct Weather {
  double oat_mean = 28.0;
  double amplitude = 5.0;
  double daily_sd = 1.5;  // day-to-day offset
  double step_sd = 0.3;   // per-sample variability
};

// Relative standard deviations of the equation errors: the fresh-air
// residual (scaled by the RMS of MAT - DAT), the building meter residual
// (scaled by the RMS of q_b) and commissioning fan power (scaled by its RMS).
struct NoiseLevels {
  double fresh_air = 0.0;
  double building = 0.0;
  double fan = 0.0;
};

struct GroundTruth {
  std::vector<BuildingTruth> buildings;
  CopProfile cop;
  Weather weather;
  NoiseLevels noise;
  double district_other_load = 1500.0;  // kW of chilled-water demand outside the modelled buildings

  const AhuTruth* ahu(const std::string& path) const;
  const BuildingTruth* building(const std::string& id) const;
  // Truth parameters expressed as fitted models (exact, zero uncertainty).
  regression::FittedModels as_models() const;
};

// Seeded heterogeneous parameters for every node of the topology.
GroundTruth default_truth(const Topology& topology, std::uint64_t seed);

// Topology with n_ahus x n_zones per building and fan ratings sized to the zone flows.
Topology make_topology(const std::vector<std::string>& building_ids, int ahus_per_building, int zones_per_ahu);

enum class SetpointSchedule { Alternating, ConstantLsp, ConstantHsp };

struct SimulationSettings {
  int days = 54;
  std::int64_t interval_s = 900;
  std::uint64_t seed = 42;
  Timestamp start = 0;  // midnight of the first day; 0 selects 2021-06-22
  double lsp = 23.3;
  double hsp = 24.4;
  SetpointSchedule schedule = SetpointSchedule::Alternating;
  DaytimeWindow ahu_hours;  // weekdays only
  int fan_points = 20;
  int substep_s = 60;
};

struct SimulationResult {
  ChannelFrame frame;
  disagg::CascadeResult truth;  // per-zone loads with truth parameters and no noise
  std::map<std::string, std::vector<regression::FanPoint>> fan_points;  // per AHU path, truth units
};

SimulationResult simulate(const Topology& topology, const GroundTruth& truth, const SimulationSettings& settings);

// Adds independent Gaussian noise with the given absolute sigma per variable.
ChannelFrame perturb(const ChannelFrame& frame, const std::map<Variable, double>& sigma, std::uint64_t seed);

}  // namespace vpm::synth
