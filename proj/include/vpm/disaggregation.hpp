#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vpm/core.hpp"
#include "vpm/regression.hpp"

namespace vpm::disagg {

using regression::BuildingModel;
using regression::FittedModels;
using regression::FreshAirModel;

// q_z + c*rho*v_z*(k*(OAT - RAT) + alpha)
double zone_equiv_coil(double q_z, double v_z, double oat, double rat, const FreshAirModel& model,
                       const AirProperties& air);

// l*q_ec + (v_z/v_c)*(q_c_i/sum_q_c)*beta. Missing when v_c or sum_q_c is zero.
double zone_equiv_building(double q_ec, double v_z, double v_c, double q_c_i, double sum_q_c,
                           const BuildingModel& model);

// Flow-proportional share of the AHU fan power. Missing when v_c is zero.
double zone_fan_power(double v_z, double v_c, double p_fan_ahu);

struct Cop {
  double value = kMissing;
  bool out_of_band = false;
};

struct CopBand {
  double low = 1.0;
  double high = 15.0;
};

Cop district_cop(double q_d, double p_d, double floor, const CopBand& band = {});

// q_eb/COP + p_fan_z; missing when the COP is missing or non-positive.
double zone_total_electrical(double q_eb, double cop, double p_fan_z);

enum SampleFlag : std::uint32_t {
  kAhuOff = 1u << 0,         // no supply air; zone loads are zero
  kNoAllocation = 1u << 1,   // building coil sum <= 0, beta cannot be shared
  kCopMissing = 1u << 2,
  kCopOutOfBand = 1u << 3,
  kFanExtrapolated = 1u << 4,
  kInputMissing = 1u << 5,
};

struct ZoneLoadSeries {
  std::string zone;  // entity path
  std::vector<double> q_z, q_ec, q_eb, p_fan, p_total;
  std::vector<std::uint32_t> flags;

  double coverage() const;
};

struct BuildingDiagnostics {
  std::string building;
  std::vector<double> residual;       // q_b - (l * sum q_c + beta), never allocated
  std::vector<double> predicted;      // l * sum of zone-equivalent coil loads + beta
  std::vector<double> fan_power;      // sum of AHU fan power, kW
  std::vector<std::uint32_t> flags;   // OR of member flags
};

struct CascadeOptions {
  double cop_floor_fraction = 0.01;  // of the median observed p_d
  CopBand cop_band;
};

struct CascadeResult {
  std::vector<Timestamp> timestamps;
  std::vector<double> cop;
  std::vector<ZoneLoadSeries> zones;
  std::vector<BuildingDiagnostics> buildings;
};

// Throws a Fit error when any AHU or building in the topology lacks a model.
CascadeResult run_cascade(const ChannelFrame& frame, const Topology& topology, const FittedModels& models,
                          const AirProperties& air, const CascadeOptions& options = {});

double cop_floor(const ChannelFrame& frame, double fraction);

}  // namespace vpm::disagg
