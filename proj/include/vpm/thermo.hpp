#pragma once

#include <span>
#include <vector>

#include "vpm/core.hpp"

namespace vpm::thermo {

// Supply air cooling delivered to a zone, c*rho*v*(IAT - DAT). Signed.
double zone_space_load(double v_z, double iat, double dat, const AirProperties& air);

// Flow-weighted mean of zone temperatures. Throws when total flow is zero.
double return_air_temperature(std::span<const double> zone_flows, std::span<const double> zone_iats);

double mixed_air_temperature(double k, double oat, double rat);

double coil_load(double v_c, double mat, double dat, const AirProperties& air);

// Per-timestamp AHU quantities. Samples with zero total flow or missing
// inputs carry NaN in rat and the load columns derived from it.
struct AhuLoadSeries {
  std::vector<double> v_c;
  std::vector<double> rat;
  std::vector<double> coil_load;
  std::vector<double> space_load_sum;
  std::vector<double> fresh_air_load;
};

AhuLoadSeries ahu_load_series(const ChannelFrame& frame, const BuildingNode& building, const AhuNode& ahu,
                              const AirProperties& air);

}  // namespace vpm::thermo
