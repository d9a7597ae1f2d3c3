#include "vpm/thermo.hpp"

#include "vpm/error.hpp"

namespace vpm::thermo {

double zone_space_load(double v_z, double iat, double dat, const AirProperties& air) {
  return air.c_rho() * v_z * (iat - dat);
}

double return_air_temperature(std::span<const double> zone_flows, std::span<const double> zone_iats) {
  if (zone_flows.size() != zone_iats.size()) throw input_error("zone flow and IAT lists differ in length");
  double vc = 0.0, weighted = 0.0;
  for (std::size_t j = 0; j < zone_flows.size(); ++j) {
    vc += zone_flows[j];
    weighted += zone_flows[j] * zone_iats[j];
  }
  if (vc == 0.0) throw input_error("return air temperature undefined at zero total flow");
  return weighted / vc;
}

double mixed_air_temperature(double k, double oat, double rat) { return k * oat + (1.0 - k) * rat; }

double coil_load(double v_c, double mat, double dat, const AirProperties& air) {
  return air.c_rho() * v_c * (mat - dat);
}

AhuLoadSeries ahu_load_series(const ChannelFrame& frame, const BuildingNode& building, const AhuNode& ahu,
                              const AirProperties& air) {
  const auto dat = frame.column(ahu_key(building, ahu, Variable::DAT));
  const auto mat = frame.column(ahu_key(building, ahu, Variable::MAT));
  std::vector<std::span<const double>> flows, iats;
  for (const auto& z : ahu.zones) {
    flows.push_back(frame.column(zone_key(building, ahu, z, Variable::VZ)));
    iats.push_back(frame.column(zone_key(building, ahu, z, Variable::IAT)));
  }

  const std::size_t n = frame.size();
  const double cr = air.c_rho();
  AhuLoadSeries out;
  out.v_c.assign(n, kMissing);
  out.rat.assign(n, kMissing);
  out.coil_load.assign(n, kMissing);
  out.space_load_sum.assign(n, kMissing);
  out.fresh_air_load.assign(n, kMissing);
  for (std::size_t t = 0; t < n; ++t) {
    double vc = 0.0, weighted = 0.0;
    for (std::size_t j = 0; j < flows.size(); ++j) {
      vc += flows[j][t];
      weighted += flows[j][t] * iats[j][t];
    }
    out.v_c[t] = vc;
    if (is_missing(vc)) continue;
    if (vc == 0.0) {
      // No air through the coil: the loads vanish even though RAT is undefined.
      out.coil_load[t] = 0.0;
      out.space_load_sum[t] = 0.0;
      out.fresh_air_load[t] = 0.0;
      continue;
    }
    out.coil_load[t] = coil_load(vc, mat[t], dat[t], air);
    if (is_missing(weighted)) continue;
    const double rat = weighted / vc;
    out.rat[t] = rat;
    out.space_load_sum[t] = cr * vc * (rat - dat[t]);
    out.fresh_air_load[t] = out.coil_load[t] - out.space_load_sum[t];
  }
  return out;
}

}  // namespace vpm::thermo
