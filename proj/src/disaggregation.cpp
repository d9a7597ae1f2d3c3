#include "vpm/disaggregation.hpp"

#include <algorithm>

#include "vpm/error.hpp"
#include "vpm/thermo.hpp"

namespace vpm::disagg {

double zone_equiv_coil(double q_z, double v_z, double oat, double rat, const FreshAirModel& model,
                       const AirProperties& air) {
  return q_z + air.c_rho() * v_z * (model.k * (oat - rat) + model.alpha);
}

double zone_equiv_building(double q_ec, double v_z, double v_c, double q_c_i, double sum_q_c,
                           const BuildingModel& model) {
  if (v_c == 0.0 || sum_q_c == 0.0) return kMissing;
  return model.l * q_ec + (v_z / v_c) * (q_c_i / sum_q_c) * model.beta;
}

double zone_fan_power(double v_z, double v_c, double p_fan_ahu) {
  if (v_c == 0.0) return kMissing;
  return (v_z / v_c) * p_fan_ahu;
}

Cop district_cop(double q_d, double p_d, double floor, const CopBand& band) {
  Cop c;
  if (is_missing(q_d) || is_missing(p_d) || p_d <= 0.0 || p_d < floor) return c;
  c.value = q_d / p_d;
  c.out_of_band = c.value < band.low || c.value > band.high;
  return c;
}

double zone_total_electrical(double q_eb, double cop, double p_fan_z) {
  if (is_missing(cop) || cop <= 0.0) return kMissing;
  return q_eb / cop + p_fan_z;
}

double ZoneLoadSeries::coverage() const {
  if (p_total.empty()) return 0.0;
  const auto n = std::count_if(p_total.begin(), p_total.end(), [](double v) { return !is_missing(v); });
  return static_cast<double>(n) / static_cast<double>(p_total.size());
}

double cop_floor(const ChannelFrame& frame, double fraction) {
  const auto* pd = frame.find(district_key(Variable::PD));
  if (!pd) return 0.0;
  std::vector<double> v;
  for (double x : *pd)
    if (!is_missing(x)) v.push_back(x);
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double median = *mid;
  if (v.size() % 2 == 0) median = 0.5 * (median + *std::max_element(v.begin(), mid));
  return fraction * median;
}

CascadeResult run_cascade(const ChannelFrame& frame, const Topology& topology, const FittedModels& models,
                          const AirProperties& air, const CascadeOptions& options) {
  const std::size_t n = frame.size();
  CascadeResult out;
  out.timestamps.assign(frame.timestamps().begin(), frame.timestamps().end());

  // Validate model coverage before any work.
  for (const auto& b : topology.buildings) {
    if (!models.building_for(b.id)) throw fit_error("no building model for '" + b.id + "'");
    for (const auto& a : b.ahus) {
      const auto path = ahu_path(b, a);
      if (!models.fresh_air_for(path)) throw fit_error("no fresh-air model for AHU '" + path + "'");
      if (!models.fan_for(path)) throw fit_error("no fan model for AHU '" + path + "'");
    }
  }

  const double floor = cop_floor(frame, options.cop_floor_fraction);
  const auto* qd = frame.find(district_key(Variable::QD));
  const auto* pd = frame.find(district_key(Variable::PD));
  out.cop.assign(n, kMissing);
  std::vector<std::uint32_t> cop_flags(n, 0);
  for (std::size_t t = 0; t < n; ++t) {
    const Cop c = (qd && pd) ? district_cop((*qd)[t], (*pd)[t], floor, options.cop_band) : Cop{};
    out.cop[t] = c.value;
    if (is_missing(c.value)) cop_flags[t] |= kCopMissing;
    if (c.out_of_band) cop_flags[t] |= kCopOutOfBand;
  }

  for (const auto& b : topology.buildings) {
    const auto& bm = *models.building_for(b.id);
    const auto* oat_col = frame.find(building_key(b, Variable::OAT));
    const auto oat = oat_col ? std::span<const double>(*oat_col) : frame.column(district_key(Variable::OAT));
    const auto* qb = frame.find(building_key(b, Variable::QB));

    std::vector<thermo::AhuLoadSeries> ahu_loads;
    for (const auto& a : b.ahus) ahu_loads.push_back(thermo::ahu_load_series(frame, b, a, air));
    std::vector<double> sum_qc(n, 0.0);
    for (const auto& s : ahu_loads)
      for (std::size_t t = 0; t < n; ++t) sum_qc[t] += s.coil_load[t];

    BuildingDiagnostics diag;
    diag.building = b.id;
    diag.residual.assign(n, kMissing);
    diag.predicted.assign(n, 0.0);
    diag.fan_power.assign(n, 0.0);
    diag.flags = cop_flags;
    for (std::size_t t = 0; t < n; ++t)
      if (qb && !is_missing(sum_qc[t])) diag.residual[t] = (*qb)[t] - (bm.l * sum_qc[t] + bm.beta);

    for (std::size_t ai = 0; ai < b.ahus.size(); ++ai) {
      const auto& a = b.ahus[ai];
      const auto path = ahu_path(b, a);
      const auto& fa = *models.fresh_air_for(path);
      const auto& fan = *models.fan_for(path);
      const auto& loads = ahu_loads[ai];
      const auto dat = frame.column(ahu_key(b, a, Variable::DAT));

      std::vector<double> p_fan_ahu(n, kMissing);
      std::vector<std::uint32_t> ahu_flags(n, 0);
      for (std::size_t t = 0; t < n; ++t) {
        const double vc = loads.v_c[t];
        if (is_missing(vc)) {
          ahu_flags[t] |= kInputMissing;
        } else if (vc == 0.0) {
          ahu_flags[t] |= kAhuOff;
          p_fan_ahu[t] = 0.0;
        } else {
          p_fan_ahu[t] = fan.power_kw(vc);
          if (fan.extrapolating(vc)) ahu_flags[t] |= kFanExtrapolated;
          if (is_missing(sum_qc[t]) || sum_qc[t] <= 0.0) ahu_flags[t] |= kNoAllocation;
        }
        diag.fan_power[t] += p_fan_ahu[t];
      }

      for (const auto& z : a.zones) {
        const auto vz = frame.column(zone_key(b, a, z, Variable::VZ));
        const auto iat = frame.column(zone_key(b, a, z, Variable::IAT));
        ZoneLoadSeries s;
        s.zone = zone_path(b, a, z);
        s.q_z.assign(n, kMissing);
        s.q_ec.assign(n, kMissing);
        s.q_eb.assign(n, kMissing);
        s.p_fan.assign(n, kMissing);
        s.p_total.assign(n, kMissing);
        s.flags.assign(n, 0);
        for (std::size_t t = 0; t < n; ++t) {
          std::uint32_t f = ahu_flags[t] | cop_flags[t];
          const double vc = loads.v_c[t];
          if (f & kAhuOff) {
            s.q_z[t] = s.q_ec[t] = s.q_eb[t] = s.p_fan[t] = s.p_total[t] = 0.0;
            s.flags[t] = f;
            continue;
          }
          if (f & kInputMissing) {
            s.flags[t] = f;
            continue;
          }
          s.q_z[t] = thermo::zone_space_load(vz[t], iat[t], dat[t], air);
          s.q_ec[t] = zone_equiv_coil(s.q_z[t], vz[t], oat[t], loads.rat[t], fa, air);
          s.p_fan[t] = zone_fan_power(vz[t], vc, p_fan_ahu[t]);
          if (!(f & kNoAllocation))
            s.q_eb[t] = zone_equiv_building(s.q_ec[t], vz[t], vc, loads.coil_load[t], sum_qc[t], bm);
          s.p_total[t] = zone_total_electrical(s.q_eb[t], out.cop[t], s.p_fan[t]);
          if (is_missing(s.q_ec[t])) f |= kInputMissing;
          s.flags[t] = f;
        }
        out.zones.push_back(std::move(s));
      }
      for (std::size_t t = 0; t < n; ++t) diag.flags[t] |= ahu_flags[t];
    }

    // Regression-predicted building load from the zone-equivalent coil loads.
    const std::size_t first_zone = out.zones.size() - [&] {
      std::size_t c = 0;
      for (const auto& a : b.ahus) c += a.zones.size();
      return c;
    }();
    for (std::size_t t = 0; t < n; ++t) {
      double agg = 0.0;
      for (std::size_t zi = first_zone; zi < out.zones.size(); ++zi) agg += out.zones[zi].q_ec[t];
      diag.predicted[t] = bm.l * agg + bm.beta;
    }
    out.buildings.push_back(std::move(diag));
  }
  return out;
}

}  // namespace vpm::disagg
