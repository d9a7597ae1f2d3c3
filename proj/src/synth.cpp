#include "vpm/synth.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "vpm/error.hpp"

namespace vpm::synth {

namespace {

// Table-3 style reference fan: 30000 CFM, 40.83 HP.
constexpr double kRefFanFlowCfm = 30000.0;
constexpr double kRefFanPowerHp = 40.83;
constexpr std::array<double, 4> kRefFanCoef{13.45, 0.00077, 4.30e-8, -1.33e-12};

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Timestamp default_start() {
  using namespace std::chrono;
  return static_cast<Timestamp>(sys_days{year{2021} / 6 / 22}.time_since_epoch().count()) * 86400;
}

}  // namespace

const AhuTruth* GroundTruth::ahu(const std::string& path) const {
  for (const auto& b : buildings)
    for (const auto& a : b.ahus)
      if (a.ahu == path) return &a;
  return nullptr;
}

const BuildingTruth* GroundTruth::building(const std::string& id) const {
  for (const auto& b : buildings)
    if (b.building == id) return &b;
  return nullptr;
}

regression::FittedModels GroundTruth::as_models() const {
  regression::FittedModels m;
  for (const auto& b : buildings) {
    regression::BuildingModel bm;
    bm.building = b.building;
    bm.l = b.l;
    bm.beta = b.beta;
    bm.r2 = 1.0;
    m.buildings.push_back(bm);
    for (const auto& a : b.ahus) {
      regression::FreshAirModel fa;
      fa.ahu = a.ahu;
      fa.k = a.k;
      fa.alpha = a.alpha;
      fa.r2 = 1.0;
      m.fresh_air.push_back(fa);
      regression::FanModel fan;
      fan.ahu = a.ahu;
      fan.a = a.fan_a;
      fan.flow_unit = a.flow_unit;
      fan.power_unit = a.power_unit;
      fan.flow_min = 0.0;
      fan.flow_max = INFINITY;
      m.fans.push_back(fan);
    }
  }
  return m;
}

Topology make_topology(const std::vector<std::string>& building_ids, int ahus_per_building, int zones_per_ahu) {
  Topology topo;
  for (const auto& id : building_ids) {
    BuildingNode b;
    b.id = id;
    for (int i = 1; i <= ahus_per_building; ++i) {
      AhuNode a;
      a.id = "AHU" + std::to_string(i);
      a.fan_rated_flow = 0.9 * zones_per_ahu;
      const double flow_cfm = a.fan_rated_flow / regression::kCfmToM3s;
      a.fan_rated_power = kRefFanPowerHp * regression::kHpToKw * flow_cfm / kRefFanFlowCfm;
      for (int j = 1; j <= zones_per_ahu; ++j) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "Z%02d", j);
        a.zones.push_back({buf, false});
      }
      b.ahus.push_back(std::move(a));
    }
    topo.buildings.push_back(std::move(b));
  }
  return topo;
}

GroundTruth default_truth(const Topology& topology, std::uint64_t seed) {
  auto rng = stream(seed, 1);
  GroundTruth truth;
  for (const auto& b : topology.buildings) {
    BuildingTruth bt;
    bt.building = b.id;
    bt.l = uniform(rng, 1.05, 1.3);
    bt.beta = uniform(rng, 20.0, 70.0);
    for (const auto& a : b.ahus) {
      AhuTruth at;
      at.ahu = ahu_path(b, a);
      at.k = uniform(rng, 0.2, 0.6);
      at.alpha = uniform(rng, -1.2, -0.2);
      // Reference fan curve stretched to this fan's rated flow and power.
      const double flow_ratio = kRefFanFlowCfm / (a.fan_rated_flow / regression::kCfmToM3s);
      const double power_ratio = (a.fan_rated_power / regression::kHpToKw) / kRefFanPowerHp;
      double f = 1.0;
      for (std::size_t j = 0; j < 4; ++j) {
        at.fan_a[j] = power_ratio * kRefFanCoef[j] * f;
        f *= flow_ratio;
      }
      const double vmax_scale = a.fan_rated_flow / (0.9 * static_cast<double>(a.zones.size()));
      for (std::size_t j = 0; j < a.zones.size(); ++j) {
        ZoneParams z;
        z.ua = uniform(rng, 0.2, 0.5);
        z.capacitance = z.ua * uniform(rng, 1.0, 4.0) * 3600.0;
        z.gain_base = uniform(rng, 0.2, 0.8);
        z.gain_occupied = uniform(rng, 0.5, 4.0);
        z.v_min = uniform(rng, 0.05, 0.1) * vmax_scale;
        z.v_max = uniform(rng, 0.7, 1.1) * vmax_scale;
        z.kp = uniform(rng, 0.3, 0.9) * vmax_scale;
        at.zones.push_back(z);
      }
      bt.ahus.push_back(std::move(at));
    }
    truth.buildings.push_back(std::move(bt));
  }
  return truth;
}

namespace {

struct AhuState {
  const AhuNode* node = nullptr;
  const AhuTruth* truth = nullptr;
  std::vector<double> iat;
};

double controller_flow(const ZoneParams& z, double iat, double sp) {
  return std::clamp(z.v_min + z.kp * std::max(iat - sp, 0.0), z.v_min, z.v_max);
}

double internal_gain(const ZoneParams& z, Timestamp t) {
  const int m = minute_of_day(t);
  return z.gain_base + ((is_weekday(t) && m >= 8 * 60 && m < 18 * 60) ? z.gain_occupied : 0.0);
}

double fan_kw(const AhuTruth& a, double v_c) {
  const double f = a.flow_unit == regression::FlowUnit::Cfm ? v_c / regression::kCfmToM3s : v_c;
  const double raw = std::max(a.fan_a[0] + f * (a.fan_a[1] + f * (a.fan_a[2] + f * a.fan_a[3])), 0.0);
  return a.power_unit == regression::PowerUnit::Horsepower ? raw * regression::kHpToKw : raw;
}

double rms(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v)
    if (!is_missing(x)) {
      s += x * x;
      ++n;
    }
  return n ? std::sqrt(s / static_cast<double>(n)) : 0.0;
}

}  // namespace

SimulationResult simulate(const Topology& topology, const GroundTruth& truth, const SimulationSettings& s) {
  if (s.days < 4) throw input_error("simulation needs at least 4 days (one LSP/HSP cycle)");
  if (s.interval_s <= 0 || s.substep_s <= 0 || s.interval_s % s.substep_s != 0)
    throw input_error("interval must be a positive multiple of the integration substep");
  topology.validate();

  const Timestamp start = s.start == 0 ? default_start() : s.start;
  const auto steps = static_cast<std::size_t>(s.days * 86400 / s.interval_s);
  const double cr = AirProperties{}.c_rho();
  std::vector<Timestamp> ts(steps);
  for (std::size_t i = 0; i < steps; ++i) ts[i] = start + static_cast<Timestamp>(i) * s.interval_s;

  // Weather and plant efficiency are shared by every building.
  auto wrng = stream(s.seed, 2);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::vector<double> day_offset(static_cast<std::size_t>(s.days));
  for (auto& d : day_offset) d = truth.weather.daily_sd * unit_normal(wrng);
  std::vector<double> oat(steps), cop(steps), sp(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double hour = static_cast<double>(minute_of_day(ts[i])) / 60.0;
    const double phase = 2.0 * std::numbers::pi * (hour - 9.0) / 24.0;
    oat[i] = truth.weather.oat_mean + day_offset[i * s.interval_s / 86400] + truth.weather.amplitude * std::sin(phase) +
             truth.weather.step_sd * unit_normal(wrng);
    cop[i] = truth.cop.mean + truth.cop.amplitude * std::cos(phase) +
             truth.cop.oat_slope * (oat[i] - truth.weather.oat_mean);
    // Set-points alternate every two days at 06:00.
    const Timestamp since = ts[i] - start - 6 * 3600;
    const bool high = since >= 0 && (since / (2 * 86400)) % 2 == 1;
    switch (s.schedule) {
      case SetpointSchedule::ConstantLsp: sp[i] = s.lsp; break;
      case SetpointSchedule::ConstantHsp: sp[i] = s.hsp; break;
      default: sp[i] = high ? s.hsp : s.lsp;
    }
  }

  ChannelFrame::Columns cols;
  cols[district_key(Variable::OAT)] = oat;
  SimulationResult result;
  result.truth.timestamps = ts;
  result.truth.cop = cop;
  std::vector<double> district_q(steps, truth.district_other_load);

  std::uint64_t stream_id = 100;
  for (const auto& b : topology.buildings) {
    const BuildingTruth* bt = truth.building(b.id);
    if (!bt) throw input_error("no truth parameters for building '" + b.id + "'");
    cols[building_key(b, Variable::SP)] = sp;

    std::vector<AhuState> ahus;
    for (const auto& a : b.ahus) {
      AhuState st;
      st.node = &a;
      st.truth = truth.ahu(ahu_path(b, a));
      if (!st.truth || st.truth->zones.size() != a.zones.size())
        throw input_error("truth parameters do not match AHU '" + ahu_path(b, a) + "'");
      st.iat.assign(a.zones.size(), sp.front());
      ahus.push_back(std::move(st));
    }

    // Noiseless per-AHU channels, filled while integrating.
    const std::size_t na = ahus.size();
    std::vector<std::vector<double>> dat(na, std::vector<double>(steps)), rat(na, std::vector<double>(steps)),
        mat(na, std::vector<double>(steps)), vc(na, std::vector<double>(steps));
    std::vector<std::vector<std::vector<double>>> vz(na), iat(na);
    for (std::size_t ai = 0; ai < na; ++ai) {
      vz[ai].assign(ahus[ai].node->zones.size(), std::vector<double>(steps));
      iat[ai].assign(ahus[ai].node->zones.size(), std::vector<double>(steps));
    }

    const int substeps = static_cast<int>(s.interval_s / s.substep_s);
    const auto dt = static_cast<double>(s.substep_s);
    for (std::size_t i = 0; i < steps; ++i) {
      const bool on = is_weekday(ts[i]) && s.ahu_hours.contains(minute_of_day(ts[i]));
      for (std::size_t ai = 0; ai < na; ++ai) {
        auto& st = ahus[ai];
        const auto& zt = st.truth->zones;
        for (int sub = 0; sub < substeps; ++sub) {
          const Timestamp now = ts[i] + static_cast<Timestamp>(sub) * s.substep_s;
          double demand = 0.0, flow_sum = 0.0, weighted = 0.0;
          std::vector<double> flows(zt.size(), 0.0);
          if (on) {
            for (std::size_t j = 0; j < zt.size(); ++j) {
              flows[j] = controller_flow(zt[j], st.iat[j], sp[i]);
              demand += (flows[j] - zt[j].v_min) / (zt[j].v_max - zt[j].v_min);
              flow_sum += flows[j];
              weighted += flows[j] * st.iat[j];
            }
            demand /= static_cast<double>(zt.size());
          }
          // Supply-air reset: warmer discharge air as zone demand falls.
          const double d = st.truth->dat_max - (st.truth->dat_max - st.truth->dat_min) * demand;
          if (sub == 0) {
            dat[ai][i] = d;
            vc[ai][i] = flow_sum;
            double mean_iat = 0.0;
            for (double x : st.iat) mean_iat += x;
            mean_iat /= static_cast<double>(st.iat.size());
            rat[ai][i] = on ? weighted / flow_sum : mean_iat;
            mat[ai][i] = st.truth->k * oat[i] + (1.0 - st.truth->k) * rat[ai][i] + st.truth->alpha;
            for (std::size_t j = 0; j < zt.size(); ++j) {
              vz[ai][j][i] = flows[j];
              iat[ai][j][i] = st.iat[j];
            }
          }
          for (std::size_t j = 0; j < zt.size(); ++j) {
            const auto& z = zt[j];
            const double q = z.ua * (oat[i] - st.iat[j]) + internal_gain(z, now) - cr * flows[j] * (st.iat[j] - d);
            st.iat[j] += dt * q / z.capacitance;
            if (!(st.iat[j] >= -40.0 && st.iat[j] <= 60.0))
              throw simulation_error("simulation diverged in zone '" + zone_path(b, *st.node, st.node->zones[j]) +
                                     "'");
          }
        }
      }
    }

    // Ground-truth disaggregation: truth parameters, no noise.
    std::vector<double> sum_qc(steps, 0.0);
    for (std::size_t ai = 0; ai < na; ++ai)
      for (std::size_t i = 0; i < steps; ++i) sum_qc[i] += cr * vc[ai][i] * (mat[ai][i] - dat[ai][i]);
    disagg::BuildingDiagnostics diag;
    diag.building = b.id;
    diag.residual.assign(steps, 0.0);
    diag.predicted.assign(steps, 0.0);
    diag.fan_power.assign(steps, 0.0);
    diag.flags.assign(steps, 0);
    for (std::size_t ai = 0; ai < na; ++ai) {
      const auto& at = *ahus[ai].truth;
      for (std::size_t j = 0; j < ahus[ai].node->zones.size(); ++j) {
        disagg::ZoneLoadSeries z;
        z.zone = zone_path(b, *ahus[ai].node, ahus[ai].node->zones[j]);
        z.q_z.assign(steps, 0.0);
        z.q_ec.assign(steps, 0.0);
        z.q_eb.assign(steps, 0.0);
        z.p_fan.assign(steps, 0.0);
        z.p_total.assign(steps, 0.0);
        z.flags.assign(steps, 0);
        for (std::size_t i = 0; i < steps; ++i) {
          const double v = vz[ai][j][i], total = vc[ai][i];
          if (total == 0.0) {
            z.flags[i] = disagg::kAhuOff;
            continue;
          }
          const double share = v / total;
          const double qc_i = cr * total * (mat[ai][i] - dat[ai][i]);
          z.q_z[i] = cr * v * (iat[ai][j][i] - dat[ai][i]);
          z.q_ec[i] = z.q_z[i] + cr * v * (mat[ai][i] - rat[ai][i]);
          z.p_fan[i] = share * fan_kw(at, total);
          if (sum_qc[i] > 0.0) {
            z.q_eb[i] = bt->l * z.q_ec[i] + share * (qc_i / sum_qc[i]) * bt->beta;
            z.p_total[i] = z.q_eb[i] / cop[i] + z.p_fan[i];
          } else {
            z.flags[i] = disagg::kNoAllocation;
            z.q_eb[i] = z.p_total[i] = kMissing;
          }
          diag.predicted[i] += bt->l * z.q_ec[i];
          diag.fan_power[i] += z.p_fan[i];
        }
        result.truth.zones.push_back(std::move(z));
      }
    }
    for (std::size_t i = 0; i < steps; ++i) diag.predicted[i] += bt->beta;

    // Equation errors, homoskedastic at a fraction of each channel's RMS.
    auto nrng = stream(s.seed, stream_id++);
    std::vector<double> sum_qc_meas(steps, 0.0);
    for (std::size_t ai = 0; ai < na; ++ai) {
      std::vector<double> spread;
      for (std::size_t i = 0; i < steps; ++i)
        if (vc[ai][i] > 0.0) spread.push_back(mat[ai][i] - dat[ai][i]);
      const double sigma = truth.noise.fresh_air * rms(spread);
      for (std::size_t i = 0; i < steps; ++i) {
        if (sigma > 0.0) mat[ai][i] += sigma * unit_normal(nrng);
        sum_qc_meas[i] += cr * vc[ai][i] * (mat[ai][i] - dat[ai][i]);
      }
    }
    std::vector<double> qb(steps);
    for (std::size_t i = 0; i < steps; ++i) qb[i] = bt->l * sum_qc_meas[i] + bt->beta;
    const double qb_sigma = truth.noise.building * rms(qb);
    for (std::size_t i = 0; i < steps; ++i) {
      if (qb_sigma > 0.0) qb[i] += qb_sigma * unit_normal(nrng);
      diag.residual[i] = qb[i] - (bt->l * sum_qc_meas[i] + bt->beta);
      district_q[i] += qb[i];
    }
    result.truth.buildings.push_back(std::move(diag));

    cols[building_key(b, Variable::QB)] = qb;
    for (std::size_t ai = 0; ai < na; ++ai) {
      const auto& a = *ahus[ai].node;
      cols[ahu_key(b, a, Variable::DAT)] = dat[ai];
      cols[ahu_key(b, a, Variable::RAT)] = rat[ai];
      cols[ahu_key(b, a, Variable::MAT)] = mat[ai];
      for (std::size_t j = 0; j < a.zones.size(); ++j) {
        cols[zone_key(b, a, a.zones[j], Variable::VZ)] = vz[ai][j];
        cols[zone_key(b, a, a.zones[j], Variable::IAT)] = iat[ai][j];
      }

      // Commissioning points from 5% to 100% of rated flow.
      const auto& at = *ahus[ai].truth;
      const double rated = at.flow_unit == regression::FlowUnit::Cfm ? a.fan_rated_flow / regression::kCfmToM3s
                                                                     : a.fan_rated_flow;
      std::vector<regression::FanPoint> pts;
      for (int p = 0; p < s.fan_points; ++p) {
        const double f = rated * (0.05 + 0.95 * p / std::max(s.fan_points - 1, 1));
        pts.push_back({f, at.fan_a[0] + f * (at.fan_a[1] + f * (at.fan_a[2] + f * at.fan_a[3]))});
      }
      std::vector<double> powers;
      for (const auto& p : pts) powers.push_back(p.power);
      const double fan_sigma = truth.noise.fan * rms(powers);
      if (fan_sigma > 0.0)
        for (auto& p : pts) p.power += fan_sigma * unit_normal(nrng);
      result.fan_points[ahu_path(b, a)] = std::move(pts);
    }
  }

  std::vector<double> pd(steps);
  for (std::size_t i = 0; i < steps; ++i) pd[i] = district_q[i] / cop[i];
  cols[district_key(Variable::QD)] = district_q;
  cols[district_key(Variable::PD)] = pd;

  result.frame = ChannelFrame(std::move(ts), s.interval_s, std::move(cols));
  return result;
}

ChannelFrame perturb(const ChannelFrame& frame, const std::map<Variable, double>& sigma, std::uint64_t seed) {
  for (const auto& [v, sd] : sigma)
    if (!(sd >= 0.0)) throw input_error("noise sigma must be nonnegative");
  auto rng = stream(seed, 7);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  ChannelFrame::Columns cols = frame.columns();
  for (auto& [key, col] : cols) {
    auto it = sigma.find(key.variable);
    if (it == sigma.end() || it->second == 0.0) continue;
    for (auto& x : col)
      if (!is_missing(x)) x += it->second * unit_normal(rng);
  }
  return ChannelFrame(std::vector<Timestamp>(frame.timestamps().begin(), frame.timestamps().end()),
                      frame.interval_s(), std::move(cols));
}

}  // namespace vpm::synth
