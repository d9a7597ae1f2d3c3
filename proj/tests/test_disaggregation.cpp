#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "vpm/app.hpp"
#include "vpm/disaggregation.hpp"
#include "vpm/error.hpp"
#include "vpm/synth.hpp"

using namespace vpm;
using namespace vpm::disagg;

namespace {

const AirProperties air{};

FreshAirModel fa(double k, double alpha) {
  FreshAirModel m;
  m.k = k;
  m.alpha = alpha;
  return m;
}

BuildingModel bm(double l, double beta) {
  BuildingModel m;
  m.l = l;
  m.beta = beta;
  return m;
}

struct Sim {
  Topology topo;
  synth::GroundTruth truth;
  synth::SimulationResult result;
};

Sim simulate_small(int ahus, int zones, std::uint64_t seed = 5, int days = 4) {
  Sim s;
  s.topo = synth::make_topology({"A"}, ahus, zones);
  s.truth = synth::default_truth(s.topo, seed);
  synth::SimulationSettings settings;
  settings.days = days;
  settings.seed = seed;
  s.result = synth::simulate(s.topo, s.truth, settings);
  return s;
}

regression::FittedModels fitted(const Sim& s) {
  std::map<std::string, io::FanPointSet> pts;
  for (const auto& [path, p] : s.result.fan_points) pts[path] = {s.truth.ahu(path)->flow_unit, s.truth.ahu(path)->power_unit, p};
  return app::fit_models(s.result.frame, s.topo, pts, app::RunConfig{});
}

}  // namespace

TEST_CASE("zone-equivalent coil load") {
  CHECK(zone_equiv_coil(5.0, 0.7, 30.0, 23.0, fa(0, 0), air) == 5.0);
  CHECK(zone_equiv_coil(0.0, 0.0, 30.0, 23.0, fa(0.3, -0.5), air) == 0.0);
  const double cr = air.c_rho();
  CHECK(zone_equiv_coil(6.056, 0.5, 30.0, 23.0, fa(0.3, -0.5), air) ==
        doctest::Approx(6.056 + cr * 0.5 * (0.3 * 7.0 - 0.5)).epsilon(1e-14));
  CHECK(zone_equiv_coil(6.056, 0.5, 30.0, 23.0, fa(0.3, -0.5), air) == doctest::Approx(7.025).epsilon(1e-4));
}

TEST_CASE("zone-equivalent building load") {
  CHECK(zone_equiv_building(7.0, 0.3, 1.2, 40.0, 90.0, bm(1.0, 0.0)) == 7.0);
  CHECK(zone_equiv_building(7.0, 1.2, 1.2, 40.0, 40.0, bm(1.25, 30.0)) == doctest::Approx(1.25 * 7.0 + 30.0));
  CHECK(is_missing(zone_equiv_building(7.0, 0.0, 0.0, 40.0, 40.0, bm(1.25, 30.0))));
  CHECK(is_missing(zone_equiv_building(7.0, 0.3, 1.2, 0.0, 0.0, bm(1.25, 30.0))));
}

TEST_CASE("property: the building allocation conserves beta") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.01, 2.0), q(1.0, 200.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_ahu = 1 + static_cast<int>(rng() % 4);
    std::vector<std::vector<double>> vz(n_ahu);
    std::vector<double> qc(n_ahu);
    double sum_qc = 0.0;
    for (int i = 0; i < n_ahu; ++i) {
      vz[i].resize(1 + rng() % 6);
      for (auto& v : vz[i]) v = u(rng);
      qc[i] = q(rng);
      sum_qc += qc[i];
    }
    const auto model = bm(1.0 + u(rng) / 4, q(rng));
    double total = 0.0, qec_sum = 0.0;
    for (int i = 0; i < n_ahu; ++i) {
      double vc = 0.0;
      for (double v : vz[i]) vc += v;
      for (double v : vz[i]) {
        const double qec = q(rng) / 10.0;
        qec_sum += qec;
        total += zone_equiv_building(qec, v, vc, qc[i], sum_qc, model);
      }
    }
    CHECK(total == doctest::Approx(model.l * qec_sum + model.beta).epsilon(1e-12));
  }
}

TEST_CASE("zone fan power") {
  CHECK(zone_fan_power(2.0, 2.0, 11.0) == 11.0);
  for (int j = 0; j < 4; ++j) CHECK(zone_fan_power(0.5, 2.0, 11.0) == 11.0 / 4);
  CHECK(is_missing(zone_fan_power(0.0, 0.0, 11.0)));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 10);
    double vc = 0.0;
    for (auto& x : v) vc += (x = u(rng));
    double sum = 0.0;
    for (double x : v) sum += zone_fan_power(x, vc, 17.3);
    CHECK(sum == doctest::Approx(17.3).epsilon(1e-12));

    // Raising one zone's flow never lowers its share of the fan.
    const double others = vc - v[0];
    const double bump = v[0] + u(rng);
    CHECK(zone_fan_power(bump, others + bump, 1.0) >= zone_fan_power(v[0], vc, 1.0));
  }
}

TEST_CASE("district COP") {
  CHECK(district_cop(3000.0, 600.0, 1.0).value == 5.0);
  CHECK_FALSE(district_cop(3000.0, 600.0, 1.0).out_of_band);
  CHECK(is_missing(district_cop(3000.0, 0.0, 0.0).value));
  CHECK(is_missing(district_cop(3000.0, 5.0, 6.0).value));
  const auto zero = district_cop(0.0, 500.0, 1.0);
  CHECK(zero.value == 0.0);
  CHECK(zero.out_of_band);
  CHECK(district_cop(3000.0, 100.0, 1.0).out_of_band);
}

TEST_CASE("zone total electrical load") {
  CHECK(zone_total_electrical(10.0, 5.0, 2.0) == 4.0);
  CHECK(zone_total_electrical(10.0, 1e9, 2.0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(is_missing(zone_total_electrical(10.0, kMissing, 2.0)));
  CHECK(is_missing(zone_total_electrical(10.0, 0.0, 2.0)));
}

TEST_CASE("cascade with truth parameters reproduces the simulator's zone loads") {
  const auto s = simulate_small(2, 3);
  const auto r = run_cascade(s.result.frame, s.topo, s.truth.as_models(), air);
  REQUIRE(r.zones.size() == s.result.truth.zones.size());
  std::size_t compared = 0;
  for (std::size_t z = 0; z < r.zones.size(); ++z) {
    CHECK(r.zones[z].zone == s.result.truth.zones[z].zone);
    for (std::size_t t = 0; t < r.timestamps.size(); ++t) {
      const double want = s.result.truth.zones[z].p_total[t];
      const double got = r.zones[z].p_total[t];
      CHECK(is_missing(want) == is_missing(got));
      if (is_missing(want)) continue;
      CHECK(got == doctest::Approx(want).epsilon(1e-9).scale(std::abs(want) + 1e-9));
      ++compared;
    }
  }
  CHECK(compared > 1000);
}

TEST_CASE("cascade with fitted parameters matches ground truth on noiseless data") {
  const auto s = simulate_small(2, 3);
  const auto r = run_cascade(s.result.frame, s.topo, fitted(s), air);
  double worst = 0.0;
  for (std::size_t z = 0; z < r.zones.size(); ++z)
    for (std::size_t t = 0; t < r.timestamps.size(); ++t) {
      const double want = s.result.truth.zones[z].p_total[t];
      if (is_missing(want) || want == 0.0) continue;
      worst = std::max(worst, test::rel_err(r.zones[z].p_total[t], want));
    }
  CHECK(worst <= 1e-6);
}

TEST_CASE("cascade conservation at every valid timestamp") {
  const auto s = simulate_small(3, 4, 9);
  const auto models = fitted(s);
  const auto r = run_cascade(s.result.frame, s.topo, models, air);
  const auto& b = s.topo.buildings[0];
  const auto& model = *models.building_for("A");
  std::size_t valid = 0;
  for (std::size_t t = 0; t < r.timestamps.size(); ++t) {
    double q_eb = 0.0, q_ec = 0.0, p_fan = 0.0, p_total = 0.0;
    bool ok = true;
    for (const auto& z : r.zones) {
      if (z.flags[t] & (kNoAllocation | kInputMissing)) ok = false;
      q_eb += z.q_eb[t];
      q_ec += z.q_ec[t];
      p_fan += z.p_fan[t];
      p_total += z.p_total[t];
    }
    // Independent fan total from the fitted curves and measured AHU flows.
    double fan_total = 0.0;
    bool any_on = false;
    for (const auto& a : b.ahus) {
      double vc = 0.0;
      for (const auto& zn : a.zones) vc += s.result.frame.column(zone_key(b, a, zn, Variable::VZ))[t];
      if (vc > 0.0) {
        any_on = true;
        fan_total += models.fan_for(ahu_path(b, a))->power_kw(vc);
      }
    }
    CHECK(p_fan == doctest::Approx(fan_total).epsilon(1e-9));
    if (!ok || !any_on) continue;
    ++valid;
    const double predicted = model.l * q_ec + model.beta;
    CHECK(std::abs(q_eb - predicted) <= 1e-9 * std::abs(predicted));
    CHECK(r.buildings[0].predicted[t] == doctest::Approx(predicted).epsilon(1e-12));
    CHECK(r.buildings[0].fan_power[t] == doctest::Approx(fan_total).epsilon(1e-12));
    if (!is_missing(r.cop[t]))
      CHECK(p_total == doctest::Approx(predicted / r.cop[t] + fan_total).epsilon(1e-9));
  }
  CHECK(valid > 100);
}

TEST_CASE("residual is reported against measured coil loads") {
  const auto s = simulate_small(1, 2);
  auto models = s.truth.as_models();
  models.buildings[0].beta += 5.0;
  const auto r = run_cascade(s.result.frame, s.topo, models, air);
  const auto& res = r.buildings[0].residual;
  std::size_t n = 0;
  for (double v : res)
    if (!is_missing(v)) {
      CHECK(v == doctest::Approx(-5.0).epsilon(1e-9));
      ++n;
    }
  CHECK(n == res.size());
}

TEST_CASE("cascade on an all-zero frame yields zeros") {
  const auto topo = test::one_ahu(2);
  const auto& b = topo.buildings[0];
  const auto& a = b.ahus[0];
  const std::size_t n = 8;
  const std::vector<double> zero(n, 0.0);
  ChannelFrame::Columns cols;
  for (const auto& z : a.zones) {
    cols[zone_key(b, a, z, Variable::VZ)] = zero;
    cols[zone_key(b, a, z, Variable::IAT)] = zero;
  }
  cols[ahu_key(b, a, Variable::MAT)] = zero;
  cols[ahu_key(b, a, Variable::DAT)] = zero;
  cols[building_key(b, Variable::QB)] = zero;
  cols[district_key(Variable::OAT)] = zero;
  cols[district_key(Variable::QD)] = zero;
  cols[district_key(Variable::PD)] = zero;
  const ChannelFrame f(test::grid(0, n), 900, cols);
  regression::FittedModels m;
  m.fresh_air.push_back(fa(0.3, -0.5));
  m.fresh_air[0].ahu = "B/AHU1";
  m.buildings.push_back(bm(1.2, 30.0));
  m.buildings[0].building = "B";
  regression::FanModel fan;
  fan.ahu = "B/AHU1";
  fan.a = {13.45, 0.00077, 4.3e-8, -1.33e-12};
  m.fans.push_back(fan);
  const auto r = run_cascade(f, topo, m, air);
  for (const auto& z : r.zones)
    for (std::size_t t = 0; t < n; ++t) {
      CHECK(z.q_z[t] == 0.0);
      CHECK(z.q_ec[t] == 0.0);
      CHECK(z.q_eb[t] == 0.0);
      CHECK(z.p_fan[t] == 0.0);
      CHECK(z.p_total[t] == 0.0);
      CHECK((z.flags[t] & kAhuOff));
    }
  CHECK(r.zones[0].coverage() == 1.0);
}

TEST_CASE("identical zones receive identical loads") {
  const auto topo = synth::make_topology({"A"}, 1, 2);
  auto truth = synth::default_truth(topo, 1);
  truth.buildings[0].ahus[0].zones[1] = truth.buildings[0].ahus[0].zones[0];
  synth::SimulationSettings settings;
  settings.days = 4;
  const auto sim = synth::simulate(topo, truth, settings);
  const auto r = run_cascade(sim.frame, topo, truth.as_models(), air);
  for (std::size_t t = 0; t < r.timestamps.size(); ++t) {
    CHECK(r.zones[0].q_eb[t] == r.zones[1].q_eb[t]);
    CHECK(r.zones[0].p_fan[t] == r.zones[1].p_fan[t]);
    CHECK(r.zones[0].p_total[t] == r.zones[1].p_total[t]);
  }
}

TEST_CASE("excluded zones still receive loads") {
  auto s = simulate_small(1, 3);
  s.topo.buildings[0].ahus[0].zones[1].excluded = true;
  const auto r = run_cascade(s.result.frame, s.topo, s.truth.as_models(), air);
  CHECK(r.zones[1].coverage() > 0.9);
}

TEST_CASE("missing models are rejected") {
  const auto s = simulate_small(1, 2);
  auto m = s.truth.as_models();
  m.fans.clear();
  try {
    run_cascade(s.result.frame, s.topo, m, air);
    FAIL("expected fit error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Fit);
    CHECK(std::string(e.what()).find("A/AHU1") != std::string::npos);
  }
}

TEST_CASE("COP floor is a fraction of the median plant power") {
  const ChannelFrame f(test::grid(0, 5), 900, {{district_key(Variable::PD), {100, 200, 300, 400, 500}}});
  CHECK(cop_floor(f, 0.01) == doctest::Approx(3.0));
}
