#include "vpm/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "vpm/error.hpp"

namespace vpm::app {

namespace {

fs::path or_default(const fs::path& p, const fs::path& dir, const char* name) { return p.empty() ? dir / name : p; }

int parse_clock(const std::string& s) {
  int h = 0, m = 0;
  if (std::sscanf(s.c_str(), "%d:%d", &h, &m) != 2 || h < 0 || h > 24 || m < 0 || m > 59)
    throw input_error("invalid time of day '" + s + "'");
  return h * 60 + m;
}

}  // namespace

fs::path RunConfig::data_path() const { return or_default(data_csv, output_dir, "data.csv"); }
fs::path RunConfig::catalog_path() const { return or_default(catalog_csv, output_dir, "catalog.csv"); }
fs::path RunConfig::topology_path() const { return or_default(topology_json, output_dir, "topology.json"); }
fs::path RunConfig::fan_points_path() const { return or_default(fan_points_csv, output_dir, "fan_points.csv"); }
fs::path RunConfig::models_path() const { return or_default(models_json, output_dir, "models.json"); }

io::json default_config_json() {
  return {
      {"output_dir", "out"},
      {"data_csv", ""},
      {"catalog_csv", ""},
      {"topology", ""},
      {"fan_points_csv", ""},
      {"models_json", ""},
      {"air", {{"c", 1.006}, {"rho", 1.204}}},
      {"interval_minutes", 15},
      {"daytime", {{"start", "06:00"}, {"end", "20:00"}}},
      {"flow_threshold", 0.1},
      {"lsp", 23.3},
      {"hsp", 24.4},
      {"cop_floor_fraction", 0.01},
      {"cop_band", {1.0, 15.0}},
      {"coverage_threshold", 0.8},
      {"concentration_fraction", 0.3},
      {"fan_donors", io::json::object()},
      {"energy_window", {{"zone", "operating"}, {"building", "full_day"}}},
      {"building_fit_samples", "all"},
      {"simulate",
       {{"days", 54},
        {"seed", 42},
        {"buildings", {"A", "B", "C"}},
        {"ahus_per_building", 3},
        {"zones_per_ahu", 10},
        {"commissioned", io::json::array()},
        {"noise", {{"fresh_air", 0.0}, {"building", 0.0}, {"fan", 0.0}}},
        {"fan_points", 20},
        {"schedule", "alternating"}}},
  };
}

void apply_override(io::json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw input_error("override must look like key=value: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  io::json parsed = io::json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;
  io::json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw input_error("empty key segment in override '" + assignment + "'");
    if (!node->is_object()) *node = io::json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(parsed);
}

RunConfig parse_config(const io::json& j) {
  RunConfig c;
  try {
    io::json merged = default_config_json();
    merged.merge_patch(j);
    c.output_dir = merged.at("output_dir").get<std::string>();
    c.data_csv = merged.at("data_csv").get<std::string>();
    c.catalog_csv = merged.at("catalog_csv").get<std::string>();
    c.topology_json = merged.at("topology").get<std::string>();
    c.fan_points_csv = merged.at("fan_points_csv").get<std::string>();
    c.models_json = merged.at("models_json").get<std::string>();
    c.air.c = merged.at("air").at("c").get<double>();
    c.air.rho = merged.at("air").at("rho").get<double>();
    c.air.validate();
    const double minutes = merged.at("interval_minutes").get<double>();
    if (!(minutes > 0.0)) throw input_error("interval_minutes must be positive");
    c.interval_s = static_cast<std::int64_t>(std::llround(minutes * 60.0));
    c.daytime.start_minute = parse_clock(merged.at("daytime").at("start").get<std::string>());
    c.daytime.end_minute = parse_clock(merged.at("daytime").at("end").get<std::string>());
    c.flow_threshold = merged.at("flow_threshold").get<double>();
    c.lsp = merged.at("lsp").get<double>();
    c.hsp = merged.at("hsp").get<double>();
    if (c.lsp == c.hsp) throw input_error("lsp and hsp set-points must differ");
    c.cascade.cop_floor_fraction = merged.at("cop_floor_fraction").get<double>();
    c.cascade.cop_band.low = merged.at("cop_band").at(0).get<double>();
    c.cascade.cop_band.high = merged.at("cop_band").at(1).get<double>();
    c.coverage_threshold = merged.at("coverage_threshold").get<double>();
    c.top_fraction = merged.at("concentration_fraction").get<double>();
    for (const auto& [k, v] : merged.at("fan_donors").items()) c.fan_donors[k] = v.get<std::string>();
    const auto zw = report::parse_energy_window(merged.at("energy_window").at("zone").get<std::string>());
    const auto bw = report::parse_energy_window(merged.at("energy_window").at("building").get<std::string>());
    if (!zw || !bw) throw input_error("energy_window entries must be 'operating' or 'full_day'");
    c.zone_window = *zw;
    c.building_window = *bw;
    const auto fit_samples = merged.at("building_fit_samples").get<std::string>();
    if (fit_samples != "all" && fit_samples != "operating")
      throw input_error("building_fit_samples must be 'all' or 'operating'");
    c.building_fit_all_hours = fit_samples == "all";

    const auto& s = merged.at("simulate");
    c.simulate.days = s.at("days").get<int>();
    c.simulate.seed = s.at("seed").get<std::uint64_t>();
    c.simulate.buildings = s.at("buildings").get<std::vector<std::string>>();
    c.simulate.ahus_per_building = s.at("ahus_per_building").get<int>();
    c.simulate.zones_per_ahu = s.at("zones_per_ahu").get<int>();
    c.simulate.commissioned = s.at("commissioned").get<std::vector<std::string>>();
    c.simulate.noise.fresh_air = s.at("noise").at("fresh_air").get<double>();
    c.simulate.noise.building = s.at("noise").at("building").get<double>();
    c.simulate.noise.fan = s.at("noise").at("fan").get<double>();
    c.simulate.fan_points = s.at("fan_points").get<int>();
    const auto sched = s.at("schedule").get<std::string>();
    if (sched == "alternating") c.simulate.schedule = synth::SetpointSchedule::Alternating;
    else if (sched == "constant_lsp") c.simulate.schedule = synth::SetpointSchedule::ConstantLsp;
    else if (sched == "constant_hsp") c.simulate.schedule = synth::SetpointSchedule::ConstantHsp;
    else throw input_error("unknown simulate.schedule '" + sched + "'");
  } catch (const io::json::exception& e) {
    throw input_error(std::string("config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------

ChannelFrame load_frame(const RunConfig& cfg) {
  const auto readings = io::parse_readings_csv(io::read_file(cfg.data_path()));
  if (readings.empty()) throw input_error("no measurements in '" + cfg.data_path().string() + "'");
  const auto catalog = io::parse_catalog_csv(io::read_file(cfg.catalog_path()));
  return align_channels(readings, catalog, cfg.interval_s);
}

Topology load_topology(const RunConfig& cfg) {
  const auto text = io::read_file(cfg.topology_path());
  const auto j = io::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw input_error("topology file is not valid JSON");
  return io::topology_from_json(j);
}

regression::FittedModels fit_models(const ChannelFrame& frame, const Topology& topology,
                                    const std::map<std::string, io::FanPointSet>& fan_points, const RunConfig& cfg) {
  regression::FittedModels models;
  std::map<std::string, double> rated;
  for (const auto& b : topology.buildings) {
    std::vector<std::vector<double>> coil;
    std::vector<bool> any_operating(frame.size(), false);
    for (const auto& a : b.ahus) {
      const auto mask = operating_mask(frame, b, a, cfg.flow_threshold, cfg.daytime);
      for (std::size_t t = 0; t < mask.size(); ++t) any_operating[t] = any_operating[t] || mask[t];
      models.fresh_air.push_back(regression::fit_fresh_air(frame, b, a, mask, cfg.air));
      coil.push_back(thermo::ahu_load_series(frame, b, a, cfg.air).coil_load);
      rated[ahu_path(b, a)] = a.fan_rated_power;
      auto it = fan_points.find(ahu_path(b, a));
      if (it != fan_points.end()) {
        try {
          auto fan = regression::fit_fan(it->second.points, it->second.flow_unit, it->second.power_unit);
          fan.ahu = ahu_path(b, a);
          models.fans.push_back(std::move(fan));
        } catch (const Error& e) {
          throw fit_error("fan fit of AHU '" + ahu_path(b, a) + "': " + e.what());
        }
      }
    }
    models.buildings.push_back(
        regression::fit_building(frame, b, coil, cfg.building_fit_all_hours ? std::vector<bool>{} : any_operating));
  }

  // Fans without commissioning data borrow a donor curve scaled by rated power.
  std::vector<regression::FanModel> scaled;
  for (const auto& b : topology.buildings)
    for (const auto& a : b.ahus) {
      const auto path = ahu_path(b, a);
      if (models.fan_for(path)) continue;
      const regression::FanModel* donor = nullptr;
      if (auto it = cfg.fan_donors.find(path); it != cfg.fan_donors.end()) {
        donor = models.fan_for(it->second);
        if (!donor) throw fit_error("fan donor '" + it->second + "' for AHU '" + path + "' has no fitted curve");
      } else {
        double best = INFINITY;
        for (const auto& f : models.fans) {
          const double gap = std::abs(rated.at(f.ahu) - a.fan_rated_power);
          if (gap < best) {
            best = gap;
            donor = &f;
          }
        }
      }
      if (!donor) throw fit_error("no fan curve available for AHU '" + path + "'");
      auto m = regression::scale_fan_model(*donor, a.fan_rated_power, rated.at(donor->ahu));
      m.ahu = path;
      scaled.push_back(std::move(m));
    }
  for (auto& m : scaled) models.fans.push_back(std::move(m));
  return models;
}

namespace {

std::string row(const char* name, double value, double se, double p) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "  %-10s %12.3f %10.3f %10.3f\n", name, value, se, p);
  return buf;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

}  // namespace

std::string fit_report_text(const regression::FittedModels& models) {
  std::string out;
  char buf[256];
  const std::string head = "  " + std::string(10, ' ') + "        Value   Std. Err    P-Value\n";
  for (const auto& m : models.fresh_air) {
    std::snprintf(buf, sizeof buf, "Fresh-air model %s  (observations %zu, R2 %.3f, Prob (F-statistic) %s)%s\n",
                  m.ahu.c_str(), m.n_obs, m.r2, sci(m.f_statistic_p).c_str(),
                  m.k_out_of_range ? "  WARNING: k outside [0, 1]" : "");
    out += buf + head;
    out += row("Intercept", m.alpha, m.std_err_alpha, m.p_value_alpha);
    out += row("Slope", m.k, m.std_err_k, m.p_value_k);
    out += '\n';
  }
  for (const auto& m : models.buildings) {
    std::snprintf(buf, sizeof buf, "Building model %s  (observations %zu, R2 %.3f, Prob (F-statistic) %s)\n",
                  m.building.c_str(), m.n_obs, m.r2, sci(m.f_statistic_p).c_str());
    out += buf + head;
    out += row("Intercept", m.beta, m.std_err_beta, m.p_value_beta);
    out += row("Slope", m.l, m.std_err_l, m.p_value_l);
    out += '\n';
  }
  for (const auto& f : models.fans) {
    std::snprintf(buf, sizeof buf, "Fan model %s  [%s vs %s, R2 %.3f]%s\n  a0 %.6g  a1 %.6g  a2 %.6g  a3 %.6g\n",
                  f.ahu.c_str(), std::string(regression::to_string(f.power_unit)).c_str(),
                  std::string(regression::to_string(f.flow_unit)).c_str(), f.r2,
                  f.donor ? (" scaled from " + *f.donor).c_str() : "", f.a[0], f.a[1], f.a[2], f.a[3]);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------

void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const auto& sc = cfg.simulate;
  if (sc.days < 4) throw input_error("simulate.days must be at least 4");
  if (sc.ahus_per_building < 1 || sc.zones_per_ahu < 1) throw input_error("simulate needs at least one AHU and zone");
  const Topology topo = synth::make_topology(sc.buildings, sc.ahus_per_building, sc.zones_per_ahu);
  topo.validate();
  synth::GroundTruth truth = synth::default_truth(topo, sc.seed);
  truth.noise = sc.noise;

  auto commissioned = [&](const std::string& b) {
    return sc.commissioned.empty() || std::find(sc.commissioned.begin(), sc.commissioned.end(), b) != sc.commissioned.end();
  };
  // Uncommissioned fans follow the rated-power scaling of the nearest commissioned fan.
  for (auto& bt : truth.buildings) {
    if (commissioned(bt.building)) continue;
    for (std::size_t ai = 0; ai < bt.ahus.size(); ++ai) {
      const auto& node = topo.buildings[static_cast<std::size_t>(&bt - truth.buildings.data())].ahus[ai];
      const synth::AhuTruth* donor = nullptr;
      double donor_rated = 0.0, best = INFINITY;
      for (const auto& b : topo.buildings) {
        if (!commissioned(b.id)) continue;
        for (const auto& a : b.ahus) {
          const double gap = std::abs(a.fan_rated_power - node.fan_rated_power);
          if (gap < best) {
            best = gap;
            donor = truth.ahu(ahu_path(b, a));
            donor_rated = a.fan_rated_power;
          }
        }
      }
      if (!donor) throw input_error("simulate.commissioned must name at least one building");
      for (std::size_t j = 0; j < 4; ++j) bt.ahus[ai].fan_a[j] = donor->fan_a[j] * node.fan_rated_power / donor_rated;
    }
  }

  synth::SimulationSettings settings;
  settings.days = sc.days;
  settings.seed = sc.seed;
  settings.interval_s = cfg.interval_s;
  settings.lsp = cfg.lsp;
  settings.hsp = cfg.hsp;
  settings.schedule = sc.schedule;
  settings.fan_points = sc.fan_points;
  settings.ahu_hours = cfg.daytime;
  const auto result = synth::simulate(topo, truth, settings);

  const fs::path dir = cfg.output_dir;
  io::write_atomic(dir / "data.csv", io::readings_csv(result.frame));
  io::write_atomic(dir / "catalog.csv", io::catalog_csv(result.frame));
  io::write_atomic(dir / "topology.json", io::topology_to_json(topo).dump(2) + "\n");
  io::write_atomic(dir / "truth.json", io::truth_to_json(truth).dump(2) + "\n");
  std::map<std::string, io::FanPointSet> sets;
  for (const auto& [path, pts] : result.fan_points) {
    const auto b = path.substr(0, path.find('/'));
    if (!commissioned(b)) continue;
    const auto* at = truth.ahu(path);
    sets[path] = {at->flow_unit, at->power_unit, pts};
  }
  io::write_atomic(dir / "fan_points.csv", io::fan_points_csv(sets));
  for (const auto& b : topo.buildings)
    io::write_atomic(dir / ("truth_zone_loads_" + b.id + ".csv"), io::zone_loads_csv(result.truth, b.id));
  log << "simulated " << sc.days << " days, " << topo.buildings.size() << " buildings, " << topo.zone_count()
      << " zones, " << result.frame.size() << " samples -> " << dir.string() << "\n";
}

void cmd_fit(const RunConfig& cfg, std::ostream& log) {
  const auto frame = load_frame(cfg);
  const auto topo = load_topology(cfg);
  std::map<std::string, io::FanPointSet> points;
  if (fs::exists(cfg.fan_points_path())) points = io::parse_fan_points_csv(io::read_file(cfg.fan_points_path()));
  const auto models = fit_models(frame, topo, points, cfg);
  const auto text = fit_report_text(models);
  io::write_atomic(cfg.models_path(), io::models_to_json(models).dump(2) + "\n");
  io::write_atomic(cfg.output_dir / "fit_report.txt", text);
  log << text;
}

void cmd_disaggregate(const RunConfig& cfg, std::ostream& log) {
  const auto frame = load_frame(cfg);
  const auto topo = load_topology(cfg);
  const auto text = io::read_file(cfg.models_path());
  const auto j = io::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw input_error("models file is not valid JSON");
  const auto models = io::models_from_json(j);

  // Models for entities the topology does not know are a mismatch too.
  std::map<std::string, bool> known;
  for (const auto& b : topo.buildings) {
    known[b.id] = true;
    for (const auto& a : b.ahus) known[ahu_path(b, a)] = true;
  }
  for (const auto& m : models.fresh_air)
    if (!known.count(m.ahu)) throw fit_error("model for unknown AHU '" + m.ahu + "'");
  for (const auto& m : models.fans)
    if (!known.count(m.ahu)) throw fit_error("fan model for unknown AHU '" + m.ahu + "'");
  for (const auto& m : models.buildings)
    if (!known.count(m.building)) throw fit_error("model for unknown building '" + m.building + "'");

  const auto result = disagg::run_cascade(frame, topo, models, cfg.air, cfg.cascade);
  for (const auto& b : topo.buildings) {
    io::write_atomic(cfg.output_dir / ("zone_loads_" + b.id + ".csv"), io::zone_loads_csv(result, b.id));
    io::write_atomic(cfg.output_dir / ("diagnostics_" + b.id + ".csv"), io::diagnostics_csv(result, b.id));
  }
  for (const auto& b : topo.buildings) {
    double sum = 0.0, lo = 1.0;
    std::size_t n = 0;
    for (const auto& z : result.zones) {
      if (z.zone.compare(0, b.id.size() + 1, b.id + "/") != 0) continue;
      const double c = z.coverage();
      sum += c;
      lo = std::min(lo, c);
      ++n;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "building %s: %zu zones, mean coverage %.1f%%, min coverage %.1f%%\n",
                  b.id.c_str(), n, n ? 100.0 * sum / static_cast<double>(n) : 0.0, 100.0 * lo);
    log << buf;
  }
}

void cmd_report(const RunConfig& cfg, std::ostream& log) {
  const auto frame = load_frame(cfg);
  const auto topo = load_topology(cfg);
  const auto calendar = label_days(frame, cfg.lsp, cfg.hsp);
  io::ZoneLoadTable loads;
  for (const auto& b : topo.buildings)
    io::parse_zone_loads_csv(io::read_file(cfg.output_dir / ("zone_loads_" + b.id + ".csv")), loads);

  report::ReportOptions opts;
  opts.daytime = cfg.daytime;
  opts.zone_window = cfg.zone_window;
  opts.building_window = cfg.building_window;
  opts.coverage_threshold = cfg.coverage_threshold;
  opts.top_fraction = cfg.top_fraction;
  const auto rep = report::build_report(topo, loads, cfg.interval_s, calendar, frame, opts);

  io::write_atomic(cfg.output_dir / "report.json", report::report_to_json(rep).dump(2) + "\n");
  io::write_atomic(cfg.output_dir / "thermal.csv", report::thermal_csv(rep));
  for (const auto& h : rep.heterogeneity) {
    io::write_atomic(cfg.output_dir / ("lorenz_" + h.building + ".svg"), report::lorenz_svg(h));
    io::write_atomic(cfg.output_dir / ("heatmap_" + h.building + ".svg"), report::share_heatmap_svg(h.building, rep));
  }
  io::write_atomic(cfg.output_dir / "ef_distribution.svg", report::ef_distribution_svg(rep));
  io::write_atomic(cfg.output_dir / "delta_t.svg", report::delta_t_svg(rep));

  log << "calendar: " << calendar.count(Regime::Lsp) << " LSP days, " << calendar.count(Regime::Hsp) << " HSP days\n";
  for (const auto& b : rep.buildings) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "building %s: LSP %.1f kWh/day, HSP %.1f kWh/day, EF %.2f%%\n", b.id.c_str(),
                  b.e_lsp, b.e_hsp, 100.0 * b.ef);
    log << buf;
  }
}

void cmd_pipeline(const RunConfig& cfg, std::ostream& log) {
  cmd_simulate(cfg, log);
  cmd_fit(cfg, log);
  cmd_disaggregate(cfg, log);
  cmd_report(cfg, log);
}

}  // namespace vpm::app
