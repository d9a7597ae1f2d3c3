#include "vpm/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vpm/error.hpp"

namespace vpm::report {

std::optional<EnergyWindow> parse_energy_window(std::string_view s) {
  if (s == "operating") return EnergyWindow::Operating;
  if (s == "full_day") return EnergyWindow::FullDay;
  return std::nullopt;
}

std::vector<EntityFlex> summarize(const metrics::DailyEnergyTable& table) {
  std::vector<EntityFlex> out(table.entities.size());
  std::vector<double> savings(table.entities.size(), 0.0);
  for (std::size_t e = 0; e < table.entities.size(); ++e) {
    auto& f = out[e];
    f.id = table.entities[e];
    f.e_lsp = table.mean(e, Regime::Lsp);
    f.e_hsp = table.mean(e, Regime::Hsp);
    if (!is_missing(f.e_lsp) && !is_missing(f.e_hsp)) {
      savings[e] = f.e_lsp - f.e_hsp;
      if (f.e_lsp > 0.0) f.ef = metrics::energy_flexibility(f.e_lsp, f.e_hsp);
    }
  }
  if (std::any_of(savings.begin(), savings.end(), [](double s) { return s > 0.0; })) {
    const auto shares = metrics::flexibility_shares(savings);
    for (std::size_t e = 0; e < out.size(); ++e)
      if (!is_missing(out[e].e_lsp) && !is_missing(out[e].e_hsp)) out[e].efs = shares[e];
  }
  return out;
}

namespace {

metrics::SampleWindow window_for(EnergyWindow w, const DaytimeWindow& daytime) {
  return w == EnergyWindow::Operating ? metrics::operating_window(daytime) : metrics::full_day_window();
}

std::vector<double> sum_series(const std::vector<const std::vector<double>*>& members, std::size_t n) {
  std::vector<double> out(n, 0.0);
  for (const auto* m : members)
    for (std::size_t t = 0; t < n; ++t) out[t] += (*m)[t];
  return out;
}

}  // namespace

FlexReport build_report(const Topology& topology, const io::ZoneLoadTable& loads, std::int64_t interval_s,
                        const ExperimentCalendar& calendar, const ChannelFrame& frame, const ReportOptions& options) {
  if (calendar.count(Regime::Lsp) == 0 || calendar.count(Regime::Hsp) == 0)
    throw metric_error("flexibility undefined: the calendar needs both LSP and HSP days");
  const std::size_t n = loads.timestamps.size();
  const auto zone_window = window_for(options.zone_window, options.daytime);
  const auto building_window = window_for(options.building_window, options.daytime);

  FlexReport report;
  std::vector<std::string> building_ids;
  std::vector<std::vector<double>> building_series;
  for (const auto& b : topology.buildings) {
    std::vector<std::string> zone_ids, ahu_ids;
    std::vector<std::vector<double>> zone_series, ahu_series;
    std::vector<const std::vector<double>*> all_members;
    for (const auto& a : b.ahus) {
      std::vector<const std::vector<double>*> members;
      for (const auto& z : a.zones) {
        const auto path = zone_path(b, a, z);
        auto it = loads.p_total.find(path);
        if (it == loads.p_total.end()) throw input_error("zone loads missing zone '" + path + "'");
        members.push_back(&it->second);
        all_members.push_back(&it->second);
        if (!z.excluded) {
          zone_ids.push_back(path);
          zone_series.push_back(it->second);
        }
      }
      ahu_ids.push_back(ahu_path(b, a));
      ahu_series.push_back(sum_series(members, n));
    }
    building_ids.push_back(b.id);
    building_series.push_back(sum_series(all_members, n));

    const auto zone_table = metrics::daily_energy(loads.timestamps, interval_s, zone_ids, zone_series, calendar,
                                                  zone_window, options.coverage_threshold);
    const auto ahu_table = metrics::daily_energy(loads.timestamps, interval_s, ahu_ids, ahu_series, calendar,
                                                 zone_window, options.coverage_threshold);
    auto zones = summarize(zone_table);
    auto ahus = summarize(ahu_table);

    Heterogeneity h;
    h.building = b.id;
    std::vector<double> use, shares;
    std::vector<metrics::ZoneEnergy> energies;
    for (const auto& z : zones) {
      if (is_missing(z.e_lsp) || is_missing(z.e_hsp)) continue;
      use.push_back(std::max(z.e_lsp, 0.0));
      shares.push_back(is_missing(z.efs) ? 0.0 : z.efs);
      energies.push_back({z.id, z.e_lsp, z.e_hsp});
    }
    auto total = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s;
    };
    if (total(use) > 0.0) {
      h.gini_eu = metrics::gini(use);
      h.lorenz_eu = metrics::lorenz(use);
    }
    if (total(shares) > 0.0) {
      h.gini_ef = metrics::gini(shares);
      h.lorenz_ef = metrics::lorenz(shares);
    }
    h.concentration = metrics::concentration(energies, metrics::OrderBy::EnergyUse, options.top_fraction);
    report.heterogeneity.push_back(std::move(h));

    for (auto& z : zones) report.zones.push_back(std::move(z));
    for (auto& a : ahus) report.ahus.push_back(std::move(a));

    for (const auto& a : b.ahus)
      for (const auto& z : a.zones) {
        if (z.excluded) continue;
        ThermalRow row;
        row.zone = zone_path(b, a, z);
        try {
          row.stats = metrics::thermal_impact(frame, calendar, zone_key(b, a, z, Variable::IAT), options.daytime);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::Metric) throw;
        }
        report.thermal.push_back(std::move(row));
      }
  }
  const auto building_table = metrics::daily_energy(loads.timestamps, interval_s, building_ids, building_series,
                                                    calendar, building_window, options.coverage_threshold);
  report.buildings = summarize(building_table);
  return report;
}

namespace {

io::json num(double v) { return is_missing(v) ? io::json(nullptr) : io::json(v); }

io::json entity_json(const EntityFlex& e) {
  return {{"id", e.id}, {"ef", num(e.ef)}, {"efs", num(e.efs)}, {"e_lsp_kwh", num(e.e_lsp)}, {"e_hsp_kwh", num(e.e_hsp)}};
}

io::json points_json(const std::vector<metrics::LorenzPoint>& pts) {
  io::json a = io::json::array();
  for (const auto& [x, y] : pts) a.push_back({x, y});
  return a;
}

}  // namespace

io::json report_to_json(const FlexReport& report) {
  io::json buildings = io::json::array(), ahus = io::json::array(), zones = io::json::array();
  for (const auto& b : report.buildings) {
    auto j = entity_json(b);
    for (const auto& h : report.heterogeneity) {
      if (h.building != b.id) continue;
      j["gini_eu"] = num(h.gini_eu);
      j["gini_ef"] = num(h.gini_ef);
      j["lorenz_eu"] = points_json(h.lorenz_eu);
      j["lorenz_ef"] = points_json(h.lorenz_ef);
      j["concentration"] = {{"fraction", h.concentration.fraction},
                            {"share_of_use", h.concentration.share_of_use},
                            {"share_of_flex", h.concentration.share_of_flex}};
    }
    buildings.push_back(std::move(j));
  }
  for (const auto& a : report.ahus) ahus.push_back(entity_json(a));
  for (const auto& z : report.zones) zones.push_back(entity_json(z));
  return {{"buildings", buildings}, {"ahus", ahus}, {"zones", zones}};
}

std::string thermal_csv(const FlexReport& report) {
  std::string out = "zone_id,mean_iat_lsp_c,mean_iat_hsp_c,delta_t_c,overcooling_c\n";
  for (const auto& r : report.thermal)
    out += r.zone + "," + io::format_number(r.stats.mean_iat_lsp) + "," + io::format_number(r.stats.mean_iat_hsp) +
           "," + io::format_number(r.stats.delta_t) + "," + io::format_number(r.stats.overcooling_degree) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr double kWidth = 640, kHeight = 480, kMargin = 60;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(const std::string& title, double w = kWidth, double h = kHeight) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
         "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"" + fmt(w / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + escape(title) + "</text>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle") {
  return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

std::string line(double x1, double y1, double x2, double y2, const char* stroke, const char* extra = "") {
  return "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" + fmt(y2) +
         "\" stroke=\"" + stroke + "\"" + extra + "/>\n";
}

// Maps unit-square coordinates into the plot area.
double px(double x) { return kMargin + x * (kWidth - 2 * kMargin); }
double py(double y) { return kHeight - kMargin - y * (kHeight - 2 * kMargin); }

std::string polyline(const std::vector<metrics::LorenzPoint>& pts, const char* colour, const std::string& cls) {
  std::string d;
  for (std::size_t i = 0; i < pts.size(); ++i) d += (i ? " L" : "M") + fmt(px(pts[i].first)) + " " + fmt(py(pts[i].second));
  return "<path class=\"" + cls + "\" d=\"" + d + "\" fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
}

std::string bars(const std::string& title, const std::vector<std::pair<std::string, double>>& items,
                 const std::string& y_label) {
  std::string s = header(title);
  double lo = 0.0, hi = 0.0;
  for (const auto& [_, v] : items) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0;
  auto y_of = [&](double v) { return py((v - lo) / (hi - lo)); };
  s += line(px(0), y_of(0.0), px(1), y_of(0.0), "black");
  s += line(px(0), py(0), px(0), py(1), "black");
  s += text(px(0) - 6, py(1) + 4, fmt(hi), "end");
  s += text(px(0) - 6, py(0) + 4, fmt(lo), "end");
  s += "<text x=\"16\" y=\"" + fmt(kHeight / 2) + "\" transform=\"rotate(-90 16 " + fmt(kHeight / 2) +
       ")\" text-anchor=\"middle\">" + escape(y_label) + "</text>\n";
  const double n = static_cast<double>(std::max<std::size_t>(items.size(), 1));
  const double slot = (kWidth - 2 * kMargin) / n;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double v = items[i].second;
    const double top = std::min(y_of(v), y_of(0.0));
    const double h = std::abs(y_of(v) - y_of(0.0));
    s += "<rect x=\"" + fmt(kMargin + slot * static_cast<double>(i) + slot * 0.1) + "\" y=\"" + fmt(top) +
         "\" width=\"" + fmt(slot * 0.8) + "\" height=\"" + fmt(h) + "\" fill=\"" + (v < 0 ? "#c0504d" : "#4f81bd") +
         "\"><title>" + escape(items[i].first) + ": " + fmt(v) + "</title></rect>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace

std::string lorenz_svg(const Heterogeneity& h) {
  std::string s = header("Lorenz curves, building " + h.building);
  s += line(px(0), py(0), px(1), py(0), "black");
  s += line(px(0), py(0), px(0), py(1), "black");
  s += line(px(0), py(0), px(1), py(1), "grey", " stroke-dasharray=\"4 4\"");
  s += text(px(0.5), kHeight - 20, "cumulative share of zones");
  s += "<text x=\"16\" y=\"" + fmt(kHeight / 2) + "\" transform=\"rotate(-90 16 " + fmt(kHeight / 2) +
       ")\" text-anchor=\"middle\">cumulative share</text>\n";
  if (!h.lorenz_eu.empty()) s += polyline(h.lorenz_eu, "#4f81bd", "lorenz-eu");
  if (!h.lorenz_ef.empty()) s += polyline(h.lorenz_ef, "#c0504d", "lorenz-ef");
  s += text(px(0.02), py(0.95), "EU Gini " + (is_missing(h.gini_eu) ? std::string("n/a") : fmt(h.gini_eu)), "start");
  s += text(px(0.02), py(0.88), "EF Gini " + (is_missing(h.gini_ef) ? std::string("n/a") : fmt(h.gini_ef)), "start");
  s += "</svg>\n";
  return s;
}

std::string share_heatmap_svg(const std::string& building, const FlexReport& report) {
  std::vector<const EntityFlex*> zones;
  for (const auto& z : report.zones)
    if (z.id.compare(0, building.size() + 1, building + "/") == 0) zones.push_back(&z);
  double use_total = 0.0;
  for (const auto* z : zones)
    if (!is_missing(z->e_lsp)) use_total += std::max(z->e_lsp, 0.0);
  const double row_h = 14.0;
  const double height = 80.0 + row_h * static_cast<double>(zones.size());
  std::string s = header("Zone shares, building " + building, 420.0, height);
  s += text(230, 50, "EU share");
  s += text(330, 50, "EF share");
  auto cell = [&](double x, double y, double v) {
    const double c = is_missing(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    const int shade = static_cast<int>(std::lround(255.0 * (1.0 - std::sqrt(c))));
    char colour[16];
    std::snprintf(colour, sizeof colour, "#%02x%02xff", shade, shade);
    return "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"90\" height=\"" + fmt(row_h) + "\" fill=\"" +
           colour + "\"><title>" + (is_missing(v) ? std::string("n/a") : fmt(100.0 * v) + "%") + "</title></rect>\n";
  };
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const double y = 60.0 + row_h * static_cast<double>(i);
    const auto* z = zones[i];
    const double eu = use_total > 0.0 && !is_missing(z->e_lsp) ? std::max(z->e_lsp, 0.0) / use_total : kMissing;
    s += text(175, y + row_h - 3, z->id.substr(building.size() + 1), "end");
    s += cell(185, y, eu);
    s += cell(285, y, z->efs);
  }
  s += "</svg>\n";
  return s;
}

std::string ef_distribution_svg(const FlexReport& report) {
  std::vector<std::pair<std::string, double>> items;
  for (const auto& z : report.zones)
    if (!is_missing(z.ef)) items.emplace_back(z.id, 100.0 * z.ef);
  return bars("Zone energy flexibility", items, "EF (%)");
}

std::string delta_t_svg(const FlexReport& report) {
  std::vector<std::pair<std::string, double>> items;
  for (const auto& r : report.thermal)
    if (!is_missing(r.stats.delta_t)) items.emplace_back(r.zone, r.stats.delta_t);
  return bars("Indoor temperature change, HSP minus LSP", items, "delta T (degC)");
}

}  // namespace vpm::report
