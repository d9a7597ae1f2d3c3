#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vpm/core.hpp"
#include "vpm/io.hpp"
#include "vpm/metrics.hpp"

namespace vpm::report {

struct EntityFlex {
  std::string id;
  double e_lsp = kMissing;  // mean daily kWh on LSP days
  double e_hsp = kMissing;
  double ef = kMissing;
  double efs = kMissing;
};

// Regime means, EF and the EFS among the table's entities.
std::vector<EntityFlex> summarize(const metrics::DailyEnergyTable& table);

struct Heterogeneity {
  std::string building;
  double gini_eu = kMissing;
  double gini_ef = kMissing;
  std::vector<metrics::LorenzPoint> lorenz_eu, lorenz_ef;
  metrics::Concentration concentration;
};

struct ThermalRow {
  std::string zone;
  metrics::ThermalStats stats;
};

struct FlexReport {
  std::vector<EntityFlex> buildings, ahus, zones;
  std::vector<Heterogeneity> heterogeneity;
  std::vector<ThermalRow> thermal;
};

enum class EnergyWindow { Operating, FullDay };
std::optional<EnergyWindow> parse_energy_window(std::string_view s);

struct ReportOptions {
  DaytimeWindow daytime;
  EnergyWindow zone_window = EnergyWindow::Operating;
  EnergyWindow building_window = EnergyWindow::FullDay;
  double coverage_threshold = 0.8;
  double top_fraction = 0.3;
};

// Throws a Metric error when the calendar lacks LSP or HSP days.
FlexReport build_report(const Topology& topology, const io::ZoneLoadTable& loads, std::int64_t interval_s,
                        const ExperimentCalendar& calendar, const ChannelFrame& frame, const ReportOptions& options);

io::json report_to_json(const FlexReport& report);
std::string thermal_csv(const FlexReport& report);

// Hand-written SVG charts; presentation only.
std::string lorenz_svg(const Heterogeneity& h);
std::string share_heatmap_svg(const std::string& building, const FlexReport& report);
std::string ef_distribution_svg(const FlexReport& report);
std::string delta_t_svg(const FlexReport& report);

}  // namespace vpm::report
