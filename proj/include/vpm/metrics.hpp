#pragma once

#include <chrono>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vpm/core.hpp"

namespace vpm::metrics {

// (E_lsp - E_hsp) / E_lsp. Negative values are legitimate.
double energy_flexibility(double e_lsp, double e_hsp);

// max(s, 0) / sum(max(s, 0)); throws when no saving is positive.
std::vector<double> flexibility_shares(std::span<const double> savings);

double gini(std::span<const double> shares);

using LorenzPoint = std::pair<double, double>;
std::vector<LorenzPoint> lorenz(std::span<const double> shares);

// Mean daily energy per entity and regime.
struct DailyEnergyTable {
  std::vector<std::string> entities;
  std::vector<std::chrono::sys_days> days;
  std::vector<Regime> regimes;             // per day
  std::vector<std::vector<double>> kwh;    // [entity][day]; NaN when the day lacks coverage

  // Mean over covered days of the regime; NaN when there are none.
  double mean(std::size_t entity, Regime regime) const;
};

using SampleWindow = std::function<bool(Timestamp)>;

SampleWindow operating_window(const DaytimeWindow& daytime);
SampleWindow full_day_window();

// Integrates kW series (one per entity) into daily kWh over the window.
// Days with fewer than coverage_threshold of their window samples defined
// are dropped; days without window samples are not listed.
DailyEnergyTable daily_energy(std::span<const Timestamp> timestamps, std::int64_t interval_s,
                              std::vector<std::string> entities, std::span<const std::vector<double>> series,
                              const ExperimentCalendar& calendar, const SampleWindow& window,
                              double coverage_threshold = 0.8);

struct ZoneEnergy {
  std::string id;
  double e_lsp = 0.0;
  double e_hsp = 0.0;
  double saving() const { return e_lsp - e_hsp; }
};

enum class OrderBy { EnergyUse, Flexibility };

struct Concentration {
  double fraction = 0.0;
  double share_of_use = 0.0;
  double share_of_flex = 0.0;
};

// Top ceil(fraction * n) zones by the chosen key (descending, ties by id).
// Energy use is the LSP-day mean.
Concentration concentration(std::span<const ZoneEnergy> zones, OrderBy order_by, double top_fraction);

struct ThermalStats {
  double mean_iat_lsp = kMissing;
  double mean_iat_hsp = kMissing;
  double delta_t = kMissing;            // signed, HSP minus LSP
  double overcooling_degree = kMissing;
};

ThermalStats thermal_impact(const ChannelFrame& frame, const ExperimentCalendar& calendar,
                            const ChannelKey& iat_key, const DaytimeWindow& window = {});

}  // namespace vpm::metrics
