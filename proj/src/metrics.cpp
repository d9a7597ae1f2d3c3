#include "vpm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "vpm/error.hpp"

namespace vpm::metrics {

double energy_flexibility(double e_lsp, double e_hsp) {
  if (!(e_lsp > 0.0)) throw metric_error("energy flexibility undefined for non-positive LSP energy");
  return (e_lsp - e_hsp) / e_lsp;
}

std::vector<double> flexibility_shares(std::span<const double> savings) {
  double total = 0.0;
  for (double s : savings)
    if (s > 0.0) total += s;
  if (!(total > 0.0)) throw metric_error("no positive savings to share");
  std::vector<double> out(savings.size());
  for (std::size_t i = 0; i < savings.size(); ++i) out[i] = savings[i] > 0.0 ? savings[i] / total : 0.0;
  return out;
}

namespace {

std::vector<double> sorted_shares(std::span<const double> shares) {
  if (shares.empty()) throw metric_error("gini undefined for an empty population");
  std::vector<double> y(shares.begin(), shares.end());
  double total = 0.0;
  for (double v : y) {
    if (!(v >= 0.0)) throw metric_error("gini requires nonnegative shares");
    total += v;
  }
  if (!(total > 0.0)) throw metric_error("gini undefined for all-zero shares");
  std::stable_sort(y.begin(), y.end());
  return y;
}

}  // namespace

double gini(std::span<const double> shares) {
  const auto y = sorted_shares(shares);
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double weighted = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) weighted += (2.0 * n - 2.0 * static_cast<double>(i + 1) + 1.0) * y[i];
  return 1.0 - weighted / (n * n * mean);
}

std::vector<LorenzPoint> lorenz(std::span<const double> shares) {
  const auto y = sorted_shares(shares);
  const double total = std::accumulate(y.begin(), y.end(), 0.0);
  const double n = static_cast<double>(y.size());
  std::vector<LorenzPoint> pts;
  pts.reserve(y.size() + 1);
  pts.emplace_back(0.0, 0.0);
  double cum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    cum += y[i];
    pts.emplace_back(static_cast<double>(i + 1) / n, cum / total);
  }
  pts.back().second = 1.0;
  return pts;
}

// ---------------------------------------------------------------------------

double DailyEnergyTable::mean(std::size_t entity, Regime regime) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t d = 0; d < days.size(); ++d) {
    if (regimes[d] != regime || is_missing(kwh[entity][d])) continue;
    sum += kwh[entity][d];
    ++n;
  }
  return n ? sum / static_cast<double>(n) : kMissing;
}

SampleWindow operating_window(const DaytimeWindow& daytime) {
  return [daytime](Timestamp t) { return is_weekday(t) && daytime.contains(minute_of_day(t)); };
}

SampleWindow full_day_window() {
  return [](Timestamp) { return true; };
}

DailyEnergyTable daily_energy(std::span<const Timestamp> timestamps, std::int64_t interval_s,
                              std::vector<std::string> entities, std::span<const std::vector<double>> series,
                              const ExperimentCalendar& calendar, const SampleWindow& window,
                              double coverage_threshold) {
  if (entities.size() != series.size()) throw input_error("entity names do not match series");
  const double dt_h = static_cast<double>(interval_s) / 3600.0;

  // Window sample indices grouped by day.
  std::map<std::chrono::sys_days, std::vector<std::size_t>> by_day;
  for (std::size_t t = 0; t < timestamps.size(); ++t)
    if (window(timestamps[t])) by_day[day_of(timestamps[t])].push_back(t);

  DailyEnergyTable table;
  table.entities = std::move(entities);
  for (const auto& [d, idx] : by_day) {
    table.days.push_back(d);
    table.regimes.push_back(calendar.regime(d));
  }
  table.kwh.assign(series.size(), std::vector<double>(table.days.size(), kMissing));
  for (std::size_t e = 0; e < series.size(); ++e) {
    std::size_t di = 0;
    for (const auto& [d, idx] : by_day) {
      double sum = 0.0;
      std::size_t covered = 0;
      for (std::size_t t : idx) {
        const double p = series[e][t];
        if (is_missing(p)) continue;
        sum += p * dt_h;
        ++covered;
      }
      if (static_cast<double>(covered) >= coverage_threshold * static_cast<double>(idx.size()))
        table.kwh[e][di] = sum;
      ++di;
    }
  }
  return table;
}

Concentration concentration(std::span<const ZoneEnergy> zones, OrderBy order_by, double top_fraction) {
  Concentration c;
  c.fraction = top_fraction;
  if (zones.empty() || top_fraction <= 0.0) return c;
  std::vector<std::size_t> order(zones.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t i) {
    return order_by == OrderBy::EnergyUse ? zones[i].e_lsp : std::max(zones[i].saving(), 0.0);
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ka = key(a), kb = key(b);
    if (ka != kb) return ka > kb;
    return zones[a].id < zones[b].id;
  });
  // Guard the ceiling against representation error, e.g. 0.3 * 10.
  const double raw = std::min(top_fraction, 1.0) * static_cast<double>(zones.size());
  const auto take = static_cast<std::size_t>(std::ceil(raw - 1e-9));

  double use_total = 0.0, flex_total = 0.0, use_top = 0.0, flex_top = 0.0;
  for (const auto& z : zones) {
    use_total += z.e_lsp;
    flex_total += std::max(z.saving(), 0.0);
  }
  for (std::size_t r = 0; r < take; ++r) {
    use_top += zones[order[r]].e_lsp;
    flex_top += std::max(zones[order[r]].saving(), 0.0);
  }
  c.share_of_use = use_total > 0.0 ? use_top / use_total : 0.0;
  c.share_of_flex = flex_total > 0.0 ? flex_top / flex_total : 0.0;
  return c;
}

ThermalStats thermal_impact(const ChannelFrame& frame, const ExperimentCalendar& calendar,
                            const ChannelKey& iat_key, const DaytimeWindow& window) {
  const auto iat = frame.column(iat_key);
  const auto ts = frame.timestamps();
  double sum_lsp = 0.0, sum_hsp = 0.0, over = 0.0;
  std::size_t n_lsp = 0, n_hsp = 0;
  for (std::size_t t = 0; t < ts.size(); ++t) {
    if (is_missing(iat[t]) || !window.contains(minute_of_day(ts[t]))) continue;
    const Regime r = calendar.regime(day_of(ts[t]));
    if (r == Regime::Lsp) {
      sum_lsp += iat[t];
      over += std::max(calendar.lsp_setpoint - iat[t], 0.0);
      ++n_lsp;
    } else if (r == Regime::Hsp) {
      sum_hsp += iat[t];
      ++n_hsp;
    }
  }
  if (n_lsp == 0 || n_hsp == 0)
    throw metric_error("thermal impact undefined for " + to_string(iat_key) + ": a regime has no samples");
  ThermalStats s;
  s.mean_iat_lsp = sum_lsp / static_cast<double>(n_lsp);
  s.mean_iat_hsp = sum_hsp / static_cast<double>(n_hsp);
  s.delta_t = s.mean_iat_hsp - s.mean_iat_lsp;
  s.overcooling_degree = over / static_cast<double>(n_lsp);
  return s;
}

}  // namespace vpm::metrics
