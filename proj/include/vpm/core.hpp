#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vpm {

// Wall-clock seconds since 1970-01-01T00:00 of the building's local time.
// Offsets in RFC 3339 input are accepted but not applied: the daytime
// window and day labels are defined on the clock the historian recorded.
using Timestamp = std::int64_t;

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return v != v; }

Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);
std::chrono::sys_days day_of(Timestamp t);
int minute_of_day(Timestamp t);
bool is_weekday(Timestamp t);
std::string format_date(std::chrono::sys_days d);

// ---------------------------------------------------------------------------
// Topology

struct ZoneNode {
  std::string id;
  bool excluded = false;
};

struct AhuNode {
  std::string id;
  double fan_rated_flow = 0.0;   // m3/s
  double fan_rated_power = 0.0;  // kW
  std::vector<ZoneNode> zones;
};

struct BuildingNode {
  std::string id;
  std::vector<AhuNode> ahus;
};

struct Topology {
  std::vector<BuildingNode> buildings;

  // Throws Input errors for duplicate ids, empty levels or non-positive fan ratings.
  void validate() const;
  std::size_t zone_count() const;
};

// Entity paths identify a node uniquely: "B", "B/AHU", "B/AHU/Z".
std::string ahu_path(const BuildingNode& b, const AhuNode& a);
std::string zone_path(const BuildingNode& b, const AhuNode& a, const ZoneNode& z);

// ---------------------------------------------------------------------------
// Channels

enum class Level { District, Building, Ahu, Zone };

enum class Variable { QB, SP, RAT, MAT, DAT, IAT, VZ, OAT, QD, PD };

std::string_view to_string(Variable v);
std::optional<Variable> parse_variable(std::string_view name);
bool is_temperature(Variable v);

struct ChannelKey {
  Level level = Level::District;
  std::string entity;
  Variable variable = Variable::QB;

  auto operator<=>(const ChannelKey&) const = default;
};

std::string to_string(const ChannelKey& key);

// Time-aligned table of every measured channel. Missing samples are NaN.
// Immutable after construction.
class ChannelFrame {
 public:
  using Columns = std::map<ChannelKey, std::vector<double>>;

  ChannelFrame() = default;
  ChannelFrame(std::vector<Timestamp> timestamps, std::int64_t interval_s, Columns columns);

  std::span<const Timestamp> timestamps() const { return timestamps_; }
  std::int64_t interval_s() const { return interval_s_; }
  std::size_t size() const { return timestamps_.size(); }
  bool empty() const { return timestamps_.empty(); }
  const Columns& columns() const { return columns_; }

  bool has(const ChannelKey& key) const { return columns_.count(key) != 0; }
  // Throws an Input error naming the channel when absent.
  std::span<const double> column(const ChannelKey& key) const;
  const std::vector<double>* find(const ChannelKey& key) const;

  bool operator==(const ChannelFrame&) const;

 private:
  std::vector<Timestamp> timestamps_;
  std::int64_t interval_s_ = 900;
  Columns columns_;
};

ChannelKey zone_key(const BuildingNode& b, const AhuNode& a, const ZoneNode& z, Variable v);
ChannelKey ahu_key(const BuildingNode& b, const AhuNode& a, Variable v);
ChannelKey building_key(const BuildingNode& b, Variable v);
ChannelKey district_key(Variable v);

// ---------------------------------------------------------------------------
// Ingestion

enum class Unit { Celsius, Fahrenheit, CubicMetresPerSecond, Cfm, Kilowatt };

std::optional<Unit> parse_unit(std::string_view text);
double to_si(Unit unit, double value);

struct PointInfo {
  ChannelKey key;
  Unit unit = Unit::Kilowatt;
};

class PointCatalog {
 public:
  void add(const std::string& point_id, PointInfo info);
  const PointInfo* find(const std::string& point_id) const;
  const std::map<std::string, PointInfo>& points() const { return points_; }

 private:
  std::map<std::string, PointInfo> points_;
};

struct Reading {
  Timestamp time = 0;
  std::string point_id;
  double value = 0.0;
};

struct IngestStats {
  std::size_t readings = 0;
  std::size_t out_of_bounds = 0;  // values dropped by the sanity bounds
};

// Buckets readings into left-labelled intervals by mean; empty buckets are
// missing. Unknown point ids are rejected.
ChannelFrame align_channels(std::span<const Reading> raw, const PointCatalog& catalog,
                            std::int64_t interval_s, IngestStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Experiment calendar

enum class Regime { Unlabeled, Lsp, Hsp };
std::string_view to_string(Regime r);

struct ExperimentCalendar {
  double lsp_setpoint = 23.3;
  double hsp_setpoint = 24.4;
  std::map<std::chrono::sys_days, Regime> days;

  Regime regime(std::chrono::sys_days d) const;
  std::size_t count(Regime r) const;
};

// Labels each day by the median SP value over 12:00-16:00.
ExperimentCalendar label_days(const ChannelFrame& frame, double lsp, double hsp);

struct AirProperties {
  double c = 1.006;    // kJ/(kg K)
  double rho = 1.204;  // kg/m3
  double c_rho() const { return c * rho; }
  void validate() const;
};

struct DaytimeWindow {
  int start_minute = 6 * 60;
  int end_minute = 20 * 60;  // exclusive
  bool contains(int minute_of_day) const { return minute_of_day >= start_minute && minute_of_day < end_minute; }
};

// True where the sample is a weekday inside the window and the AHU's total
// zone flow reaches the threshold.
std::vector<bool> operating_mask(const ChannelFrame& frame, const BuildingNode& building,
                                 const AhuNode& ahu, double flow_threshold,
                                 const DaytimeWindow& window = {});

}  // namespace vpm
