#include "vpm/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "vpm/error.hpp"

namespace vpm {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int parse_int(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole) {
  int v = 0;
  if (pos + len > s.size()) throw input_error("malformed timestamp '" + std::string(whole) + "'");
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
  if (ec != std::errc() || p != s.data() + pos + len)
    throw input_error("malformed timestamp '" + std::string(whole) + "'");
  return v;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  // YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|+hh:mm|-hh:mm]
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':')
    throw input_error("malformed timestamp '" + std::string(text) + "'");
  const int y = parse_int(text, 0, 4, text);
  const int mo = parse_int(text, 5, 2, text);
  const int d = parse_int(text, 8, 2, text);
  const int h = parse_int(text, 11, 2, text);
  const int mi = parse_int(text, 14, 2, text);
  int s = 0;
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    s = parse_int(text, 17, 2, text);
    pos = 19;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    }
  }
  if (pos < text.size()) {
    const char c = text[pos];
    if (c == 'Z' || c == 'z') {
      ++pos;
    } else if ((c == '+' || c == '-') && pos + 6 == text.size() && text[pos + 3] == ':') {
      parse_int(text, pos + 1, 2, text);
      parse_int(text, pos + 4, 2, text);
      pos += 6;
    }
  }
  if (pos != text.size()) throw input_error("malformed timestamp '" + std::string(text) + "'");

  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60)
    throw input_error("invalid calendar value in timestamp '" + std::string(text) + "'");
  const auto days_since = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days_since) * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

std::chrono::sys_days day_of(Timestamp t) {
  return std::chrono::sys_days{std::chrono::days{floor_div(t, kSecondsPerDay)}};
}

int minute_of_day(Timestamp t) {
  return static_cast<int>((t - floor_div(t, kSecondsPerDay) * kSecondsPerDay) / 60);
}

bool is_weekday(Timestamp t) {
  const unsigned wd = std::chrono::weekday{day_of(t)}.c_encoding();
  return wd >= 1 && wd <= 5;
}

std::string format_date(std::chrono::sys_days d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(Timestamp t) {
  const auto d = day_of(t);
  const std::int64_t sod = t - d.time_since_epoch().count() * kSecondsPerDay;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(d).c_str(), static_cast<int>(sod / 3600),
                static_cast<int>(sod % 3600 / 60), static_cast<int>(sod % 60));
  return buf;
}

// ---------------------------------------------------------------------------

void Topology::validate() const {
  if (buildings.empty()) throw input_error("topology has no buildings");
  std::set<std::string> bids;
  for (const auto& b : buildings) {
    if (b.id.empty() || b.id.find('/') != std::string::npos)
      throw input_error("invalid building id '" + b.id + "'");
    if (!bids.insert(b.id).second) throw input_error("duplicate building id '" + b.id + "'");
    if (b.ahus.empty()) throw input_error("building '" + b.id + "' has no AHUs");
    std::set<std::string> aids;
    for (const auto& a : b.ahus) {
      const auto path = ahu_path(b, a);
      if (a.id.empty() || a.id.find('/') != std::string::npos)
        throw input_error("invalid AHU id '" + path + "'");
      if (!aids.insert(a.id).second) throw input_error("duplicate AHU id '" + path + "'");
      if (!(a.fan_rated_flow > 0.0) || !(a.fan_rated_power > 0.0))
        throw input_error("AHU '" + path + "' needs positive fan_rated_flow and fan_rated_power");
      if (a.zones.empty()) throw input_error("AHU '" + path + "' has no zones");
      std::set<std::string> zids;
      for (const auto& z : a.zones) {
        if (z.id.empty() || z.id.find('/') != std::string::npos)
          throw input_error("invalid zone id under '" + path + "'");
        if (!zids.insert(z.id).second) throw input_error("duplicate zone id '" + zone_path(b, a, z) + "'");
      }
    }
  }
}

std::size_t Topology::zone_count() const {
  std::size_t n = 0;
  for (const auto& b : buildings)
    for (const auto& a : b.ahus) n += a.zones.size();
  return n;
}

std::string ahu_path(const BuildingNode& b, const AhuNode& a) { return b.id + "/" + a.id; }

std::string zone_path(const BuildingNode& b, const AhuNode& a, const ZoneNode& z) {
  return b.id + "/" + a.id + "/" + z.id;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::QB: return "q_b";
    case Variable::SP: return "SP";
    case Variable::RAT: return "RAT";
    case Variable::MAT: return "MAT";
    case Variable::DAT: return "DAT";
    case Variable::IAT: return "IAT";
    case Variable::VZ: return "v_z";
    case Variable::OAT: return "OAT";
    case Variable::QD: return "q_d";
    case Variable::PD: return "p_d";
  }
  return "?";
}

std::optional<Variable> parse_variable(std::string_view name) {
  for (auto v : {Variable::QB, Variable::SP, Variable::RAT, Variable::MAT, Variable::DAT, Variable::IAT,
                 Variable::VZ, Variable::OAT, Variable::QD, Variable::PD})
    if (to_string(v) == name) return v;
  return std::nullopt;
}

bool is_temperature(Variable v) {
  switch (v) {
    case Variable::SP:
    case Variable::RAT:
    case Variable::MAT:
    case Variable::DAT:
    case Variable::IAT:
    case Variable::OAT: return true;
    default: return false;
  }
}

std::string to_string(const ChannelKey& key) {
  std::string s = key.entity.empty() ? std::string("district") : key.entity;
  s += ':';
  s += to_string(key.variable);
  return s;
}

ChannelFrame::ChannelFrame(std::vector<Timestamp> timestamps, std::int64_t interval_s, Columns columns)
    : timestamps_(std::move(timestamps)), interval_s_(interval_s), columns_(std::move(columns)) {
  if (interval_s_ <= 0) throw input_error("interval must be positive");
  for (std::size_t i = 1; i < timestamps_.size(); ++i)
    if (timestamps_[i] - timestamps_[i - 1] != interval_s_)
      throw input_error("frame timestamps must be strictly increasing at a fixed interval");
  for (const auto& [key, col] : columns_)
    if (col.size() != timestamps_.size())
      throw input_error("column " + to_string(key) + " does not match the timestamp index");
}

std::span<const double> ChannelFrame::column(const ChannelKey& key) const {
  auto it = columns_.find(key);
  if (it == columns_.end()) throw input_error("missing channel " + to_string(key));
  return it->second;
}

const std::vector<double>* ChannelFrame::find(const ChannelKey& key) const {
  auto it = columns_.find(key);
  return it == columns_.end() ? nullptr : &it->second;
}

bool ChannelFrame::operator==(const ChannelFrame& o) const {
  if (timestamps_ != o.timestamps_ || interval_s_ != o.interval_s_ || columns_.size() != o.columns_.size())
    return false;
  auto a = columns_.begin();
  auto b = o.columns_.begin();
  for (; a != columns_.end(); ++a, ++b) {
    if (!(a->first == b->first)) return false;
    for (std::size_t i = 0; i < a->second.size(); ++i) {
      const double x = a->second[i], y = b->second[i];
      if (!(x == y || (is_missing(x) && is_missing(y)))) return false;
    }
  }
  return true;
}

ChannelKey zone_key(const BuildingNode& b, const AhuNode& a, const ZoneNode& z, Variable v) {
  return {Level::Zone, zone_path(b, a, z), v};
}
ChannelKey ahu_key(const BuildingNode& b, const AhuNode& a, Variable v) { return {Level::Ahu, ahu_path(b, a), v}; }
ChannelKey building_key(const BuildingNode& b, Variable v) { return {Level::Building, b.id, v}; }
ChannelKey district_key(Variable v) { return {Level::District, "", v}; }

// ---------------------------------------------------------------------------

std::optional<Unit> parse_unit(std::string_view t) {
  if (t == "C" || t == "degC" || t == "°C" || t == "celsius") return Unit::Celsius;
  if (t == "F" || t == "degF" || t == "°F" || t == "fahrenheit") return Unit::Fahrenheit;
  if (t == "m3/s" || t == "m³/s") return Unit::CubicMetresPerSecond;
  if (t == "CFM" || t == "cfm") return Unit::Cfm;
  if (t == "kW" || t == "kw") return Unit::Kilowatt;
  return std::nullopt;
}

double to_si(Unit unit, double value) {
  switch (unit) {
    case Unit::Fahrenheit: return (value - 32.0) * 5.0 / 9.0;
    case Unit::Cfm: return value * 4.719474e-4;
    default: return value;
  }
}

void PointCatalog::add(const std::string& point_id, PointInfo info) {
  const bool temp = is_temperature(info.key.variable);
  const bool flow = info.key.variable == Variable::VZ;
  const bool unit_temp = info.unit == Unit::Celsius || info.unit == Unit::Fahrenheit;
  const bool unit_flow = info.unit == Unit::CubicMetresPerSecond || info.unit == Unit::Cfm;
  if ((temp && !unit_temp) || (flow && !unit_flow) || (!temp && !flow && info.unit != Unit::Kilowatt))
    throw input_error("unit not accepted for point '" + point_id + "'");
  if (!points_.emplace(point_id, std::move(info)).second)
    throw input_error("duplicate point id '" + point_id + "'");
}

const PointInfo* PointCatalog::find(const std::string& point_id) const {
  auto it = points_.find(point_id);
  return it == points_.end() ? nullptr : &it->second;
}

namespace {

bool within_bounds(Variable v, double x) {
  if (!std::isfinite(x)) return false;
  if (is_temperature(v)) return x >= -40.0 && x <= 60.0;
  return x >= 0.0;
}

}  // namespace

ChannelFrame align_channels(std::span<const Reading> raw, const PointCatalog& catalog, std::int64_t interval_s,
                            IngestStats* stats) {
  if (interval_s <= 0) throw input_error("interval must be positive");
  IngestStats local;
  local.readings = raw.size();
  if (raw.empty()) {
    if (stats) *stats = local;
    return ChannelFrame({}, interval_s, {});
  }

  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<ChannelKey, std::map<std::int64_t, Acc>> buckets;
  std::int64_t first = std::numeric_limits<std::int64_t>::max();
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (const auto& r : raw) {
    const PointInfo* info = catalog.find(r.point_id);
    if (!info) throw input_error("unknown point id '" + r.point_id + "'");
    const std::int64_t b = floor_div(r.time, interval_s);
    first = std::min(first, b);
    last = std::max(last, b);
    auto& col = buckets[info->key];
    const double v = to_si(info->unit, r.value);
    if (!within_bounds(info->key.variable, v)) {
      ++local.out_of_bounds;
      col.try_emplace(b);
      continue;
    }
    auto& acc = col[b];
    acc.sum += v;
    ++acc.n;
  }

  const auto n = static_cast<std::size_t>(last - first + 1);
  std::vector<Timestamp> ts(n);
  for (std::size_t i = 0; i < n; ++i) ts[i] = (first + static_cast<std::int64_t>(i)) * interval_s;
  ChannelFrame::Columns cols;
  for (const auto& [key, m] : buckets) {
    std::vector<double> col(n, kMissing);
    for (const auto& [b, acc] : m)
      if (acc.n > 0) col[static_cast<std::size_t>(b - first)] = acc.sum / static_cast<double>(acc.n);
    cols.emplace(key, std::move(col));
  }
  if (stats) *stats = local;
  return ChannelFrame(std::move(ts), interval_s, std::move(cols));
}

// ---------------------------------------------------------------------------

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Lsp: return "LSP";
    case Regime::Hsp: return "HSP";
    default: return "UNLABELED";
  }
}

Regime ExperimentCalendar::regime(std::chrono::sys_days d) const {
  auto it = days.find(d);
  return it == days.end() ? Regime::Unlabeled : it->second;
}

std::size_t ExperimentCalendar::count(Regime r) const {
  return static_cast<std::size_t>(
      std::count_if(days.begin(), days.end(), [r](const auto& kv) { return kv.second == r; }));
}

ExperimentCalendar label_days(const ChannelFrame& frame, double lsp, double hsp) {
  if (lsp == hsp) throw input_error("lsp and hsp set-points must differ");
  std::vector<const std::vector<double>*> sp;
  for (const auto& [key, col] : frame.columns())
    if (key.variable == Variable::SP) sp.push_back(&col);
  if (sp.empty() && !frame.empty()) throw input_error("frame has no SP channel");

  ExperimentCalendar cal;
  cal.lsp_setpoint = lsp;
  cal.hsp_setpoint = hsp;
  std::map<std::chrono::sys_days, std::vector<double>> afternoon;
  const auto ts = frame.timestamps();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto d = day_of(ts[i]);
    auto& vals = afternoon[d];
    const int m = minute_of_day(ts[i]);
    if (m < 12 * 60 || m >= 16 * 60) continue;
    for (const auto* col : sp)
      if (!is_missing((*col)[i])) vals.push_back((*col)[i]);
  }
  for (auto& [d, vals] : afternoon) {
    if (vals.empty()) {
      cal.days[d] = Regime::Unlabeled;
      continue;
    }
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    const double median = n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    cal.days[d] = std::abs(median - lsp) <= std::abs(median - hsp) ? Regime::Lsp : Regime::Hsp;
  }
  return cal;
}

void AirProperties::validate() const {
  if (!(c > 0.0) || !(rho > 0.0)) throw input_error("air properties must be positive");
}

std::vector<bool> operating_mask(const ChannelFrame& frame, const BuildingNode& building, const AhuNode& ahu,
                                 double flow_threshold, const DaytimeWindow& window) {
  std::vector<std::span<const double>> flows;
  for (const auto& z : ahu.zones) flows.push_back(frame.column(zone_key(building, ahu, z, Variable::VZ)));
  const auto ts = frame.timestamps();
  std::vector<bool> mask(ts.size(), false);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!is_weekday(ts[i]) || !window.contains(minute_of_day(ts[i]))) continue;
    double vc = 0.0;
    for (const auto& f : flows) vc += f[i];
    mask[i] = !is_missing(vc) && vc >= flow_threshold;
  }
  return mask;
}

}  // namespace vpm
