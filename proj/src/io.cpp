#include "vpm/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vpm/error.hpp"

namespace vpm::io {

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw input_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw input_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_number(double v) {
  if (is_missing(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// Splits on commas; surrounding double quotes and whitespace are stripped.
void split_fields(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
    out.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : text_(text) {}
  bool next(std::string_view& line) {
    while (pos_ < text_.size()) {
      const std::size_t nl = text_.find('\n', pos_);
      const std::size_t end = nl == std::string::npos ? text_.size() : nl;
      line = std::string_view(text_).substr(pos_, end - pos_);
      pos_ = end + 1;
      ++number_;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) return true;
    }
    return false;
  }
  std::size_t number() const { return number_; }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t number_ = 0;
};

double parse_double(std::string_view f, std::size_t line) {
  if (f.empty()) return kMissing;
  double v = 0.0;
  auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || p != f.data() + f.size())
    throw input_error("line " + std::to_string(line) + ": malformed number '" + std::string(f) + "'");
  return v;
}

std::map<std::string, std::size_t> header_index(std::string_view header, const std::vector<std::string>& required,
                                                const char* what) {
  std::vector<std::string_view> f;
  split_fields(header, f);
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < f.size(); ++i) idx[std::string(f[i])] = i;
  for (const auto& r : required)
    if (!idx.count(r)) throw input_error(std::string(what) + " is missing column '" + r + "'");
  return idx;
}

}  // namespace

std::vector<Reading> parse_readings_csv(const std::string& text) {
  LineReader lines(text);
  std::string_view line;
  if (!lines.next(line)) throw input_error("measurement CSV is empty (no header)");
  const auto idx = header_index(line, {"timestamp", "point_id", "value"}, "measurement CSV");
  const std::size_t it = idx.at("timestamp"), ip = idx.at("point_id"), iv = idx.at("value");
  const std::size_t need = std::max({it, ip, iv}) + 1;
  std::vector<Reading> out;
  std::vector<std::string_view> f;
  while (lines.next(line)) {
    split_fields(line, f);
    if (f.size() < need) throw input_error("line " + std::to_string(lines.number()) + ": too few fields");
    const double v = parse_double(f[iv], lines.number());
    if (is_missing(v)) continue;
    out.push_back({parse_timestamp(f[it]), std::string(f[ip]), v});
  }
  return out;
}

std::string point_id(const ChannelKey& key) { return to_string(key); }

std::string readings_csv(const ChannelFrame& frame) {
  std::string out = "timestamp,point_id,value\n";
  std::vector<std::pair<std::string, const std::vector<double>*>> cols;
  for (const auto& [key, col] : frame.columns()) cols.emplace_back(point_id(key), &col);
  const auto ts = frame.timestamps();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const std::string stamp = format_timestamp(ts[i]);
    for (const auto& [id, col] : cols) {
      const double v = (*col)[i];
      if (is_missing(v)) continue;
      out += stamp;
      out += ',';
      out += id;
      out += ',';
      out += format_number(v);
      out += '\n';
    }
  }
  return out;
}

PointCatalog parse_catalog_csv(const std::string& text) {
  LineReader lines(text);
  std::string_view line;
  if (!lines.next(line)) throw input_error("point catalog is empty (no header)");
  const auto idx = header_index(line, {"point_id", "building", "ahu", "zone", "variable", "unit"}, "point catalog");
  PointCatalog cat;
  std::vector<std::string_view> f;
  while (lines.next(line)) {
    split_fields(line, f);
    if (f.size() < idx.size()) throw input_error("catalog line " + std::to_string(lines.number()) + ": too few fields");
    const std::string id(f[idx.at("point_id")]);
    const std::string b(f[idx.at("building")]), a(f[idx.at("ahu")]), z(f[idx.at("zone")]);
    const auto var = parse_variable(f[idx.at("variable")]);
    if (!var) throw input_error("catalog: unknown variable for point '" + id + "'");
    const auto unit = parse_unit(f[idx.at("unit")]);
    if (!unit) throw input_error("catalog: unknown unit for point '" + id + "'");
    PointInfo info;
    info.unit = *unit;
    info.key.variable = *var;
    if (b.empty()) {
      info.key.level = Level::District;
    } else if (a.empty()) {
      info.key.level = Level::Building;
      info.key.entity = b;
    } else if (z.empty()) {
      info.key.level = Level::Ahu;
      info.key.entity = b + "/" + a;
    } else {
      info.key.level = Level::Zone;
      info.key.entity = b + "/" + a + "/" + z;
    }
    cat.add(id, std::move(info));
  }
  return cat;
}

std::string catalog_csv(const ChannelFrame& frame) {
  std::string out = "point_id,building,ahu,zone,variable,unit\n";
  for (const auto& [key, col] : frame.columns()) {
    std::string parts[3];
    std::size_t start = 0;
    for (int i = 0; i < 3 && !key.entity.empty(); ++i) {
      const std::size_t slash = key.entity.find('/', start);
      parts[i] = key.entity.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
      if (slash == std::string::npos) break;
      start = slash + 1;
    }
    const char* unit = is_temperature(key.variable) ? "C" : key.variable == Variable::VZ ? "m3/s" : "kW";
    out += point_id(key) + "," + parts[0] + "," + parts[1] + "," + parts[2] + "," +
           std::string(to_string(key.variable)) + "," + unit + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

json topology_to_json(const Topology& topology) {
  json bs = json::array();
  for (const auto& b : topology.buildings) {
    json as = json::array();
    for (const auto& a : b.ahus) {
      json zs = json::array();
      for (const auto& z : a.zones) zs.push_back({{"id", z.id}, {"excluded", z.excluded}});
      as.push_back({{"id", a.id},
                    {"fan_rated_flow", a.fan_rated_flow},
                    {"fan_rated_power", a.fan_rated_power},
                    {"zones", zs}});
    }
    bs.push_back({{"id", b.id}, {"ahus", as}});
  }
  return {{"buildings", bs}};
}

Topology topology_from_json(const json& j) {
  Topology t;
  try {
    for (const auto& bj : j.at("buildings")) {
      BuildingNode b;
      b.id = bj.at("id").get<std::string>();
      for (const auto& aj : bj.at("ahus")) {
        AhuNode a;
        a.id = aj.at("id").get<std::string>();
        a.fan_rated_flow = aj.at("fan_rated_flow").get<double>();
        a.fan_rated_power = aj.at("fan_rated_power").get<double>();
        for (const auto& zj : aj.at("zones")) a.zones.push_back({zj.at("id").get<std::string>(), zj.value("excluded", false)});
        b.ahus.push_back(std::move(a));
      }
      t.buildings.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    throw input_error(std::string("topology JSON: ") + e.what());
  }
  t.validate();
  return t;
}

json models_to_json(const regression::FittedModels& models) {
  json fa = json::array(), bm = json::array(), fans = json::array();
  for (const auto& m : models.fresh_air)
    fa.push_back({{"ahu", m.ahu},
                  {"k", m.k},
                  {"alpha", m.alpha},
                  {"r2", m.r2},
                  {"std_err", {{"k", m.std_err_k}, {"alpha", m.std_err_alpha}}},
                  {"p_values", {{"k", m.p_value_k}, {"alpha", m.p_value_alpha}}},
                  {"n_obs", m.n_obs},
                  {"f_statistic_p", m.f_statistic_p},
                  {"k_out_of_range", m.k_out_of_range}});
  for (const auto& m : models.buildings)
    bm.push_back({{"building", m.building},
                  {"l", m.l},
                  {"beta", m.beta},
                  {"r2", m.r2},
                  {"std_err", {{"l", m.std_err_l}, {"beta", m.std_err_beta}}},
                  {"p_values", {{"l", m.p_value_l}, {"beta", m.p_value_beta}}},
                  {"n_obs", m.n_obs},
                  {"f_statistic_p", m.f_statistic_p}});
  for (const auto& m : models.fans) {
    json f = {{"ahu", m.ahu},
              {"a", m.a},
              {"std_err", m.std_err},
              {"flow_unit", to_string(m.flow_unit)},
              {"power_unit", to_string(m.power_unit)},
              {"valid_flow_range", {m.flow_min, m.flow_max}},
              {"r2", m.r2}};
    f["donor"] = m.donor ? json(*m.donor) : json(nullptr);
    fans.push_back(std::move(f));
  }
  return {{"fresh_air", fa}, {"buildings", bm}, {"fans", fans}};
}

regression::FittedModels models_from_json(const json& j) {
  regression::FittedModels models;
  try {
    for (const auto& x : j.at("fresh_air")) {
      regression::FreshAirModel m;
      m.ahu = x.at("ahu").get<std::string>();
      m.k = x.at("k").get<double>();
      m.alpha = x.at("alpha").get<double>();
      m.r2 = x.at("r2").get<double>();
      m.std_err_k = x.at("std_err").at("k").get<double>();
      m.std_err_alpha = x.at("std_err").at("alpha").get<double>();
      m.p_value_k = x.at("p_values").at("k").get<double>();
      m.p_value_alpha = x.at("p_values").at("alpha").get<double>();
      m.n_obs = x.at("n_obs").get<std::size_t>();
      m.f_statistic_p = x.at("f_statistic_p").get<double>();
      m.k_out_of_range = x.value("k_out_of_range", false);
      models.fresh_air.push_back(m);
    }
    for (const auto& x : j.at("buildings")) {
      regression::BuildingModel m;
      m.building = x.at("building").get<std::string>();
      m.l = x.at("l").get<double>();
      m.beta = x.at("beta").get<double>();
      m.r2 = x.at("r2").get<double>();
      m.std_err_l = x.at("std_err").at("l").get<double>();
      m.std_err_beta = x.at("std_err").at("beta").get<double>();
      m.p_value_l = x.at("p_values").at("l").get<double>();
      m.p_value_beta = x.at("p_values").at("beta").get<double>();
      m.n_obs = x.at("n_obs").get<std::size_t>();
      m.f_statistic_p = x.at("f_statistic_p").get<double>();
      models.buildings.push_back(m);
    }
    for (const auto& x : j.at("fans")) {
      regression::FanModel m;
      m.ahu = x.at("ahu").get<std::string>();
      m.a = x.at("a").get<std::array<double, 4>>();
      m.std_err = x.at("std_err").get<std::array<double, 4>>();
      const auto fu = regression::parse_flow_unit(x.at("flow_unit").get<std::string>());
      const auto pu = regression::parse_power_unit(x.at("power_unit").get<std::string>());
      if (!fu || !pu) throw input_error("models JSON: unknown fan units for '" + m.ahu + "'");
      m.flow_unit = *fu;
      m.power_unit = *pu;
      m.flow_min = x.at("valid_flow_range").at(0).get<double>();
      m.flow_max = x.at("valid_flow_range").at(1).get<double>();
      m.r2 = x.at("r2").get<double>();
      if (x.contains("donor") && !x.at("donor").is_null()) m.donor = x.at("donor").get<std::string>();
      models.fans.push_back(m);
    }
  } catch (const json::exception& e) {
    throw input_error(std::string("models JSON: ") + e.what());
  }
  return models;
}

json truth_to_json(const synth::GroundTruth& truth) {
  json bs = json::array();
  for (const auto& b : truth.buildings) {
    json as = json::array();
    for (const auto& a : b.ahus) {
      json zs = json::array();
      for (const auto& z : a.zones)
        zs.push_back({{"capacitance_kj_per_k", z.capacitance},
                      {"ua_kw_per_k", z.ua},
                      {"gain_base_kw", z.gain_base},
                      {"gain_occupied_kw", z.gain_occupied},
                      {"v_min", z.v_min},
                      {"v_max", z.v_max},
                      {"kp", z.kp}});
      as.push_back({{"ahu", a.ahu},
                    {"k", a.k},
                    {"alpha", a.alpha},
                    {"fan_a", a.fan_a},
                    {"flow_unit", to_string(a.flow_unit)},
                    {"power_unit", to_string(a.power_unit)},
                    {"dat_min", a.dat_min},
                    {"dat_max", a.dat_max},
                    {"zones", zs}});
    }
    bs.push_back({{"building", b.building}, {"l", b.l}, {"beta", b.beta}, {"ahus", as}});
  }
  return {{"buildings", bs},
          {"cop", {{"mean", truth.cop.mean}, {"amplitude", truth.cop.amplitude}, {"oat_slope", truth.cop.oat_slope}}},
          {"weather",
           {{"oat_mean", truth.weather.oat_mean},
            {"amplitude", truth.weather.amplitude},
            {"daily_sd", truth.weather.daily_sd},
            {"step_sd", truth.weather.step_sd}}},
          {"noise",
           {{"fresh_air", truth.noise.fresh_air}, {"building", truth.noise.building}, {"fan", truth.noise.fan}}},
          {"district_other_load_kw", truth.district_other_load}};
}

// ---------------------------------------------------------------------------

std::map<std::string, FanPointSet> parse_fan_points_csv(const std::string& text) {
  LineReader lines(text);
  std::string_view line;
  std::map<std::string, FanPointSet> sets;
  if (!lines.next(line)) return sets;
  const auto idx =
      header_index(line, {"building", "ahu", "flow", "power", "flow_unit", "power_unit"}, "fan points CSV");
  std::vector<std::string_view> f;
  while (lines.next(line)) {
    split_fields(line, f);
    if (f.size() < idx.size()) throw input_error("fan points line " + std::to_string(lines.number()) + ": too few fields");
    const std::string path = std::string(f[idx.at("building")]) + "/" + std::string(f[idx.at("ahu")]);
    const auto fu = regression::parse_flow_unit(f[idx.at("flow_unit")]);
    const auto pu = regression::parse_power_unit(f[idx.at("power_unit")]);
    if (!fu || !pu) throw input_error("fan points: unknown unit for '" + path + "'");
    auto& set = sets[path];
    if (!set.points.empty() && (set.flow_unit != *fu || set.power_unit != *pu))
      throw input_error("fan points: mixed units for '" + path + "'");
    set.flow_unit = *fu;
    set.power_unit = *pu;
    set.points.push_back({parse_double(f[idx.at("flow")], lines.number()), parse_double(f[idx.at("power")], lines.number())});
  }
  return sets;
}

std::string fan_points_csv(const std::map<std::string, FanPointSet>& sets) {
  std::string out = "building,ahu,flow,power,flow_unit,power_unit\n";
  for (const auto& [path, set] : sets) {
    const auto slash = path.find('/');
    const std::string b = path.substr(0, slash), a = path.substr(slash + 1);
    for (const auto& p : set.points)
      out += b + "," + a + "," + format_number(p.flow) + "," + format_number(p.power) + "," +
             std::string(to_string(set.flow_unit)) + "," + std::string(to_string(set.power_unit)) + "\n";
  }
  return out;
}

namespace {

bool in_building(const std::string& path, const std::string& building) {
  return path.size() > building.size() && path.compare(0, building.size(), building) == 0 &&
         path[building.size()] == '/';
}

}  // namespace

std::string zone_loads_csv(const disagg::CascadeResult& result, const std::string& building) {
  std::string out = "timestamp,zone_id,q_z_kw,q_ec_kw,q_eb_kw,p_fan_kw,p_total_kw\n";
  std::vector<const disagg::ZoneLoadSeries*> zones;
  for (const auto& z : result.zones)
    if (in_building(z.zone, building)) zones.push_back(&z);
  for (std::size_t t = 0; t < result.timestamps.size(); ++t) {
    const std::string stamp = format_timestamp(result.timestamps[t]);
    for (const auto* z : zones) {
      out += stamp + "," + z->zone + "," + format_number(z->q_z[t]) + "," + format_number(z->q_ec[t]) + "," +
             format_number(z->q_eb[t]) + "," + format_number(z->p_fan[t]) + "," + format_number(z->p_total[t]) + "\n";
    }
  }
  return out;
}

std::string diagnostics_csv(const disagg::CascadeResult& result, const std::string& building) {
  std::string out = "timestamp,building_id,residual_kw,cop,coverage_flags\n";
  for (const auto& d : result.buildings) {
    if (d.building != building) continue;
    for (std::size_t t = 0; t < result.timestamps.size(); ++t)
      out += format_timestamp(result.timestamps[t]) + "," + building + "," + format_number(d.residual[t]) + "," +
             format_number(result.cop[t]) + "," + std::to_string(d.flags[t]) + "\n";
  }
  return out;
}

void parse_zone_loads_csv(const std::string& text, ZoneLoadTable& table) {
  LineReader lines(text);
  std::string_view line;
  if (!lines.next(line)) throw input_error("zone load CSV is empty (no header)");
  const auto idx = header_index(line, {"timestamp", "zone_id", "p_total_kw"}, "zone load CSV");
  const std::size_t it = idx.at("timestamp"), iz = idx.at("zone_id"), ip = idx.at("p_total_kw");
  std::map<Timestamp, std::size_t> pos;
  for (std::size_t i = 0; i < table.timestamps.size(); ++i) pos[table.timestamps[i]] = i;
  const bool fresh = table.timestamps.empty();
  std::vector<std::string_view> f;
  std::map<std::string, std::vector<std::pair<Timestamp, double>>> rows;
  while (lines.next(line)) {
    split_fields(line, f);
    if (f.size() < idx.size()) throw input_error("zone load line " + std::to_string(lines.number()) + ": too few fields");
    rows[std::string(f[iz])].emplace_back(parse_timestamp(f[it]), parse_double(f[ip], lines.number()));
  }
  if (fresh) {
    for (const auto& [zone, r] : rows)
      for (const auto& [t, v] : r) pos.emplace(t, 0);
    std::size_t i = 0;
    for (auto& [t, p] : pos) {
      p = i++;
      table.timestamps.push_back(t);
    }
  }
  for (auto& [zone, r] : rows) {
    auto& col = table.p_total[zone];
    col.assign(table.timestamps.size(), kMissing);
    for (const auto& [t, v] : r) {
      auto found = pos.find(t);
      if (found == pos.end()) throw input_error("zone load CSV: timestamp outside the shared index for '" + zone + "'");
      col[found->second] = v;
    }
  }
}

}  // namespace vpm::io
