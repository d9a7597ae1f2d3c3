#include "vpm/vpm.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "vpm/app.hpp"
#include "vpm/error.hpp"
#include "vpm/metrics.hpp"
#include "vpm/thermo.hpp"
#include "vpm/disaggregation.hpp"

struct vpm_config {
  vpm::io::json json = vpm::app::default_config_json();
};

namespace {

thread_local std::string last_error;

vpm_status fail(vpm_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
vpm_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return VPM_OK;
  } catch (const vpm::Error& e) {
    return fail(static_cast<vpm_status>(static_cast<int>(e.kind())), e.what());
  } catch (const std::exception& e) {
    return fail(VPM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(VPM_ERR_INTERNAL, "unknown error");
  }
}

char* dup(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* vpm_version(void) { return VPM_VERSION; }
const char* vpm_last_error(void) { return last_error.c_str(); }
void vpm_string_free(char* s) { std::free(s); }

vpm_status vpm_config_new(vpm_config** out) {
  if (!out) return fail(VPM_ERR_INPUT, "null output pointer");
  return guarded([&] { *out = new vpm_config; });
}

void vpm_config_free(vpm_config* cfg) { delete cfg; }

vpm_status vpm_config_merge_json(vpm_config* cfg, const char* json_text) {
  if (!cfg || !json_text) return fail(VPM_ERR_INPUT, "null argument");
  return guarded([&] {
    auto patch = vpm::io::json::parse(json_text, nullptr, false);
    if (patch.is_discarded() || !patch.is_object()) throw vpm::input_error("configuration must be a JSON object");
    auto merged = cfg->json;
    merged.merge_patch(patch);
    vpm::app::parse_config(merged);
    cfg->json = std::move(merged);
  });
}

vpm_status vpm_config_set(vpm_config* cfg, const char* assignment) {
  if (!cfg || !assignment) return fail(VPM_ERR_INPUT, "null argument");
  return guarded([&] {
    auto merged = cfg->json;
    vpm::app::apply_override(merged, assignment);
    vpm::app::parse_config(merged);
    cfg->json = std::move(merged);
  });
}

vpm_status vpm_config_to_json(const vpm_config* cfg, char** out) {
  if (!cfg || !out) return fail(VPM_ERR_INPUT, "null argument");
  return guarded([&] { *out = dup(cfg->json.dump(2)); });
}

vpm_status vpm_run(const vpm_config* cfg, const char* command, char** log_out) {
  if (!cfg || !command) return fail(VPM_ERR_INPUT, "null argument");
  std::ostringstream log;
  const auto status = guarded([&] {
    const auto rc = vpm::app::parse_config(cfg->json);
    const std::string cmd = command;
    if (cmd == "simulate") vpm::app::cmd_simulate(rc, log);
    else if (cmd == "fit") vpm::app::cmd_fit(rc, log);
    else if (cmd == "disaggregate") vpm::app::cmd_disaggregate(rc, log);
    else if (cmd == "report") vpm::app::cmd_report(rc, log);
    else if (cmd == "pipeline") vpm::app::cmd_pipeline(rc, log);
    else throw vpm::input_error("unknown command '" + cmd + "'");
  });
  if (log_out) *log_out = dup(log.str());
  return status;
}

vpm_status vpm_energy_flexibility(double e_lsp, double e_hsp, double* out) {
  if (!out) return fail(VPM_ERR_INPUT, "null output pointer");
  return guarded([&] { *out = vpm::metrics::energy_flexibility(e_lsp, e_hsp); });
}

vpm_status vpm_flexibility_shares(const double* savings, size_t n, double* out) {
  if ((!savings || !out) && n) return fail(VPM_ERR_INPUT, "null argument");
  return guarded([&] {
    const auto s = vpm::metrics::flexibility_shares({savings, n});
    std::copy(s.begin(), s.end(), out);
  });
}

vpm_status vpm_gini(const double* values, size_t n, double* out) {
  if (!out || (!values && n)) return fail(VPM_ERR_INPUT, "null argument");
  return guarded([&] { *out = vpm::metrics::gini({values, n}); });
}

vpm_status vpm_lorenz(const double* values, size_t n, double* out_x, double* out_y) {
  if (!out_x || !out_y || (!values && n)) return fail(VPM_ERR_INPUT, "null argument");
  return guarded([&] {
    const auto pts = vpm::metrics::lorenz({values, n});
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out_x[i] = pts[i].first;
      out_y[i] = pts[i].second;
    }
  });
}

vpm_status vpm_mixed_air_temperature(double k, double oat, double rat, double* out) {
  if (!out) return fail(VPM_ERR_INPUT, "null output pointer");
  return guarded([&] { *out = vpm::thermo::mixed_air_temperature(k, oat, rat); });
}

vpm_status vpm_zone_total_electrical(double q_eb, double cop, double p_fan_z, double* out) {
  if (!out) return fail(VPM_ERR_INPUT, "null output pointer");
  return guarded([&] { *out = vpm::disagg::zone_total_electrical(q_eb, cop, p_fan_z); });
}

}  // extern "C"
