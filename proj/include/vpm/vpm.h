#ifndef VPM_H
#define VPM_H

#include <stddef.h>

#if defined(_WIN32)
#  ifdef VPM_BUILDING
#    define VPM_API __declspec(dllexport)
#  else
#    define VPM_API __declspec(dllimport)
#  endif
#else
#  define VPM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum vpm_status {
  VPM_OK = 0,
  VPM_ERR_INTERNAL = 1,
  VPM_ERR_INPUT = 2,
  VPM_ERR_FIT = 3,
  VPM_ERR_METRIC = 4,
  VPM_ERR_SIMULATION = 5
} vpm_status;

typedef struct vpm_config vpm_config;

VPM_API const char* vpm_version(void);

/* Message of the last failed call on this thread; empty when none. */
VPM_API const char* vpm_last_error(void);

VPM_API void vpm_string_free(char* s);

VPM_API vpm_status vpm_config_new(vpm_config** out);
VPM_API void vpm_config_free(vpm_config* cfg);
/* Merges a JSON object into the configuration. */
VPM_API vpm_status vpm_config_merge_json(vpm_config* cfg, const char* json_text);
/* Dotted assignment such as "simulate.seed=7". */
VPM_API vpm_status vpm_config_set(vpm_config* cfg, const char* assignment);
/* Effective configuration as JSON; release with vpm_string_free. */
VPM_API vpm_status vpm_config_to_json(const vpm_config* cfg, char** out);

/* command: simulate, fit, disaggregate, report or pipeline.
   log_out may be NULL; otherwise it receives the progress log (release with vpm_string_free). */
VPM_API vpm_status vpm_run(const vpm_config* cfg, const char* command, char** log_out);

VPM_API vpm_status vpm_energy_flexibility(double e_lsp, double e_hsp, double* out);
/* out receives n shares. */
VPM_API vpm_status vpm_flexibility_shares(const double* savings, size_t n, double* out);
VPM_API vpm_status vpm_gini(const double* values, size_t n, double* out);
/* out_x and out_y receive n + 1 points. */
VPM_API vpm_status vpm_lorenz(const double* values, size_t n, double* out_x, double* out_y);

VPM_API vpm_status vpm_mixed_air_temperature(double k, double oat, double rat, double* out);
VPM_API vpm_status vpm_zone_total_electrical(double q_eb, double cop, double p_fan_z, double* out);

#ifdef __cplusplus
}
#endif

#endif
