#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpm/core.hpp"
#include "vpm/thermo.hpp"

namespace vpm::regression {

// Ordinary least squares with an intercept column prepended. Coefficient 0
// is the intercept, coefficient j the j-th regressor column. Inference
// assumes homoskedastic normal errors.
struct OlsResult {
  std::vector<double> coef;
  std::vector<double> std_err;
  std::vector<double> t_stat;
  std::vector<double> p_value;
  std::vector<double> residuals;
  double r2 = 0.0;
  double f_statistic = 0.0;
  double f_statistic_p = 1.0;
  std::size_t n_obs = 0;
  std::size_t df_resid = 0;
};

// Throws Fit errors on rank deficiency or when n_obs <= number of coefficients.
OlsResult ols(std::span<const std::vector<double>> regressors, std::span<const double> response);

struct FreshAirModel {
  std::string ahu;  // entity path
  double k = 0.0;
  double alpha = 0.0;
  double r2 = 0.0;
  double std_err_k = 0.0, std_err_alpha = 0.0;
  double p_value_k = 1.0, p_value_alpha = 1.0;
  std::size_t n_obs = 0;
  double f_statistic_p = 1.0;
  bool k_out_of_range = false;
};

struct BuildingModel {
  std::string building;
  double l = 1.0;
  double beta = 0.0;
  double r2 = 0.0;
  double std_err_l = 0.0, std_err_beta = 0.0;
  double p_value_l = 1.0, p_value_beta = 1.0;
  std::size_t n_obs = 0;
  double f_statistic_p = 1.0;
};

enum class FlowUnit { CubicMetresPerSecond, Cfm };
enum class PowerUnit { Kilowatt, Horsepower };

constexpr double kCfmToM3s = 4.719474e-4;
constexpr double kHpToKw = 0.7457;

std::string_view to_string(FlowUnit u);
std::string_view to_string(PowerUnit u);
std::optional<FlowUnit> parse_flow_unit(std::string_view s);
std::optional<PowerUnit> parse_power_unit(std::string_view s);

struct FanModel {
  std::string ahu;
  std::array<double, 4> a{};  // power = a0 + a1 v + a2 v^2 + a3 v^3 in the tagged units
  FlowUnit flow_unit = FlowUnit::Cfm;
  PowerUnit power_unit = PowerUnit::Horsepower;
  double flow_min = 0.0, flow_max = 0.0;  // valid range, flow_unit
  double r2 = 1.0;
  std::array<double, 4> std_err{};
  std::optional<std::string> donor;  // set when derived by rated-power scaling

  // Raw polynomial in the model's own units.
  double predict(double flow) const;
  // Power in kW at total flow v_c given in m3/s, clamped below at zero.
  double power_kw(double v_c_m3s) const;
  bool extrapolating(double v_c_m3s) const;
  bool nonnegative_over_range(int samples = 200) const;
};

struct FanPoint {
  double flow = 0.0;
  double power = 0.0;
};

FreshAirModel fit_fresh_air(const ChannelFrame& frame, const BuildingNode& building, const AhuNode& ahu,
                            const std::vector<bool>& mask, const AirProperties& air);

// Regresses q_b on the summed AHU coil loads. An empty mask selects all samples.
BuildingModel fit_building(const ChannelFrame& frame, const BuildingNode& building,
                           std::span<const std::vector<double>> coil_series, const std::vector<bool>& mask = {});

FanModel fit_fan(std::span<const FanPoint> points, FlowUnit flow_unit = FlowUnit::Cfm,
                 PowerUnit power_unit = PowerUnit::Horsepower);

FanModel scale_fan_model(const FanModel& known, double target_rated_power, double known_rated_power);

struct FittedModels {
  std::vector<FreshAirModel> fresh_air;
  std::vector<BuildingModel> buildings;
  std::vector<FanModel> fans;

  const FreshAirModel* fresh_air_for(const std::string& ahu) const;
  const BuildingModel* building_for(const std::string& building) const;
  const FanModel* fan_for(const std::string& ahu) const;
};

}  // namespace vpm::regression
