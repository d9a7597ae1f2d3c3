#include "vpm/regression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "vpm/error.hpp"

namespace vpm::regression {

namespace {

double two_sided_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace

OlsResult ols(std::span<const std::vector<double>> regressors, std::span<const double> response) {
  const std::size_t n = response.size();
  const std::size_t p = regressors.size() + 1;
  for (const auto& col : regressors)
    if (col.size() != n) throw input_error("regressor length does not match response");
  if (n <= p) throw fit_error("insufficient data: " + std::to_string(n) + " observations for " +
                              std::to_string(p) + " coefficients");

  // Columns are scaled to unit max-abs so the pivoting threshold is relative
  // to each column, which matters for raw cubic fan terms.
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd scale(p);
  X.col(0).setOnes();
  scale(0) = 1.0;
  for (std::size_t j = 1; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) X(i, j) = regressors[j - 1][i];
    const double m = X.col(j).cwiseAbs().maxCoeff();
    scale(j) = m > 0.0 ? m : 1.0;
    X.col(j) /= scale(j);
  }
  const Eigen::Map<const Eigen::VectorXd> y(response.data(), static_cast<Eigen::Index>(n));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (static_cast<std::size_t>(qr.rank()) < p) throw fit_error("singular fit: design matrix is rank deficient");

  const Eigen::VectorXd b_scaled = qr.solve(y);
  const Eigen::VectorXd resid = y - X * b_scaled;

  OlsResult r;
  r.n_obs = n;
  r.df_resid = n - p;
  r.coef.resize(p);
  for (std::size_t j = 0; j < p; ++j) r.coef[j] = b_scaled(j) / scale(j);
  r.residuals.assign(resid.data(), resid.data() + n);

  const double ssr = resid.squaredNorm();
  const double ybar = y.mean();
  const double sst = (y.array() - ybar).square().sum();
  r.r2 = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 0.0;

  // (X'X)^-1 = P R^-1 R^-T P' in the scaled basis.
  const double sigma2 = ssr / static_cast<double>(r.df_resid);
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd cov_perm = Rinv * Rinv.transpose();
  const Eigen::MatrixXd cov = qr.colsPermutation() * cov_perm * qr.colsPermutation().transpose();

  const double df = static_cast<double>(r.df_resid);
  r.std_err.resize(p);
  r.t_stat.resize(p);
  r.p_value.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    r.std_err[j] = std::sqrt(sigma2 * cov(j, j)) / scale(j);
    if (r.std_err[j] > 0.0) {
      r.t_stat[j] = r.coef[j] / r.std_err[j];
    } else {
      r.t_stat[j] = r.coef[j] == 0.0 ? 0.0 : std::copysign(INFINITY, r.coef[j]);
    }
    r.p_value[j] = two_sided_p(r.t_stat[j], df);
  }

  const double ssm = std::max(sst - ssr, 0.0);
  const double df_model = static_cast<double>(p - 1);
  if (ssr > 0.0) {
    r.f_statistic = (ssm / df_model) / (ssr / df);
    const boost::math::fisher_f dist(df_model, df);
    r.f_statistic_p = boost::math::cdf(boost::math::complement(dist, r.f_statistic));
  } else {
    r.f_statistic = ssm > 0.0 ? INFINITY : 0.0;
    r.f_statistic_p = ssm > 0.0 ? 0.0 : 1.0;
  }
  return r;
}

// ---------------------------------------------------------------------------

std::string_view to_string(FlowUnit u) { return u == FlowUnit::Cfm ? "CFM" : "m3/s"; }
std::string_view to_string(PowerUnit u) { return u == PowerUnit::Horsepower ? "HP" : "kW"; }

std::optional<FlowUnit> parse_flow_unit(std::string_view s) {
  if (s == "CFM" || s == "cfm") return FlowUnit::Cfm;
  if (s == "m3/s" || s == "m³/s") return FlowUnit::CubicMetresPerSecond;
  return std::nullopt;
}

std::optional<PowerUnit> parse_power_unit(std::string_view s) {
  if (s == "HP" || s == "hp") return PowerUnit::Horsepower;
  if (s == "kW" || s == "kw") return PowerUnit::Kilowatt;
  return std::nullopt;
}

double FanModel::predict(double flow) const { return a[0] + flow * (a[1] + flow * (a[2] + flow * a[3])); }

namespace {

double to_model_flow(const FanModel& m, double v_c_m3s) {
  return m.flow_unit == FlowUnit::Cfm ? v_c_m3s / kCfmToM3s : v_c_m3s;
}

}  // namespace

double FanModel::power_kw(double v_c_m3s) const {
  const double raw = std::max(predict(to_model_flow(*this, v_c_m3s)), 0.0);
  return power_unit == PowerUnit::Horsepower ? raw * kHpToKw : raw;
}

bool FanModel::extrapolating(double v_c_m3s) const {
  const double f = to_model_flow(*this, v_c_m3s);
  return f < flow_min || f > flow_max;
}

bool FanModel::nonnegative_over_range(int samples) const {
  for (int i = 0; i <= samples; ++i) {
    const double f = flow_min + (flow_max - flow_min) * i / samples;
    if (predict(f) < 0.0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

std::span<const double> outdoor_temperature(const ChannelFrame& frame, const BuildingNode& building) {
  if (const auto* col = frame.find(building_key(building, Variable::OAT))) return *col;
  return frame.column(district_key(Variable::OAT));
}

}  // namespace

FreshAirModel fit_fresh_air(const ChannelFrame& frame, const BuildingNode& building, const AhuNode& ahu,
                            const std::vector<bool>& mask, const AirProperties& air) {
  const std::string path = ahu_path(building, ahu);
  const auto loads = thermo::ahu_load_series(frame, building, ahu, air);
  const auto oat = outdoor_temperature(frame, building);
  const double cr = air.c_rho();

  std::vector<double> x, y;
  for (std::size_t t = 0; t < frame.size(); ++t) {
    if (t >= mask.size() || !mask[t]) continue;
    const double vc = loads.v_c[t];
    if (is_missing(vc) || vc <= 0.0) continue;
    const double resp = (loads.coil_load[t] - loads.space_load_sum[t]) / (cr * vc);
    const double reg = oat[t] - loads.rat[t];
    if (is_missing(resp) || is_missing(reg)) continue;
    x.push_back(reg);
    y.push_back(resp);
  }
  if (y.size() < 3) throw fit_error("insufficient data for fresh-air fit of AHU '" + path + "'");

  OlsResult r;
  try {
    const std::vector<std::vector<double>> cols{std::move(x)};
    r = ols(cols, y);
  } catch (const Error& e) {
    throw fit_error("fresh-air fit of AHU '" + path + "': " + e.what());
  }
  FreshAirModel m;
  m.ahu = path;
  m.alpha = r.coef[0];
  m.k = r.coef[1];
  m.std_err_alpha = r.std_err[0];
  m.std_err_k = r.std_err[1];
  m.p_value_alpha = r.p_value[0];
  m.p_value_k = r.p_value[1];
  m.r2 = r.r2;
  m.n_obs = r.n_obs;
  m.f_statistic_p = r.f_statistic_p;
  m.k_out_of_range = m.k < 0.0 || m.k > 1.0;
  return m;
}

BuildingModel fit_building(const ChannelFrame& frame, const BuildingNode& building,
                           std::span<const std::vector<double>> coil_series, const std::vector<bool>& mask) {
  const auto qb = frame.column(building_key(building, Variable::QB));
  std::vector<double> x, y;
  for (std::size_t t = 0; t < frame.size(); ++t) {
    if (!mask.empty() && (t >= mask.size() || !mask[t])) continue;
    double sum = 0.0;
    for (const auto& s : coil_series) sum += s[t];
    if (is_missing(sum) || is_missing(qb[t])) continue;
    x.push_back(sum);
    y.push_back(qb[t]);
  }
  if (y.size() < 3) throw fit_error("insufficient data for building fit of '" + building.id + "'");

  OlsResult r;
  try {
    const std::vector<std::vector<double>> cols{std::move(x)};
    r = ols(cols, y);
  } catch (const Error& e) {
    throw fit_error("building fit of '" + building.id + "': " + e.what());
  }
  BuildingModel m;
  m.building = building.id;
  m.beta = r.coef[0];
  m.l = r.coef[1];
  m.std_err_beta = r.std_err[0];
  m.std_err_l = r.std_err[1];
  m.p_value_beta = r.p_value[0];
  m.p_value_l = r.p_value[1];
  m.r2 = r.r2;
  m.n_obs = r.n_obs;
  m.f_statistic_p = r.f_statistic_p;
  return m;
}

FanModel fit_fan(std::span<const FanPoint> points, FlowUnit flow_unit, PowerUnit power_unit) {
  if (points.size() < 5) throw fit_error("fan fit needs at least 5 points");
  std::vector<std::vector<double>> cols(3, std::vector<double>(points.size()));
  std::vector<double> y(points.size());
  FanModel m;
  m.flow_unit = flow_unit;
  m.power_unit = power_unit;
  m.flow_min = points.front().flow;
  m.flow_max = points.front().flow;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double v = points[i].flow;
    cols[0][i] = v;
    cols[1][i] = v * v;
    cols[2][i] = v * v * v;
    y[i] = points[i].power;
    m.flow_min = std::min(m.flow_min, v);
    m.flow_max = std::max(m.flow_max, v);
  }
  const auto r = ols(cols, y);
  for (std::size_t j = 0; j < 4; ++j) {
    m.a[j] = r.coef[j];
    m.std_err[j] = r.std_err[j];
  }
  m.r2 = r.r2;
  return m;
}

FanModel scale_fan_model(const FanModel& known, double target_rated_power, double known_rated_power) {
  if (!(known_rated_power > 0.0) || !(target_rated_power > 0.0))
    throw input_error("rated fan power must be positive for scaling");
  const double ratio = target_rated_power / known_rated_power;
  FanModel m = known;
  for (auto& c : m.a) c *= ratio;
  for (auto& s : m.std_err) s *= ratio;
  m.donor = known.ahu;
  return m;
}

const FreshAirModel* FittedModels::fresh_air_for(const std::string& ahu) const {
  for (const auto& m : fresh_air)
    if (m.ahu == ahu) return &m;
  return nullptr;
}

const BuildingModel* FittedModels::building_for(const std::string& building) const {
  for (const auto& m : buildings)
    if (m.building == building) return &m;
  return nullptr;
}

const FanModel* FittedModels::fan_for(const std::string& ahu) const {
  for (const auto& m : fans)
    if (m.ahu == ahu) return &m;
  return nullptr;
}

}  // namespace vpm::regression
