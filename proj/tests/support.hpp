#pragma once

#include <random>
#include <string>
#include <vector>

#include "vpm/core.hpp"

namespace vpm::test {

inline Timestamp ts(const std::string& s) { return parse_timestamp(s); }

inline Topology one_ahu(int zones, const std::string& b = "B", const std::string& a = "AHU1") {
  AhuNode ahu{a, 10.0, 20.0, {}};
  for (int j = 0; j < zones; ++j) ahu.zones.push_back({"Z" + std::to_string(j + 1), false});
  return Topology{{BuildingNode{b, {ahu}}}};
}

// Regular index of n samples starting at `start`.
inline std::vector<Timestamp> grid(Timestamp start, std::size_t n, std::int64_t step = 900) {
  std::vector<Timestamp> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = start + static_cast<Timestamp>(i) * step;
  return t;
}

inline double rel_err(double got, double want) {
  const double scale = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / scale;
}

}  // namespace vpm::test
