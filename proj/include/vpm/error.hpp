#pragma once

#include <stdexcept>
#include <string>

namespace vpm {

// Categories map one-to-one onto CLI exit codes and C API status values.
enum class ErrorKind {
  Internal = 1,
  Input = 2,
  Fit = 3,
  Metric = 4,
  Simulation = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error input_error(const std::string& what) { return Error(ErrorKind::Input, what); }
inline Error fit_error(const std::string& what) { return Error(ErrorKind::Fit, what); }
inline Error metric_error(const std::string& what) { return Error(ErrorKind::Metric, what); }
inline Error simulation_error(const std::string& what) { return Error(ErrorKind::Simulation, what); }

}  // namespace vpm
