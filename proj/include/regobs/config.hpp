#pragma once

// Line-oriented `section.key = value` experiment configuration.

#include "regobs/errors.hpp"
#include "regobs/observer.hpp"
#include "regobs/region.hpp"
#include "regobs/sensing.hpp"
#include "regobs/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace regobs {

/// Malformed text; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Well-formed text with an invalid value; the message names the key.
class ValidationError : public Error {
 public:
  using Error::Error;
};

enum class EstimatorKind { Reduced, Full, Both };
enum class InitKind { Zero, Exact };

struct ActuatorSpec {
  SensorSpec shape;  // same geometry as a sensor
  int field = 1;
  double value = 0.0;
  bool operator==(const ActuatorSpec&) const = default;
};

struct ObserverSettings {
  double target_margin = 1.0;
  double margin = 0.0;
  int measured_field = 1;
  EstimatorKind estimator = EstimatorKind::Both;
  GainMethod gain_method = GainMethod::LyapunovShift;
  double tol_rank = 1e-10;
  double tol_group = 1e-9;
  double tol_rat = 1e-9;
  double gramian_horizon = 1.0;
  int gramian_nodes = 16;
  bool operator==(const ObserverSettings&) const = default;
};

struct SimulationConfig {
  double dt = 0.01;
  double horizon = 5.0;
  std::uint64_t seed = 1;
  std::vector<double> x0;  // explicit 2n modal coefficients; empty = seeded
  InitKind estimator_init = InitKind::Zero;
  double fit_lo = 1.0;
  double fit_hi = 5.0;
  bool operator==(const SimulationConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  NormKind norm = NormKind::L2Surrogate;
  bool plot = true;
  bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
  Domain domain;
  int n_modes = 8;
  Coefficients coefficients;
  RegionSpec region{BoundarySegment{Edge::Bottom, 0.25, 0.75}, 64, 0.2};
  std::vector<SensorSpec> sensors;
  std::vector<ActuatorSpec> actuators;
  ObserverSettings observer;
  SimulationConfig simulation;
  OutputConfig output;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates; every key not given keeps its default. Unknown keys
/// are ParseErrors.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Checks value ranges. Sensor count is not checked here (rank tolerates zero
/// sensors); see require_sensors().
void validate(const ExperimentConfig& cfg);
void require_sensors(const ExperimentConfig& cfg);

/// Canonical text with every key spelled out; parse_config(to_text(c)) == c.
std::string to_text(const ExperimentConfig& cfg);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace regobs
