#pragma once

// Experiment orchestration and file emission.

#include "regobs/config.hpp"
#include "regobs/observer.hpp"
#include "regobs/region.hpp"
#include "regobs/sensing.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace regobs {

/// Everything derived from a config before simulation.
struct Setup {
  ModalModel model;          // fields ordered so field 1 is measured
  Matrix c;                  // sensor output matrix on the measured field
  std::vector<ModeGroup> groups;  // A22 eigen-groups
  Eigen::Index inputs = 0;
  Vector u;                  // constant actuator input
};

Setup make_setup(const ExperimentConfig& cfg);

/// Full-mode-set rank test on the A22 groups with the sensor output matrix.
StrategicReport rank_report(const ExperimentConfig& cfg);

/// Seeded modal initial state of length 2n, entries uniform in [-1, 1).
Vector initial_state(const ExperimentConfig& cfg, std::size_t n);

struct GainSummary {
  std::size_t unstable = 0;  // J
  bool not_detectable = false;
  std::vector<ModeIndex> offending_modes;
  Eigen::VectorXcd closed_loop;
  std::optional<ObserverGain> gain;
};

struct EstimatorRun {
  GainSummary gain;
  Trajectory trajectory;
  std::optional<DecayFit> fit;
  std::optional<std::string> diverged;  // diagnostic when the guard tripped
};

struct RunReport {
  StrategicReport strategic;
  std::optional<EstimatorRun> reduced;
  std::optional<EstimatorRun> full;
  std::vector<std::string> manifest;
  std::string config_echo;

  /// Estimator whose norm is reported as err_gamma (reduced if run).
  const EstimatorRun& primary() const { return reduced ? *reduced : *full; }
};

/// Runs the pipeline without touching the filesystem.
RunReport run_pipeline(const ExperimentConfig& cfg);

/// run_pipeline() then emit_outputs() into out_dir.
RunReport run_experiment(const ExperimentConfig& cfg,
                         const std::filesystem::path& out_dir);

struct SweepRecord {
  Point position;
  bool strategic = false;
  double min_gramian_eig = 0.0;
  std::vector<ModeIndex> triggered;
};

/// Moves sensor 1 over a grid_n x grid_n interior lattice
/// ((k + 1) / (grid_n + 1) of each side). Records are in lattice order.
std::vector<SweepRecord> placement_sweep(const ExperimentConfig& cfg,
                                         int grid_n, unsigned workers = 0);

/// Writes trajectory.csv, summary.txt, gain.csv (detectable runs) and
/// error_decay.svg (when plotting); fills report.manifest.
void emit_outputs(RunReport& report, const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir);

std::string trajectory_csv(const RunReport& report, const ModeSet& modes);
std::string summary_text(const RunReport& report, const ExperimentConfig& cfg);
std::string sweep_csv(const std::vector<SweepRecord>& records);
std::string decay_svg(const Trajectory& traj, const DecayFit& fit);
std::string format_report(const StrategicReport& report, const ModeSet& modes);

}  // namespace regobs
