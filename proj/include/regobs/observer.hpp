#pragma once

// Unstable/stable splitting, output-injection gain design, and co-simulation
// of the full-order and reduced-order estimators.

#include "regobs/sensing.hpp"
#include "regobs/spectral.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace regobs {

/// Partition of a diagonalizable (diagonal or symmetric) block into modes with
/// Re lambda >= -margin and the rest. `basis` holds eigenvectors as columns;
/// it is the identity for diagonal blocks.
struct UnstableSplit {
  double margin = 0.0;
  bool diagonal = true;
  Matrix basis;
  Vector eigenvalues;
  std::vector<std::size_t> unstable;
  std::vector<std::size_t> stable;

  std::size_t dimension() const { return unstable.size(); }
  /// J x n selection of unstable eigen-coordinates.
  Matrix projection() const;
};

UnstableSplit split_unstable_stable(const Matrix& block, double margin = 0.0);

enum class GainMethod {
  // H_u = W^{-1} O_u' with (A_u + mu)' W + W (A_u + mu) = O_u' O_u.
  LyapunovShift,
  // Minimum-norm H_u O_u = A_u + alpha I: exact placement at -alpha, needs
  // rank O_u = J.
  LeastSquares,
};

struct ObserverGain {
  Matrix h;  // n x q
  UnstableSplit split;
  double target_margin = 0.0;
  GainMethod method = GainMethod::LyapunovShift;
  Eigen::VectorXcd closed_loop_eigs;

  double max_closed_loop_real() const;
};

/// Gain on the unstable eigen-coordinates only, so that block - H obs decays
/// at least at rate target_margin. Throws NotDetectable when an unstable
/// eigen-group fails the rank condition (or, for LeastSquares, when the
/// placement equation has no exact solution).
ObserverGain design_gain(const Matrix& block, const Matrix& obs,
                         const UnstableSplit& split, double target_margin,
                         GainMethod method = GainMethod::LyapunovShift,
                         double tol_rank = 1e-10, double tol_group = 1e-9);

/// H = 0 with the open-loop spectrum recorded.
ObserverGain zero_gain(const Matrix& block, const Matrix& obs,
                       const UnstableSplit& split);

/// Rank test restricted to the unstable eigen-groups of `split`, with columns
/// of obs taken in the split's eigen-coordinates.
StrategicReport unstable_rank_test(const Matrix& obs,
                                   const UnstableSplit& split,
                                   double tol_group = 1e-9,
                                   double tol_rank = 1e-10);

/// Observation map of field 2 through the reduced auxiliary output, C A12.
Matrix reduced_observation(const ModalModel& model, const Matrix& c);
/// [C, 0]: sensors read field 1 of the stacked state.
Matrix full_observation(const ModalModel& model, const Matrix& c);

/// Coefficients of the reduced estimator
///   phi' = state phi + measured x1 + input u,   x2_hat = phi + injection x1
/// with injection K = H C:
///   state    = A22 - K A12
///   measured = A22 K - K A12 K - K A11 + A21
///   input    = B2 - K B1
struct EstimatorMatrices {
  Matrix state;
  Matrix measured;
  Matrix input;
  Matrix injection;
};

EstimatorMatrices estimator_matrices(const ModalModel& model, const Matrix& c,
                                     const Matrix& h);

/// Maps an error in modal coordinates of one field to a scalar norm.
using FieldNorm = std::function<double(const Vector&)>;

struct SimulationSettings {
  double dt = 0.01;
  double horizon = 5.0;
  double divergence_bound = 1e12;

  int steps() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> x1, x2;
  std::vector<Vector> y;
  std::vector<Vector> estimator;  // z_hat (full order, 2n) or phi (reduced)
  std::vector<Vector> x2_hat;
  std::vector<Vector> error;      // estimate minus truth (2n full, n reduced)
  std::vector<double> err_gamma;

  std::size_t samples() const { return times.size(); }
};

/// Plant plus z_hat' = A z_hat + B u + H (y - [C 0] z_hat), integrated as one
/// stacked LTI system. `norm` applies per field; err_gamma is
/// sqrt(|e1|^2 + |e2|^2). Without a norm the modal Euclidean norm is used.
Trajectory simulate_full_order(const ModalModel& model, const Matrix& c,
                               const ObserverGain& gain, const InputSignal& u,
                               const Vector& x0, const Vector& z_hat0,
                               const SimulationSettings& settings,
                               const FieldNorm& norm = {});

/// Plant plus the reduced estimator of estimator_matrices(); x2_hat =
/// phi + H y and err_gamma = norm(x2_hat - x2).
Trajectory simulate_reduced_order(const ModalModel& model, const Matrix& c,
                                  const ObserverGain& gain,
                                  const InputSignal& u, const Vector& x0,
                                  const Vector& phi0,
                                  const SimulationSettings& settings,
                                  const FieldNorm& norm = {});

InputSignal zero_input(Eigen::Index p);
InputSignal constant_input(Vector u);

}  // namespace regobs
