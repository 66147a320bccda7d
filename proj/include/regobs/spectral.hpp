#pragma once

// Dirichlet eigenbasis of the Laplacian on a rectangle, modal assembly of the
// two-field exchange system, and exact zero-order-hold propagation.

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace regobs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
  bool operator==(const Point&) const = default;
};

/// Open rectangle (alpha1, beta1) x (alpha2, beta2).
struct Domain {
  double alpha1 = 0.0;
  double beta1 = 1.0;
  double alpha2 = 0.0;
  double beta2 = 1.0;

  static Domain unit_square() { return {}; }

  double width1() const { return beta1 - alpha1; }
  double width2() const { return beta2 - alpha2; }
  /// Closed-rectangle membership, with a relative slack of 1e-12.
  bool contains_closed(Point p) const;
  bool contains_open(Point p) const;
  /// Throws DomainError when the rectangle is empty.
  void validate() const;

  bool operator==(const Domain&) const = default;
};

struct ModeIndex {
  int i = 1;
  int j = 1;
  auto operator<=>(const ModeIndex&) const = default;
};

std::string to_string(ModeIndex m);

/// Ordered, duplicate-free list of modes. Row-major by (i, j).
class ModeSet {
 public:
  ModeSet() = default;
  explicit ModeSet(std::vector<ModeIndex> modes);

  /// All (i, j) with 1 <= i, j <= n.
  static ModeSet truncated(int n);

  std::size_t size() const { return modes_.size(); }
  bool empty() const { return modes_.empty(); }
  const ModeIndex& operator[](std::size_t k) const { return modes_[k]; }
  auto begin() const { return modes_.begin(); }
  auto end() const { return modes_.end(); }
  const std::vector<ModeIndex>& modes() const { return modes_; }
  std::optional<std::size_t> index_of(ModeIndex m) const;
  /// Largest index along either axis.
  int bound() const;

  bool operator==(const ModeSet&) const = default;

 private:
  std::vector<ModeIndex> modes_;
};

/// Diffusion and coupling constants of the exchange system.
struct Coefficients {
  double alpha_diff = 1.0;
  double gamma_diff = 0.1;
  double beta_couple = 1.0;

  void validate() const;
  bool operator==(const Coefficients&) const = default;
};

/// lambda_ij = -(i^2 / L1^2 + j^2 / L2^2) pi^2.
double eigenvalue(ModeIndex m, const Domain& d);

/// Normalized product-sine eigenfunction. Throws DomainError outside the
/// closed rectangle.
double eigenfunction(ModeIndex m, const Domain& d, Point p);

Vector eigenvalues(const ModeSet& modes, const Domain& d);

/// Evaluates sum_m coeffs[m] phi_m(p).
double evaluate_field(const Vector& coeffs, const ModeSet& modes,
                      const Domain& d, Point p);

/// Two-field system in modal coordinates:
///   x1' = A11 x1 + A12 x2 + B1 u
///   x2' = A21 x1 + A22 x2 + B2 u
struct ModalModel {
  ModeSet modes;
  Domain domain;
  Vector eigenvalues;  // Laplacian eigenvalue per mode
  Matrix a11, a12, a21, a22;
  Matrix b1, b2;  // n x p; p may be zero

  std::size_t size() const { return modes.size(); }
  Eigen::Index inputs() const { return b1.cols(); }

  /// [[A11, A12], [A21, A22]].
  Matrix stacked() const;
  /// [B1; B2].
  Matrix stacked_input() const;
  /// Same system with field 1 and field 2 exchanged.
  ModalModel with_swapped_fields() const;
};

/// A11 = diag(alpha lambda + beta), A22 = diag(gamma lambda + beta),
/// A12 = A21 = -beta I. Empty b1/b2 mean no actuators.
ModalModel assemble_exchange_model(const Coefficients& c, const Domain& d,
                                   const ModeSet& modes, Matrix b1 = {},
                                   Matrix b2 = {});

/// x_{k+1} = E x_k + Phi u_k with E = exp(M dt) and
/// Phi = int_0^dt exp(M s) ds B, both computed once.
class Propagator {
 public:
  Propagator(const Matrix& m, const Matrix& b, double dt);
  explicit Propagator(const Matrix& m, double dt)
      : Propagator(m, Matrix(m.rows(), 0), dt) {}

  const Matrix& transition() const { return transition_; }
  const Matrix& input_gain() const { return input_gain_; }
  double dt() const { return dt_; }

  Vector step(const Vector& x) const;
  Vector step(const Vector& x, const Vector& u) const;

 private:
  Matrix transition_;
  Matrix input_gain_;
  double dt_;
};

/// Piecewise-constant input, sampled at the start of each step.
using InputSignal = std::function<Vector(double t)>;

/// Returns steps + 1 states, starting with x0.
std::vector<Vector> propagate(const Matrix& m, const Matrix& b,
                              const Vector& x0, const InputSignal& u,
                              double dt, int steps);
std::vector<Vector> propagate(const Matrix& m, const Vector& x0, double dt,
                              int steps);

}  // namespace regobs
