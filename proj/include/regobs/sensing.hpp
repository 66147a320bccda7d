#pragma once

// Sensor models, the output matrix C, strategic-sensor rank tests, the
// observability Gramian and the closed-form non-strategicness predicates.

#include "regobs/spectral.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace regobs {

/// Closed axis-aligned rectangle [lo1, hi1] x [lo2, hi2].
struct Rect {
  double lo1 = 0.0;
  double hi1 = 0.0;
  double lo2 = 0.0;
  double hi2 = 0.0;

  Point center() const { return {0.5 * (lo1 + hi1), 0.5 * (lo2 + hi2)}; }
  double half_width1() const { return 0.5 * (hi1 - lo1); }
  double half_width2() const { return 0.5 * (hi2 - lo2); }
  bool operator==(const Rect&) const = default;
};

enum class WeightKind { Uniform, SeparableSine, Tabulated };

/// Weight samples on a uniform n1 x n2 grid spanning the support (endpoints
/// included), row-major in axis 1. Evaluated by bilinear interpolation.
struct TabulatedWeight {
  int n1 = 0;
  int n2 = 0;
  std::vector<double> samples;

  double at(int a, int b) const { return samples[a * n2 + b]; }
  bool operator==(const TabulatedWeight&) const = default;
};

struct ZoneSensor {
  Rect support;
  WeightKind weight = WeightKind::Uniform;
  TabulatedWeight table;  // only for WeightKind::Tabulated

  /// Weight function value at p (zero outside the support).
  double weight_at(Point p) const;
  bool symmetric(double tol = 1e-12) const;
  bool operator==(const ZoneSensor&) const = default;
};

struct PointSensor {
  Point location;
  bool operator==(const PointSensor&) const = default;
};

struct SensorSpec {
  std::variant<ZoneSensor, PointSensor> kind;

  static SensorSpec zone(Rect support, WeightKind w = WeightKind::Uniform,
                         TabulatedWeight table = {});
  static SensorSpec pointwise(Point b);
  /// Zone sensor on the strip of the given width along one side of the domain.
  /// edge: 0 bottom, 1 top, 2 left, 3 right.
  static SensorSpec boundary_strip(const Domain& d, int edge, double from,
                                   double to, double width);

  bool is_zone() const { return std::holds_alternative<ZoneSensor>(kind); }
  const ZoneSensor& as_zone() const { return std::get<ZoneSensor>(kind); }
  const PointSensor& as_point() const { return std::get<PointSensor>(kind); }

  /// Zone support must lie in the closed domain, pointwise locations in the
  /// open domain. Throws DomainError.
  void validate(const Domain& d) const;

  bool operator==(const SensorSpec&) const = default;
};

/// <phi_m, f>_{L2(D)} for one zone sensor. Closed form for Uniform and
/// SeparableSine weights, tensor Gauss-Legendre for Tabulated.
double zone_inner_product(const ZoneSensor& s, ModeIndex m, const Domain& d);

/// Same inner product by n-point tensor Gauss-Legendre quadrature.
double zone_inner_product_quadrature(const ZoneSensor& s, ModeIndex m,
                                     const Domain& d, int n);

/// q x |modes| matrix, row i from sensor i only.
Matrix output_matrix(std::span<const SensorSpec> sensors, const ModeSet& modes,
                     const Domain& d);

struct ModeGroup {
  double eigenvalue = 0.0;
  std::vector<std::size_t> columns;  // positions in the mode set

  std::size_t multiplicity() const { return columns.size(); }
};

/// Groups equal values: |a - b| < tol * max(1, |a|). Groups are ordered by
/// decreasing value (least stable first); columns keep mode-set order.
std::vector<ModeGroup> group_by_eigenvalue(const Vector& values,
                                           double tol_group = 1e-9);

enum class Block { A11, A22 };

std::vector<ModeGroup> group_modes_by_eigenvalue(const ModalModel& model,
                                                 Block block,
                                                 double tol_group = 1e-9);

struct GroupBlock {
  ModeGroup group;
  Matrix g;  // q x multiplicity
  Vector singular_values;
  std::size_t rank = 0;
  bool full_rank = false;
};

enum class Verdict { Strategic, NotStrategic };

struct StrategicReport {
  std::vector<GroupBlock> blocks;
  std::size_t sensors = 0;
  std::size_t max_multiplicity = 0;
  Verdict verdict = Verdict::NotStrategic;
  std::vector<std::size_t> offending;  // indices into blocks

  bool strategic() const { return verdict == Verdict::Strategic; }
};

/// Strategic iff q >= max multiplicity and rank G_n = r_n for every group.
/// Singular values below tol_rank * sigma_max(C) count as zero.
StrategicReport strategic_rank_test(const Matrix& c,
                                    std::span<const ModeGroup> groups,
                                    double tol_rank = 1e-10);

/// W = int_0^T exp(M' s) O' O exp(M s) ds, composite Gauss-Legendre with
/// n_quad nodes per panel. Propagators are computed once per M, so one
/// instance serves many observation maps.
class GramianQuadrature {
 public:
  GramianQuadrature(const Matrix& m, double horizon, int n_quad = 16);
  Matrix operator()(const Matrix& obs) const;

 private:
  std::vector<double> weights_;
  std::vector<Matrix> offsets_;  // exp(M tau_k) within one panel
  Matrix panel_step_;
  int panels_ = 1;
};

Matrix observability_gramian(const Matrix& m, const Matrix& obs,
                             double horizon, int n_quad = 16);

double min_eigenvalue(const Matrix& symmetric);

/// p / q with q >= 1.
struct Fraction {
  long p = 0;
  long q = 1;
};

/// Continued-fraction convergent of x with denominator <= max_den that is
/// within tol of x, if any.
std::optional<Fraction> rational_approximation(double x, long max_den,
                                               double tol = 1e-9);

struct PredicateResult {
  bool triggered = false;
  std::vector<ModeIndex> modes;  // mode-set order
};

/// Zone sensor with a center-symmetric weight centered on a zero of
/// sin(i pi (xi - alpha) / L) along either axis: those modes give a zero
/// reading. Throws InapplicableError for non-symmetric weights.
PredicateResult nonstrategic_zone_predicate(const SensorSpec& sensor,
                                            const Domain& d,
                                            const ModeSet& modes,
                                            double tol_rat = 1e-9);

/// Pointwise sensor at b: modes with phi_ij(b) = 0.
PredicateResult nonstrategic_pointwise_predicate(const SensorSpec& sensor,
                                                 const Domain& d,
                                                 const ModeSet& modes,
                                                 double tol_rat = 1e-9);

}  // namespace regobs
