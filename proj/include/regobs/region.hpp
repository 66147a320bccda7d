#pragma once

// Target region geometry, trace restriction, Gamma-restricted norms and
// exponential decay fits.

#include "regobs/sensing.hpp"
#include "regobs/spectral.hpp"

#include <span>
#include <variant>
#include <vector>

namespace regobs {

enum class Edge { Bottom, Top, Left, Right };

/// Part of one side of the domain, parametrized by the coordinate that runs
/// along that side.
struct BoundarySegment {
  Edge edge = Edge::Bottom;
  double from = 0.0;
  double to = 1.0;

  Point start(const Domain& d) const;
  Point end(const Domain& d) const;
  bool operator==(const BoundarySegment&) const = default;
};

struct InternalRectangle {
  Rect rect;
  bool operator==(const InternalRectangle&) const = default;
};

struct RegionSpec {
  std::variant<BoundarySegment, InternalRectangle> kind;
  int quadrature_order = 64;
  double collar_radius = 0.2;  // used only for boundary segments

  bool is_boundary() const {
    return std::holds_alternative<BoundarySegment>(kind);
  }
  void validate(const Domain& d) const;
  bool operator==(const RegionSpec&) const = default;
};

struct QuadraturePoints {
  std::vector<Point> points;
  std::vector<double> weights;
};

/// 1D Gauss-Legendre nodes along a boundary segment, tensor nodes over an
/// internal rectangle.
QuadraturePoints region_nodes(const RegionSpec& region, const Domain& d);

/// Field values at region_nodes().
Vector restrict_trace(const Vector& coeffs, const ModeSet& modes,
                      const Domain& d, const RegionSpec& region);

/// omega_r = { p in Omega : dist(p, Gamma) < r }.
class CollarRegion {
 public:
  CollarRegion(const BoundarySegment& gamma, double radius, const Domain& d,
               int quadrature_order = 64);

  double distance(Point p) const;
  bool contains(Point p) const;
  double radius() const { return radius_; }
  const BoundarySegment& gamma() const { return gamma_; }
  /// Tensor nodes over the bounding box of omega_r, filtered by membership.
  const QuadraturePoints& quadrature() const { return quad_; }

 private:
  BoundarySegment gamma_;
  double radius_;
  Domain domain_;
  Point a_, b_;
  QuadraturePoints quad_;
};

CollarRegion build_collar(const BoundarySegment& gamma, double radius,
                          const Domain& d, int quadrature_order = 64);

enum class NormKind { L2Surrogate, SobolevHalfModal };

/// Gamma-restricted norm of modal error vectors.
///
/// Area quadrature runs over the internal rectangle, or over the collar
/// omega_r for boundary segments (the Dirichlet trace itself is zero).
/// G_mk = sum_q w_q phi_m(p_q) phi_k(p_q) is the indicator-projection Gram
/// matrix of that area.
///   L2Surrogate:      sqrt(e' G e)
///   SobolevHalfModal: sqrt(sum_m (1 + |lambda_m|)^(1/2) c_m^2), c = G e
class GammaNorm {
 public:
  GammaNorm(const ModeSet& modes, const Domain& d, const RegionSpec& region,
            NormKind kind = NormKind::L2Surrogate);

  double operator()(const Vector& error) const;
  const Matrix& gram() const { return gram_; }
  NormKind kind() const { return kind_; }

 private:
  Matrix gram_;
  Vector sobolev_weights_;
  NormKind kind_;
};

double gamma_error_norm(const Vector& x, const Vector& x_hat,
                        const ModeSet& modes, const Domain& d,
                        const RegionSpec& region,
                        NormKind kind = NormKind::L2Surrogate);

struct DecayFit {
  double amplitude = 0.0;  // M
  double rate = 0.0;       // alpha in M exp(-alpha t)
  double t_lo = 0.0;
  double t_hi = 0.0;
  double residual = 0.0;   // RMS of log residuals
  std::size_t points = 0;
  std::size_t floored = 0;  // non-positive values replaced by 1e-30
};

/// Least-squares line through (t, log v) for t in [t_lo, t_hi].
DecayFit fit_decay(std::span<const double> t, std::span<const double> v,
                   double t_lo, double t_hi);

}  // namespace regobs
