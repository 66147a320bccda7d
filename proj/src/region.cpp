#include "regobs/region.hpp"

#include "regobs/errors.hpp"
#include "regobs/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace regobs {

namespace {

std::pair<double, double> edge_extent(Edge e, const Domain& d) {
  return (e == Edge::Bottom || e == Edge::Top)
             ? std::pair{d.alpha1, d.beta1}
             : std::pair{d.alpha2, d.beta2};
}

Point on_edge(Edge e, double s, const Domain& d) {
  switch (e) {
    case Edge::Bottom:
      return {s, d.alpha2};
    case Edge::Top:
      return {s, d.beta2};
    case Edge::Left:
      return {d.alpha1, s};
    case Edge::Right:
      return {d.beta1, s};
  }
  return {};
}

QuadraturePoints tensor_nodes(const Rect& r, int n) {
  const auto g1 = gauss_legendre(n, r.lo1, r.hi1);
  const auto g2 = gauss_legendre(n, r.lo2, r.hi2);
  QuadraturePoints q;
  q.points.reserve(g1.nodes.size() * g2.nodes.size());
  q.weights.reserve(g1.nodes.size() * g2.nodes.size());
  for (std::size_t a = 0; a < g1.nodes.size(); ++a) {
    for (std::size_t b = 0; b < g2.nodes.size(); ++b) {
      q.points.push_back({g1.nodes[a], g2.nodes[b]});
      q.weights.push_back(g1.weights[a] * g2.weights[b]);
    }
  }
  return q;
}

}  // namespace

Point BoundarySegment::start(const Domain& d) const { return on_edge(edge, from, d); }
Point BoundarySegment::end(const Domain& d) const { return on_edge(edge, to, d); }

void RegionSpec::validate(const Domain& d) const {
  if (quadrature_order < 1) throw DomainError("region quadrature must be >= 1");
  if (const auto* seg = std::get_if<BoundarySegment>(&kind)) {
    const auto [lo, hi] = edge_extent(seg->edge, d);
    if (!(seg->from < seg->to)) throw DomainError("segment needs from < to");
    if (seg->from < lo || seg->to > hi) {
      throw DomainError("segment endpoints outside the edge");
    }
    if (!(collar_radius > 0.0)) throw DomainError("collar radius must be > 0");
  } else {
    const auto& r = std::get<InternalRectangle>(kind).rect;
    if (!(r.hi1 > r.lo1) || !(r.hi2 > r.lo2)) {
      throw DomainError("region rectangle is empty");
    }
    if (!d.contains_closed({r.lo1, r.lo2}) || !d.contains_closed({r.hi1, r.hi2})) {
      throw DomainError("region rectangle outside domain");
    }
  }
}

QuadraturePoints region_nodes(const RegionSpec& region, const Domain& d) {
  region.validate(d);
  if (const auto* seg = std::get_if<BoundarySegment>(&region.kind)) {
    const auto g = gauss_legendre(region.quadrature_order, seg->from, seg->to);
    QuadraturePoints q;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
      q.points.push_back(on_edge(seg->edge, g.nodes[k], d));
    }
    q.weights = g.weights;
    return q;
  }
  return tensor_nodes(std::get<InternalRectangle>(region.kind).rect,
                      region.quadrature_order);
}

Vector restrict_trace(const Vector& coeffs, const ModeSet& modes,
                      const Domain& d, const RegionSpec& region) {
  const auto q = region_nodes(region, d);
  Vector v(static_cast<Eigen::Index>(q.points.size()));
  for (std::size_t k = 0; k < q.points.size(); ++k) {
    v[static_cast<Eigen::Index>(k)] = evaluate_field(coeffs, modes, d, q.points[k]);
  }
  return v;
}

CollarRegion::CollarRegion(const BoundarySegment& gamma, double radius,
                           const Domain& d, int quadrature_order)
    : gamma_(gamma), radius_(radius), domain_(d) {
  if (!(radius > 0.0)) throw DomainError("collar radius must be > 0");
  RegionSpec{gamma, quadrature_order, radius}.validate(d);
  a_ = gamma.start(d);
  b_ = gamma.end(d);
  const Rect box{std::max(d.alpha1, std::min(a_.x1, b_.x1) - radius),
                 std::min(d.beta1, std::max(a_.x1, b_.x1) + radius),
                 std::max(d.alpha2, std::min(a_.x2, b_.x2) - radius),
                 std::min(d.beta2, std::max(a_.x2, b_.x2) + radius)};
  const auto all = tensor_nodes(box, quadrature_order);
  for (std::size_t k = 0; k < all.points.size(); ++k) {
    if (contains(all.points[k])) {
      quad_.points.push_back(all.points[k]);
      quad_.weights.push_back(all.weights[k]);
    }
  }
}

double CollarRegion::distance(Point p) const {
  const double dx = b_.x1 - a_.x1;
  const double dy = b_.x2 - a_.x2;
  const double len2 = dx * dx + dy * dy;
  double t = ((p.x1 - a_.x1) * dx + (p.x2 - a_.x2) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x1 - (a_.x1 + t * dx), p.x2 - (a_.x2 + t * dy));
}

bool CollarRegion::contains(Point p) const {
  return domain_.contains_open(p) && distance(p) < radius_;
}

CollarRegion build_collar(const BoundarySegment& gamma, double radius,
                          const Domain& d, int quadrature_order) {
  return CollarRegion(gamma, radius, d, quadrature_order);
}

GammaNorm::GammaNorm(const ModeSet& modes, const Domain& d,
                     const RegionSpec& region, NormKind kind)
    : kind_(kind) {
  region.validate(d);
  QuadraturePoints q;
  if (const auto* seg = std::get_if<BoundarySegment>(&region.kind)) {
    q = CollarRegion(*seg, region.collar_radius, d, region.quadrature_order)
            .quadrature();
  } else {
    q = region_nodes(region, d);
  }
  const auto n = static_cast<Eigen::Index>(modes.size());
  Matrix phi(static_cast<Eigen::Index>(q.points.size()), n);
  for (std::size_t r = 0; r < q.points.size(); ++r) {
    for (Eigen::Index m = 0; m < n; ++m) {
      phi(static_cast<Eigen::Index>(r), m) =
          eigenfunction(modes[static_cast<std::size_t>(m)], d, q.points[r]);
    }
  }
  const Eigen::Map<const Vector> w(q.weights.data(),
                                   static_cast<Eigen::Index>(q.weights.size()));
  gram_ = phi.transpose() * w.asDiagonal() * phi;
  gram_ = 0.5 * (gram_ + gram_.transpose());
  sobolev_weights_ = (1.0 + eigenvalues(modes, d).array().abs()).sqrt();
}

double GammaNorm::operator()(const Vector& error) const {
  if (error.size() != gram_.rows()) {
    throw DimensionError("error vector does not match the mode set");
  }
  if (kind_ == NormKind::L2Surrogate) {
    return std::sqrt(std::max(0.0, error.dot(gram_ * error)));
  }
  const Vector c = gram_ * error;
  return std::sqrt((sobolev_weights_.array() * c.array().square()).sum());
}

double gamma_error_norm(const Vector& x, const Vector& x_hat,
                        const ModeSet& modes, const Domain& d,
                        const RegionSpec& region, NormKind kind) {
  if (x.size() != x_hat.size()) throw DimensionError("field sizes differ");
  return GammaNorm(modes, d, region, kind)(x_hat - x);
}

DecayFit fit_decay(std::span<const double> t, std::span<const double> v,
                   double t_lo, double t_hi) {
  if (t.size() != v.size()) throw DimensionError("series lengths differ");
  const double slack = 1e-9 * std::max(1.0, std::abs(t_hi));
  DecayFit fit;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_lo - slack || t[k] > t_hi + slack) continue;
    double val = v[k];
    if (!(val > 0.0)) {
      val = 1e-30;
      ++fit.floored;
    }
    xs.push_back(t[k]);
    ys.push_back(std::log(val));
  }
  fit.points = xs.size();
  if (xs.size() < 3) throw FitError("fewer than 3 usable points in fit window");
  const double nx = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= nx;
  my /= nx;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  if (!(sxx > 0.0)) throw FitError("fit window has no time spread");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double r = ys[k] - (intercept + slope * xs[k]);
    ss += r * r;
  }
  fit.rate = -slope;
  fit.amplitude = std::exp(intercept);
  fit.residual = std::sqrt(ss / nx);
  return fit;
}

}  // namespace regobs
