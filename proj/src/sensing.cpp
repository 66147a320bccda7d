#include "regobs/sensing.hpp"

#include "regobs/errors.hpp"
#include "regobs/quadrature.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace regobs {

namespace {

constexpr double kPi = std::numbers::pi;

// int_lo^hi cos(a x + b) dx
double integral_cos(double a, double b, double lo, double hi) {
  if (std::abs(a) < 1e-14) return (hi - lo) * std::cos(b);
  return (std::sin(a * hi + b) - std::sin(a * lo + b)) / a;
}

// int_lo^hi sin(k (x - origin)) dx
double integral_sin(double k, double origin, double lo, double hi) {
  return (std::cos(k * (lo - origin)) - std::cos(k * (hi - origin))) / k;
}

// int_lo^hi sin(k (x - origin)) sin(kappa (x - lo)) dx, kappa = pi / (hi - lo)
double integral_sin_bump(double k, double origin, double lo, double hi) {
  const double kappa = kPi / (hi - lo);
  // sin A sin B = (cos(A - B) - cos(A + B)) / 2
  const double b_minus = -k * origin + kappa * lo;
  const double b_plus = -k * origin - kappa * lo;
  return 0.5 * (integral_cos(k - kappa, b_minus, lo, hi) -
                integral_cos(k + kappa, b_plus, lo, hi));
}

double axis_integral(WeightKind w, double k, double origin, double lo,
                     double hi) {
  return w == WeightKind::Uniform ? integral_sin(k, origin, lo, hi)
                                  : integral_sin_bump(k, origin, lo, hi);
}

void validate_table(const ZoneSensor& s) {
  const auto& t = s.table;
  if (t.n1 < 2 || t.n2 < 2 ||
      t.samples.size() != static_cast<std::size_t>(t.n1) * t.n2) {
    throw DomainError("tabulated weight needs an n1 x n2 grid with n1, n2 >= 2");
  }
}

// Modes whose index along one axis is a multiple of the denominator of the
// rational approximation to `ratio`.
std::optional<long> zero_denominator(double ratio, long max_den,
                                     double tol_rat) {
  const auto f = rational_approximation(ratio, max_den, tol_rat);
  if (!f) return std::nullopt;
  return f->q;
}

PredicateResult modes_on_zero_lines(Point ratios, const ModeSet& modes,
                                    double tol_rat) {
  const long n = std::max(1, modes.bound());
  const auto q1 = zero_denominator(ratios.x1, n, tol_rat);
  const auto q2 = zero_denominator(ratios.x2, n, tol_rat);
  PredicateResult r;
  for (const auto& m : modes) {
    const bool hit1 = q1 && m.i % *q1 == 0;
    const bool hit2 = q2 && m.j % *q2 == 0;
    if (hit1 || hit2) r.modes.push_back(m);
  }
  r.triggered = !r.modes.empty();
  return r;
}

}  // namespace

double ZoneSensor::weight_at(Point p) const {
  if (p.x1 < support.lo1 || p.x1 > support.hi1 || p.x2 < support.lo2 ||
      p.x2 > support.hi2) {
    return 0.0;
  }
  switch (weight) {
    case WeightKind::Uniform:
      return 1.0;
    case WeightKind::SeparableSine:
      return std::sin(kPi * (p.x1 - support.lo1) / (support.hi1 - support.lo1)) *
             std::sin(kPi * (p.x2 - support.lo2) / (support.hi2 - support.lo2));
    case WeightKind::Tabulated: {
      validate_table(*this);
      const double u = (p.x1 - support.lo1) / (support.hi1 - support.lo1) *
                       (table.n1 - 1);
      const double v = (p.x2 - support.lo2) / (support.hi2 - support.lo2) *
                       (table.n2 - 1);
      const int a = std::clamp(static_cast<int>(std::floor(u)), 0, table.n1 - 2);
      const int b = std::clamp(static_cast<int>(std::floor(v)), 0, table.n2 - 2);
      const double fu = u - a;
      const double fv = v - b;
      return (1 - fu) * (1 - fv) * table.at(a, b) +
             fu * (1 - fv) * table.at(a + 1, b) +
             (1 - fu) * fv * table.at(a, b + 1) + fu * fv * table.at(a + 1, b + 1);
    }
  }
  return 0.0;
}

bool ZoneSensor::symmetric(double tol) const {
  if (weight != WeightKind::Tabulated) return true;
  validate_table(*this);
  double scale = 0.0;
  for (double s : table.samples) scale = std::max(scale, std::abs(s));
  const double eps = tol * std::max(1.0, scale);
  for (int a = 0; a < table.n1; ++a) {
    for (int b = 0; b < table.n2; ++b) {
      const double v = table.at(a, b);
      if (std::abs(v - table.at(table.n1 - 1 - a, b)) > eps) return false;
      if (std::abs(v - table.at(a, table.n2 - 1 - b)) > eps) return false;
    }
  }
  return true;
}

SensorSpec SensorSpec::zone(Rect support, WeightKind w, TabulatedWeight table) {
  return SensorSpec{ZoneSensor{support, w, std::move(table)}};
}

SensorSpec SensorSpec::pointwise(Point b) { return SensorSpec{PointSensor{b}}; }

SensorSpec SensorSpec::boundary_strip(const Domain& d, int edge, double from,
                                      double to, double width) {
  if (!(width > 0.0) || !(to > from)) {
    throw DomainError("boundary strip needs width > 0 and from < to");
  }
  Rect r;
  switch (edge) {
    case 0:
      r = {from, to, d.alpha2, d.alpha2 + width};
      break;
    case 1:
      r = {from, to, d.beta2 - width, d.beta2};
      break;
    case 2:
      r = {d.alpha1, d.alpha1 + width, from, to};
      break;
    case 3:
      r = {d.beta1 - width, d.beta1, from, to};
      break;
    default:
      throw DomainError("boundary strip edge must be 0..3");
  }
  return zone(r);
}

void SensorSpec::validate(const Domain& d) const {
  if (is_zone()) {
    const auto& z = as_zone();
    const auto& r = z.support;
    if (!(r.hi1 > r.lo1) || !(r.hi2 > r.lo2)) {
      throw DomainError("zone support is empty");
    }
    if (!d.contains_closed({r.lo1, r.lo2}) || !d.contains_closed({r.hi1, r.hi2})) {
      throw DomainError("zone support outside domain");
    }
    if (z.weight == WeightKind::Tabulated) validate_table(z);
  } else if (!d.contains_open(as_point().location)) {
    throw DomainError("pointwise sensor outside the open domain");
  }
}

double zone_inner_product(const ZoneSensor& s, ModeIndex m, const Domain& d) {
  if (s.weight == WeightKind::Tabulated) {
    // Composite rule, one panel per interpolation cell.
    validate_table(s);
    const auto rule = gauss_legendre(6);
    const double h1 = (s.support.hi1 - s.support.lo1) / (s.table.n1 - 1);
    const double h2 = (s.support.hi2 - s.support.lo2) / (s.table.n2 - 1);
    double acc = 0.0;
    for (int a = 0; a + 1 < s.table.n1; ++a) {
      for (int b = 0; b + 1 < s.table.n2; ++b) {
        const double lo1 = s.support.lo1 + a * h1;
        const double lo2 = s.support.lo2 + b * h2;
        for (std::size_t u = 0; u < rule.nodes.size(); ++u) {
          for (std::size_t v = 0; v < rule.nodes.size(); ++v) {
            const Point p{lo1 + 0.5 * h1 * (rule.nodes[u] + 1.0),
                          lo2 + 0.5 * h2 * (rule.nodes[v] + 1.0)};
            acc += 0.25 * h1 * h2 * rule.weights[u] * rule.weights[v] *
                   s.weight_at(p) * eigenfunction(m, d, p);
          }
        }
      }
    }
    return acc;
  }
  const double norm = 2.0 / std::sqrt(d.width1() * d.width2());
  const double k1 = m.i * kPi / d.width1();
  const double k2 = m.j * kPi / d.width2();
  return norm *
         axis_integral(s.weight, k1, d.alpha1, s.support.lo1, s.support.hi1) *
         axis_integral(s.weight, k2, d.alpha2, s.support.lo2, s.support.hi2);
}

double zone_inner_product_quadrature(const ZoneSensor& s, ModeIndex m,
                                     const Domain& d, int n) {
  const auto r1 = gauss_legendre(n, s.support.lo1, s.support.hi1);
  const auto r2 = gauss_legendre(n, s.support.lo2, s.support.hi2);
  double acc = 0.0;
  for (std::size_t a = 0; a < r1.nodes.size(); ++a) {
    for (std::size_t b = 0; b < r2.nodes.size(); ++b) {
      const Point p{r1.nodes[a], r2.nodes[b]};
      acc += r1.weights[a] * r2.weights[b] * s.weight_at(p) *
             eigenfunction(m, d, p);
    }
  }
  return acc;
}

Matrix output_matrix(std::span<const SensorSpec> sensors, const ModeSet& modes,
                     const Domain& d) {
  Matrix c(static_cast<Eigen::Index>(sensors.size()),
           static_cast<Eigen::Index>(modes.size()));
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const auto& s = sensors[i];
    s.validate(d);
    for (std::size_t k = 0; k < modes.size(); ++k) {
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          s.is_zone() ? zone_inner_product(s.as_zone(), modes[k], d)
                      : eigenfunction(modes[k], d, s.as_point().location);
    }
  }
  return c;
}

std::vector<ModeGroup> group_by_eigenvalue(const Vector& values,
                                           double tol_group) {
  std::vector<std::size_t> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[static_cast<Eigen::Index>(a)] >
           values[static_cast<Eigen::Index>(b)];
  });
  std::vector<ModeGroup> groups;
  for (std::size_t k : order) {
    const double v = values[static_cast<Eigen::Index>(k)];
    if (!groups.empty()) {
      const double rep = groups.back().eigenvalue;
      if (std::abs(v - rep) < tol_group * std::max(1.0, std::abs(rep))) {
        groups.back().columns.push_back(k);
        continue;
      }
    }
    groups.push_back({v, {k}});
  }
  for (auto& g : groups) std::sort(g.columns.begin(), g.columns.end());
  return groups;
}

std::vector<ModeGroup> group_modes_by_eigenvalue(const ModalModel& model,
                                                 Block block,
                                                 double tol_group) {
  const Matrix& a = block == Block::A11 ? model.a11 : model.a22;
  return group_by_eigenvalue(a.diagonal(), tol_group);
}

StrategicReport strategic_rank_test(const Matrix& c,
                                    std::span<const ModeGroup> groups,
                                    double tol_rank) {
  StrategicReport rep;
  rep.sensors = static_cast<std::size_t>(c.rows());
  double sigma_max = 0.0;
  if (c.size() > 0) {
    sigma_max = Eigen::JacobiSVD<Matrix>(c).singularValues()(0);
  }
  const double threshold = tol_rank * sigma_max;
  bool all_full = true;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& grp = groups[gi];
    GroupBlock blk;
    blk.group = grp;
    blk.g.resize(c.rows(), static_cast<Eigen::Index>(grp.multiplicity()));
    for (std::size_t k = 0; k < grp.columns.size(); ++k) {
      const auto col = static_cast<Eigen::Index>(grp.columns[k]);
      if (col >= c.cols()) throw DimensionError("group column outside C");
      blk.g.col(static_cast<Eigen::Index>(k)) = c.col(col);
    }
    if (blk.g.size() > 0) {
      blk.singular_values = Eigen::JacobiSVD<Matrix>(blk.g).singularValues();
    }
    if (sigma_max > 0.0) {
      for (Eigen::Index k = 0; k < blk.singular_values.size(); ++k) {
        if (blk.singular_values[k] > threshold) ++blk.rank;
      }
    }
    blk.full_rank = blk.rank == grp.multiplicity();
    if (!blk.full_rank) {
      all_full = false;
      rep.offending.push_back(gi);
    }
    rep.max_multiplicity = std::max(rep.max_multiplicity, grp.multiplicity());
    rep.blocks.push_back(std::move(blk));
  }
  rep.verdict = (all_full && rep.sensors >= rep.max_multiplicity)
                    ? Verdict::Strategic
                    : Verdict::NotStrategic;
  return rep;
}

GramianQuadrature::GramianQuadrature(const Matrix& m, double horizon,
                                     int n_quad) {
  if (!(horizon > 0.0)) throw DomainError("Gramian horizon must be > 0");
  if (m.rows() != m.cols()) throw DimensionError("Gramian matrix not square");
  const double scale =
      m.size() > 0 ? m.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  panels_ = std::max(1, static_cast<int>(std::ceil(horizon * scale / 8.0)));
  const double h = horizon / panels_;
  const auto rule = gauss_legendre(n_quad, 0.0, h);
  weights_ = rule.weights;
  offsets_.reserve(rule.nodes.size());
  for (double tau : rule.nodes) offsets_.push_back((m * tau).exp());
  panel_step_ = (m * h).exp();
}

Matrix GramianQuadrature::operator()(const Matrix& obs) const {
  const Eigen::Index n = panel_step_.rows();
  if (obs.cols() != n) throw DimensionError("observation map does not match M");
  Matrix w = Matrix::Zero(n, n);
  Matrix r = obs;  // O exp(M s0)
  for (int p = 0; p < panels_; ++p) {
    for (std::size_t k = 0; k < offsets_.size(); ++k) {
      const Matrix y = r * offsets_[k];
      w.noalias() += weights_[k] * (y.transpose() * y);
    }
    r = r * panel_step_;
  }
  return 0.5 * (w + w.transpose());
}

Matrix observability_gramian(const Matrix& m, const Matrix& obs,
                             double horizon, int n_quad) {
  return GramianQuadrature(m, horizon, n_quad)(obs);
}

double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  const Matrix s = 0.5 * (symmetric + symmetric.transpose());
  return Eigen::SelfAdjointEigenSolver<Matrix>(s, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

std::optional<Fraction> rational_approximation(double x, long max_den,
                                               double tol) {
  long h_prev = 1, h = static_cast<long>(std::floor(x));
  long k_prev = 0, k = 1;
  double rem = x - std::floor(x);
  while (k <= max_den) {
    if (std::abs(x - static_cast<double>(h) / static_cast<double>(k)) <= tol) {
      return Fraction{h, k};
    }
    if (rem < 1e-15) break;
    const double inv = 1.0 / rem;
    const long a = static_cast<long>(std::floor(inv));
    rem = inv - a;
    const long h_next = a * h + h_prev;
    const long k_next = a * k + k_prev;
    h_prev = h;
    k_prev = k;
    h = h_next;
    k = k_next;
  }
  return std::nullopt;
}

PredicateResult nonstrategic_zone_predicate(const SensorSpec& sensor,
                                            const Domain& d,
                                            const ModeSet& modes,
                                            double tol_rat) {
  if (!sensor.is_zone()) {
    throw InapplicableError("zone predicate needs a zone sensor");
  }
  const auto& z = sensor.as_zone();
  if (!z.symmetric()) {
    throw InapplicableError("zone weight is not symmetric about its center");
  }
  const Point c = z.support.center();
  return modes_on_zero_lines(
      {(c.x1 - d.alpha1) / d.width1(), (c.x2 - d.alpha2) / d.width2()}, modes,
      tol_rat);
}

PredicateResult nonstrategic_pointwise_predicate(const SensorSpec& sensor,
                                                 const Domain& d,
                                                 const ModeSet& modes,
                                                 double tol_rat) {
  if (sensor.is_zone()) {
    throw InapplicableError("pointwise predicate needs a pointwise sensor");
  }
  const Point b = sensor.as_point().location;
  return modes_on_zero_lines(
      {(b.x1 - d.alpha1) / d.width1(), (b.x2 - d.alpha2) / d.width2()}, modes,
      tol_rat);
}

}  // namespace regobs
