#include "regobs/spectral.hpp"

#include "regobs/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace regobs {

namespace {

constexpr double kPi = std::numbers::pi;

double slack(double width) { return 1e-12 * std::max(1.0, std::abs(width)); }

}  // namespace

bool Domain::contains_closed(Point p) const {
  return p.x1 >= alpha1 - slack(width1()) && p.x1 <= beta1 + slack(width1()) &&
         p.x2 >= alpha2 - slack(width2()) && p.x2 <= beta2 + slack(width2());
}

bool Domain::contains_open(Point p) const {
  return p.x1 > alpha1 && p.x1 < beta1 && p.x2 > alpha2 && p.x2 < beta2;
}

void Domain::validate() const {
  if (!(beta1 > alpha1) || !(beta2 > alpha2)) {
    throw DomainError("domain requires beta1 > alpha1 and beta2 > alpha2");
  }
}

std::string to_string(ModeIndex m) {
  return std::to_string(m.i) + "." + std::to_string(m.j);
}

ModeSet::ModeSet(std::vector<ModeIndex> modes) : modes_(std::move(modes)) {
  for (const auto& m : modes_) {
    if (m.i < 1 || m.j < 1) {
      throw DomainError("mode indices must be >= 1, got " + to_string(m));
    }
  }
  std::sort(modes_.begin(), modes_.end());
  if (std::adjacent_find(modes_.begin(), modes_.end()) != modes_.end()) {
    throw DomainError("duplicate mode in mode set");
  }
}

ModeSet ModeSet::truncated(int n) {
  if (n < 1) throw DomainError("mode truncation must be >= 1");
  std::vector<ModeIndex> modes;
  modes.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) modes.push_back({i, j});
  }
  return ModeSet(std::move(modes));
}

std::optional<std::size_t> ModeSet::index_of(ModeIndex m) const {
  auto it = std::lower_bound(modes_.begin(), modes_.end(), m);
  if (it == modes_.end() || *it != m) return std::nullopt;
  return static_cast<std::size_t>(it - modes_.begin());
}

int ModeSet::bound() const {
  int b = 0;
  for (const auto& m : modes_) b = std::max({b, m.i, m.j});
  return b;
}

void Coefficients::validate() const {
  if (!(alpha_diff > 0.0)) throw DomainError("alpha_diff must be > 0");
  if (!(gamma_diff > 0.0)) throw DomainError("gamma_diff must be > 0");
}

double eigenvalue(ModeIndex m, const Domain& d) {
  const double a = m.i / d.width1();
  const double b = m.j / d.width2();
  return -(a * a + b * b) * kPi * kPi;
}

double eigenfunction(ModeIndex m, const Domain& d, Point p) {
  if (!d.contains_closed(p)) {
    throw DomainError("point outside domain");
  }
  const double norm = 2.0 / std::sqrt(d.width1() * d.width2());
  return norm * std::sin(m.i * kPi * (p.x1 - d.alpha1) / d.width1()) *
         std::sin(m.j * kPi * (p.x2 - d.alpha2) / d.width2());
}

Vector eigenvalues(const ModeSet& modes, const Domain& d) {
  Vector lam(static_cast<Eigen::Index>(modes.size()));
  for (std::size_t k = 0; k < modes.size(); ++k) {
    lam[static_cast<Eigen::Index>(k)] = eigenvalue(modes[k], d);
  }
  return lam;
}

double evaluate_field(const Vector& coeffs, const ModeSet& modes,
                      const Domain& d, Point p) {
  if (coeffs.size() != static_cast<Eigen::Index>(modes.size())) {
    throw DimensionError("coefficient vector does not match mode set");
  }
  double v = 0.0;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    v += coeffs[static_cast<Eigen::Index>(k)] * eigenfunction(modes[k], d, p);
  }
  return v;
}

Matrix ModalModel::stacked() const {
  const auto n = static_cast<Eigen::Index>(size());
  Matrix a(2 * n, 2 * n);
  a << a11, a12, a21, a22;
  return a;
}

Matrix ModalModel::stacked_input() const {
  Matrix b(b1.rows() + b2.rows(), b1.cols());
  b << b1, b2;
  return b;
}

ModalModel ModalModel::with_swapped_fields() const {
  ModalModel m = *this;
  std::swap(m.a11, m.a22);
  std::swap(m.a12, m.a21);
  std::swap(m.b1, m.b2);
  return m;
}

ModalModel assemble_exchange_model(const Coefficients& c, const Domain& d,
                                   const ModeSet& modes, Matrix b1,
                                   Matrix b2) {
  c.validate();
  d.validate();
  if (modes.empty()) throw DimensionError("mode set is empty");
  const auto n = static_cast<Eigen::Index>(modes.size());
  if (b1.size() == 0 && b2.size() == 0) {
    b1 = Matrix::Zero(n, 0);
    b2 = Matrix::Zero(n, 0);
  } else if (b1.size() == 0) {
    b1 = Matrix::Zero(n, b2.cols());
  } else if (b2.size() == 0) {
    b2 = Matrix::Zero(n, b1.cols());
  }
  if (b1.rows() != n || b2.rows() != n || b1.cols() != b2.cols()) {
    throw DimensionError("actuator matrices do not match the mode set");
  }

  ModalModel m;
  m.modes = modes;
  m.domain = d;
  m.eigenvalues = eigenvalues(modes, d);
  m.a11 = (c.alpha_diff * m.eigenvalues.array() + c.beta_couple)
              .matrix()
              .asDiagonal();
  m.a22 = (c.gamma_diff * m.eigenvalues.array() + c.beta_couple)
              .matrix()
              .asDiagonal();
  m.a12 = -c.beta_couple * Matrix::Identity(n, n);
  m.a21 = m.a12;
  m.b1 = std::move(b1);
  m.b2 = std::move(b2);
  return m;
}

Propagator::Propagator(const Matrix& m, const Matrix& b, double dt) : dt_(dt) {
  if (!(dt > 0.0)) throw DomainError("dt must be > 0");
  if (m.rows() != m.cols()) throw DimensionError("propagator matrix not square");
  if (b.rows() != m.rows()) {
    throw DimensionError("input matrix rows do not match state dimension");
  }
  const Eigen::Index n = m.rows();
  const Eigen::Index p = b.cols();
  if (p == 0) {
    transition_ = (m * dt).exp();
    input_gain_ = Matrix::Zero(n, 0);
    return;
  }
  // exp([M B; 0 0] dt) = [E Phi; 0 I]
  Matrix aug = Matrix::Zero(n + p, n + p);
  aug.topLeftCorner(n, n) = m;
  aug.topRightCorner(n, p) = b;
  const Matrix e = (aug * dt).exp();
  transition_ = e.topLeftCorner(n, n);
  input_gain_ = e.topRightCorner(n, p);
}

Vector Propagator::step(const Vector& x) const {
  if (x.size() != transition_.cols()) {
    throw DimensionError("state dimension mismatch");
  }
  return transition_ * x;
}

Vector Propagator::step(const Vector& x, const Vector& u) const {
  if (u.size() != input_gain_.cols()) {
    throw DimensionError("input dimension mismatch");
  }
  Vector next = step(x);
  if (u.size() > 0) next.noalias() += input_gain_ * u;
  return next;
}

std::vector<Vector> propagate(const Matrix& m, const Matrix& b,
                              const Vector& x0, const InputSignal& u,
                              double dt, int steps) {
  if (steps < 0) throw DomainError("steps must be >= 0");
  if (x0.size() != m.rows()) throw DimensionError("initial state mismatch");
  const Propagator prop(m, b, dt);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(x0);
  for (int k = 0; k < steps; ++k) {
    const Vector uk = u ? u(k * dt) : Vector::Zero(b.cols());
    out.push_back(prop.step(out.back(), uk));
  }
  return out;
}

std::vector<Vector> propagate(const Matrix& m, const Vector& x0, double dt,
                              int steps) {
  return propagate(m, Matrix(m.rows(), 0), x0, {}, dt, steps);
}

}  // namespace regobs
