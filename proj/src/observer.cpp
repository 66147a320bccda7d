#include "regobs/observer.hpp"

#include "regobs/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace regobs {

namespace {

bool is_diagonal(const Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (r != c && m(r, c) != 0.0) return false;
    }
  }
  return true;
}

Vector select(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = v[static_cast<Eigen::Index>(idx[k])];
  }
  return out;
}

Matrix select_cols(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(idx[k]));
  }
  return out;
}

Eigen::VectorXcd spectrum(const Matrix& m) {
  if (m.size() == 0) return {};
  return Eigen::EigenSolver<Matrix>(m, false).eigenvalues();
}

void check_finite(const Vector& s, double bound, double t) {
  const double n = s.norm();
  if (!std::isfinite(n) || n > bound) {
    throw DivergenceError("state norm exceeded divergence bound at t = " +
                              std::to_string(t),
                          t);
  }
}

}  // namespace

Matrix UnstableSplit::projection() const {
  const auto n = basis.rows();
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(unstable.size()), n);
  for (std::size_t k = 0; k < unstable.size(); ++k) {
    p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(unstable[k])) = 1.0;
  }
  return p;
}

UnstableSplit split_unstable_stable(const Matrix& block, double margin) {
  if (block.rows() != block.cols()) throw DimensionError("block not square");
  if (margin < 0.0) throw DomainError("margin must be >= 0");
  UnstableSplit s;
  s.margin = margin;
  const auto n = block.rows();
  if (is_diagonal(block)) {
    s.diagonal = true;
    s.basis = Matrix::Identity(n, n);
    s.eigenvalues = block.diagonal();
  } else {
    const double scale = std::max(1.0, block.cwiseAbs().maxCoeff());
    if ((block - block.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw DomainError("split requires a diagonal or symmetric block");
    }
    s.diagonal = false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (block + block.transpose()));
    s.basis = es.eigenvectors();
    s.eigenvalues = es.eigenvalues();
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    (s.eigenvalues[k] >= -margin ? s.unstable : s.stable)
        .push_back(static_cast<std::size_t>(k));
  }
  return s;
}

double ObserverGain::max_closed_loop_real() const {
  if (closed_loop_eigs.size() == 0) return -std::numeric_limits<double>::infinity();
  return closed_loop_eigs.real().maxCoeff();
}

StrategicReport unstable_rank_test(const Matrix& obs, const UnstableSplit& split,
                                   double tol_group, double tol_rank) {
  if (obs.cols() != split.basis.rows()) {
    throw DimensionError("observation map does not match block");
  }
  const Matrix obs_eig = obs * split.basis;
  auto groups = group_by_eigenvalue(select(split.eigenvalues, split.unstable),
                                    tol_group);
  // Map positions within the unstable list back to eigen-coordinates.
  for (auto& g : groups) {
    for (auto& col : g.columns) col = split.unstable[col];
  }
  // Threshold relative to the full observation map.
  StrategicReport rep = strategic_rank_test(obs_eig, groups, tol_rank);
  return rep;
}

ObserverGain zero_gain(const Matrix& block, const Matrix& obs,
                       const UnstableSplit& split) {
  ObserverGain g;
  g.h = Matrix::Zero(block.rows(), obs.rows());
  g.split = split;
  g.target_margin = 0.0;
  g.closed_loop_eigs = spectrum(block);
  return g;
}

ObserverGain design_gain(const Matrix& block, const Matrix& obs,
                         const UnstableSplit& split, double target_margin,
                         GainMethod method, double tol_rank,
                         double tol_group) {
  if (!(target_margin > 0.0)) throw DomainError("target_margin must be > 0");
  if (block.rows() != block.cols() || obs.cols() != block.rows() ||
      split.basis.rows() != block.rows()) {
    throw DimensionError("gain design operands do not match");
  }
  ObserverGain g;
  g.split = split;
  g.target_margin = target_margin;
  g.method = method;
  const Eigen::Index n = block.rows();
  const Eigen::Index q = obs.rows();
  g.h = Matrix::Zero(n, q);

  const std::size_t j = split.dimension();
  if (j > 0) {
    const auto report = unstable_rank_test(obs, split, tol_group, tol_rank);
    if (!report.strategic()) {
      throw NotDetectable(
          "unstable eigen-group not observed by the sensors (rank condition "
          "fails)",
          report.offending);
    }
    const Matrix obs_u = select_cols(obs * split.basis, split.unstable);  // q x J
    const Vector d = select(split.eigenvalues, split.unstable);
    const auto ju = static_cast<Eigen::Index>(j);
    Matrix h_u;  // J x q
    if (method == GainMethod::LyapunovShift) {
      const double mu = std::max(target_margin, target_margin - d.minCoeff());
      const Matrix gram = obs_u.transpose() * obs_u;
      Matrix w(ju, ju);
      for (Eigen::Index a = 0; a < ju; ++a) {
        for (Eigen::Index b = 0; b < ju; ++b) {
          w(a, b) = gram(a, b) / (d[a] + d[b] + 2.0 * mu);
        }
      }
      Eigen::LLT<Matrix> llt(w);
      if (llt.info() != Eigen::Success) {
        throw NotDetectable("shifted Lyapunov solution is not positive definite",
                            {});
      }
      h_u = llt.solve(obs_u.transpose());
    } else {
      const Matrix target =
          (d.array() + target_margin).matrix().asDiagonal().toDenseMatrix();
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(obs_u.transpose());
      h_u = cod.solve(target.transpose()).transpose();
      const double resid = (h_u * obs_u - target).norm();
      if (!(resid <= 1e-8 * std::max(1.0, target.norm()))) {
        throw NotDetectable(
            "exact placement has no solution (needs rank of unstable "
            "observation columns equal to J)",
            {});
      }
    }
    Matrix h_eig = Matrix::Zero(n, q);
    for (std::size_t k = 0; k < j; ++k) {
      h_eig.row(static_cast<Eigen::Index>(split.unstable[k])) =
          h_u.row(static_cast<Eigen::Index>(k));
    }
    g.h = split.basis * h_eig;
  }

  g.closed_loop_eigs = spectrum(block - g.h * obs);
  // Uncorrected stable modes keep their open-loop rates.
  const double limit = std::max(
      -target_margin,
      split.stable.empty() ? -target_margin
                           : select(split.eigenvalues, split.stable).maxCoeff());
  if (g.max_closed_loop_real() > limit + 1e-6 * std::max(1.0, target_margin)) {
    throw Error("closed-loop spectrum misses the target margin");
  }
  return g;
}

Matrix reduced_observation(const ModalModel& model, const Matrix& c) {
  if (c.cols() != static_cast<Eigen::Index>(model.size())) {
    throw DimensionError("output matrix does not match the mode set");
  }
  return c * model.a12;
}

Matrix full_observation(const ModalModel& model, const Matrix& c) {
  const auto n = static_cast<Eigen::Index>(model.size());
  if (c.cols() != n) {
    throw DimensionError("output matrix does not match the mode set");
  }
  Matrix o = Matrix::Zero(c.rows(), 2 * n);
  o.leftCols(n) = c;
  return o;
}

EstimatorMatrices estimator_matrices(const ModalModel& model, const Matrix& c,
                                     const Matrix& h) {
  const auto n = static_cast<Eigen::Index>(model.size());
  if (c.cols() != n || h.rows() != n || h.cols() != c.rows()) {
    throw DimensionError("gain and output matrix do not match the model");
  }
  EstimatorMatrices e;
  e.injection = h * c;
  const Matrix& k = e.injection;
  e.state = model.a22 - k * model.a12;
  e.measured = model.a22 * k - k * model.a12 * k - k * model.a11 + model.a21;
  e.input = model.b2 - k * model.b1;
  return e;
}

int SimulationSettings::steps() const {
  if (!(dt > 0.0)) throw DomainError("dt must be > 0");
  if (!(horizon > dt)) throw DomainError("horizon must exceed dt");
  return static_cast<int>(std::llround(horizon / dt));
}

InputSignal zero_input(Eigen::Index p) {
  return [p](double) { return Vector::Zero(p); };
}

InputSignal constant_input(Vector u) {
  return [u = std::move(u)](double) { return u; };
}

Trajectory simulate_full_order(const ModalModel& model, const Matrix& c,
                               const ObserverGain& gain, const InputSignal& u,
                               const Vector& x0, const Vector& z_hat0,
                               const SimulationSettings& settings,
                               const FieldNorm& norm) {
  const auto n = static_cast<Eigen::Index>(model.size());
  const Eigen::Index p = model.inputs();
  const Matrix a = model.stacked();
  const Matrix b = model.stacked_input();
  const Matrix obs = full_observation(model, c);
  if (gain.h.rows() != 2 * n || gain.h.cols() != c.rows()) {
    throw DimensionError("full-order gain must be 2n x q");
  }
  if (x0.size() != 2 * n || z_hat0.size() != 2 * n) {
    throw DimensionError("full-order initial states must have length 2n");
  }
  const Matrix hc = gain.h * obs;
  Matrix m = Matrix::Zero(4 * n, 4 * n);
  m.topLeftCorner(2 * n, 2 * n) = a;
  m.bottomLeftCorner(2 * n, 2 * n) = hc;
  m.bottomRightCorner(2 * n, 2 * n) = a - hc;
  Matrix bb(4 * n, p);
  bb << b, b;
  const Propagator prop(m, bb, settings.dt);
  const int steps = settings.steps();

  auto field_norm = [&](const Vector& e) { return norm ? norm(e) : e.norm(); };
  Trajectory tr;
  Vector s(4 * n);
  s << x0, z_hat0;
  for (int k = 0; k <= steps; ++k) {
    const double t = k * settings.dt;
    if (k > 0) {
      const Vector uk = (p > 0 && u) ? u((k - 1) * settings.dt) : Vector::Zero(p);
      s = prop.step(s, uk);
      check_finite(s, settings.divergence_bound, t);
    }
    const Vector x = s.head(2 * n);
    const Vector z = s.tail(2 * n);
    const Vector e = z - x;
    tr.times.push_back(t);
    tr.x1.push_back(x.head(n));
    tr.x2.push_back(x.tail(n));
    tr.y.push_back(c * x.head(n));
    tr.estimator.push_back(z);
    tr.x2_hat.push_back(z.tail(n));
    const double e1 = field_norm(e.head(n));
    const double e2 = field_norm(e.tail(n));
    tr.err_gamma.push_back(std::sqrt(e1 * e1 + e2 * e2));
    tr.error.push_back(e);
  }
  return tr;
}

Trajectory simulate_reduced_order(const ModalModel& model, const Matrix& c,
                                  const ObserverGain& gain,
                                  const InputSignal& u, const Vector& x0,
                                  const Vector& phi0,
                                  const SimulationSettings& settings,
                                  const FieldNorm& norm) {
  const auto n = static_cast<Eigen::Index>(model.size());
  const Eigen::Index p = model.inputs();
  if (x0.size() != 2 * n || phi0.size() != n) {
    throw DimensionError("reduced-order initial states must have lengths 2n, n");
  }
  const auto est = estimator_matrices(model, c, gain.h);
  Matrix m = Matrix::Zero(3 * n, 3 * n);
  m.topLeftCorner(2 * n, 2 * n) = model.stacked();
  m.block(2 * n, 0, n, n) = est.measured;
  m.block(2 * n, 2 * n, n, n) = est.state;
  Matrix bb(3 * n, p);
  bb << model.b1, model.b2, est.input;
  const Propagator prop(m, bb, settings.dt);
  const int steps = settings.steps();

  Trajectory tr;
  Vector s(3 * n);
  s << x0, phi0;
  for (int k = 0; k <= steps; ++k) {
    const double t = k * settings.dt;
    if (k > 0) {
      const Vector uk = (p > 0 && u) ? u((k - 1) * settings.dt) : Vector::Zero(p);
      s = prop.step(s, uk);
      check_finite(s, settings.divergence_bound, t);
    }
    const Vector x1 = s.head(n);
    const Vector x2 = s.segment(n, n);
    const Vector phi = s.tail(n);
    Vector y = c * x1;
    Vector x2_hat = phi + gain.h * y;
    Vector e = x2_hat - x2;
    tr.times.push_back(t);
    tr.x1.push_back(x1);
    tr.x2.push_back(x2);
    tr.estimator.push_back(phi);
    tr.err_gamma.push_back(norm ? norm(e) : e.norm());
    tr.y.push_back(std::move(y));
    tr.x2_hat.push_back(std::move(x2_hat));
    tr.error.push_back(std::move(e));
  }
  return tr;
}

}  // namespace regobs
