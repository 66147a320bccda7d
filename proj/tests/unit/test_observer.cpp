#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "regobs/errors.hpp"
#include "regobs/observer.hpp"
#include "regobs/sensing.hpp"

#include <random>

using namespace regobs;
using oracle::pi;

namespace {

ModalModel exchange(double beta, int n) {
  return assemble_exchange_model({1.0, 0.1, beta}, Domain{}, ModeSet::truncated(n));
}

Matrix sensors_at(const ModalModel& m, std::vector<Point> pts) {
  std::vector<SensorSpec> s;
  for (auto p : pts) s.push_back(SensorSpec::pointwise(p));
  return output_matrix(s, m.modes, m.domain);
}

Vector seeded(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

}  // namespace

TEST_CASE("unstable split of A22") {
  SUBCASE("beta = 3") {
    const auto m = exchange(3.0, 2);
    const auto s = split_unstable_stable(m.a22);
    CHECK(s.dimension() == 1);
    CHECK(s.unstable == std::vector<std::size_t>{0});
    CHECK(s.eigenvalues[0] == doctest::Approx(1.026).epsilon(1e-3));
  }
  SUBCASE("beta = 6") {
    const auto m = exchange(6.0, 2);
    const auto s = split_unstable_stable(m.a22);
    CHECK(s.unstable == std::vector<std::size_t>{0, 1, 2});
    CHECK(s.stable == std::vector<std::size_t>{3});
  }
  SUBCASE("weak coupling") {
    const auto s = split_unstable_stable(exchange(1.0, 8).a22);
    CHECK(s.dimension() == 0);
    CHECK(s.projection().rows() == 0);
  }
  SUBCASE("margin widens the unstable set") {
    const auto m = exchange(3.0, 3);
    const auto s = split_unstable_stable(m.a22, 2.0);
    CHECK(s.dimension() == 3);
  }
  SUBCASE("partition and count invariants on a symmetric block") {
    const auto m = exchange(3.0, 3);
    const Matrix a = m.stacked();
    for (double margin : {0.0, 1.0, 5.0}) {
      const auto s = split_unstable_stable(a, margin);
      CHECK(s.unstable.size() + s.stable.size() == static_cast<std::size_t>(a.rows()));
      Eigen::SelfAdjointEigenSolver<Matrix> es(a);
      std::size_t count = 0;
      for (auto v : es.eigenvalues()) count += v >= -margin ? 1 : 0;
      CHECK(s.dimension() == count);
      CHECK((s.basis.transpose() * s.basis - Matrix::Identity(a.rows(), a.rows()))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
    }
  }
  SUBCASE("non-symmetric, non-diagonal block is rejected") {
    Matrix a(2, 2);
    a << 1, 2, 0, 1;
    CHECK_THROWS_AS(split_unstable_stable(a), DomainError);
  }
}

TEST_CASE("least-squares placement on the scalar example") {
  Matrix block(1, 1), obs(1, 1);
  block << 1.026;
  obs << -1.0;
  const auto split = split_unstable_stable(block);
  const auto g = design_gain(block, obs, split, 1.0, GainMethod::LeastSquares);
  CHECK(g.h(0, 0) == doctest::Approx(-2.026).epsilon(1e-12));
  CHECK(g.closed_loop_eigs[0].real() == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("Lyapunov-shift gain on the scalar example") {
  Matrix block(1, 1), obs(1, 1);
  block << 1.026;
  obs << -1.0;
  const auto g = design_gain(block, obs, split_unstable_stable(block), 1.0);
  // W = 1 / (2 (d + mu)), H = 1 / W * o, closed loop d - 2 (d + mu) = -d - 2 mu.
  CHECK(g.h(0, 0) == doctest::Approx(-2.0 * (1.026 + 1.0)));
  CHECK(g.closed_loop_eigs[0].real() == doctest::Approx(-1.026 - 2.0));
}

TEST_CASE("no unstable modes gives a zero gain") {
  const auto m = exchange(1.0, 3);
  const Matrix c = sensors_at(m, {{0.3, 0.4}});
  const auto g = design_gain(m.a22, reduced_observation(m, c), split_unstable_stable(m.a22), 1.0);
  CHECK(g.h.isZero(0.0));
  CHECK(g.max_closed_loop_real() == doctest::Approx(1 - 0.2 * pi * pi));
}

TEST_CASE("gain properties on random detectable configurations") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (double beta : {3.0, 6.0}) {
    const auto m = exchange(beta, 3);
    const auto split = split_unstable_stable(m.a22);
    for (int trial = 0; trial < 15; ++trial) {
      const Matrix c = sensors_at(m, {{u(gen), u(gen)}, {u(gen), u(gen)}, {u(gen), u(gen)}});
      const Matrix obs = reduced_observation(m, c);
      for (auto method : {GainMethod::LyapunovShift, GainMethod::LeastSquares}) {
        const auto g = design_gain(m.a22, obs, split, 1.0, method);
        for (auto k : split.stable) CHECK(g.h.row(static_cast<Eigen::Index>(k)).isZero(0.0));
        double slowest_stable = -1e300;
        for (auto k : split.stable) {
          slowest_stable = std::max(slowest_stable, m.a22(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
        }
        CHECK(g.max_closed_loop_real() <= std::max(-1.0, slowest_stable) + 1e-9);
        const Eigen::VectorXcd ref = (m.a22 - g.h * obs).eigenvalues();
        CHECK(ref.real().maxCoeff() == doctest::Approx(g.max_closed_loop_real()).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("NotDetectable when an unstable mode is unobserved") {
  const auto m = exchange(6.0, 3);
  const Matrix c = sensors_at(m, {{0.5, 0.43}});
  const auto split = split_unstable_stable(m.a22);
  CHECK_THROWS_AS(design_gain(m.a22, reduced_observation(m, c), split, 1.0), NotDetectable);
  // A second sensor fixes the multiplicity but (2,1) stays invisible to both.
  const Matrix c2 = sensors_at(m, {{0.5, 0.43}, {0.5, 0.81}});
  CHECK_THROWS_AS(design_gain(m.a22, reduced_observation(m, c2), split, 1.0), NotDetectable);
}

TEST_CASE("design_gain fails exactly when the unstable rank test fails") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const auto m = exchange(6.0, 3);
  const auto split = split_unstable_stable(m.a22);
  const auto groups = group_modes_by_eigenvalue(m, Block::A22);
  int failures = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Point> pts;
    for (int k = 0; k < 1 + trial % 3; ++k) {
      pts.push_back({trial % 4 == 0 ? 0.5 : u(gen), u(gen)});
    }
    const Matrix c = sensors_at(m, pts);
    // Oracle: rank test on the unstable groups only, from the full report.
    const auto full = strategic_rank_test(c, groups);
    bool unstable_ok = true;
    for (const auto& b : full.blocks) {
      if (b.group.eigenvalue >= 0 && !b.full_rank) unstable_ok = false;
    }
    bool designed = true;
    try {
      design_gain(m.a22, reduced_observation(m, c), split, 1.0);
    } catch (const NotDetectable&) {
      designed = false;
    }
    CHECK(designed == unstable_ok);
    failures += designed ? 0 : 1;
  }
  CHECK(failures > 0);
  CHECK(failures < 40);
}

TEST_CASE("estimator matrices") {
  const auto m = exchange(3.0, 2);
  const Matrix c = sensors_at(m, {{0.3, 0.6}, {0.7, 0.35}});
  SUBCASE("zero gain") {
    const auto e = estimator_matrices(m, c, Matrix::Zero(4, 2));
    CHECK(e.state == m.a22);
    CHECK(e.measured == m.a21);
    CHECK(e.input == m.b2);
  }
  SUBCASE("eigenvalue shift identity") {
    const Matrix h = Matrix::Random(4, 2);
    const auto e = estimator_matrices(m, c, h);
    CHECK(((m.a22 - e.state) - h * c * m.a12).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("single mode with full-field measurement") {
    const auto one = assemble_exchange_model({1.0, 0.1, 1.0}, Domain{}, ModeSet({{1, 1}}));
    const Matrix eye = Matrix::Identity(1, 1);
    const double h = 0.37;
    const auto e = estimator_matrices(one, eye, Matrix::Constant(1, 1, h));
    const double a11 = 1 - 2 * pi * pi, a22 = 1 - 0.2 * pi * pi;
    CHECK(e.state(0, 0) == doctest::Approx(a22 + h));
    CHECK(e.measured(0, 0) == doctest::Approx(a22 * h + h * h - h * a11 - 1.0));
  }
  SUBCASE("dimension checks") {
    CHECK_THROWS_AS(estimator_matrices(m, c, Matrix::Zero(4, 3)), DimensionError);
  }
}

TEST_CASE("reduced-order error follows the closed-loop exponential") {
  const auto m = exchange(3.0, 4);
  const Matrix c = sensors_at(m, {{0.23, 0.31}});
  const Matrix obs = reduced_observation(m, c);
  const auto g = design_gain(m.a22, obs, split_unstable_stable(m.a22), 1.0);
  const auto n = static_cast<Eigen::Index>(m.size());
  const Vector x0 = seeded(2 * n, 1);
  const SimulationSettings st{0.01, 5.0};
  const auto tr =
      simulate_reduced_order(m, c, g, zero_input(0), x0, Vector::Zero(n), st);
  REQUIRE(tr.samples() == 501);
  const Matrix f = m.a22 - g.h * obs;
  const Vector e0 = tr.error[0];
  CHECK((e0 - (g.h * c * x0.head(n) - x0.tail(n))).norm() < 1e-14);
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.samples(); k += 10) {
    const Vector ref = oracle::expm_eig(f, tr.times[k]) * e0;
    worst = std::max(worst, (tr.error[k] - ref).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-8);
  for (std::size_t k = 0; k < tr.samples(); ++k) {
    CHECK((tr.x2_hat[k] - (tr.estimator[k] + g.h * tr.y[k])).cwiseAbs().maxCoeff() == 0.0);
    CHECK(tr.err_gamma[k] >= 0.0);
  }
}

TEST_CASE("exact reduced-order initialization keeps the error at zero") {
  const auto m = exchange(3.0, 3);
  const Matrix c = sensors_at(m, {{0.23, 0.31}});
  const auto g = design_gain(m.a22, reduced_observation(m, c), split_unstable_stable(m.a22), 1.0);
  const auto n = static_cast<Eigen::Index>(m.size());
  const Vector x0 = seeded(2 * n, 9);
  const Vector phi0 = x0.tail(n) - g.h * c * x0.head(n);
  const auto tr = simulate_reduced_order(m, c, g, zero_input(0), x0, phi0, {0.01, 2.0});
  for (double e : tr.err_gamma) CHECK(e < 1e-12);
}

TEST_CASE("full-order observer") {
  const auto m = exchange(3.0, 3);
  const Matrix c = sensors_at(m, {{0.23, 0.31}, {0.57, 0.43}});
  const Matrix a = m.stacked();
  const Matrix obs = full_observation(m, c);
  const auto split = split_unstable_stable(a);
  const auto g = design_gain(a, obs, split, 1.0);
  const auto n = static_cast<Eigen::Index>(m.size());
  const Vector x0 = seeded(2 * n, 4);
  const SimulationSettings st{0.01, 3.0};

  SUBCASE("error follows exp((A - H [C 0]) t)") {
    const auto tr = simulate_full_order(m, c, g, zero_input(0), x0, Vector::Zero(2 * n), st);
    const Matrix f = a - g.h * obs;
    for (std::size_t k = 0; k < tr.samples(); k += 25) {
      const Vector ref = oracle::expm_eig(f, tr.times[k]) * (-x0);
      CHECK((tr.error[k] - ref).cwiseAbs().maxCoeff() < 1e-8);
    }
    CHECK(tr.times.size() == tr.err_gamma.size());
    CHECK(tr.times.size() == tr.x2_hat.size());
  }
  SUBCASE("zero gain reproduces the plant from the same initial state") {
    const auto z = zero_gain(a, obs, split);
    const auto tr = simulate_full_order(m, c, z, zero_input(0), x0, x0, st);
    const auto plant = propagate(a, x0, st.dt, st.steps());
    for (std::size_t k = 0; k < tr.samples(); ++k) {
      CHECK((tr.estimator[k] - plant[k]).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("constant actuation enters plant and estimator alike") {
  const Matrix b1 = Matrix::Constant(4, 1, 0.3);
  const Matrix b2 = Matrix::Constant(4, 1, -0.2);
  const auto m = assemble_exchange_model({1.0, 0.1, 3.0}, Domain{}, ModeSet::truncated(2), b1, b2);
  const Matrix c = sensors_at(m, {{0.23, 0.31}});
  const Matrix obs = reduced_observation(m, c);
  const auto g = design_gain(m.a22, obs, split_unstable_stable(m.a22), 1.0);
  const Vector x0 = seeded(8, 2);
  const auto with_u = simulate_reduced_order(m, c, g, constant_input(Vector::Ones(1)), x0,
                                             Vector::Zero(4), {0.01, 2.0});
  const auto without = simulate_reduced_order(m, c, g, zero_input(1), x0, Vector::Zero(4),
                                              {0.01, 2.0});
  CHECK((with_u.error.back() - without.error.back()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((with_u.x2.back() - without.x2.back()).norm() > 1e-3);
}

TEST_CASE("divergence guard") {
  const auto m = exchange(6.0, 2);
  const Matrix c = sensors_at(m, {{0.5, 0.43}});
  const auto z = zero_gain(m.a22, reduced_observation(m, c), split_unstable_stable(m.a22));
  SimulationSettings st{0.01, 5.0, 10.0};
  CHECK_THROWS_AS(
      simulate_reduced_order(m, c, z, zero_input(0), Vector::Ones(8), Vector::Zero(4), st),
      DivergenceError);
}

TEST_CASE("simulation settings") {
  CHECK(SimulationSettings{0.01, 5.0}.steps() == 500);
  CHECK_THROWS_AS((SimulationSettings{-1.0, 5.0}.steps()), DomainError);
  CHECK_THROWS_AS((SimulationSettings{0.1, 0.05}.steps()), DomainError);
}
