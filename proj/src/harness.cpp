#include "regobs/harness.hpp"

#include "regobs/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

namespace regobs {

namespace {

// Modes behind offending eigen-groups. For non-diagonal blocks each
// eigenvector is labelled by its dominant modal component.
std::vector<ModeIndex> offending_modes(const UnstableSplit& split,
                                       const std::vector<std::size_t>& groups,
                                       const ModeSet& modes, double tol_group) {
  Vector vals(static_cast<Eigen::Index>(split.unstable.size()));
  for (std::size_t k = 0; k < split.unstable.size(); ++k) {
    vals[static_cast<Eigen::Index>(k)] =
        split.eigenvalues[static_cast<Eigen::Index>(split.unstable[k])];
  }
  const auto grouped = group_by_eigenvalue(vals, tol_group);
  const auto n = static_cast<Eigen::Index>(modes.size());
  std::vector<ModeIndex> out;
  for (std::size_t g : groups) {
    if (g >= grouped.size()) continue;
    for (std::size_t col : grouped[g].columns) {
      const auto e = static_cast<Eigen::Index>(split.unstable[col]);
      Eigen::Index row = e;
      if (!split.diagonal) split.basis.col(e).cwiseAbs().maxCoeff(&row);
      out.push_back(modes[static_cast<std::size_t>(row % n)]);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EstimatorRun run_estimator(bool reduced, const Setup& s,
                           const ExperimentConfig& cfg, const Vector& x0,
                           const FieldNorm& norm) {
  const auto& o = cfg.observer;
  const Matrix block = reduced ? s.model.a22 : s.model.stacked();
  const Matrix obs = reduced ? reduced_observation(s.model, s.c)
                             : full_observation(s.model, s.c);
  const auto split = split_unstable_stable(block, o.margin);

  EstimatorRun run;
  run.gain.unstable = split.dimension();
  ObserverGain gain;
  try {
    gain = design_gain(block, obs, split, o.target_margin, o.gain_method,
                       o.tol_rank, o.tol_group);
    run.gain.gain = gain;
  } catch (const NotDetectable& e) {
    run.gain.not_detectable = true;
    run.gain.offending_modes =
        offending_modes(split, e.offending_groups(), s.model.modes, o.tol_group);
    gain = zero_gain(block, obs, split);
  }
  run.gain.closed_loop = gain.closed_loop_eigs;

  const auto n = static_cast<Eigen::Index>(s.model.size());
  const SimulationSettings settings{cfg.simulation.dt, cfg.simulation.horizon};
  const InputSignal u = constant_input(s.u);
  const bool exact = cfg.simulation.estimator_init == InitKind::Exact;
  try {
    if (reduced) {
      const Vector phi0 = exact ? Vector(x0.tail(n) - gain.h * (s.c * x0.head(n)))
                                : Vector(Vector::Zero(n));
      run.trajectory =
          simulate_reduced_order(s.model, s.c, gain, u, x0, phi0, settings, norm);
    } else {
      const Vector z0 = exact ? x0 : Vector(Vector::Zero(2 * n));
      run.trajectory =
          simulate_full_order(s.model, s.c, gain, u, x0, z0, settings, norm);
    }
  } catch (const DivergenceError& e) {
    run.diverged = e.what();
    return run;
  }
  try {
    run.fit = fit_decay(run.trajectory.times, run.trajectory.err_gamma,
                        cfg.simulation.fit_lo, cfg.simulation.fit_hi);
  } catch (const FitError&) {
  }
  return run;
}

SensorSpec moved(const SensorSpec& s, Point p, const Domain& d) {
  if (!s.is_zone()) return SensorSpec::pointwise(p);
  ZoneSensor z = s.as_zone();
  const double h1 = z.support.half_width1();
  const double h2 = z.support.half_width2();
  const double c1 = std::clamp(p.x1, d.alpha1 + h1, d.beta1 - h1);
  const double c2 = std::clamp(p.x2, d.alpha2 + h2, d.beta2 - h2);
  z.support = {c1 - h1, c1 + h1, c2 - h2, c2 + h2};
  return SensorSpec{z};
}

}  // namespace

Setup make_setup(const ExperimentConfig& cfg) {
  validate(cfg);
  Setup s;
  const auto modes = ModeSet::truncated(cfg.n_modes);
  const auto n = static_cast<Eigen::Index>(modes.size());
  const auto p = static_cast<Eigen::Index>(cfg.actuators.size());
  Matrix b1 = Matrix::Zero(n, p);
  Matrix b2 = Matrix::Zero(n, p);
  s.u = Vector::Zero(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const auto& a = cfg.actuators[static_cast<std::size_t>(k)];
    const Matrix row = output_matrix(std::span(&a.shape, 1), modes, cfg.domain);
    (a.field == 1 ? b1 : b2).col(k) = row.row(0).transpose();
    s.u[k] = a.value;
  }
  s.model = assemble_exchange_model(cfg.coefficients, cfg.domain, modes, b1, b2);
  if (cfg.observer.measured_field == 2) s.model = s.model.with_swapped_fields();
  s.inputs = p;
  s.c = output_matrix(cfg.sensors, modes, cfg.domain);
  s.groups = group_modes_by_eigenvalue(s.model, Block::A22, cfg.observer.tol_group);
  return s;
}

StrategicReport rank_report(const ExperimentConfig& cfg) {
  const auto s = make_setup(cfg);
  return strategic_rank_test(s.c, s.groups, cfg.observer.tol_rank);
}

Vector initial_state(const ExperimentConfig& cfg, std::size_t n) {
  const auto len = static_cast<Eigen::Index>(2 * n);
  if (!cfg.simulation.x0.empty()) {
    if (cfg.simulation.x0.size() != 2 * n) {
      throw DimensionError("explicit x0 has the wrong length");
    }
    return Eigen::Map<const Vector>(cfg.simulation.x0.data(), len);
  }
  // Top 53 bits of the raw engine output.
  std::mt19937_64 gen(cfg.simulation.seed);
  Vector x(len);
  for (Eigen::Index k = 0; k < len; ++k) {
    const double unit = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    x[k] = 2.0 * unit - 1.0;
  }
  return x;
}

RunReport run_pipeline(const ExperimentConfig& cfg) {
  require_sensors(cfg);
  const Setup s = make_setup(cfg);
  RunReport report;
  report.config_echo = to_text(cfg);
  report.strategic = strategic_rank_test(s.c, s.groups, cfg.observer.tol_rank);

  const GammaNorm gnorm(s.model.modes, cfg.domain, cfg.region, cfg.output.norm);
  const FieldNorm norm = [&gnorm](const Vector& e) { return gnorm(e); };
  const Vector x0 = initial_state(cfg, s.model.size());

  const auto est = cfg.observer.estimator;
  if (est != EstimatorKind::Full) report.reduced = run_estimator(true, s, cfg, x0, norm);
  if (est != EstimatorKind::Reduced) report.full = run_estimator(false, s, cfg, x0, norm);
  return report;
}

RunReport run_experiment(const ExperimentConfig& cfg,
                         const std::filesystem::path& out_dir) {
  RunReport report = run_pipeline(cfg);
  emit_outputs(report, cfg, out_dir);
  return report;
}

std::vector<SweepRecord> placement_sweep(const ExperimentConfig& cfg,
                                         int grid_n, unsigned workers) {
  if (grid_n < 2) throw ValidationError("sweep grid must be >= 2");
  const Setup base = make_setup(cfg);
  const auto& d = cfg.domain;
  const auto& o = cfg.observer;
  const GramianQuadrature gramian(base.model.a22, o.gramian_horizon, o.gramian_nodes);

  const std::size_t total = static_cast<std::size_t>(grid_n) * grid_n;
  std::vector<SweepRecord> records(total);
  auto evaluate = [&](std::size_t idx) {
    const auto a = static_cast<int>(idx) / grid_n;
    const auto b = static_cast<int>(idx) % grid_n;
    const Point p{d.alpha1 + d.width1() * (a + 1) / (grid_n + 1),
                  d.alpha2 + d.width2() * (b + 1) / (grid_n + 1)};
    std::vector<SensorSpec> sensors = cfg.sensors;
    if (sensors.empty()) {
      sensors.push_back(SensorSpec::pointwise(p));
    } else {
      sensors[0] = moved(sensors[0], p, d);
    }
    SweepRecord r;
    r.position = p;
    const Matrix c = output_matrix(sensors, base.model.modes, d);
    r.strategic = strategic_rank_test(c, base.groups, o.tol_rank).strategic();
    r.min_gramian_eig = min_eigenvalue(gramian(reduced_observation(base.model, c)));
    try {
      r.triggered = sensors[0].is_zone()
                        ? nonstrategic_zone_predicate(sensors[0], d, base.model.modes, o.tol_rat).modes
                        : nonstrategic_pointwise_predicate(sensors[0], d, base.model.modes, o.tol_rat).modes;
    } catch (const InapplicableError&) {
    }
    records[idx] = std::move(r);
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(total));
  if (workers <= 1) {
    for (std::size_t k = 0; k < total; ++k) evaluate(k);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < total && !failed; k = next++) {
        try {
          evaluate(k);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return records;
}

}  // namespace regobs
