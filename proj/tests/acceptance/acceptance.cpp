// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance <config-dir> <cli-binary> <scratch-dir>

#include "oracles.hpp"
#include "regobs/config.hpp"
#include "regobs/errors.hpp"
#include "regobs/harness.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace regobs;
using oracle::pi;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kFdRel = 1e-3;
constexpr double kLambdaAbs = 1e-12;
constexpr double kPropagation = 1e-10;
constexpr double kGramianZero = 1e-8;
constexpr double kErrorDynamics = 1e-8;
constexpr double kRateRel6 = 0.10;
constexpr double kDecayRatio = 1e-3;
constexpr double kRateRel78 = 0.05;

fs::path g_configs;
std::string g_cli;
fs::path g_scratch;
int g_failed = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << detail << "\n";
  if (!ok) ++g_failed;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

ExperimentConfig config(const char* name) { return load_config((g_configs / name).string()); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void eigenpairs() {
  const Domain unit;
  constexpr int n = 201;
  const double h = 1.0 / (n - 1);
  double worst = 0.0;
  for (int i = 1; i <= 4; ++i) {
    for (int j = 1; j <= 4; ++j) {
      const double lambda = eigenvalue({i, j}, unit);
      double res = 0.0, scale = 0.0;
      for (int p = 1; p < n - 1; ++p) {
        for (int q = 1; q < n - 1; ++q) {
          auto phi = [&](int a, int b) { return eigenfunction({i, j}, unit, {a * h, b * h}); };
          const double lap =
              (phi(p + 1, q) + phi(p - 1, q) + phi(p, q + 1) + phi(p, q - 1) - 4 * phi(p, q)) /
              (h * h);
          res = std::max(res, std::abs(lap - lambda * phi(p, q)));
          scale = std::max(scale, std::abs(lambda * phi(p, q)));
        }
      }
      worst = std::max(worst, res / scale);
    }
  }
  const double dl = std::abs(eigenvalue({1, 1}, unit) + 2 * pi * pi);
  report(1, "eigenpairs", worst < kFdRel && dl <= kLambdaAbs,
         "max FD relative residual " + sci(worst) + " (< " + sci(kFdRel) + "), |lambda_11 + 2pi^2| = " +
             sci(dl) + " (<= " + sci(kLambdaAbs) + ")");
}

void semigroup() {
  const auto decoupled =
      assemble_exchange_model({1.0, 0.1, 0.0}, Domain{}, ModeSet::truncated(4)).stacked();
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector x0(decoupled.rows());
  for (auto& v : x0) v = u(gen);
  const double dt = 0.01;
  const auto xs = propagate(decoupled, x0, dt, 500);
  double scalar = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    for (Eigen::Index r = 0; r < x0.size(); ++r) {
      scalar = std::max(scalar, std::abs(xs[k][r] - std::exp(decoupled(r, r) * dt * k) * x0[r]));
    }
  }
  const auto coupled =
      assemble_exchange_model({1.0, 0.1, 3.0}, Domain{}, ModeSet::truncated(4)).stacked();
  const auto twice = propagate(coupled, x0, 0.25, 2);
  const auto once = propagate(coupled, x0, 0.5, 1);
  const auto fine = propagate(coupled, x0, 0.01, 50);
  const double comp = std::max((twice.back() - once.back()).cwiseAbs().maxCoeff(),
                               (fine.back() - once.back()).cwiseAbs().maxCoeff());
  report(2, "semigroup and Duhamel", scalar < kPropagation && comp < kPropagation,
         "decoupled vs scalar exp " + sci(scalar) + ", composition " + sci(comp) + " (< " +
             sci(kPropagation) + ")");
}

void strategic_rank() {
  const Domain unit;
  const auto m2 = assemble_exchange_model({1.0, 0.1, 3.0}, unit, ModeSet::truncated(2));
  const auto g2 = group_modes_by_eigenvalue(m2, Block::A22);

  const std::vector<SensorSpec> center{SensorSpec::pointwise({0.5, 0.5})};
  const auto rc = strategic_rank_test(output_matrix(center, m2.modes, unit), g2);
  bool offends21 = false;
  for (auto k : rc.offending) {
    for (auto c : rc.blocks[k].group.columns) offends21 |= m2.modes[c] == ModeIndex{2, 1};
  }
  const bool a = !rc.strategic() && offends21;

  const std::vector<SensorSpec> pair{SensorSpec::pointwise({0.23, 0.31}),
                                     SensorSpec::pointwise({0.57, 0.43})};
  const bool b = strategic_rank_test(output_matrix(pair, m2.modes, unit), g2).strategic();

  const auto m3 = assemble_exchange_model({1.0, 0.1, 3.0}, unit, ModeSet::truncated(3));
  const auto g3 = group_modes_by_eigenvalue(m3, Block::A22);
  const GramianQuadrature gram(m3.a22, 1.0);
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const double nodal[] = {1.0 / 3, 0.5, 2.0 / 3};
  int agree = 0, strategic = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SensorSpec> s;
    for (int k = 0; k < 1 + trial % 3; ++k) {
      const double x = trial % 5 == 0 ? nodal[k % 3] : u(gen);
      s.push_back(SensorSpec::pointwise({x, u(gen)}));
    }
    const Matrix c = output_matrix(s, m3.modes, unit);
    const bool rank = strategic_rank_test(c, g3).strategic();
    const bool nonsingular = min_eigenvalue(gram(c * m3.a12)) > kGramianZero;
    agree += rank == nonsingular ? 1 : 0;
    strategic += rank ? 1 : 0;
  }
  report(3, "strategic rank condition", a && b && agree == 50,
         std::string("center sensor NotStrategic with (2,1) offending: ") + (a ? "yes" : "no") +
             ", two sensors Strategic at N=2: " + (b ? "yes" : "no") + ", Gramian agrees " +
             std::to_string(agree) + "/50 (" + std::to_string(strategic) + " strategic)");
}

void predicates() {
  const auto cfg = config("sweep.conf");
  const auto records = placement_sweep(cfg, 9);
  const auto model = make_setup(cfg).model;
  int mismatched = 0, unstable_hits = 0, unstable_strategic = 0, triggered = 0;
  for (const auto& r : records) {
    std::vector<ModeIndex> brute;
    for (const auto& m : model.modes) {
      if (std::abs(oracle::sine_mode(m.i, m.j, r.position.x1, r.position.x2)) < 1e-12) {
        brute.push_back(m);
      }
    }
    mismatched += r.triggered == brute ? 0 : 1;
    triggered += r.triggered.empty() ? 0 : 1;
    bool unstable = false;
    for (const auto& m : r.triggered) {
      const auto k = static_cast<Eigen::Index>(*model.modes.index_of(m));
      unstable |= model.a22(k, k) >= -cfg.observer.margin;
    }
    if (unstable) {
      ++unstable_hits;
      unstable_strategic += r.strategic ? 1 : 0;
    }
  }
  report(4, "nodal-line predicates", records.size() == 81 && mismatched == 0 && unstable_strategic == 0,
         std::to_string(records.size()) + " positions, " + std::to_string(triggered) +
             " triggered, " + std::to_string(mismatched) + " mismatches vs brute force, " +
             std::to_string(unstable_hits) + " unstable-mode hits of which " +
             std::to_string(unstable_strategic) + " Strategic");
}

void error_dynamics(const ExperimentConfig& cfg, const RunReport& rep) {
  const auto setup = make_setup(cfg);
  const auto& run = *rep.reduced;
  const Matrix f = setup.model.a22 - run.gain.gain->h * reduced_observation(setup.model, setup.c);
  const auto& tr = run.trajectory;
  const Vector e0 = tr.error[0];
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.samples(); ++k) {
    worst = std::max(worst, (tr.error[k] - oracle::expm_eig(f, tr.times[k]) * e0).cwiseAbs().maxCoeff());
  }
  report(5, "reduced-order error dynamics", worst < kErrorDynamics,
         "max |e(t) - exp((A22 - H C A12) t) e(0)| = " + sci(worst) + " over " +
             std::to_string(tr.samples()) + " samples (< " + sci(kErrorDynamics) + ")");
}

void convergence(const RunReport& rep) {
  const auto& run = *rep.reduced;
  const double slowest = -run.gain.closed_loop.real().maxCoeff();
  const double rate = run.fit->rate;
  const double rel = std::abs(rate - slowest) / slowest;
  const auto& e = run.trajectory.err_gamma;
  const double ratio = e.back() / e.front();
  report(6, "exponential convergence", rel < kRateRel6 && ratio < kDecayRatio,
         "fitted rate " + sci(rate) + " vs slowest closed-loop " + sci(slowest) + " (rel " +
             sci(rel) + " < " + sci(kRateRel6) + "), err(5)/err(0) = " + sci(ratio) + " (< " +
             sci(kDecayRatio) + ")");
}

void non_detectability() {
  const auto cfg = config("beta6_blind.conf");
  const auto setup = make_setup(cfg);
  bool thrown = false;
  try {
    design_gain(setup.model.a22, reduced_observation(setup.model, setup.c),
                split_unstable_stable(setup.model.a22), cfg.observer.target_margin);
  } catch (const NotDetectable&) {
    thrown = true;
  }
  const auto rep = run_pipeline(cfg);
  const auto& tr = rep.reduced->trajectory;
  const auto k = static_cast<Eigen::Index>(*setup.model.modes.index_of({2, 1}));
  std::vector<double> v;
  for (const auto& e : tr.error) v.push_back(std::abs(e[k]));
  const double rate = -fit_decay(tr.times, v, 0.0, 3.0).rate;
  const double expect = 6.0 - 0.5 * pi * pi;
  const double rel = std::abs(rate - expect) / expect;
  report(7, "non-detectability", thrown && rep.reduced->gain.not_detectable && rel < kRateRel78,
         std::string("NotDetectable: ") + (thrown ? "yes" : "no") + ", (2,1) error growth " +
             sci(rate) + " vs " + sci(expect) + " (rel " + sci(rel) + " < " + sci(kRateRel78) + ")");
}

void weak_coupling() {
  const auto cfg = config("weak_coupling.conf");
  const auto rep = run_pipeline(cfg);
  const auto& run = *rep.reduced;
  const double expect = std::abs(1 - 0.2 * pi * pi);
  const double rate = run.fit->rate;
  const double rel = std::abs(rate - expect) / expect;
  report(8, "weak-coupling stability",
         run.gain.unstable == 0 && run.gain.gain && run.gain.gain->h.isZero(0.0) && rel < kRateRel78,
         "J = " + std::to_string(run.gain.unstable) + ", zero-gain decay rate " + sci(rate) +
             " vs " + sci(expect) + " (rel " + sci(rel) + " < " + sci(kRateRel78) + ")");
}

void reproducibility() {
  const auto conf = (g_configs / "beta3.conf").string();
  const auto a = g_scratch / "run_a", b = g_scratch / "run_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const std::string base = "\"" + g_cli + "\" run --config \"" + conf + "\" --out ";
  const int ra = std::system((base + "\"" + a.string() + "\" > /dev/null").c_str());
  const int rb = std::system((base + "\"" + b.string() + "\" > /dev/null").c_str());
  bool same = ra == 0 && rb == 0;
  std::string detail = "exit codes " + std::to_string(ra) + ", " + std::to_string(rb);
  for (const char* f : {"trajectory.csv", "summary.txt"}) {
    const auto x = slurp(a / f), y = slurp(b / f);
    const bool eq = !x.empty() && x == y;
    same &= eq;
    detail += std::string(", ") + f + (eq ? " identical" : " differs");
  }
  report(9, "reproducibility", same, detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: acceptance <config-dir> <cli-binary> <scratch-dir>\n";
    return 2;
  }
  g_configs = argv[1];
  g_cli = argv[2];
  g_scratch = argv[3];
  fs::create_directories(g_scratch);

  auto guarded = [](int id, const char* name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, name, false, std::string("exception: ") + e.what());
    }
  };
  guarded(1, "eigenpairs", eigenpairs);
  guarded(2, "semigroup and Duhamel", semigroup);
  guarded(3, "strategic rank condition", strategic_rank);
  guarded(4, "nodal-line predicates", predicates);
  guarded(5, "reduced-order error dynamics", [] {
    const auto cfg = config("beta3.conf");
    error_dynamics(cfg, run_pipeline(cfg));
  });
  guarded(6, "exponential convergence", [] { convergence(run_pipeline(config("beta3.conf"))); });
  guarded(7, "non-detectability", non_detectability);
  guarded(8, "weak-coupling stability", weak_coupling);
  guarded(9, "reproducibility", reproducibility);

  std::cout << (9 - g_failed) << "/9 criteria passed\n";
  return g_failed == 0 ? 0 : 1;
}
