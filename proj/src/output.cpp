#include "regobs/errors.hpp"
#include "regobs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

namespace regobs {

namespace {

std::string f(double v) { return format_double(v); }

const char* norm_name(NormKind k) {
  return k == NormKind::L2Surrogate ? "l2" : "sobolev";
}

std::vector<std::complex<double>> sorted_spectrum(const Eigen::VectorXcd& v) {
  std::vector<std::complex<double>> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end(), [](auto a, auto b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() < b.imag();
  });
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

void write_estimator(std::ostringstream& os, const char* name,
                     const EstimatorRun& run) {
  os << "[" << name << "]\n"
     << "unstable_modes = " << run.gain.unstable << "\n"
     << "not_detectable = " << (run.gain.not_detectable ? 1 : 0) << "\n";
  if (run.gain.not_detectable) {
    os << "offending_modes =";
    for (const auto& m : run.gain.offending_modes) os << " " << to_string(m);
    os << "\n";
  }
  const auto spec = sorted_spectrum(run.gain.closed_loop);
  if (!spec.empty()) {
    os << "closed_loop_max_real = " << f(spec.front().real()) << "\n";
    os << "closed_loop_slowest =";
    for (std::size_t k = 0; k < std::min<std::size_t>(spec.size(), 6); ++k) {
      os << " " << f(spec[k].real());
      if (spec[k].imag() != 0.0) os << (spec[k].imag() > 0 ? "+" : "") << f(spec[k].imag()) << "i";
    }
    os << "\n";
  }
  if (run.diverged) os << "diverged = " << *run.diverged << "\n";
  if (run.fit) {
    os << "decay_rate = " << f(run.fit->rate) << "\n"
       << "decay_amplitude = " << f(run.fit->amplitude) << "\n"
       << "fit_window = " << f(run.fit->t_lo) << ", " << f(run.fit->t_hi) << "\n"
       << "fit_residual = " << f(run.fit->residual) << "\n"
       << "fit_floored_points = " << run.fit->floored << "\n";
  }
  const auto& e = run.trajectory.err_gamma;
  if (!e.empty()) {
    os << "err_gamma_initial = " << f(e.front()) << "\n"
       << "err_gamma_final = " << f(e.back()) << "\n";
  }
  os << "\n";
}

}  // namespace

std::string format_report(const StrategicReport& r, const ModeSet& modes) {
  std::ostringstream os;
  os << "verdict = " << (r.strategic() ? "Strategic" : "NotStrategic") << "\n"
     << "sensors = " << r.sensors << "\n"
     << "max_multiplicity = " << r.max_multiplicity << "\n"
     << "groups = " << r.blocks.size() << "\n"
     << "offending_groups = " << r.offending.size() << "\n";
  for (std::size_t g = 0; g < r.blocks.size(); ++g) {
    const auto& b = r.blocks[g];
    os << "group " << g << ": eigenvalue = " << f(b.group.eigenvalue)
       << " multiplicity = " << b.group.multiplicity() << " rank = " << b.rank
       << (b.full_rank ? "" : " OFFENDING") << " modes =";
    for (auto c : b.group.columns) os << " " << to_string(modes[c]);
    os << " sigma =";
    for (Eigen::Index k = 0; k < b.singular_values.size(); ++k) {
      os << " " << f(b.singular_values[k]);
    }
    os << "\n";
  }
  return os.str();
}

std::string trajectory_csv(const RunReport& report, const ModeSet& modes) {
  std::ostringstream os;
  os << "t,err_gamma,err_full_order,err_reduced_order";
  for (const auto& m : modes) os << ",e_" << m.i << "_" << m.j;
  os << "\n";
  const auto& primary = report.primary().trajectory;
  const auto n = static_cast<Eigen::Index>(modes.size());
  const bool primary_full = !report.reduced;
  for (std::size_t k = 0; k < primary.samples(); ++k) {
    os << f(primary.times[k]) << "," << f(primary.err_gamma[k]) << ",";
    if (report.full && k < report.full->trajectory.samples()) {
      os << f(report.full->trajectory.err_gamma[k]);
    }
    os << ",";
    if (report.reduced && k < report.reduced->trajectory.samples()) {
      os << f(report.reduced->trajectory.err_gamma[k]);
    }
    // Field-2 error in both cases.
    const Vector& e = primary.error[k];
    const auto e2 = primary_full ? Vector(e.tail(n)) : e;
    for (Eigen::Index m = 0; m < n; ++m) os << "," << f(std::abs(e2[m]));
    os << "\n";
  }
  return os.str();
}

std::string summary_text(const RunReport& report, const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "# regobs run summary\n"
     << "err_gamma_norm = " << norm_name(cfg.output.norm) << "\n";
  if (cfg.region.is_boundary()) {
    os << "region = boundary segment; the Dirichlet trace on Gamma is zero, so "
          "err_gamma is measured on the collar omega_r (r = "
       << f(cfg.region.collar_radius) << ")\n";
  } else {
    os << "region = internal rectangle\n";
  }
  os << "err_gamma_source = " << (report.reduced ? "reduced_order" : "full_order")
     << "\n\n[strategic]\n"
     << format_report(report.strategic, ModeSet::truncated(cfg.n_modes)) << "\n";
  if (report.reduced) write_estimator(os, "reduced_order", *report.reduced);
  if (report.full) write_estimator(os, "full_order", *report.full);
  os << "[files]\n";
  for (const auto& m : report.manifest) os << m << "\n";
  os << "\n[config]\n" << report.config_echo;
  return os.str();
}

std::string sweep_csv(const std::vector<SweepRecord>& records) {
  std::ostringstream os;
  os << "b1,b2,strategic,min_gramian_eig,triggered_modes\n";
  for (const auto& r : records) {
    os << f(r.position.x1) << "," << f(r.position.x2) << ","
       << (r.strategic ? 1 : 0) << "," << f(r.min_gramian_eig) << ",";
    for (std::size_t k = 0; k < r.triggered.size(); ++k) {
      if (k) os << ";";
      os << to_string(r.triggered[k]);
    }
    os << "\n";
  }
  return os.str();
}

std::string decay_svg(const Trajectory& traj, const DecayFit& fit) {
  constexpr double w = 640, h = 400, left = 60, right = 20, top = 20, bottom = 40;
  double lo = 1e300, hi = -1e300;
  for (double v : traj.err_gamma) {
    if (v > 0) {
      lo = std::min(lo, std::log10(v));
      hi = std::max(hi, std::log10(v));
    }
  }
  if (!(hi > lo)) {
    lo = -1.0;
    hi = 1.0;
  }
  const double t0 = traj.times.empty() ? 0.0 : traj.times.front();
  const double t1 = traj.times.empty() ? 1.0 : traj.times.back();
  auto px = [&](double t) { return left + (t - t0) / (t1 - t0) * (w - left - right); };
  auto py = [&](double v) {
    const double lv = std::log10(std::max(v, 1e-300));
    return top + (hi - std::clamp(lv, lo, hi)) / (hi - lo) * (h - top - bottom);
  };
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
     << h << "\">\n"
     << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right
     << "\" y2=\"" << h - bottom << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
     << "\" y2=\"" << h - bottom << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"" << h - 8 << "\">t</text>\n"
     << "<text x=\"4\" y=\"" << top + 10 << "\">log10 err_gamma [" << lo << ", "
     << hi << "]</text>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
  for (std::size_t k = 0; k < traj.samples(); ++k) {
    os << (k ? " " : "") << px(traj.times[k]) << "," << py(traj.err_gamma[k]);
  }
  os << "\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"firebrick\" stroke-dasharray=\"6,3\" points=\"";
  for (int k = 0; k <= 20; ++k) {
    const double t = fit.t_lo + (fit.t_hi - fit.t_lo) * k / 20.0;
    os << (k ? " " : "") << px(t) << "," << py(fit.amplitude * std::exp(-fit.rate * t));
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

void emit_outputs(RunReport& report, const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create " + out_dir.string() + ": " + ec.message());
  const auto modes = ModeSet::truncated(cfg.n_modes);

  report.manifest.clear();
  report.manifest.push_back("trajectory.csv");
  const auto& primary = report.primary();
  const bool gain_file = primary.gain.gain.has_value();
  if (gain_file) report.manifest.push_back("gain.csv");
  const bool plot = cfg.output.plot && primary.fit.has_value();
  if (plot) report.manifest.push_back("error_decay.svg");
  report.manifest.push_back("summary.txt");

  write_file(out_dir / "trajectory.csv", trajectory_csv(report, modes));
  if (gain_file) {
    const Matrix& hm = primary.gain.gain->h;
    std::ostringstream os;
    for (Eigen::Index r = 0; r < hm.rows(); ++r) {
      for (Eigen::Index c = 0; c < hm.cols(); ++c) {
        os << (c ? "," : "") << f(hm(r, c));
      }
      os << "\n";
    }
    write_file(out_dir / "gain.csv", os.str());
  }
  if (plot) write_file(out_dir / "error_decay.svg", decay_svg(primary.trajectory, *primary.fit));
  write_file(out_dir / "summary.txt", summary_text(report, cfg));
}

}  // namespace regobs
