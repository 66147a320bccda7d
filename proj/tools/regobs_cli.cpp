#include "regobs/config.hpp"
#include "regobs/errors.hpp"
#include "regobs/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;

regobs::ExperimentConfig load(const std::string& path) { return regobs::load_config(path); }

int cmd_run(const std::string& config, std::string out) {
  auto cfg = load(config);
  regobs::require_sensors(cfg);
  if (out.empty()) out = cfg.output.dir;
  const auto report = regobs::run_experiment(cfg, out);
  const auto& primary = report.primary();
  std::cout << "verdict: " << (report.strategic.strategic() ? "Strategic" : "NotStrategic")
            << "\n";
  std::cout << "unstable modes: " << primary.gain.unstable << "\n";
  if (primary.gain.not_detectable) {
    std::cout << "NotDetectable:";
    for (const auto& m : primary.gain.offending_modes) std::cout << " " << regobs::to_string(m);
    std::cout << "\n";
  }
  if (primary.fit) {
    std::cout << "decay rate: " << regobs::format_double(primary.fit->rate) << "\n";
  }
  if (primary.diverged) std::cout << "diverged: " << *primary.diverged << "\n";
  std::cout << "wrote:";
  for (const auto& f : report.manifest) std::cout << " " << f;
  std::cout << " -> " << out << "\n";
  return kOk;
}

int cmd_rank(const std::string& config) {
  const auto cfg = load(config);
  const auto report = regobs::rank_report(cfg);
  std::cout << regobs::format_report(report, regobs::ModeSet::truncated(cfg.n_modes));
  return kOk;
}

int cmd_sweep(const std::string& config, int grid, std::string out) {
  const auto cfg = load(config);
  if (out.empty()) out = cfg.output.dir;
  const auto records = regobs::placement_sweep(cfg, grid);
  std::filesystem::create_directories(out);
  const auto path = std::filesystem::path(out) / "sweep.csv";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw regobs::Error("cannot write " + path.string());
  f << regobs::sweep_csv(records);
  std::size_t strategic = 0;
  for (const auto& r : records) strategic += r.strategic ? 1 : 0;
  std::cout << strategic << " of " << records.size() << " positions strategic -> "
            << path.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regional state observers for coupled parabolic systems"};
  app.require_subcommand(1);

  std::string config, out;
  int grid = 0;

  auto* run = app.add_subcommand("run", "simulate estimators and write outputs");
  run->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory (default: output.dir)");

  auto* rank = app.add_subcommand("rank", "print the strategic-sensor report");
  rank->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "sensor placement sweep");
  sweep->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--grid", grid, "lattice points per side")->required()->check(
      CLI::Range(2, 1000));
  sweep->add_option("--out", out, "output directory (default: output.dir)");

  app.add_subcommand("version", "print version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(config, out);
    if (*rank) return cmd_rank(config);
    if (*sweep) return cmd_sweep(config, grid, out);
    std::cout << "regobs " << REGOBS_VERSION << "\n";
    return kOk;
  } catch (const regobs::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const regobs::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
