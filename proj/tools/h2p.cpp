// h2p: run pair-dynamics experiments, export doublon bands, compare runs.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical
// contract violation (norm guard, truncation, ...).

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "h2p/errors.hpp"
#include "h2p/experiment.hpp"
#include "h2p/observables.hpp"
#include "h2p/semiclassics.hpp"
#include "h2p/spectral.hpp"
#include "h2p/threads.hpp"

extern char** environ;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct RunArgs {
  std::string preset;
  std::string config;
  std::vector<std::string> sweep;
  std::optional<int> n_sites;
  std::optional<double> t_max, u, gamma, w, d;
  std::optional<std::string> px, py;
  std::optional<std::string> out;
  bool quiet = false;
};

h2p::ExperimentConfig resolve(const RunArgs& a) {
  h2p::ExperimentConfig c;
  if (!a.preset.empty()) c = h2p::preset(a.preset);
  if (!a.config.empty()) c = h2p::load_config(a.config, c);
  if (a.n_sites) c.lattice.n_sites = *a.n_sites;
  if (a.t_max) c.t_final = *a.t_max;
  if (a.u) c.params.U = *a.u;
  if (a.gamma) c.params.gamma = *a.gamma;
  if (a.w) c.width = *a.w;
  if (a.d) {
    c.separation = *a.d;
    c.x0.reset();
    c.y0.reset();
  }
  if (a.px) c.px = h2p::parse_momentum(*a.px);
  if (a.py) c.py = h2p::parse_momentum(*a.py);
  if (a.out) c.out_dir = *a.out;
  // Snapshots past a shortened run are dropped rather than rejected.
  std::erase_if(c.snapshot_times, [&](double t) { return t > c.t_final; });
  c.validate();
  return c;
}

int run(const RunArgs& a) {
  const h2p::ExperimentConfig c = resolve(a);
  const h2p::ExperimentResult r = h2p::run_experiment(c);
  if (!a.quiet) {
    std::cout << fmt::format("{}: {} samples to t = {} in {}\n", c.name, r.quantum.times.size(), c.t_final,
                             c.out_dir.string());
    std::cout << fmt::format("  F = {:.6g}  period = {:.6g}  doublons(K=0) = {}\n", r.force.force,
                             r.period.value_or(0.0), r.doublon_count_k0);
    std::cout << fmt::format("  max |sep drift| = {:.4g}  max |CoM drift| = {:.4g}  norm drift = {:.3g}\n",
                             r.max_separation_drift, r.max_com_drift, r.max_norm_drift);
    if (r.quantum.contamination_onset) {
      std::cout << fmt::format("  boundary contamination from t = {:.4g}\n", *r.quantum.contamination_onset);
    }
    if (r.semiclassical_breakdown) {
      std::cout << fmt::format("  semiclassical run stopped at coincidence, t = {:.4g}\n",
                               *r.semiclassical_breakdown);
    }
  }
  return kOk;
}

// Each config runs in its own child process (this executable, `run --config`)
// with its own output directory under --out.
int sweep(const RunArgs& a) {
  namespace fs = std::filesystem;
  const fs::path root = a.out.value_or("h2p_sweep");
  for (const auto& cfg : a.sweep) {
    if (!fs::exists(cfg)) throw h2p::InvalidInput("sweep: no such config " + cfg);
  }
  const std::string self = fs::read_symlink("/proc/self/exe").string();
  const unsigned slots = h2p::worker_count();
  std::deque<std::size_t> pending;
  for (std::size_t i = 0; i < a.sweep.size(); ++i) pending.push_back(i);
  std::vector<std::pair<pid_t, std::size_t>> running;
  int worst = kOk;

  auto reap_one = [&] {
    int status = 0;
    const pid_t pid = ::wait(&status);
    for (auto it = running.begin(); it != running.end(); ++it) {
      if (it->first != pid) continue;
      const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 1;
      std::cout << fmt::format("{}: exit {}\n", a.sweep[it->second], code);
      worst = std::max(worst, code);
      running.erase(it);
      break;
    }
  };

  while (!pending.empty() || !running.empty()) {
    if (!pending.empty() && running.size() < slots) {
      const std::size_t i = pending.front();
      pending.pop_front();
      const fs::path dir = root / fmt::format("{:03}_{}", i, fs::path(a.sweep[i]).stem().string());
      std::vector<std::string> args{self, "run", "--quiet", "--config", a.sweep[i], "--out", dir.string()};
      std::vector<char*> argv;
      for (auto& s : args) argv.push_back(s.data());
      argv.push_back(nullptr);
      pid_t pid = 0;
      if (::posix_spawn(&pid, self.c_str(), nullptr, nullptr, argv.data(), environ) != 0) {
        throw h2p::Error("sweep: cannot spawn worker");
      }
      running.emplace_back(pid, i);
    } else {
      reap_one();
    }
  }
  return worst;
}

int spectrum(int k_points, double u, double gamma, const std::string& shape, const std::string& out) {
  h2p::HubbardParams p;
  p.U = u;
  p.gamma = gamma;
  if (shape == "exponential") p.shape = h2p::InteractionShape::exponential;
  else if (shape == "onsite_only") p.shape = h2p::InteractionShape::onsite_only;
  else throw h2p::InvalidInput("--shape must be exponential or onsite_only");
  p.validate();
  if (k_points < 2) throw h2p::InvalidInput("--k-points must be at least 2");
  const auto grid = h2p::uniform_k_grid(k_points);
  const auto rows = h2p::doublon_band_sweep(p, grid);
  if (out.empty()) {
    h2p::write_band_csv(std::cout, rows);
  } else {
    std::ofstream os(out);
    if (!os) throw h2p::InvalidInput("cannot write " + out);
    h2p::write_band_csv(os, rows);
  }
  return kOk;
}

int compare(const std::string& qcsv, const std::string& scsv, double threshold, const std::string& out) {
  std::ifstream qi(qcsv), si(scsv);
  if (!qi) throw h2p::InvalidInput("cannot open " + qcsv);
  if (!si) throw h2p::InvalidInput("cannot open " + scsv);
  const auto q = h2p::read_series_csv(qi);
  const auto s = h2p::read_trajectory_csv(si);
  const auto report = h2p::compare_runs(q, s, threshold);
  if (out.empty()) {
    h2p::write_deviation_csv(std::cout, report);
  } else {
    std::ofstream os(out);
    if (!os) throw h2p::InvalidInput("cannot write " + out);
    h2p::write_deviation_csv(os, report);
  }
  auto fmt_opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.4g}", *v) : "never"; };
  std::cerr << fmt::format("max |dx| = {:.4g}, max |dy| = {:.4g}; |dx| > {} first at t = {}, |dy| at t = {}\n",
                           report.max_dx, report.max_dy, threshold, fmt_opt(report.first_exceed_x),
                           fmt_opt(report.first_exceed_y));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-particle extended Hubbard dynamics"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Quantum evolution plus the matched semiclassical trajectory");
  auto* preset_opt = run_cmd->add_option("--preset", ra.preset, "fig2 or fig3")->check(CLI::IsMember({"fig2", "fig3"}));
  auto* config_opt = run_cmd->add_option("--config", ra.config, "Flat JSON config file");
  auto* sweep_opt = run_cmd->add_option("--sweep", ra.sweep, "Run several config files in parallel processes");
  sweep_opt->excludes(preset_opt)->excludes(config_opt);
  run_cmd->add_option("--n-sites", ra.n_sites, "Lattice length");
  run_cmd->add_option("--t-max", ra.t_max, "Final time in units of 1/J");
  run_cmd->add_option("--u", ra.u, "On-site interaction U/J");
  run_cmd->add_option("--gamma", ra.gamma, "Interaction decay rate");
  run_cmd->add_option("--w", ra.w, "Packet width");
  run_cmd->add_option("--d", ra.d, "Initial separation y0 - x0");
  run_cmd->add_option("--px", ra.px, "Momentum of x (number or 'pi')");
  run_cmd->add_option("--py", ra.py, "Momentum of y (number or 'pi')");
  run_cmd->add_option("--out", ra.out, "Output directory");
  run_cmd->add_flag("--quiet", ra.quiet, "No summary on stdout");

  int k_points = 41;
  double su = -6.0, sgamma = 1.0 / 12.0;
  std::string shape = "exponential", spec_out;
  auto* spec_cmd = app.add_subcommand("spectrum", "Doublon band sweep over K as CSV");
  spec_cmd->add_option("--k-points", k_points, "Points on [-pi, pi]")->capture_default_str();
  spec_cmd->add_option("--u", su, "U/J")->capture_default_str();
  spec_cmd->add_option("--gamma", sgamma, "Interaction decay rate")->capture_default_str();
  spec_cmd->add_option("--shape", shape, "exponential or onsite_only")->capture_default_str();
  spec_cmd->add_option("--out", spec_out, "CSV file (default stdout)");

  std::string qcsv, scsv, cmp_out;
  double threshold = 1.5;
  auto* cmp_cmd = app.add_subcommand("compare", "Deviation between quantum and semiclassical series");
  cmp_cmd->add_option("qcsv", qcsv, "Quantum series.csv")->required();
  cmp_cmd->add_option("scsv", scsv, "Semiclassical trajectory CSV")->required();
  cmp_cmd->add_option("--threshold", threshold, "Deviation threshold in sites")->capture_default_str();
  cmp_cmd->add_option("--out", cmp_out, "CSV file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run_cmd) {
      if (!ra.sweep.empty()) return sweep(ra);
      if (ra.preset.empty() && ra.config.empty()) throw h2p::InvalidInput("run: need --preset or --config");
      return run(ra);
    }
    if (*spec_cmd) return spectrum(k_points, su, sgamma, shape, spec_out);
    if (*cmp_cmd) return compare(qcsv, scsv, threshold, cmp_out);
  } catch (const h2p::InvalidInput& e) {
    std::cerr << "h2p: " << e.what() << '\n';
    return kConfigError;
  } catch (const h2p::NumericalError& e) {
    std::cerr << "h2p: numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "h2p: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
