#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "h2p/dynamics.hpp"
#include "h2p/model.hpp"
#include "h2p/semiclassics.hpp"

namespace h2p {

struct ExperimentConfig {
  std::string name = "custom";
  LatticeSpec lattice{80, Boundary::open};
  HubbardParams params;
  /// Packet centers, width, momenta. x0/y0 are resolved from `separation`
  /// (centered on the lattice) unless given explicitly.
  std::optional<double> x0;
  std::optional<double> y0;
  std::optional<double> separation;
  double width = 6.0;
  double px = 0.0;
  double py = 0.0;
  double t_final = 50.0;
  double dt_out = 0.1;
  double tolerance = 1e-10;
  std::vector<double> snapshot_times{0.0, 10.0, 20.0};
  std::filesystem::path out_dir = "h2p_out";
  bool write_snapshots = true;

  /// Resolved packet (centers filled in). Throws InvalidInput naming the field.
  [[nodiscard]] PacketSpec packet() const;
  void validate() const;
};

/// "fig2" (p = (0, 0), t_final = 20) or "fig3" (p = (0, pi), t_final = 50);
/// both U = -6J, gamma = 1/12, w = 6, d = 10 on 80 open sites.
ExperimentConfig preset(std::string_view name);

/// Overlays a flat JSON object on `base`. Unknown keys, wrong types and
/// syntax errors raise InvalidInput with the field name or line number.
ExperimentConfig parse_config(std::string_view json_text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
/// Flat JSON of every field (the resolved configuration of a run).
std::string config_to_json(const ExperimentConfig& config);

/// Accepts a decimal number or the tokens "pi" / "-pi".
double parse_momentum(std::string_view text);

struct DeviationSample {
  double t = 0.0;
  double dx = 0.0;    ///< |x_quantum - x_semiclassical|
  double dy = 0.0;
  double dcom = 0.0;  ///< |com_quantum - com_semiclassical|
};

struct DeviationReport {
  std::vector<DeviationSample> samples;
  double threshold = 1.5;
  std::optional<double> first_exceed_x;
  std::optional<double> first_exceed_y;
  double max_dx = 0.0;
  double max_dy = 0.0;
  double max_dcom = 0.0;
};

/// Pointwise comparison on the common time grid. The shorter series must be
/// a prefix of the longer one (a semiclassical run stops at coincidence);
/// any time mismatch raises InvalidInput.
DeviationReport compare_runs(std::span<const ObservableSample> quantum,
                             std::span<const SemiclassicalState> semiclassical, double threshold = 1.5);

void write_deviation_csv(std::ostream& os, const DeviationReport& report);

struct ExperimentResult {
  ExperimentConfig config;
  PacketSpec packet;
  bool packet_clipped = false;
  EvolutionRecord quantum;
  Trajectory semiclassical;
  std::optional<double> semiclassical_breakdown;
  ForceModel force;
  std::optional<double> period;  ///< 2 pi / |F|
  std::optional<double> amplitude;  ///< 4J / |F|
  DeviationReport deviation;
  double max_separation_drift = 0.0;
  double max_com_drift = 0.0;
  double max_norm_drift = 0.0;
  double max_energy_drift = 0.0;
  int doublon_count_k0 = 0;
};

/// Runs the quantum evolution and the matched semiclassical trajectory.
/// With write_artifacts the output directory receives series.csv,
/// semiclassical.csv, semiclassical.json, deviation.csv, config.json,
/// summary.json and snapshot_t<time>.h2pg grid dumps.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_artifacts = true);

std::string summary_json(const ExperimentResult& result);

}  // namespace h2p
