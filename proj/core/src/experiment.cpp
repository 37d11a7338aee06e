#include "h2p/experiment.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "h2p/grid_io.hpp"
#include "h2p/observables.hpp"
#include "h2p/spectral.hpp"

namespace h2p {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

PacketSpec ExperimentConfig::packet() const {
  PacketSpec p;
  p.width = width;
  p.px = px;
  p.py = py;
  p.statistics = params.statistics;
  if (x0 && y0) {
    if (separation && std::abs(*y0 - *x0 - *separation) > 1e-12) {
      throw InvalidInput(fmt::format("field 'd': {} disagrees with y0 - x0 = {}", *separation, *y0 - *x0));
    }
    p.x0 = *x0;
    p.y0 = *y0;
  } else if (x0 || y0) {
    const double d = separation.value_or(10.0);
    p.x0 = x0 ? *x0 : *y0 - d;
    p.y0 = y0 ? *y0 : *x0 + d;
  } else {
    const double d = separation.value_or(10.0);
    if (d != std::floor(d)) throw InvalidInput("field 'd': must be an integer when centers are implicit");
    const auto [a, b] = centered_pair(lattice.n_sites, static_cast<int>(d));
    p.x0 = a;
    p.y0 = b;
  }
  return p;
}

void ExperimentConfig::validate() const {
  auto finite = [](double v, const char* field) {
    if (!std::isfinite(v)) throw InvalidInput(fmt::format("field '{}': must be finite", field));
  };
  if (lattice.n_sites < 4) throw InvalidInput("field 'n_sites': need at least 4 sites");
  finite(params.J, "J");
  finite(params.U, "U");
  finite(params.gamma, "gamma");
  finite(width, "w");
  finite(px, "px");
  finite(py, "py");
  finite(t_final, "t_final");
  finite(dt_out, "dt_out");
  if (!(params.J > 0.0)) throw InvalidInput("field 'J': must be positive");
  if (params.shape == InteractionShape::exponential && !(params.gamma > 0.0)) {
    throw InvalidInput("field 'gamma': must be positive for the exponential shape");
  }
  if (!(width > 0.0)) throw InvalidInput("field 'w': must be positive");
  if (!(t_final > 0.0)) throw InvalidInput("field 't_final': must be positive");
  if (!(dt_out > 0.0) || dt_out > t_final) throw InvalidInput("field 'dt_out': must lie in (0, t_final]");
  if (!(tolerance > 0.0)) throw InvalidInput("field 'eps_prop': must be positive");
  for (double t : snapshot_times) {
    if (!(t >= 0.0 && t <= t_final)) throw InvalidInput("field 'snapshot_times': entries must lie in [0, t_final]");
  }
  params.validate();
  const PacketSpec p = packet();
  const double n = lattice.n_sites;
  if (!(p.x0 >= 0.0 && p.x0 < n)) throw InvalidInput("field 'x0': packet center outside the lattice");
  if (!(p.y0 >= 0.0 && p.y0 < n)) throw InvalidInput("field 'y0': packet center outside the lattice");
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.lattice = {80, Boundary::open};
  c.params.J = 1.0;
  c.params.U = -6.0;
  c.params.gamma = 1.0 / 12.0;
  c.params.shape = InteractionShape::exponential;
  c.separation = 10.0;
  c.width = 6.0;
  c.snapshot_times = {0.0, 10.0, 20.0};
  c.dt_out = 0.1;
  if (name == "fig2") {
    c.name = "fig2";
    c.px = 0.0;
    c.py = 0.0;
    c.t_final = 20.0;
  } else if (name == "fig3") {
    c.name = "fig3";
    c.px = 0.0;
    c.py = std::numbers::pi;
    c.t_final = 50.0;
  } else {
    throw InvalidInput(fmt::format("unknown preset '{}' (expected fig2 or fig3)", name));
  }
  c.out_dir = fmt::format("h2p_{}", c.name);
  return c;
}

double parse_momentum(std::string_view text) {
  std::string s(text);
  if (s == "pi" || s == "+pi") return std::numbers::pi;
  if (s == "-pi") return -std::numbers::pi;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw InvalidInput("");
    return v;
  } catch (const std::exception&) {
    throw InvalidInput(fmt::format("momentum '{}' is neither a number nor 'pi'", text));
  }
}

namespace {

double number_field(const json& j, const std::string& key) {
  if (!j.is_number()) throw InvalidInput(fmt::format("field '{}': expected a number", key));
  return j.get<double>();
}

std::string string_field(const json& j, const std::string& key) {
  if (!j.is_string()) throw InvalidInput(fmt::format("field '{}': expected a string", key));
  return j.get<std::string>();
}

int line_of(std::string_view text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

const char* to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

const char* to_string(InteractionShape s) {
  switch (s) {
    case InteractionShape::exponential: return "exponential";
    case InteractionShape::onsite_only: return "onsite_only";
    case InteractionShape::custom: return "custom";
  }
  return "exponential";
}

const char* to_string(Statistics s) { return s == Statistics::bosonic ? "bosonic" : "distinguishable"; }

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

ExperimentConfig parse_config(std::string_view json_text, ExperimentConfig base) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw InvalidInput(fmt::format("config line {}: {}", line_of(json_text, e.byte), e.what()));
  }
  if (!j.is_object()) throw InvalidInput("config must be a flat JSON object");

  ExperimentConfig c = std::move(base);
  if (auto it = j.find("preset"); it != j.end()) c = preset(string_field(*it, "preset"));
  for (const auto& [key, v] : j.items()) {
    if (key == "preset") continue;
    if (key == "name") {
      c.name = string_field(v, key);
    } else if (key == "n_sites") {
      if (!v.is_number_integer()) throw InvalidInput("field 'n_sites': expected an integer");
      c.lattice.n_sites = v.get<int>();
    } else if (key == "boundary") {
      const auto s = string_field(v, key);
      if (s == "open") c.lattice.boundary = Boundary::open;
      else if (s == "periodic") c.lattice.boundary = Boundary::periodic;
      else throw InvalidInput(fmt::format("field 'boundary': '{}' is not open|periodic", s));
    } else if (key == "J") {
      c.params.J = number_field(v, key);
    } else if (key == "U") {
      c.params.U = number_field(v, key);
    } else if (key == "gamma") {
      c.params.gamma = number_field(v, key);
    } else if (key == "shape") {
      const auto s = string_field(v, key);
      if (s == "exponential") c.params.shape = InteractionShape::exponential;
      else if (s == "onsite_only") c.params.shape = InteractionShape::onsite_only;
      else if (s == "custom") c.params.shape = InteractionShape::custom;
      else throw InvalidInput(fmt::format("field 'shape': '{}' is not exponential|onsite_only|custom", s));
    } else if (key == "custom_table") {
      if (!v.is_array()) throw InvalidInput("field 'custom_table': expected an array of numbers");
      c.params.custom_table.clear();
      for (const auto& e : v) c.params.custom_table.push_back(number_field(e, key));
    } else if (key == "statistics") {
      const auto s = string_field(v, key);
      if (s == "distinguishable") c.params.statistics = Statistics::distinguishable;
      else if (s == "bosonic") c.params.statistics = Statistics::bosonic;
      else throw InvalidInput(fmt::format("field 'statistics': '{}' is not distinguishable|bosonic", s));
    } else if (key == "x0") {
      c.x0 = v.is_null() ? std::nullopt : std::optional(number_field(v, key));
    } else if (key == "y0") {
      c.y0 = v.is_null() ? std::nullopt : std::optional(number_field(v, key));
    } else if (key == "d") {
      c.separation = v.is_null() ? std::nullopt : std::optional(number_field(v, key));
    } else if (key == "w") {
      c.width = number_field(v, key);
    } else if (key == "px" || key == "py") {
      const double p = v.is_string() ? parse_momentum(v.get<std::string>()) : number_field(v, key);
      (key == "px" ? c.px : c.py) = p;
    } else if (key == "t_final") {
      c.t_final = number_field(v, key);
    } else if (key == "dt_out") {
      c.dt_out = number_field(v, key);
    } else if (key == "eps_prop") {
      c.tolerance = number_field(v, key);
    } else if (key == "snapshot_times") {
      if (!v.is_array()) throw InvalidInput("field 'snapshot_times': expected an array of numbers");
      c.snapshot_times.clear();
      for (const auto& e : v) c.snapshot_times.push_back(number_field(e, key));
    } else if (key == "out_dir") {
      c.out_dir = string_field(v, key);
    } else if (key == "write_snapshots") {
      if (!v.is_boolean()) throw InvalidInput("field 'write_snapshots': expected true or false");
      c.write_snapshots = v.get<bool>();
    } else {
      throw InvalidInput(fmt::format("config: unknown field '{}'", key));
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream is(path);
  if (!is) throw InvalidInput("cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["n_sites"] = c.lattice.n_sites;
  j["boundary"] = to_string(c.lattice.boundary);
  j["J"] = c.params.J;
  j["U"] = c.params.U;
  j["gamma"] = c.params.gamma;
  j["shape"] = to_string(c.params.shape);
  if (c.params.shape == InteractionShape::custom) j["custom_table"] = c.params.custom_table;
  j["statistics"] = to_string(c.params.statistics);
  j["x0"] = optional_number(c.x0);
  j["y0"] = optional_number(c.y0);
  j["d"] = optional_number(c.separation);
  j["w"] = c.width;
  j["px"] = c.px;
  j["py"] = c.py;
  j["t_final"] = c.t_final;
  j["dt_out"] = c.dt_out;
  j["eps_prop"] = c.tolerance;
  j["snapshot_times"] = c.snapshot_times;
  j["out_dir"] = c.out_dir.string();
  j["write_snapshots"] = c.write_snapshots;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Comparison

DeviationReport compare_runs(std::span<const ObservableSample> quantum,
                             std::span<const SemiclassicalState> semiclassical, double threshold) {
  DeviationReport r;
  r.threshold = threshold;
  const std::size_t n = std::min(quantum.size(), semiclassical.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double tq = quantum[i].t;
    const double ts = semiclassical[i].t;
    if (std::abs(tq - ts) > 1e-9 * std::max(1.0, std::abs(tq))) {
      throw InvalidInput(fmt::format("time grids differ at sample {}: {} vs {}", i, tq, ts));
    }
    DeviationSample d;
    d.t = tq;
    d.dx = std::abs(quantum[i].mean_x - semiclassical[i].x);
    d.dy = std::abs(quantum[i].mean_y - semiclassical[i].y);
    d.dcom = std::abs(quantum[i].com - 0.5 * (semiclassical[i].x + semiclassical[i].y));
    if (!r.first_exceed_x && d.dx > threshold) r.first_exceed_x = d.t;
    if (!r.first_exceed_y && d.dy > threshold) r.first_exceed_y = d.t;
    r.max_dx = std::max(r.max_dx, d.dx);
    r.max_dy = std::max(r.max_dy, d.dy);
    r.max_dcom = std::max(r.max_dcom, d.dcom);
    r.samples.push_back(d);
  }
  return r;
}

void write_deviation_csv(std::ostream& os, const DeviationReport& report) {
  os << "t,dx,dy,dcom\n";
  for (const DeviationSample& d : report.samples) {
    os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", d.t, d.dx, d.dy, d.dcom);
  }
}

// ---------------------------------------------------------------------------
// Runs

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_artifacts) {
  config.validate();
  ExperimentResult res;
  res.config = config;
  res.packet = config.packet();

  const PreparedPacket prepared = gaussian_packet(config.lattice, res.packet);
  res.packet_clipped = prepared.clipped;
  const InteractionPotential potential = build_potential(config.params, config.lattice);

  PropagatorConfig pc;
  pc.dt_out = config.dt_out;
  pc.tolerance = config.tolerance;
  pc.snapshot_times = config.snapshot_times;
  res.quantum = evolve(prepared.state, config.params, potential, config.lattice, pc, config.t_final);

  const auto& series = res.quantum.observables;
  const ObservableSample& first = series.front();
  for (const ObservableSample& s : series) {
    res.max_separation_drift = std::max(res.max_separation_drift, std::abs(s.separation - first.separation));
    res.max_com_drift = std::max(res.max_com_drift, std::abs(s.com - first.com));
    res.max_norm_drift = std::max(res.max_norm_drift, std::abs(s.norm - 1.0));
    res.max_energy_drift = std::max(res.max_energy_drift, std::abs(s.energy - first.energy));
  }

  // Semiclassical partner run from the packet's initial means and momenta.
  SemiclassicalState start;
  start.x = first.mean_x;
  start.y = first.mean_y;
  start.px = config.px;
  start.py = config.py;
  IntegratorOptions io;
  io.dt_out = config.dt_out;
  io.step = std::min(1e-3, config.dt_out);
  try {
    res.semiclassical = integrate(start, config.params, config.t_final, io);
  } catch (const SemiclassicalBreakdown& e) {
    res.semiclassical = e.partial();
    res.semiclassical_breakdown = e.time();
  }

  const double d = start.y - start.x;
  if (std::abs(d) > 0.0) {
    res.force = make_force_model(config.params, d);
    if (res.force.force != 0.0) {
      res.period = 2.0 * std::numbers::pi / std::abs(res.force.force);
      res.amplitude = 4.0 * config.params.J / std::abs(res.force.force);
    }
  }
  res.deviation = compare_runs(series, res.semiclassical);
  res.doublon_count_k0 = static_cast<int>(solve_bound_states_converged(config.params, 0.0).states.size());

  if (write_artifacts) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw InvalidInput(fmt::format("cannot create {}: {}", config.out_dir.string(), ec.message()));
    auto open = [&](const char* file) {
      std::ofstream os(config.out_dir / file);
      if (!os) throw InvalidInput(fmt::format("cannot write {}", (config.out_dir / file).string()));
      return os;
    };
    {
      auto os = open("series.csv");
      write_series_csv(os, series);
    }
    {
      auto os = open("semiclassical.csv");
      write_trajectory_csv(os, res.semiclassical);
    }
    {
      auto os = open("semiclassical.json");
      json j;
      j["F"] = res.force.force;
      j["period"] = optional_number(res.period);
      j["amplitude"] = optional_number(res.amplitude);
      os << j.dump(2) << '\n';
    }
    {
      auto os = open("deviation.csv");
      write_deviation_csv(os, res.deviation);
    }
    {
      auto os = open("config.json");
      os << config_to_json(config) << '\n';
    }
    {
      auto os = open("summary.json");
      os << summary_json(res) << '\n';
    }
    if (config.write_snapshots) {
      for (const TwoParticleState& snap : res.quantum.snapshots) {
        write_grid(config.out_dir / fmt::format("snapshot_t{:.3f}.h2pg", snap.time()), snap);
      }
    }
  }
  return res;
}

std::string summary_json(const ExperimentResult& r) {
  json j;
  j["name"] = r.config.name;
  j["x0"] = r.packet.x0;
  j["y0"] = r.packet.y0;
  j["packet_clipped"] = r.packet_clipped;
  j["F"] = r.force.force;
  j["separation"] = r.force.separation;
  j["period"] = optional_number(r.period);
  j["amplitude"] = optional_number(r.amplitude);
  j["max_separation_drift"] = r.max_separation_drift;
  j["max_com_drift"] = r.max_com_drift;
  j["max_norm_drift"] = r.max_norm_drift;
  j["max_energy_drift"] = r.max_energy_drift;
  j["spectral_span"] = r.quantum.bounds.span();
  j["doublon_count_k0"] = r.doublon_count_k0;
  j["contamination_onset"] = optional_number(r.quantum.contamination_onset);
  j["semiclassical_breakdown"] = optional_number(r.semiclassical_breakdown);
  j["deviation_threshold"] = r.deviation.threshold;
  j["deviation_first_exceed_x"] = optional_number(r.deviation.first_exceed_x);
  j["deviation_first_exceed_y"] = optional_number(r.deviation.first_exceed_y);
  j["deviation_max_dx"] = r.deviation.max_dx;
  j["deviation_max_dy"] = r.deviation.max_dy;
  j["deviation_max_dcom"] = r.deviation.max_dcom;
  j["samples"] = r.quantum.times.size();
  return j.dump(2);
}

}  // namespace h2p
