#include "h2p/semiclassics.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

namespace h2p {

double interaction_force(const HubbardParams& params, double s) {
  params.validate();
  const double a = std::abs(s);
  if (!(a > 0.0)) throw InvalidInput("interaction force is undefined at coincidence s = 0");
  switch (params.shape) {
    case InteractionShape::exponential:
      return -params.gamma * params.U * std::exp(-params.gamma * a);
    case InteractionShape::onsite_only:
      return 0.0;
    case InteractionShape::custom: {
      const auto& table = params.custom_table;
      const auto i = static_cast<std::size_t>(std::floor(a));
      auto w = [&](std::size_t k) { return k == 0 ? params.U : (k < table.size() ? table[k] : 0.0); };
      return w(i + 1) - w(i);
    }
  }
  return 0.0;
}

ForceModel make_force_model(const HubbardParams& params, double d) {
  return {-interaction_force(params, d), d};
}

SemiclassicalState semiclassical_rate(const SemiclassicalState& s, const HubbardParams& params) {
  const double sep = s.y - s.x;
  const double f = interaction_force(params, sep) * (sep > 0.0 ? 1.0 : -1.0);
  SemiclassicalState r;
  r.t = 1.0;
  r.x = 2.0 * params.J * std::sin(s.px);
  r.y = 2.0 * params.J * std::sin(s.py);
  r.px = f;
  r.py = -f;
  return r;
}

namespace {

SemiclassicalState axpy(const SemiclassicalState& s, double h, const SemiclassicalState& k) {
  return {s.t + h * k.t, s.x + h * k.x, s.y + h * k.y, s.px + h * k.px, s.py + h * k.py};
}

}  // namespace

Trajectory integrate(const SemiclassicalState& initial, const HubbardParams& params, double t_final,
                     const IntegratorOptions& options) {
  for (double v : {initial.x, initial.y, initial.px, initial.py}) {
    if (!std::isfinite(v)) throw InvalidInput("semiclassical initial state must be finite");
  }
  if (!(t_final >= 0.0)) throw InvalidInput("t_final must be non-negative");
  if (!(options.step > 0.0) || !(options.dt_out > 0.0)) throw InvalidInput("steps must be positive");
  const double ratio = options.dt_out / options.step;
  const auto per_sample = static_cast<long>(std::llround(ratio));
  if (per_sample < 1 || std::abs(ratio - static_cast<double>(per_sample)) > 1e-9 * ratio) {
    throw InvalidInput("dt_out must be an integer multiple of the integrator step");
  }
  const auto samples = static_cast<long>(std::ceil(t_final / options.dt_out - 1e-9));

  Trajectory out;
  SemiclassicalState s = initial;
  s.t = initial.t;
  const double t0 = initial.t;
  auto guard = [&](const SemiclassicalState& st) {
    if (std::abs(st.y - st.x) < options.min_separation) {
      throw SemiclassicalBreakdown(
          fmt::format("particles within {} site of each other at t = {}", options.min_separation, st.t),
          out, st.t);
    }
  };
  guard(s);
  out.push_back(s);
  for (long k = 1; k <= samples; ++k) {
    const double target = t0 + std::min(static_cast<double>(k) * options.dt_out, t_final);
    const double span = target - s.t;
    const long substeps = std::max(1L, static_cast<long>(std::llround(span / options.step)));
    const double h = span / static_cast<double>(substeps);
    for (long j = 0; j < substeps; ++j) {
      const SemiclassicalState k1 = semiclassical_rate(s, params);
      const SemiclassicalState k2 = semiclassical_rate(axpy(s, 0.5 * h, k1), params);
      const SemiclassicalState k3 = semiclassical_rate(axpy(s, 0.5 * h, k2), params);
      const SemiclassicalState k4 = semiclassical_rate(axpy(s, h, k3), params);
      s.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
      s.y += h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
      s.px += h / 6.0 * (k1.px + 2.0 * k2.px + 2.0 * k3.px + k4.px);
      s.py += h / 6.0 * (k1.py + 2.0 * k2.py + 2.0 * k3.py + k4.py);
      s.t = t0 + (static_cast<double>(k - 1) * options.dt_out) + h * static_cast<double>(j + 1);
      guard(s);
    }
    s.t = target;
    out.push_back(s);
  }
  return out;
}

BlochPosition closed_form_bloch(double x0, double d, const HubbardParams& params, double t) {
  const double F = make_force_model(params, d).force;
  if (F == 0.0) return {x0, x0 - d};
  const double x = x0 + 2.0 * params.J / F * (std::cos(F * t) - 1.0);
  return {x, x - d};
}

SemiclassicalState bloch_solution(double x0, double y0, const HubbardParams& params, double t) {
  const double sep = y0 - x0;
  const double sigma = sep > 0.0 ? 1.0 : -1.0;
  const double F = make_force_model(params, sep).force;
  SemiclassicalState s;
  s.t = t;
  s.px = -sigma * F * t;
  s.py = std::numbers::pi + sigma * F * t;
  s.x = F == 0.0 ? x0 : x0 + sigma * 2.0 * params.J / F * (std::cos(F * t) - 1.0);
  s.y = s.x + sep;
  return s;
}

double bloch_period(const HubbardParams& params, double d) {
  const double F = make_force_model(params, d).force;
  if (F == 0.0) throw InvalidInput("no Bloch oscillation without a force (F = 0)");
  return 2.0 * std::numbers::pi / std::abs(F);
}

void write_trajectory_csv(std::ostream& os, std::span<const SemiclassicalState> trajectory) {
  os << "t,x,y,px,py\n";
  for (const SemiclassicalState& s : trajectory) {
    os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", s.t, s.x, s.y, s.px, s.py);
  }
}

Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "t,x,y,px,py") {
    throw InvalidInput("not a trajectory CSV (header mismatch)");
  }
  Trajectory out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    double v[5];
    for (double& value : v) {
      std::string cell;
      if (!std::getline(row, cell, ',')) {
        throw InvalidInput(fmt::format("trajectory CSV line {}: expected 5 columns", lineno));
      }
      try {
        value = std::stod(cell);
      } catch (const std::exception&) {
        throw InvalidInput(fmt::format("trajectory CSV line {}: bad number '{}'", lineno, cell));
      }
    }
    out.push_back({v[0], v[1], v[2], v[3], v[4]});
  }
  return out;
}

}  // namespace h2p
