#pragma once

// Point-particle limit of the pair dynamics. For s = y - x,
//
//   dx/dt = 2J sin p_x,   dp_x/dt =  V'(|s|) sgn(s)
//   dy/dt = 2J sin p_y,   dp_y/dt = -V'(|s|) sgn(s)
//
// The two force terms cancel exactly, so p_x + p_y is conserved. With
// p_x + p_y = pi the velocities coincide, s stays fixed, the force is
// constant and both particles perform a Bloch oscillation of period 2 pi/|F|.

#include <iosfwd>
#include <span>
#include <vector>

#include "h2p/errors.hpp"
#include "h2p/model.hpp"

namespace h2p {

struct SemiclassicalState {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double px = 0.0;  ///< unwrapped, radians per site
  double py = 0.0;
};

using Trajectory = std::vector<SemiclassicalState>;

/// dV/ds at |s|: -gamma U exp(-gamma |s|) for the exponential shape, zero for
/// on-site only, and the slope of the linearly interpolated table for custom
/// shapes. Throws InvalidInput at s = 0.
double interaction_force(const HubbardParams& params, double s);

/// Constant-force picture at separation d: F = -dV/ds(|d|), which is
/// gamma U exp(-gamma |d|) for the exponential shape.
struct ForceModel {
  double force = 0.0;
  double separation = 0.0;
};

ForceModel make_force_model(const HubbardParams& params, double d);

struct IntegratorOptions {
  double step = 1e-3;
  double dt_out = 0.1;
  /// Closest approach |y - x| before the point-particle picture is abandoned.
  double min_separation = 0.5;
};

/// Thrown when |y - x| falls below the coincidence guard. Carries the samples
/// produced up to that point.
class SemiclassicalBreakdown : public NumericalError {
 public:
  SemiclassicalBreakdown(const std::string& what, Trajectory partial, double time)
      : NumericalError(what), partial_(std::move(partial)), time_(time) {}
  [[nodiscard]] const Trajectory& partial() const { return partial_; }
  [[nodiscard]] double time() const { return time_; }

 private:
  Trajectory partial_;
  double time_;
};

/// Time derivative of (x, y, p_x, p_y).
SemiclassicalState semiclassical_rate(const SemiclassicalState& s, const HubbardParams& params);

/// Classical RK4 with a fixed step; samples every dt_out up to t_final.
/// dt_out must be an integer multiple of the step (to 1e-9 relative).
Trajectory integrate(const SemiclassicalState& initial, const HubbardParams& params, double t_final,
                     const IntegratorOptions& options = {});

/// x(t) = x0 + (2J/F)[cos(Ft) - 1], y(t) = x(t) - d, with F from
/// make_force_model(params, d). F = 0 returns the frozen pair.
struct BlochPosition {
  double x = 0.0;
  double y = 0.0;
};
BlochPosition closed_form_bloch(double x0, double d, const HubbardParams& params, double t);

/// Exact solution of the equations of motion for x starting at rest with
/// p_x = 0 and its partner at p_y = pi, on either side of it. With
/// sigma = sgn(y0 - x0): p_x = -sigma F t, p_y = pi + sigma F t and
/// x(t) = x0 + sigma (2J/F)[cos(Ft) - 1], y(t) = x(t) + (y0 - x0). For a
/// leading y this is closed_form_bloch with d = x0 - y0.
SemiclassicalState bloch_solution(double x0, double y0, const HubbardParams& params, double t);

/// 2 pi / |F|. Throws InvalidInput when F = 0.
double bloch_period(const HubbardParams& params, double d);

/// `t,x,y,px,py`, values in %.17g.
void write_trajectory_csv(std::ostream& os, std::span<const SemiclassicalState> trajectory);
Trajectory read_trajectory_csv(std::istream& is);

}  // namespace h2p
