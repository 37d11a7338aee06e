#include "h2p/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "h2p/threads.hpp"

namespace h2p {

const char* to_string(Parity p) { return p == Parity::symmetric ? "S" : "A"; }

double effective_hopping(double J, double K) {
  const double c = std::cos(0.5 * K);
  return std::abs(c) < 1e-14 ? 0.0 : -2.0 * J * c;
}

double continuum_edge(double J, double K) { return 2.0 * std::abs(effective_hopping(J, K)); }

int default_half_width(const HubbardParams& params) {
  if (params.shape == InteractionShape::exponential) {
    return std::max(100, static_cast<int>(std::ceil(12.0 / params.gamma)));
  }
  return 100;
}

void RelativeProblem::validate(const HubbardParams* params) const {
  if (!(std::abs(K) <= std::numbers::pi + 1e-12)) throw InvalidInput("K must lie in [-pi, pi]");
  if (half_width < 1) throw InvalidInput("relative truncation needs S >= 1");
  if (potential.size() < static_cast<std::size_t>(half_width) + 1) {
    throw InvalidInput("potential table shorter than the relative truncation");
  }
  if (!std::isfinite(J) || J < 0.0) throw InvalidInput("hopping J must be finite and non-negative");
  if (params && params->shape == InteractionShape::exponential &&
      static_cast<double>(half_width) * params->gamma < 10.0) {
    throw InvalidInput(fmt::format("truncation S={} too short for gamma={}: need S >= 10/gamma",
                                   half_width, params->gamma));
  }
}

RelativeProblem make_relative_problem(const HubbardParams& params, double K,
                                      std::optional<int> half_width) {
  RelativeProblem p;
  p.K = K;
  p.half_width = half_width.value_or(default_half_width(params));
  p.J = params.J;
  p.potential = build_potential(params, static_cast<std::size_t>(std::max(p.half_width, 0)) + 1);
  p.validate(&params);
  return p;
}

// ---------------------------------------------------------------------------
// Tridiagonal kernels

std::size_t Tridiagonal::count_below(double e) const {
  const std::size_t n = diagonal.size();
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double b2 = i > 0 ? off_diagonal[i - 1] * off_diagonal[i - 1] : 0.0;
    q = diagonal[i] - e - (i > 0 ? b2 / q : 0.0);
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

namespace {

std::pair<double, double> gershgorin(const Tridiagonal& t) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(t.off_diagonal[i - 1]);
    if (i + 1 < n) r += std::abs(t.off_diagonal[i]);
    lo = std::min(lo, t.diagonal[i] - r);
    hi = std::max(hi, t.diagonal[i] + r);
  }
  return {lo, hi};
}

}  // namespace

double Tridiagonal::eigenvalue(std::size_t k) const {
  if (k >= size()) throw InvalidInput("eigenvalue index out of range");
  auto [lo, hi] = gershgorin(*this);
  const double scale = std::max(std::abs(lo), std::abs(hi));
  lo -= 1e-12 * scale + std::numeric_limits<double>::min();
  hi += 1e-12 * scale + std::numeric_limits<double>::min();
  // invariant: count_below(lo) <= k < count_below(hi)
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi))) {
      break;
    }
    if (count_below(mid) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> Tridiagonal::eigenvector(double lambda) const {
  const std::size_t n = size();
  std::vector<double> v(n, 1.0);
  if (n == 1) return v;

  // LU with partial pivoting of (T - lambda), laid out as in LAPACK dgttrf.
  std::vector<double> dl(off_diagonal), du(off_diagonal), d(n), du2(n > 2 ? n - 2 : 0, 0.0);
  std::vector<std::size_t> ipiv(n - 1);
  for (std::size_t i = 0; i < n; ++i) d[i] = diagonal[i] - lambda;
  auto [glo, ghi] = gershgorin(*this);
  const double pivot_floor =
      std::numeric_limits<double>::epsilon() * std::max({std::abs(glo), std::abs(ghi), 1e-300});

  for (std::size_t i = 0; i + 1 < n; ++i) {
    ipiv[i] = i;
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] != 0.0) {
        const double fact = dl[i] / d[i];
        dl[i] = fact;
        d[i + 1] -= fact * du[i];
      }
    } else {
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      dl[i] = fact;
      const double temp = du[i];
      du[i] = d[i + 1];
      d[i + 1] = temp - fact * d[i + 1];
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -fact * du[i + 1];
      }
      ipiv[i] = i + 1;
    }
  }
  for (double& p : d) {
    if (std::abs(p) < pivot_floor) p = std::copysign(pivot_floor, p == 0.0 ? 1.0 : p);
  }

  auto solve = [&](std::vector<double>& b) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (ipiv[i] == i) {
        b[i + 1] -= dl[i] * b[i];
      } else {
        const double temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - dl[i] * b[i];
      }
    }
    b[n - 1] /= d[n - 1];
    b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (std::size_t i = n - 2; i-- > 0;) {
      b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
  };
  auto normalize = [](std::vector<double>& b) {
    double s = 0.0;
    for (double x : b) s += x * x;
    const double inv = 1.0 / std::sqrt(s);
    for (double& x : b) x *= inv;
  };

  // Start vector with no special symmetry so it cannot be orthogonal to the target.
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * std::sin(1.7 * static_cast<double>(i) + 0.3);
  normalize(v);
  for (int it = 0; it < 4; ++it) {
    solve(v);
    normalize(v);
  }
  // sign convention: largest component positive
  const auto big = std::max_element(v.begin(), v.end(),
                                    [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (*big < 0.0) {
    for (double& x : v) x = -x;
  }
  return v;
}

void Tridiagonal::apply(std::span<const double> in, std::span<double> out) const {
  const std::size_t n = size();
  if (in.size() != n || out.size() != n) throw InvalidInput("tridiagonal dimension mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    double s = diagonal[i] * in[i];
    if (i > 0) s += off_diagonal[i - 1] * in[i - 1];
    if (i + 1 < n) s += off_diagonal[i] * in[i + 1];
    out[i] = s;
  }
}

Tridiagonal relative_hamiltonian(const RelativeProblem& problem) {
  problem.validate();
  const int S = problem.half_width;
  Tridiagonal t;
  t.diagonal.resize(static_cast<std::size_t>(2 * S + 1));
  for (int s = -S; s <= S; ++s) t.diagonal[static_cast<std::size_t>(s + S)] = problem.potential(s);
  t.off_diagonal.assign(static_cast<std::size_t>(2 * S), effective_hopping(problem.J, problem.K));
  return t;
}

// ---------------------------------------------------------------------------
// Bound states

namespace {

// Even sector in the basis g(0) = f(0), g(s) = sqrt(2) f(s), s = 1..S; odd
// sector on f(1..S) with f(0) = 0.
Tridiagonal even_block(const RelativeProblem& p) {
  const int S = p.half_width;
  const double t = effective_hopping(p.J, p.K);
  Tridiagonal b;
  b.diagonal.resize(static_cast<std::size_t>(S + 1));
  for (int s = 0; s <= S; ++s) b.diagonal[static_cast<std::size_t>(s)] = p.potential(s);
  b.off_diagonal.assign(static_cast<std::size_t>(S), t);
  b.off_diagonal[0] = std::numbers::sqrt2 * t;
  return b;
}

Tridiagonal odd_block(const RelativeProblem& p) {
  const int S = p.half_width;
  Tridiagonal b;
  b.diagonal.resize(static_cast<std::size_t>(S));
  for (int s = 1; s <= S; ++s) b.diagonal[static_cast<std::size_t>(s - 1)] = p.potential(s);
  b.off_diagonal.assign(static_cast<std::size_t>(S - 1), effective_hopping(p.J, p.K));
  return b;
}

std::vector<double> unfold(const std::vector<double>& g, Parity parity, int S) {
  std::vector<double> f(static_cast<std::size_t>(2 * S + 1), 0.0);
  auto at = [&](int s) -> double& { return f[static_cast<std::size_t>(s + S)]; };
  if (parity == Parity::symmetric) {
    at(0) = g[0];
    for (int s = 1; s <= S; ++s) {
      const double v = g[static_cast<std::size_t>(s)] / std::numbers::sqrt2;
      at(s) = v;
      at(-s) = v;
    }
  } else {
    for (int s = 1; s <= S; ++s) {
      const double v = g[static_cast<std::size_t>(s - 1)] / std::numbers::sqrt2;
      at(s) = v;
      at(-s) = -v;
    }
  }
  return f;
}

struct RawBound {
  std::vector<BoundState> states;
  double max_edge = 0.0;
};

RawBound collect_bound_states(const RelativeProblem& problem, const BoundStateOptions& options) {
  problem.validate();
  const double threshold = continuum_edge(problem.J, problem.K) + options.band_margin;
  const Tridiagonal full = relative_hamiltonian(problem);
  RawBound out;

  auto harvest = [&](const Tridiagonal& block, Parity parity) {
    const std::size_t n = block.size();
    const std::size_t below = block.count_below(-threshold);
    const std::size_t not_above = block.count_below(threshold);
    std::vector<std::size_t> picks;
    for (std::size_t k = 0; k < below; ++k) picks.push_back(k);
    for (std::size_t k = not_above; k < n; ++k) picks.push_back(k);
    for (std::size_t k : picks) {
      const double e = block.eigenvalue(k);
      if (std::abs(e) <= threshold) continue;  // bisection landed on the margin
      BoundState b;
      b.energy = e;
      b.parity = parity;
      b.K = problem.K;
      b.half_width = problem.half_width;
      b.wavefunction = unfold(block.eigenvector(e), parity, problem.half_width);
      std::vector<double> hf(b.wavefunction.size());
      full.apply(b.wavefunction, hf);
      double r2 = 0.0;
      for (std::size_t i = 0; i < hf.size(); ++i) {
        const double r = hf[i] - e * b.wavefunction[i];
        r2 += r * r;
      }
      b.residual = std::sqrt(r2);
      if (b.residual > options.residual_tolerance) {
        throw NumericalError(fmt::format("bound state at E={} has residual {:.3e}", e, b.residual));
      }
      out.max_edge = std::max(out.max_edge, b.edge_amplitude());
      out.states.push_back(std::move(b));
    }
  };
  harvest(even_block(problem), Parity::symmetric);
  if (problem.half_width >= 1) harvest(odd_block(problem), Parity::antisymmetric);
  std::sort(out.states.begin(), out.states.end(),
            [](const BoundState& a, const BoundState& b) { return a.energy < b.energy; });
  return out;
}

}  // namespace

double BoundState::edge_amplitude() const {
  if (wavefunction.empty()) return 0.0;
  return std::max(std::abs(wavefunction.front()), std::abs(wavefunction.back()));
}

std::vector<BoundState> solve_bound_states(const RelativeProblem& problem,
                                           const BoundStateOptions& options) {
  RawBound raw = collect_bound_states(problem, options);
  if (raw.max_edge > options.edge_tolerance) {
    throw TruncationError(fmt::format(
        "bound state reaches the truncation wall (|f(+-S)| = {:.3e} at S = {}, K = {}); enlarge S",
        raw.max_edge, problem.half_width, problem.K));
  }
  return std::move(raw.states);
}

std::size_t count_continuum_levels(const RelativeProblem& problem, const BoundStateOptions& options) {
  const double threshold = continuum_edge(problem.J, problem.K) + options.band_margin;
  const Tridiagonal full = relative_hamiltonian(problem);
  return full.count_below(threshold) - full.count_below(-threshold);
}

ConvergedBoundStates solve_bound_states_converged(const HubbardParams& params, double K,
                                                  const ConvergenceOptions& options) {
  params.validate();
  int S = default_half_width(params);
  std::optional<RawBound> previous;
  int previous_S = 0;
  while (true) {
    if (S > options.max_half_width) {
      throw TruncationError(fmt::format(
          "bound states at K = {} did not converge up to S = {}", K, options.max_half_width));
    }
    RawBound current = collect_bound_states(make_relative_problem(params, K, S), options.bound);
    if (previous && previous->max_edge <= options.bound.edge_tolerance &&
        previous->states.size() == current.states.size()) {
      double shift = 0.0;
      for (std::size_t i = 0; i < current.states.size(); ++i) {
        shift = std::max(shift, std::abs(previous->states[i].energy - current.states[i].energy));
      }
      if (shift < options.energy_tolerance) {
        return ConvergedBoundStates{previous_S, std::move(previous->states), shift};
      }
    }
    previous = std::move(current);
    previous_S = S;
    S *= 2;
  }
}

std::vector<double> uniform_k_grid(int points) {
  if (points < 2) throw InvalidInput("K grid needs at least 2 points");
  std::vector<double> k(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    k[static_cast<std::size_t>(i)] = -std::numbers::pi + 2.0 * std::numbers::pi * i / (points - 1);
  }
  return k;
}

std::vector<BandRow> doublon_band_sweep(const HubbardParams& params, std::span<const double> k_grid,
                                        const ConvergenceOptions& options) {
  for (double K : k_grid) {
    if (!(std::abs(K) <= std::numbers::pi + 1e-12)) throw InvalidInput("K grid must lie in [-pi, pi]");
  }
  std::vector<std::vector<BandRow>> per_k(k_grid.size());
  parallel_for(k_grid.size(), [&](std::size_t i) {
    const auto solved = solve_bound_states_converged(params, k_grid[i], options);
    int branch = 0;
    for (const BoundState& b : solved.states) {
      per_k[i].push_back(BandRow{k_grid[i], branch++, b.energy, b.parity});
    }
  });
  std::vector<BandRow> rows;
  for (auto& v : per_k) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

void write_band_csv(std::ostream& os, std::span<const BandRow> rows) {
  os << "K,branch,E_over_J,parity\n";
  for (const BandRow& r : rows) {
    os << fmt::format("{:.17g},{},{:.17g},{}\n", r.K, r.branch, r.energy, to_string(r.parity));
  }
}

// ---------------------------------------------------------------------------
// Scattering

double reduce_phase(double delta) {
  const double pi = std::numbers::pi;
  double r = std::fmod(delta, pi);
  if (r <= -0.5 * pi) r += pi;
  if (r > 0.5 * pi) r -= pi;
  return r;
}

namespace {

struct TailFit {
  double a = 0.0;  // cos coefficient
  double b = 0.0;  // sin coefficient
  double residual = 0.0;
};

TailFit fit_tail(const std::vector<double>& f, double q, int begin, int end) {
  // Normal equations of the 2-parameter least-squares problem.
  double cc = 0.0, cs = 0.0, ss = 0.0, fc = 0.0, fs = 0.0;
  for (int s = begin; s <= end; ++s) {
    const double c = std::cos(q * s);
    const double sn = std::sin(q * s);
    const double v = f[static_cast<std::size_t>(s)];
    cc += c * c;
    cs += c * sn;
    ss += sn * sn;
    fc += v * c;
    fs += v * sn;
  }
  const double det = cc * ss - cs * cs;
  TailFit fit;
  fit.a = (fc * ss - fs * cs) / det;
  fit.b = (fs * cc - fc * cs) / det;
  double r2 = 0.0;
  for (int s = begin; s <= end; ++s) {
    const double r = f[static_cast<std::size_t>(s)] - fit.a * std::cos(q * s) - fit.b * std::sin(q * s);
    r2 += r * r;
  }
  const double amplitude = std::hypot(fit.a, fit.b);
  fit.residual = std::sqrt(r2 / (end - begin + 1)) / amplitude;
  return fit;
}

}  // namespace

ScatteringSolution scattering_phase_shift(const RelativeProblem& problem, double q,
                                          const ScatteringOptions& options) {
  problem.validate();
  const double pi = std::numbers::pi;
  if (!(q > 0.0 && q < pi)) throw InvalidInput("relative momentum q must lie in (0, pi)");
  const double t = effective_hopping(problem.J, problem.K);
  if (t == 0.0) throw InvalidInput("no scattering continuum at K = +-pi (flat band)");

  const int S = problem.half_width;
  int decayed = S + 1;
  for (int s = S; s >= 0 && std::abs(problem.potential(s)) < options.potential_floor; --s) decayed = s;
  const int begin = std::max(decayed, S - options.window_length);
  const int end = S;
  if (end - begin + 1 < 32) {
    throw InvalidInput(fmt::format(
        "potential has not decayed below {:.1e} on a fit window inside S = {}", options.potential_floor, S));
  }
  if (std::min(q, pi - q) * (end - begin) < 2.0 * pi) {
    throw InvalidInput("q too close to 0 or pi for the fit window (degenerate fit)");
  }

  ScatteringSolution sol;
  sol.K = problem.K;
  sol.q = q;
  sol.energy = 2.0 * t * std::cos(q);
  sol.window_begin = begin;
  sol.window_end = end;

  auto integrate = [&](double f0, double f1) {
    std::vector<double> f(static_cast<std::size_t>(S + 1));
    f[0] = f0;
    f[1] = f1;
    for (int s = 1; s < S; ++s) {
      const auto i = static_cast<std::size_t>(s);
      f[i + 1] = (sol.energy - problem.potential(s)) * f[i] / t - f[i - 1];
    }
    return f;
  };

  // Even: row s = 0 reads W(0) f(0) + 2t f(1) = E f(0).
  const auto even = integrate(1.0, (sol.energy - problem.potential(0)) / (2.0 * t));
  const auto odd = integrate(0.0, 1.0);

  const TailFit fe = fit_tail(even, q, begin, end);
  const TailFit fo = fit_tail(odd, q, begin, end);
  // a cos + b sin = A cos(qs + d)  =>  d = atan2(-b, a)
  sol.delta_s = reduce_phase(std::atan2(-fe.b, fe.a));
  // a cos + b sin = A sin(qs + d)  =>  d = atan2(a, b)
  sol.delta_a = reduce_phase(std::atan2(fo.a, fo.b));
  sol.fit_residual_s = fe.residual;
  sol.fit_residual_a = fo.residual;
  if (fe.residual > options.fit_tolerance || fo.residual > options.fit_tolerance) {
    throw NumericalError(fmt::format("tail fit residual {:.3e}/{:.3e} above tolerance {:.1e}",
                                     fe.residual, fo.residual, options.fit_tolerance));
  }
  return sol;
}

ScatteringSolution scattering_phase_shift(const HubbardParams& params, double K, double q,
                                          const ScatteringOptions& options) {
  params.validate();
  int decayed = 1;
  if (params.shape == InteractionShape::exponential && std::abs(params.U) > 0.0) {
    decayed = static_cast<int>(
        std::ceil(std::log(std::abs(params.U) / options.potential_floor) / params.gamma)) + 1;
  } else if (params.shape == InteractionShape::custom) {
    decayed = static_cast<int>(params.custom_table.size());
  }
  const int S = std::max({decayed + options.window_length, default_half_width(params)});
  return scattering_phase_shift(make_relative_problem(params, K, S), q, options);
}

}  // namespace h2p
