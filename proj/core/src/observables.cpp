#include "h2p/observables.hpp"

#include <cmath>
#include <istream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <fftw3.h>
#include <fmt/format.h>

namespace h2p {

MarginalDistribution marginals(const TwoParticleState& state) {
  const int n = state.n_sites();
  MarginalDistribution m;
  m.up.assign(static_cast<std::size_t>(n), 0.0);
  m.down.assign(static_cast<std::size_t>(n), 0.0);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      const double p = std::norm(state(x, y));
      m.up[static_cast<std::size_t>(x)] += p;
      m.down[static_cast<std::size_t>(y)] += p;
    }
  }
  return m;
}

MeanPositions mean_positions(const TwoParticleState& state) {
  const MarginalDistribution m = marginals(state);
  long double sx = 0.0L, sy = 0.0L, total = 0.0L;
  for (std::size_t i = 0; i < m.up.size(); ++i) {
    sx += static_cast<long double>(i) * m.up[i];
    sy += static_cast<long double>(i) * m.down[i];
    total += m.up[i];
  }
  if (total <= 0.0L) throw InvalidInput("mean positions of a zero state");
  return {static_cast<double>(sx / total), static_cast<double>(sy / total)};
}

Velocities velocity_expectations(const TwoParticleState& state, double J, Boundary boundary) {
  const int n = state.n_sites();
  const bool periodic = boundary == Boundary::periodic;
  long double jx = 0.0L, jy = 0.0L;
  for (int x = 0; x < n; ++x) {
    const int xn = x + 1 < n ? x + 1 : (periodic ? 0 : -1);
    for (int y = 0; y < n; ++y) {
      const cplx a = std::conj(state(x, y));
      if (xn >= 0) jx += (a * state(xn, y)).imag();
      const int yn = y + 1 < n ? y + 1 : (periodic ? 0 : -1);
      if (yn >= 0) jy += (a * state(x, yn)).imag();
    }
  }
  const long double nrm = state.norm_squared();
  return {static_cast<double>(2.0L * J * jx / nrm), static_cast<double>(2.0L * J * jy / nrm)};
}

double MomentumDistribution::momentum(int k) const {
  return 2.0 * std::numbers::pi * k / n_sites - std::numbers::pi;
}

MomentumDistribution momentum_distribution(const TwoParticleState& state) {
  const int n = state.n_sites();
  const std::size_t size = state.size();
  // Shift the grid so k = 0 maps to p = -pi: multiply by exp(i pi (x + y)).
  fftw_complex* buf = fftw_alloc_complex(size);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      const cplx v = ((x + y) % 2 == 0 ? 1.0 : -1.0) * state(x, y);
      const std::size_t i = state.index(x, y);
      buf[i][0] = v.real();
      buf[i][1] = v.imag();
    }
  }
  {
    // FFTW planning is not thread-safe; execution is.
    static std::mutex planner;
    fftw_plan plan;
    {
      std::lock_guard lock(planner);
      plan = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(planner);
    fftw_destroy_plan(plan);
  }

  MomentumDistribution out;
  out.n_sites = n;
  out.probability.resize(size);
  const double scale = 1.0 / (static_cast<double>(n) * n);
  for (std::size_t i = 0; i < size; ++i) {
    out.probability[i] = (buf[i][0] * buf[i][0] + buf[i][1] * buf[i][1]) * scale;
  }
  fftw_free(buf);
  return out;
}

cplx diagonal_translation_expectation(const TwoParticleState& state) {
  const int n = state.n_sites();
  cplx s{0.0, 0.0};
  for (int x = 0; x < n; ++x) {
    const int xm = (x + n - 1) % n;
    for (int y = 0; y < n; ++y) {
      const int ym = (y + n - 1) % n;
      s += std::conj(state(x, y)) * state(xm, ym);
    }
  }
  return s;
}

double energy_expectation(const TwoParticleState& state, const PairHamiltonian& hamiltonian) {
  std::vector<cplx> h(state.size());
  hamiltonian.apply(state.data(), h);
  const auto psi = state.data();
  double e = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) e += (std::conj(psi[i]) * h[i]).real();
  return e;
}

ObservableSample measure(const TwoParticleState& state, const PairHamiltonian& hamiltonian) {
  ObservableSample s;
  s.t = state.time();
  const MeanPositions m = mean_positions(state);
  s.mean_x = m.x;
  s.mean_y = m.y;
  s.separation = m.y - m.x;
  s.com = 0.5 * (m.x + m.y);
  const Velocities v = velocity_expectations(state, hamiltonian.hopping(), hamiltonian.lattice().boundary);
  s.vx = v.vx;
  s.vy = v.vy;
  s.norm = state.norm();
  s.energy = energy_expectation(state, hamiltonian);
  s.edge_leakage = edge_occupation(state, hamiltonian.lattice());
  return s;
}

namespace {
constexpr const char* kSeriesHeader = "t,mean_x,mean_y,sep,com,vx,vy,norm,energy,edge_leak";
}

void write_series_csv(std::ostream& os, std::span<const ObservableSample> series) {
  os << kSeriesHeader << '\n';
  for (const ObservableSample& s : series) {
    os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                      s.t, s.mean_x, s.mean_y, s.separation, s.com, s.vx, s.vy, s.norm, s.energy,
                      s.edge_leakage);
  }
}

ObservableSeries read_series_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kSeriesHeader) {
    throw InvalidInput("not an observable series CSV (header mismatch)");
  }
  ObservableSeries out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    double v[10];
    for (int i = 0; i < 10; ++i) {
      std::string cell;
      if (!std::getline(row, cell, ',')) {
        throw InvalidInput(fmt::format("series CSV line {}: expected 10 columns", lineno));
      }
      try {
        v[i] = std::stod(cell);
      } catch (const std::exception&) {
        throw InvalidInput(fmt::format("series CSV line {}: bad number '{}'", lineno, cell));
      }
    }
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]});
  }
  return out;
}

EhrenfestResiduals ehrenfest_check(std::span<const ObservableSample> series, double max_dt) {
  if (series.size() < 3) throw InvalidInput("Ehrenfest check needs at least three samples");
  const double dt = series[1].t - series[0].t;
  if (!(dt > 0.0) || dt > max_dt * (1.0 + 1e-9)) {
    throw InvalidInput(fmt::format("sampling interval {} too coarse for the Ehrenfest check (max {})", dt,
                                   max_dt));
  }
  EhrenfestResiduals r;
  for (std::size_t i = 1; i + 1 < series.size(); ++i) {
    const double h = series[i + 1].t - series[i - 1].t;
    if (std::abs(h - 2.0 * dt) > 1e-9 * dt) throw InvalidInput("Ehrenfest check needs uniform sampling");
    const double dx = (series[i + 1].mean_x - series[i - 1].mean_x) / h;
    const double dy = (series[i + 1].mean_y - series[i - 1].mean_y) / h;
    r.x = std::max(r.x, std::abs(dx - series[i].vx));
    r.y = std::max(r.y, std::abs(dy - series[i].vy));
    ++r.samples;
  }
  return r;
}

}  // namespace h2p
