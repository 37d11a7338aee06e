#include "h2p/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace h2p {

SpectralBounds estimate_spectral_bounds(const HubbardParams& params, const InteractionPotential& potential,
                                        const LatticeSpec& lattice, double margin) {
  lattice.validate();
  double lo = 0.0;
  double hi = 0.0;
  if (params.J == 0.0) {
    lo = potential.min();
    hi = potential.max();
  } else {
    hi = 4.0 * params.J + potential.max_abs();
    lo = -hi;
  }
  // A constant diagonal operator has zero span; keep a finite interval.
  const double pad = std::max(margin * (hi - lo), 1e-3 * std::max(1.0, std::abs(hi) + std::abs(lo)));
  return {lo - pad, hi + pad};
}

// ---------------------------------------------------------------------------

ChebyshevPropagator::ChebyshevPropagator(const PairHamiltonian& hamiltonian, SpectralBounds bounds,
                                         double tolerance)
    : h_(hamiltonian),
      bounds_(bounds),
      tolerance_(tolerance),
      center_(0.5 * (bounds.upper + bounds.lower)),
      half_span_(0.5 * (bounds.upper - bounds.lower)),
      prev_(hamiltonian.dimension()),
      curr_(hamiltonian.dimension()),
      acc_(hamiltonian.dimension()) {
  if (!(half_span_ > 0.0)) throw InvalidInput("spectral bounds must have positive span");
  if (!(tolerance > 0.0)) throw InvalidInput("propagator tolerance must be positive");
}

namespace {

// c_0 = J_0(a), c_k = 2 (-i)^k J_k(a); terms beyond k > a decay
// super-exponentially, so stop once they reach the rounding floor.
std::vector<cplx> chebyshev_coefficients(double a, double floor) {
  std::vector<cplx> c;
  const cplx minus_i{0.0, -1.0};
  cplx ik{1.0, 0.0};
  for (int k = 0;; ++k) {
    const double jk = std::cyl_bessel_j(static_cast<double>(k), a);
    c.push_back((k == 0 ? 1.0 : 2.0) * ik * jk);
    ik *= minus_i;
    if (k > a && std::abs(jk) < floor) break;
    if (k > 10000) throw NumericalError("Chebyshev expansion failed to converge");
  }
  return c;
}

}  // namespace

double ChebyshevPropagator::term_floor(double dt) const { return std::min(1e-17, 1e-3 * tolerance_ * dt); }

const ChebyshevPropagator::Coefficients& ChebyshevPropagator::coefficients(double dt) {
  if (cache_.dt == dt) return cache_;
  cache_.c = chebyshev_coefficients(half_span_ * dt, term_floor(dt));
  cache_.phase = std::polar(1.0, -center_ * dt);
  cache_.dt = dt;
  return cache_;
}

int ChebyshevPropagator::order(double dt) const {
  return static_cast<int>(chebyshev_coefficients(half_span_ * dt, term_floor(dt)).size());
}

void ChebyshevPropagator::expand(std::span<cplx> psi, const Coefficients& coeffs) {
  const std::size_t n = psi.size();
  const double inv = 1.0 / half_span_;
  // prev = T_0 psi, curr = T_1 psi
  std::copy(psi.begin(), psi.end(), prev_.begin());
  h_.apply_affine(prev_, curr_, inv, center_, 0.0, {});
  for (std::size_t i = 0; i < n; ++i) acc_[i] = coeffs.c[0] * prev_[i] + coeffs.c[1] * curr_[i];
  for (std::size_t k = 2; k < coeffs.c.size(); ++k) {
    // T_{k} = 2 H~ T_{k-1} - T_{k-2}, written over the T_{k-2} buffer
    h_.apply_affine(curr_, prev_, 2.0 * inv, center_, -1.0, prev_);
    std::swap(prev_, curr_);
    const cplx ck = coeffs.c[k];
    for (std::size_t i = 0; i < n; ++i) acc_[i] += ck * curr_[i];
  }
  for (std::size_t i = 0; i < n; ++i) psi[i] = coeffs.phase * acc_[i];
}

void ChebyshevPropagator::advance(TwoParticleState& state, double dt) {
  if (state.size() != h_.dimension()) throw InvalidInput("state does not match the Hamiltonian grid");
  if (dt == 0.0) return;
  const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(dt) * half_span_ / max_argument)));
  const double sub = dt / pieces;
  for (int p = 0; p < pieces; ++p) expand(state.data(), coefficients(sub));
  state.set_time(state.time() + dt);
}

// ---------------------------------------------------------------------------

struct DensePropagator::Impl {
  int n = 0;
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;
};

DensePropagator::DensePropagator(const HubbardParams& params, const InteractionPotential& potential,
                                 const LatticeSpec& lattice)
    : impl_(std::make_unique<Impl>()) {
  lattice.validate();
  const int n = lattice.n_sites;
  if (n > 12) throw InvalidInput("dense propagation is limited to 12 x 12 grids");
  const int dim = n * n;
  const bool periodic = lattice.boundary == Boundary::periodic;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  auto idx = [n](int x, int y) { return x * n + y; };
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      const int i = idx(x, y);
      h(i, i) += potential(pair_separation(x, y, lattice));
      const int nbrs[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
      for (const auto& nb : nbrs) {
        int a = nb[0];
        int b = nb[1];
        if (periodic) {
          a = (a + n) % n;
          b = (b + n) % n;
        } else if (a < 0 || a >= n || b < 0 || b >= n) {
          continue;
        }
        h(i, idx(a, b)) += -params.J;
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("dense diagonalization failed");
  impl_->n = n;
  impl_->energies = solver.eigenvalues();
  impl_->vectors = solver.eigenvectors();
}

DensePropagator::~DensePropagator() = default;
DensePropagator::DensePropagator(DensePropagator&&) noexcept = default;
DensePropagator& DensePropagator::operator=(DensePropagator&&) noexcept = default;

void DensePropagator::advance(TwoParticleState& state, double dt) const {
  const auto dim = static_cast<Eigen::Index>(state.size());
  if (state.n_sites() != impl_->n) throw InvalidInput("state does not match the dense Hamiltonian");
  Eigen::Map<Eigen::VectorXcd> psi(state.data().data(), dim);
  Eigen::VectorXcd coeff = impl_->vectors.transpose().cast<cplx>() * psi;
  for (Eigen::Index i = 0; i < dim; ++i) coeff(i) *= std::polar(1.0, -impl_->energies(i) * dt);
  psi = impl_->vectors.cast<cplx>() * coeff;
  state.set_time(state.time() + dt);
}

std::vector<double> DensePropagator::eigenvalues() const {
  return {impl_->energies.data(), impl_->energies.data() + impl_->energies.size()};
}

// ---------------------------------------------------------------------------

EvolutionRecord evolve(const TwoParticleState& initial, const HubbardParams& params,
                       const InteractionPotential& potential, const LatticeSpec& lattice,
                       const PropagatorConfig& config, double t_final, const SampleCallback& on_sample) {
  lattice.validate();
  if (initial.n_sites() != lattice.n_sites) throw InvalidInput("initial state does not match the lattice");
  if (std::abs(initial.norm() - 1.0) > 1e-10) throw InvalidInput("initial state must be normalized");
  if (!(t_final > 0.0) || !std::isfinite(t_final)) throw InvalidInput("t_final must be positive");
  if (!(config.dt_out > 0.0)) throw InvalidInput("dt_out must be positive");

  const PairHamiltonian hamiltonian(params, potential, lattice);
  EvolutionRecord rec;
  rec.bounds = config.bounds.value_or(estimate_spectral_bounds(params, potential, lattice));

  std::optional<ChebyshevPropagator> cheb;
  std::optional<DensePropagator> dense;
  if (config.method == PropagationMethod::dense_oracle) {
    dense.emplace(params, potential, lattice);
  } else {
    cheb.emplace(hamiltonian, rec.bounds, config.tolerance);
    cheb->max_argument = config.max_expansion_argument;
  }

  std::vector<double> pending_snapshots = config.snapshot_times;
  std::sort(pending_snapshots.begin(), pending_snapshots.end());
  std::size_t next_snapshot = 0;

  TwoParticleState psi = initial;
  psi.set_time(0.0);
  const double t0 = initial.time();
  bool contaminated = false;

  const auto steps = static_cast<long>(std::ceil(t_final / config.dt_out - 1e-9));
  for (long k = 0; k <= steps; ++k) {
    if (k > 0) {
      const double target = std::min(static_cast<double>(k) * config.dt_out, t_final);
      const double dt = target - psi.time();
      if (dense) {
        dense->advance(psi, dt);
      } else {
        cheb->advance(psi, dt);
      }
      psi.set_time(target);
    }
    ObservableSample sample = measure(psi, hamiltonian);
    if (std::abs(sample.norm - 1.0) > config.norm_guard) {
      throw NumericalError(fmt::format(
          "norm drifted to {:.12f} at t = {}; spectral bracket [{}, {}] likely violated", sample.norm,
          sample.t, rec.bounds.lower, rec.bounds.upper));
    }
    sample.t += t0;
    if (!contaminated && sample.edge_leakage > config.leakage_threshold) {
      contaminated = true;
      rec.contamination_onset = sample.t;
    }
    rec.times.push_back(sample.t);
    rec.edge_leakage.push_back(sample.edge_leakage);
    rec.contaminated.push_back(contaminated);
    rec.observables.push_back(sample);
    while (next_snapshot < pending_snapshots.size() &&
           pending_snapshots[next_snapshot] <= psi.time() + 1e-9 * std::max(1.0, psi.time())) {
      TwoParticleState snap = psi;
      snap.set_time(sample.t);
      rec.snapshots.push_back(std::move(snap));
      ++next_snapshot;
    }
    if (on_sample) {
      TwoParticleState view = psi;
      view.set_time(sample.t);
      on_sample(view, sample);
    }
  }
  rec.final_state = std::move(psi);
  rec.final_state.set_time(t0 + t_final);
  return rec;
}

TwoParticleState propagate(const TwoParticleState& initial, const HubbardParams& params,
                           const InteractionPotential& potential, const LatticeSpec& lattice, double t,
                           const PropagatorConfig& config) {
  TwoParticleState psi = initial;
  if (config.method == PropagationMethod::dense_oracle) {
    DensePropagator(params, potential, lattice).advance(psi, t);
    return psi;
  }
  const PairHamiltonian hamiltonian(params, potential, lattice);
  ChebyshevPropagator prop(hamiltonian, config.bounds.value_or(estimate_spectral_bounds(params, potential, lattice)),
                           config.tolerance);
  prop.max_argument = config.max_expansion_argument;
  prop.advance(psi, t);
  return psi;
}

}  // namespace h2p
