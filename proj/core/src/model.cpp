#include "h2p/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace h2p {

void LatticeSpec::validate() const {
  if (n_sites < 4) {
    throw InvalidInput("lattice needs at least 4 sites, got " + std::to_string(n_sites));
  }
}

void HubbardParams::validate() const {
  if (!std::isfinite(J) || J < 0.0) throw InvalidInput("hopping J must be finite and non-negative");
  if (!std::isfinite(U)) throw InvalidInput("interaction U must be finite");
  if (shape == InteractionShape::exponential && !(std::isfinite(gamma) && gamma > 0.0)) {
    throw InvalidInput("exponential interaction needs a finite range gamma > 0");
  }
  if (shape == InteractionShape::custom) {
    if (custom_table.empty()) throw InvalidInput("custom interaction needs a non-empty table");
    for (double w : custom_table) {
      if (!std::isfinite(w)) throw InvalidInput("custom interaction table has a non-finite entry");
    }
  }
}

InteractionPotential::InteractionPotential(std::vector<double> table) : table_(std::move(table)) {}

double InteractionPotential::min() const {
  return table_.empty() ? 0.0 : *std::min_element(table_.begin(), table_.end());
}

double InteractionPotential::max() const {
  return table_.empty() ? 0.0 : *std::max_element(table_.begin(), table_.end());
}

double InteractionPotential::max_abs() const {
  double m = 0.0;
  for (double w : table_) m = std::max(m, std::abs(w));
  return m;
}

InteractionPotential build_potential(const HubbardParams& params, std::size_t length) {
  params.validate();
  std::vector<double> table(length, 0.0);
  if (length == 0) return InteractionPotential(std::move(table));
  switch (params.shape) {
    case InteractionShape::exponential:
      for (std::size_t s = 0; s < length; ++s) {
        table[s] = params.U * std::exp(-params.gamma * static_cast<double>(s));
      }
      break;
    case InteractionShape::onsite_only:
      break;
    case InteractionShape::custom:
      std::copy_n(params.custom_table.begin(), std::min(length, params.custom_table.size()),
                  table.begin());
      break;
  }
  // W(0) = U for every shape.
  table[0] = params.U;
  return InteractionPotential(std::move(table));
}

InteractionPotential build_potential(const HubbardParams& params, const LatticeSpec& lattice) {
  lattice.validate();
  return build_potential(params, static_cast<std::size_t>(lattice.n_sites));
}

TwoParticleState::TwoParticleState(int n_sites, double time)
    : n_(n_sites), amp_(static_cast<std::size_t>(n_sites) * static_cast<std::size_t>(n_sites)),
      time_(time) {
  if (n_sites <= 0) throw InvalidInput("state needs a positive grid size");
}

TwoParticleState::TwoParticleState(int n_sites, std::vector<cplx> amplitudes, double time)
    : n_(n_sites), amp_(std::move(amplitudes)), time_(time) {
  if (n_sites <= 0 ||
      amp_.size() != static_cast<std::size_t>(n_sites) * static_cast<std::size_t>(n_sites)) {
    throw InvalidInput("amplitude count does not match an n x n grid");
  }
}

double TwoParticleState::norm_squared() const {
  double s = 0.0;
  for (const cplx& a : amp_) s += std::norm(a);
  return s;
}

double TwoParticleState::norm() const { return std::sqrt(norm_squared()); }

void TwoParticleState::normalize() {
  const double nrm = norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw InvalidInput("cannot normalize a zero state");
  const double inv = 1.0 / nrm;
  for (cplx& a : amp_) a *= inv;
}

cplx inner_product(const TwoParticleState& a, const TwoParticleState& b) {
  if (a.n_sites() != b.n_sites()) throw InvalidInput("inner product of states on different grids");
  cplx s{0.0, 0.0};
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) s += std::conj(da[i]) * db[i];
  return s;
}

PairHamiltonian::PairHamiltonian(const HubbardParams& params, const InteractionPotential& potential,
                                 const LatticeSpec& lattice)
    : lattice_(lattice), n_(lattice.n_sites), J_(params.J) {
  lattice.validate();
  params.validate();
  diag_.resize(lattice.grid_size());
  for (int x = 0; x < n_; ++x) {
    for (int y = 0; y < n_; ++y) {
      diag_[static_cast<std::size_t>(x) * n_ + y] = potential(pair_separation(x, y, lattice));
    }
  }
}

template <class Emit>
void PairHamiltonian::stencil(std::span<const cplx> in, Emit&& emit) const {
  const std::size_t n = static_cast<std::size_t>(n_);
  const bool periodic = lattice_.boundary == Boundary::periodic;
  const cplx* base = in.data();
  for (std::size_t x = 0; x < n; ++x) {
    const cplx* row = base + x * n;
    const cplx* up = nullptr;
    const cplx* down = nullptr;
    if (x > 0) {
      up = row - n;
    } else if (periodic) {
      up = base + (n - 1) * n;
    }
    if (x + 1 < n) {
      down = row + n;
    } else if (periodic) {
      down = base;
    }
    const double* d = diag_.data() + x * n;
    for (std::size_t y = 0; y < n; ++y) {
      cplx hop{0.0, 0.0};
      if (up) hop += up[y];
      if (down) hop += down[y];
      if (y > 0) {
        hop += row[y - 1];
      } else if (periodic) {
        hop += row[n - 1];
      }
      if (y + 1 < n) {
        hop += row[y + 1];
      } else if (periodic) {
        hop += row[0];
      }
      emit(x * n + y, -J_ * hop + d[y] * row[y]);
    }
  }
}

void PairHamiltonian::apply(std::span<const cplx> in, std::span<cplx> out) const {
  if (in.size() != diag_.size() || out.size() != diag_.size()) {
    throw InvalidInput("state dimension does not match the Hamiltonian");
  }
  stencil(in, [&](std::size_t i, cplx h) { out[i] = h; });
}

void PairHamiltonian::apply_affine(std::span<const cplx> in, std::span<cplx> out, double alpha,
                                   double shift, double beta, std::span<const cplx> prev) const {
  if (in.size() != diag_.size() || out.size() != diag_.size() ||
      (beta != 0.0 && prev.size() != diag_.size())) {
    throw InvalidInput("state dimension does not match the Hamiltonian");
  }
  if (beta == 0.0) {
    stencil(in, [&](std::size_t i, cplx h) { out[i] = alpha * (h - shift * in[i]); });
  } else {
    stencil(in, [&](std::size_t i, cplx h) {
      out[i] = alpha * (h - shift * in[i]) + beta * prev[i];
    });
  }
}

TwoParticleState apply_hamiltonian(const TwoParticleState& state, const InteractionPotential& potential,
                                   const HubbardParams& params, const LatticeSpec& lattice) {
  if (state.n_sites() != lattice.n_sites) {
    throw InvalidInput("state grid " + std::to_string(state.n_sites()) + " does not match lattice " +
                       std::to_string(lattice.n_sites));
  }
  const PairHamiltonian h(params, potential, lattice);
  TwoParticleState out(lattice.n_sites, state.time());
  h.apply(state.data(), out.data());
  return out;
}

namespace {

double displacement(double site, double center, const LatticeSpec& lattice) {
  double d = site - center;
  if (lattice.boundary == Boundary::periodic) {
    const double n = lattice.n_sites;
    d = std::remainder(d, n);
  }
  return d;
}

}  // namespace

PreparedPacket gaussian_packet(const LatticeSpec& lattice, const PacketSpec& spec) {
  lattice.validate();
  const double n = lattice.n_sites;
  if (!(spec.x0 >= 0.0 && spec.x0 < n && spec.y0 >= 0.0 && spec.y0 < n)) {
    throw InvalidInput("packet center must lie on the lattice");
  }
  if (!(spec.width > 0.0) || !std::isfinite(spec.width)) {
    throw InvalidInput("packet width must be positive");
  }
  if (!std::isfinite(spec.px) || !std::isfinite(spec.py)) {
    throw InvalidInput("packet momenta must be finite");
  }
  const double w2 = spec.width * spec.width;
  TwoParticleState psi(lattice.n_sites);
  for (int x = 0; x < lattice.n_sites; ++x) {
    const double dx = displacement(x, spec.x0, lattice);
    for (int y = 0; y < lattice.n_sites; ++y) {
      const double dy = displacement(y, spec.y0, lattice);
      const double envelope = std::exp(-(dx * dx + dy * dy) / w2);
      psi(x, y) = std::polar(envelope, spec.px * x + spec.py * y);
    }
  }
  psi.normalize();
  if (spec.statistics == Statistics::bosonic) psi = symmetrize(psi);

  PreparedPacket out;
  out.edge_occupation = edge_occupation(psi, lattice);
  out.clipped = out.edge_occupation > 1e-8;
  out.state = std::move(psi);
  return out;
}

TwoParticleState symmetrize(const TwoParticleState& state) {
  const int n = state.n_sites();
  const double input_norm = state.norm();
  if (!(input_norm > 0.0)) throw InvalidInput("cannot symmetrize a zero state");
  TwoParticleState out(n, state.time());
  for (int x = 0; x < n; ++x) {
    for (int y = x; y < n; ++y) {
      const cplx s = state(x, y) + state(y, x);
      out(x, y) = s;
      out(y, x) = s;
    }
  }
  if (out.norm() <= 1e-12 * input_norm) {
    throw InvalidInput("state is antisymmetric under exchange; symmetric part vanishes");
  }
  out.normalize();
  return out;
}

int pair_separation(int x, int y, const LatticeSpec& lattice) {
  const int s = y - x;
  if (lattice.boundary == Boundary::open) return s;
  const int a = s < 0 ? -s : s;
  return std::min(a, lattice.n_sites - a);
}

std::pair<int, int> centered_pair(int n_sites, int d) {
  if (d < 0 || d >= n_sites) throw InvalidInput("separation must lie in [0, n_sites)");
  const int x0 = (n_sites - d) / 2;
  return {x0, x0 + d};
}

double edge_occupation(const TwoParticleState& state, const LatticeSpec& lattice, int margin) {
  if (lattice.boundary == Boundary::periodic) return 0.0;
  const int n = state.n_sites();
  auto near_edge = [&](int i) { return i < margin || i >= n - margin; };
  double s = 0.0;
  for (int x = 0; x < n; ++x) {
    const bool ex = near_edge(x);
    for (int y = 0; y < n; ++y) {
      if (ex || near_edge(y)) s += std::norm(state(x, y));
    }
  }
  return s;
}

}  // namespace h2p
