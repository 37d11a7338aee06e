#pragma once

// Two distinguishable (or bosonic) particles on an open or periodic chain of
// n sites. The pair amplitude psi(x, y) lives on an n x n grid and evolves
// under
//
//   (H psi)(x, y) = -J [psi(x-1, y) + psi(x+1, y) + psi(x, y-1) + psi(x, y+1)]
//                   + W(|y - x|) psi(x, y)
//
// On periodic chains |y - x| is the ring distance.
// Energies are in units of the hopping J, times in units of 1/J.

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "h2p/errors.hpp"

namespace h2p {

using cplx = std::complex<double>;

enum class Boundary { open, periodic };
enum class InteractionShape { exponential, onsite_only, custom };
enum class Statistics { distinguishable, bosonic };

struct LatticeSpec {
  int n_sites = 80;
  Boundary boundary = Boundary::open;

  /// Throws InvalidInput unless n_sites >= 4.
  void validate() const;
  [[nodiscard]] std::size_t grid_size() const {
    return static_cast<std::size_t>(n_sites) * static_cast<std::size_t>(n_sites);
  }
};

struct HubbardParams {
  double J = 1.0;
  double U = -6.0;
  double gamma = 1.0 / 12.0;
  InteractionShape shape = InteractionShape::exponential;
  Statistics statistics = Statistics::distinguishable;
  /// W(s) for s = 0, 1, ... when shape == custom; zero beyond the table.
  std::vector<double> custom_table;

  void validate() const;
};

/// Interaction energy as a function of the separation |y - x|.
class InteractionPotential {
 public:
  InteractionPotential() = default;
  explicit InteractionPotential(std::vector<double> table);

  /// W(|s|); separations beyond the table are zero.
  [[nodiscard]] double operator()(int s) const {
    const auto a = static_cast<std::size_t>(s < 0 ? -s : s);
    return a < table_.size() ? table_[a] : 0.0;
  }
  [[nodiscard]] std::span<const double> table() const { return table_; }
  [[nodiscard]] std::size_t size() const { return table_.size(); }
  [[nodiscard]] double min() const;
  [[nodiscard]] double max() const;
  [[nodiscard]] double max_abs() const;

 private:
  std::vector<double> table_;
};

/// Table of W(s) for s = 0..n_sites-1.
InteractionPotential build_potential(const HubbardParams& params, const LatticeSpec& lattice);

/// Table of W(s) for s = 0..length-1. Used by the relative-motion solver,
/// whose truncation is independent of any lattice.
InteractionPotential build_potential(const HubbardParams& params, std::size_t length);

/// Pair amplitude on an n x n grid, row-major in x: index = x * n + y.
class TwoParticleState {
 public:
  TwoParticleState() = default;
  explicit TwoParticleState(int n_sites, double time = 0.0);
  TwoParticleState(int n_sites, std::vector<cplx> amplitudes, double time = 0.0);

  [[nodiscard]] int n_sites() const { return n_; }
  [[nodiscard]] double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  [[nodiscard]] cplx& operator()(int x, int y) { return amp_[index(x, y)]; }
  [[nodiscard]] const cplx& operator()(int x, int y) const { return amp_[index(x, y)]; }

  [[nodiscard]] std::span<cplx> data() { return amp_; }
  [[nodiscard]] std::span<const cplx> data() const { return amp_; }
  [[nodiscard]] std::size_t size() const { return amp_.size(); }

  /// Sum of |psi|^2 in a fixed (row-major) summation order.
  [[nodiscard]] double norm_squared() const;
  [[nodiscard]] double norm() const;
  /// Scales to unit norm. Throws InvalidInput for the zero state.
  void normalize();

  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(y);
  }

 private:
  int n_ = 0;
  std::vector<cplx> amp_;
  double time_ = 0.0;
};

/// <a|b> with deterministic summation order.
cplx inner_product(const TwoParticleState& a, const TwoParticleState& b);

/// Matrix-free pair Hamiltonian. Precomputes W(|y-x|) on the grid so a single
/// application is a five-point stencil plus a diagonal multiply.
class PairHamiltonian {
 public:
  PairHamiltonian(const HubbardParams& params, const InteractionPotential& potential,
                  const LatticeSpec& lattice);

  /// out = H in. Buffers hold n*n amplitudes and must not alias.
  void apply(std::span<const cplx> in, std::span<cplx> out) const;

  /// out = alpha * (H - shift) in + beta * prev. The fused form is what a
  /// three-term polynomial recurrence needs; prev may alias out.
  void apply_affine(std::span<const cplx> in, std::span<cplx> out, double alpha, double shift,
                    double beta, std::span<const cplx> prev) const;

  [[nodiscard]] int n_sites() const { return n_; }
  [[nodiscard]] std::size_t dimension() const { return diag_.size(); }
  [[nodiscard]] const LatticeSpec& lattice() const { return lattice_; }
  [[nodiscard]] double hopping() const { return J_; }
  /// Diagonal W(|y-x|), row-major in x.
  [[nodiscard]] std::span<const double> diagonal() const { return diag_; }

 private:
  template <class Emit>
  void stencil(std::span<const cplx> in, Emit&& emit) const;

  LatticeSpec lattice_;
  int n_ = 0;
  double J_ = 1.0;
  std::vector<double> diag_;
};

/// Unnormalized image H psi.
TwoParticleState apply_hamiltonian(const TwoParticleState& state, const InteractionPotential& potential,
                                   const HubbardParams& params, const LatticeSpec& lattice);

struct PacketSpec {
  double x0 = 35.0;
  double y0 = 45.0;
  double width = 6.0;
  double px = 0.0;
  double py = 0.0;
  Statistics statistics = Statistics::distinguishable;
};

struct PreparedPacket {
  TwoParticleState state;
  /// Probability within two sites of an open edge at t = 0.
  double edge_occupation = 0.0;
  /// Set when edge_occupation exceeds 1e-8: the envelope is cut by the boundary.
  bool clipped = false;
};

/// Normalized psi ~ exp[-(x-x0)^2/w^2 - (y-y0)^2/w^2] exp[i(px x + py y)],
/// symmetrized under x <-> y for bosons. On periodic lattices the envelope
/// uses minimum-image distances.
PreparedPacket gaussian_packet(const LatticeSpec& lattice, const PacketSpec& spec);

/// [psi(x,y) + psi(y,x)] normalized. Throws InvalidInput when the
/// symmetric part vanishes (antisymmetric input).
TwoParticleState symmetrize(const TwoParticleState& state);

/// Separation entering W: y - x on open chains, the shorter way round the
/// ring on periodic ones (so diagonal translations remain a symmetry).
int pair_separation(int x, int y, const LatticeSpec& lattice);

/// Default pair placement for separation d: centered, x0 = floor((n-d)/2), y0 = x0 + d.
std::pair<int, int> centered_pair(int n_sites, int d);

/// Probability within `margin` sites of any open edge; zero for periodic lattices.
double edge_occupation(const TwoParticleState& state, const LatticeSpec& lattice, int margin = 2);

}  // namespace h2p
