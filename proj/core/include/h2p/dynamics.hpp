#pragma once

// Time evolution psi(t) = exp(-iHt) psi(0) by Chebyshev expansion of the
// propagator on the rescaled operator (H - c)/h, whose spectrum lies in
// [-1, 1]. Coefficients are 2(-i)^k J_k(h dt); the series is cut once the
// Bessel tail falls below double precision, so the only error left is
// rounding. A dense eigendecomposition path exists for small grids and is
// used as the reference in tests.

#include <functional>
#include <memory>
#include <span>
#include <optional>
#include <vector>

#include "h2p/model.hpp"
#include "h2p/observables.hpp"

namespace h2p {

struct SpectralBounds {
  double lower = -1.0;
  double upper = 1.0;

  [[nodiscard]] double span() const { return upper - lower; }
  [[nodiscard]] bool contains(double lo, double hi) const { return lower <= lo && hi <= upper; }
};

/// +-(4J + max|W|) widened by `margin` of the span; [min W, max W] widened
/// the same way when J = 0.
SpectralBounds estimate_spectral_bounds(const HubbardParams& params, const InteractionPotential& potential,
                                        const LatticeSpec& lattice, double margin = 0.05);

enum class PropagationMethod { polynomial_expansion, dense_oracle };

struct PropagatorConfig {
  double dt_out = 0.1;
  double tolerance = 1e-10;  ///< per unit time
  std::optional<SpectralBounds> bounds;
  PropagationMethod method = PropagationMethod::polynomial_expansion;
  /// Largest h * dt handed to one expansion; longer intervals are split.
  double max_expansion_argument = 40.0;
  std::vector<double> snapshot_times;
  /// Edge occupation that marks a sample (and all later ones) as contaminated.
  double leakage_threshold = 1e-4;
  /// |norm - 1| beyond which the run is aborted as a bracket violation.
  double norm_guard = 1e-8;
};

class ChebyshevPropagator {
 public:
  ChebyshevPropagator(const PairHamiltonian& hamiltonian, SpectralBounds bounds, double tolerance = 1e-10);

  /// psi <- exp(-iH dt) psi. dt may be split to respect max_argument.
  void advance(TwoParticleState& state, double dt);
  /// Number of Chebyshev terms used for a single expansion over dt.
  [[nodiscard]] int order(double dt) const;

  double max_argument = 40.0;

 private:
  struct Coefficients {
    double dt = -1.0;
    std::vector<cplx> c;
    cplx phase;
  };
  void expand(std::span<cplx> psi, const Coefficients& coeffs);
  const Coefficients& coefficients(double dt);
  [[nodiscard]] double term_floor(double dt) const;

  const PairHamiltonian& h_;
  SpectralBounds bounds_;
  double tolerance_;
  double center_;
  double half_span_;
  Coefficients cache_;
  std::vector<cplx> prev_, curr_, acc_;
};

/// Full diagonalization of the dense pair Hamiltonian; grids up to 12 x 12.
class DensePropagator {
 public:
  DensePropagator(const HubbardParams& params, const InteractionPotential& potential,
                  const LatticeSpec& lattice);
  ~DensePropagator();
  DensePropagator(DensePropagator&&) noexcept;
  DensePropagator& operator=(DensePropagator&&) noexcept;

  void advance(TwoParticleState& state, double dt) const;
  [[nodiscard]] std::vector<double> eigenvalues() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct EvolutionRecord {
  std::vector<double> times;
  ObservableSeries observables;
  std::vector<double> edge_leakage;
  /// Sticky flag: true from the first sample whose leakage exceeds the threshold.
  std::vector<bool> contaminated;
  std::optional<double> contamination_onset;
  std::vector<TwoParticleState> snapshots;
  TwoParticleState final_state;
  SpectralBounds bounds;
};

using SampleCallback = std::function<void(const TwoParticleState&, const ObservableSample&)>;

/// Samples at t = 0, dt_out, 2 dt_out, ..., t_final (the last interval may
/// be shorter). Throws InvalidInput for an unnormalized initial state or
/// t_final <= 0 and NumericalError when the norm guard trips.
EvolutionRecord evolve(const TwoParticleState& initial, const HubbardParams& params,
                       const InteractionPotential& potential, const LatticeSpec& lattice,
                       const PropagatorConfig& config, double t_final, const SampleCallback& on_sample = {});

/// exp(-iHt) psi without bookkeeping.
TwoParticleState propagate(const TwoParticleState& initial, const HubbardParams& params,
                           const InteractionPotential& potential, const LatticeSpec& lattice, double t,
                           const PropagatorConfig& config = {});

}  // namespace h2p
