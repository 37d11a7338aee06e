#pragma once

// Relative-motion problem at fixed total quasi-momentum K. Writing
// psi(x, y) = f(y - x) exp[iK(x + y)/2] reduces the pair Hamiltonian to a
// single chain in s = y - x:
//
//   t_K [f(s+1) + f(s-1)] + W(|s|) f(s) = E f(s),   t_K = -2J cos(K/2)
//
// whose continuum fills |E| <= 4J|cos(K/2)|. Eigenvalues outside it are
// doublons (bound pairs). The chain is truncated to s in [-S, S] with hard
// walls and split into its even and odd sectors, each an irreducible Jacobi
// matrix solved by Sturm bisection plus inverse iteration.

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "h2p/errors.hpp"
#include "h2p/model.hpp"

namespace h2p {

/// Truncated relative chain does not hold a bound state: its edge amplitude
/// exceeds the tolerance. Enlarge the half-width.
class TruncationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

enum class Parity { symmetric, antisymmetric };

const char* to_string(Parity p);

/// -2J cos(K/2), set to exactly zero when |cos(K/2)| < 1e-14 (K = +-pi).
double effective_hopping(double J, double K);
/// Half-width of the scattering band, 4J|cos(K/2)|.
double continuum_edge(double J, double K);
/// max(100, ceil(12/gamma)) for the exponential shape, 100 otherwise.
int default_half_width(const HubbardParams& params);

struct RelativeProblem {
  double K = 0.0;
  int half_width = 100;
  InteractionPotential potential;  ///< must cover s = 0..half_width
  double J = 1.0;

  /// Throws InvalidInput for |K| > pi, S < 1, a short potential table, or
  /// an exponential tail that has not decayed to e^-10 at s = S.
  void validate(const HubbardParams* params = nullptr) const;
};

RelativeProblem make_relative_problem(const HubbardParams& params, double K,
                                      std::optional<int> half_width = std::nullopt);

/// Real symmetric tridiagonal operator.
struct Tridiagonal {
  std::vector<double> diagonal;
  std::vector<double> off_diagonal;  ///< size() - 1 entries

  [[nodiscard]] std::size_t size() const { return diagonal.size(); }
  /// Number of eigenvalues strictly below e (Sturm sequence count).
  [[nodiscard]] std::size_t count_below(double e) const;
  /// Eigenvalue with ascending index k, by bisection to machine precision.
  [[nodiscard]] double eigenvalue(std::size_t k) const;
  /// Unit eigenvector for an (accurate) eigenvalue, by inverse iteration.
  [[nodiscard]] std::vector<double> eigenvector(double eigenvalue) const;
  void apply(std::span<const double> in, std::span<double> out) const;
};

/// Full chain over s = -S..S (index s + S): diagonal W(|s|), off-diagonal t_K.
Tridiagonal relative_hamiltonian(const RelativeProblem& problem);

struct BoundState {
  double energy = 0.0;
  /// f(s) for s = -S..S, unit norm.
  std::vector<double> wavefunction;
  Parity parity = Parity::symmetric;
  double K = 0.0;
  int half_width = 0;
  /// ||H f - E f|| on the truncated chain.
  double residual = 0.0;

  [[nodiscard]] double at(int s) const {
    return wavefunction[static_cast<std::size_t>(s + half_width)];
  }
  [[nodiscard]] double edge_amplitude() const;
};

struct BoundStateOptions {
  double band_margin = 1e-8;     ///< |E| must exceed 4J|cos(K/2)| by this much
  double edge_tolerance = 1e-8;  ///< max |f(+-S)| for a converged state
  double residual_tolerance = 1e-9;
};

/// Eigenpairs of the truncated chain outside the continuum, ascending in
/// energy. Throws TruncationError when any of them touches the walls.
std::vector<BoundState> solve_bound_states(const RelativeProblem& problem,
                                           const BoundStateOptions& options = {});

/// Number of eigenvalues of the truncated chain inside the continuum window
/// [-4J|cos(K/2)| - margin, 4J|cos(K/2)| + margin].
std::size_t count_continuum_levels(const RelativeProblem& problem,
                                   const BoundStateOptions& options = {});

struct ConvergenceOptions {
  BoundStateOptions bound;
  int max_half_width = 1 << 16;
  double energy_tolerance = 1e-10;  ///< max energy shift when S doubles
};

struct ConvergedBoundStates {
  int half_width = 0;  ///< truncation the states were computed at
  std::vector<BoundState> states;
  /// Largest |E(S) - E(2S)| of the certifying comparison.
  double max_energy_shift = 0.0;
};

/// Starts from default_half_width and doubles S until every bound state is
/// contained in the box and the spectrum at 2S reproduces it (same count,
/// energy shifts below energy_tolerance).
ConvergedBoundStates solve_bound_states_converged(const HubbardParams& params, double K,
                                                  const ConvergenceOptions& options = {});

struct BandRow {
  double K = 0.0;
  int branch = 0;  ///< energy order at this K, starting at 0
  double energy = 0.0;
  Parity parity = Parity::symmetric;
};

/// n points evenly spaced on [-pi, pi], endpoints included.
std::vector<double> uniform_k_grid(int points);

/// Converged bound-state energies at each K. K points are processed in
/// parallel (see worker_count) and rows come back ordered by K then branch.
std::vector<BandRow> doublon_band_sweep(const HubbardParams& params, std::span<const double> k_grid,
                                        const ConvergenceOptions& options = {});

/// CSV with header `K,branch,E_over_J,parity`.
void write_band_csv(std::ostream& os, std::span<const BandRow> rows);

struct ScatteringSolution {
  double K = 0.0;
  double q = 0.0;
  double energy = 0.0;  ///< -4J cos(K/2) cos q
  /// Even sector: f(s) ~ cos(q|s| + delta_s).
  double delta_s = 0.0;
  /// Odd sector: f(s) ~ sgn(s) sin(q|s| + delta_a), so free motion gives 0.
  double delta_a = 0.0;
  double fit_residual_s = 0.0;  ///< rms tail misfit relative to the amplitude
  double fit_residual_a = 0.0;
  int window_begin = 0;
  int window_end = 0;
};

struct ScatteringOptions {
  double potential_floor = 1e-12;  ///< |W| bound on the fit window
  int window_length = 400;
  double fit_tolerance = 1e-8;
};

/// Integrates the chain recurrence outward from s = 0 at E(K, q) with even
/// and odd initial data and fits a cos(qs) + b sin(qs) on the far tail.
/// Phase shifts are reduced to (-pi/2, pi/2].
ScatteringSolution scattering_phase_shift(const RelativeProblem& problem, double q,
                                          const ScatteringOptions& options = {});

/// Same, with a half-width chosen so the fit window lies beyond the point
/// where |W| drops under the floor.
ScatteringSolution scattering_phase_shift(const HubbardParams& params, double K, double q,
                                          const ScatteringOptions& options = {});

/// Reduces an angle modulo pi into (-pi/2, pi/2].
double reduce_phase(double delta);

}  // namespace h2p
