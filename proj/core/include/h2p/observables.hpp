#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <vector>

#include "h2p/model.hpp"

namespace h2p {

/// Single-particle occupations P_up(x) = sum_y |psi|^2, P_down(y) = sum_x |psi|^2.
struct MarginalDistribution {
  std::vector<double> up;
  std::vector<double> down;
};

MarginalDistribution marginals(const TwoParticleState& state);

struct MeanPositions {
  double x = 0.0;
  double y = 0.0;
};

/// First moments of the marginals, divided by the norm squared.
MeanPositions mean_positions(const TwoParticleState& state);

struct Velocities {
  double vx = 0.0;
  double vy = 0.0;
};

/// 2J<sin p> from the nearest-neighbour current,
/// v_x = 2J Im sum conj(psi(x, y)) psi(x+1, y); bonds across a periodic seam
/// are included, bonds off an open edge are not.
Velocities velocity_expectations(const TwoParticleState& state, double J,
                                 Boundary boundary = Boundary::open);

/// Probability on the momentum grid p_k = 2 pi k / n - pi, k = 0..n-1,
/// treating the grid as periodic. Index kx * n + ky.
struct MomentumDistribution {
  int n_sites = 0;
  std::vector<double> probability;

  [[nodiscard]] double momentum(int k) const;
  [[nodiscard]] double at(int kx, int ky) const {
    return probability[static_cast<std::size_t>(kx) * static_cast<std::size_t>(n_sites) +
                       static_cast<std::size_t>(ky)];
  }
};

MomentumDistribution momentum_distribution(const TwoParticleState& state);

/// <psi|T|psi> with (T psi)(x, y) = psi(x-1, y-1), indices mod n. Conserved
/// on periodic lattices since T commutes with the pair Hamiltonian.
cplx diagonal_translation_expectation(const TwoParticleState& state);

/// Re <psi|H|psi>.
double energy_expectation(const TwoParticleState& state, const PairHamiltonian& hamiltonian);

struct ObservableSample {
  double t = 0.0;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double separation = 0.0;  ///< mean_y - mean_x
  double com = 0.0;         ///< (mean_x + mean_y) / 2
  double vx = 0.0;
  double vy = 0.0;
  double norm = 0.0;
  double energy = 0.0;
  double edge_leakage = 0.0;
};

using ObservableSeries = std::vector<ObservableSample>;

ObservableSample measure(const TwoParticleState& state, const PairHamiltonian& hamiltonian);

/// Header `t,mean_x,mean_y,sep,com,vx,vy,norm,energy,edge_leak`, values in %.17g.
void write_series_csv(std::ostream& os, std::span<const ObservableSample> series);
/// Parses the format written by write_series_csv; throws InvalidInput.
ObservableSeries read_series_csv(std::istream& is);

struct EhrenfestResiduals {
  double x = 0.0;  ///< max |d<x>/dt - v_x| over interior samples
  double y = 0.0;
  std::size_t samples = 0;
};

/// Central differences of the mean positions against the measured
/// velocities. Requires uniform sampling with dt <= max_dt.
EhrenfestResiduals ehrenfest_check(std::span<const ObservableSample> series, double max_dt = 0.01);

}  // namespace h2p
