#pragma once

// Shared helpers for the unit tests: seeded random states and a dense pair
// Hamiltonian assembled element by element, independent of the stencil code.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "h2p/model.hpp"

namespace h2p::test {

inline TwoParticleState random_state(int n, std::uint64_t seed, bool normalized = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  TwoParticleState s(n);
  for (auto& a : s.data()) a = {g(rng), g(rng)};
  if (normalized) s.normalize();
  return s;
}

inline Eigen::VectorXcd to_eigen(const TwoParticleState& s) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) v(static_cast<Eigen::Index>(i)) = s.data()[i];
  return v;
}

inline double distance(const TwoParticleState& a, const TwoParticleState& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::norm(a.data()[i] - b.data()[i]);
  return std::sqrt(d);
}

/// <x',y'|H|x,y> for every pair of grid points.
template <class W>
Eigen::MatrixXcd dense_pair_hamiltonian(int n, double J, W&& w, bool periodic) {
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * n;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  auto idx = [n](int x, int y) { return static_cast<Eigen::Index>(x) * n + y; };
  auto neighbours = [&](int a, int b) {
    const int d = std::abs(a - b);
    return d == 1 || (periodic && d == n - 1);
  };
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int xp = 0; xp < n; ++xp)
        for (int yp = 0; yp < n; ++yp) {
          double v = 0.0;
          if (x == xp && y == yp) {
            const int s = std::abs(y - x);
            v += w(periodic ? std::min(s, n - s) : s);
          }
          if (y == yp && neighbours(x, xp)) v -= J;
          if (x == xp && neighbours(y, yp)) v -= J;
          if (v != 0.0) h(idx(xp, yp), idx(x, y)) = v;
        }
  return h;
}

inline double exponential_w(double U, double gamma, int s) { return U * std::exp(-gamma * s); }

}  // namespace h2p::test
