#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "h2p/dynamics.hpp"
#include "h2p/observables.hpp"
#include "support.hpp"

using namespace h2p;
using h2p::test::distance;
using h2p::test::random_state;

namespace {

// exp(-iHt) psi from a dense eigendecomposition built in the test.
TwoParticleState dense_oracle(const TwoParticleState& psi, const HubbardParams& p, bool periodic, double t) {
  const int n = psi.n_sites();
  const Eigen::MatrixXcd h = h2p::test::dense_pair_hamiltonian(
      n, p.J, [&](int s) { return h2p::test::exponential_w(p.U, p.gamma, s); }, periodic);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const Eigen::VectorXcd c = es.eigenvectors().adjoint() * h2p::test::to_eigen(psi);
  Eigen::VectorXcd phased(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) phased(i) = std::exp(cplx(0.0, -es.eigenvalues()(i) * t)) * c(i);
  const Eigen::VectorXcd out = es.eigenvectors() * phased;
  std::vector<cplx> amp(out.data(), out.data() + out.size());
  return TwoParticleState(n, std::move(amp), t);
}

TwoParticleState gauge_conj(TwoParticleState s) {
  for (int x = 0; x < s.n_sites(); ++x)
    for (int y = 0; y < s.n_sites(); ++y) s(x, y) = ((x + y) % 2 ? -1.0 : 1.0) * std::conj(s(x, y));
  return s;
}

}  // namespace

TEST_CASE("spectral bounds bracket") {
  HubbardParams p;
  const LatticeSpec l{20};
  auto b = estimate_spectral_bounds(p, build_potential(p, l), l);
  CHECK(b.contains(-10.0, 10.0));
  CHECK(b.lower == doctest::Approx(-10.0 - 0.05 * 20.0));

  p.U = 0.0;
  b = estimate_spectral_bounds(p, build_potential(p, l), l);
  CHECK(b.contains(-4.0, 4.0));

  HubbardParams frozen;
  frozen.J = 0.0;
  const auto w = build_potential(frozen, l);
  b = estimate_spectral_bounds(frozen, w, l);
  const double span = w.max() - w.min();
  CHECK(b.lower == doctest::Approx(w.min() - 0.05 * span));
  CHECK(b.upper == doctest::Approx(w.max() + 0.05 * span));
}

TEST_CASE("dense eigenvalues lie inside the bracket") {
  const HubbardParams p;
  for (Boundary bc : {Boundary::open, Boundary::periodic}) {
    const LatticeSpec l{8, bc};
    const auto w = build_potential(p, l);
    const auto b = estimate_spectral_bounds(p, w, l);
    const auto ev = DensePropagator(p, w, l).eigenvalues();
    CHECK(b.contains(ev.front(), ev.back()));
  }
}

TEST_CASE("polynomial propagator matches an independent dense oracle") {
  const HubbardParams p;
  for (Boundary bc : {Boundary::open, Boundary::periodic}) {
    const LatticeSpec l{8, bc};
    const auto psi = random_state(8, 2024);
    const auto w = build_potential(p, l);
    const auto cheb = propagate(psi, p, w, l, 1.0);
    const auto oracle = dense_oracle(psi, p, bc == Boundary::periodic, 1.0);
    CHECK(distance(cheb, oracle) <= 1e-9);

    PropagatorConfig dense_cfg;
    dense_cfg.method = PropagationMethod::dense_oracle;
    const auto lib_dense = propagate(psi, p, w, l, 1.0, dense_cfg);
    CHECK(distance(lib_dense, oracle) <= 1e-10);
  }
}

TEST_CASE("long intervals are split under the expansion argument cap") {
  const HubbardParams p;
  const LatticeSpec l{6};
  const auto w = build_potential(p, l);
  const auto psi = random_state(6, 8);
  const auto cheb = propagate(psi, p, w, l, 25.0);
  CHECK(distance(cheb, dense_oracle(psi, p, false, 25.0)) <= 1e-9 * 25.0);
}

TEST_CASE("J = 0 evolves by pure phases") {
  HubbardParams p;
  p.J = 0.0;
  const LatticeSpec l{10};
  const auto w = build_potential(p, l);
  const auto psi = random_state(10, 3);
  const double t = 3.7;
  const auto out = propagate(psi, p, w, l, t);
  double err = 0.0;
  for (int x = 0; x < 10; ++x)
    for (int y = 0; y < 10; ++y) err = std::max(err, std::abs(out(x, y) - std::exp(cplx(0, -w(y - x) * t)) * psi(x, y)));
  CHECK(err < 1e-12);
}

TEST_CASE("plane wave on a free periodic lattice picks up the band phase") {
  HubbardParams p;
  p.U = 0.0;
  const int n = 12;
  const LatticeSpec l{n, Boundary::periodic};
  const double px = 2 * std::numbers::pi * 3 / n, py = 2 * std::numbers::pi * 7 / n;
  TwoParticleState psi(n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) psi(x, y) = std::exp(cplx(0, px * x + py * y)) / static_cast<double>(n);
  const double t = 2.3;
  const auto out = propagate(psi, p, build_potential(p, l), l, t);
  const cplx phase = std::exp(cplx(0, 2.0 * (std::cos(px) + std::cos(py)) * t));
  double err = 0.0, occ = 0.0;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      err = std::max(err, std::abs(out(x, y) - phase * psi(x, y)));
      occ = std::max(occ, std::abs(std::norm(out(x, y)) - std::norm(psi(x, y))));
    }
  CHECK(err < 1e-10);
  CHECK(occ < 1e-10);
}

TEST_CASE("property: norm and energy conservation") {
  const HubbardParams p;
  const LatticeSpec l{16};
  const auto w = build_potential(p, l);
  const auto psi = random_state(16, 5);
  PropagatorConfig cfg;
  cfg.dt_out = 0.25;
  const auto rec = evolve(psi, p, w, l, cfg, 10.0);
  REQUIRE(rec.observables.size() == 41);
  const double span = rec.bounds.span();
  for (const auto& s : rec.observables) {
    CHECK(std::abs(s.norm - 1.0) <= 1e-10);
    CHECK(std::abs(s.energy - rec.observables.front().energy) <= 1e-8 * span);
  }
}

TEST_CASE("property: time composition") {
  const HubbardParams p;
  const LatticeSpec l{10};
  const auto w = build_potential(p, l);
  for (auto [t1, t2] : {std::pair{0.3, 1.9}, {2.5, 2.5}, {0.01, 4.0}}) {
    const auto psi = random_state(10, 31);
    const auto a = propagate(propagate(psi, p, w, l, t1), p, w, l, t2);
    const auto b = propagate(psi, p, w, l, t1 + t2);
    CHECK(distance(a, b) <= 2 * 1e-10 * (t1 + t2));
  }
}

TEST_CASE("property: attractive and repulsive dynamics share occupations") {
  HubbardParams attractive;
  HubbardParams repulsive = attractive;
  repulsive.U = -attractive.U;
  const LatticeSpec l{12};
  PacketSpec spec{4.0, 7.0, 2.0, 0.4, 1.9};
  const auto psi = gaussian_packet(l, spec).state;
  const auto a = propagate(psi, attractive, build_potential(attractive, l), l, 4.0);
  const auto b = propagate(gauge_conj(psi), repulsive, build_potential(repulsive, l), l, 4.0);
  double err = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(std::norm(a.data()[i]) - std::norm(b.data()[i])));
  CHECK(err <= 1e-9);
}

TEST_CASE("property: diagonal translation is conserved on a ring") {
  const HubbardParams p;
  const LatticeSpec l{14, Boundary::periodic};
  const auto psi = gaussian_packet(l, PacketSpec{3.0, 9.0, 2.5, 0.7, -1.2}).state;
  const cplx t0 = diagonal_translation_expectation(psi);
  PropagatorConfig cfg;
  cfg.dt_out = 0.5;
  double worst = 0.0;
  evolve(psi, p, build_potential(p, l), l, cfg, 8.0, [&](const TwoParticleState& s, const ObservableSample&) {
    worst = std::max(worst, std::abs(diagonal_translation_expectation(s) - t0));
  });
  CHECK(worst <= 1e-9);
}

TEST_CASE("evolve: sampling grid, snapshots, callback") {
  const HubbardParams p;
  const LatticeSpec l{10};
  const auto psi = random_state(10, 1);
  PropagatorConfig cfg;
  cfg.dt_out = 0.3;
  cfg.snapshot_times = {0.0, 0.6, 1.0};
  int calls = 0;
  const auto rec = evolve(psi, p, build_potential(p, l), l, cfg, 1.0,
                          [&](const TwoParticleState&, const ObservableSample&) { ++calls; });
  REQUIRE(rec.times.size() == 5);
  CHECK(rec.times.front() == 0.0);
  CHECK(rec.times.back() == 1.0);
  CHECK(rec.times[2] == doctest::Approx(0.6));
  for (std::size_t i = 1; i < rec.times.size(); ++i) CHECK(rec.times[i] > rec.times[i - 1]);
  CHECK(calls == 5);
  REQUIRE(rec.snapshots.size() == 3);
  CHECK(rec.snapshots[1].time() == doctest::Approx(0.6));
  CHECK(rec.snapshots[2].time() == 1.0);
  CHECK(distance(rec.snapshots[0], psi) == 0.0);
  CHECK(distance(rec.final_state, rec.snapshots[2]) == 0.0);
}

TEST_CASE("evolve: leakage flag is sticky") {
  HubbardParams p;
  p.U = 0.0;
  const LatticeSpec l{20};
  // Both particles launched toward the far edge at full speed.
  const auto psi = gaussian_packet(l, PacketSpec{10.0, 10.0, 2.0, std::numbers::pi / 2, std::numbers::pi / 2}).state;
  PropagatorConfig cfg;
  cfg.dt_out = 0.2;
  const auto rec = evolve(psi, p, build_potential(p, l), l, cfg, 8.0);
  REQUIRE(rec.contamination_onset.has_value());
  bool seen = false;
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    if (rec.edge_leakage[i] > 1e-4) seen = true;
    CHECK(rec.contaminated[i] == seen);
    if (rec.contaminated[i] && (i == 0 || !rec.contaminated[i - 1])) CHECK(rec.times[i] == *rec.contamination_onset);
  }
  CHECK(rec.contaminated.back());
}

TEST_CASE("evolve: error paths") {
  const HubbardParams p;
  const LatticeSpec l{8};
  const auto w = build_potential(p, l);
  auto psi = random_state(8, 1);
  CHECK_THROWS_AS(evolve(psi, p, w, l, {}, 0.0), InvalidInput);
  CHECK_THROWS_AS(evolve(psi, p, w, l, {}, -1.0), InvalidInput);
  CHECK_THROWS_AS(evolve(random_state(8, 1, false), p, w, l, {}, 1.0), InvalidInput);
  CHECK_THROWS_AS(evolve(random_state(9, 1), p, w, l, {}, 1.0), InvalidInput);

  PropagatorConfig narrow;
  narrow.bounds = SpectralBounds{-1.0, 1.0};
  CHECK_THROWS_AS(evolve(psi, p, w, l, narrow, 2.0), NumericalError);

  const LatticeSpec big{13};
  CHECK_THROWS_AS(DensePropagator(p, build_potential(p, big), big), InvalidInput);
}

TEST_CASE("Chebyshev order grows with the interval") {
  const HubbardParams p;
  const LatticeSpec l{8};
  const PairHamiltonian h(p, build_potential(p, l), l);
  ChebyshevPropagator prop(h, estimate_spectral_bounds(p, build_potential(p, l), l));
  CHECK(prop.order(0.1) < prop.order(1.0));
  CHECK(prop.order(1.0) < prop.order(3.0));
  CHECK(prop.order(1.0) > 1.0 * 11.0);
}
