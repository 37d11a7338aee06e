#include <numbers>
#include <vector>

#include <benchmark/benchmark.h>

#include "h2p/dynamics.hpp"
#include "h2p/model.hpp"
#include "h2p/spectral.hpp"

using namespace h2p;

namespace {

LatticeSpec lattice_of(int n) {
  LatticeSpec l;
  l.n_sites = n;
  return l;
}

TwoParticleState packet(const LatticeSpec& lattice) {
  PacketSpec spec;
  spec.x0 = lattice.n_sites / 2 - 5;
  spec.y0 = lattice.n_sites / 2 + 5;
  spec.width = 6.0;
  spec.py = std::numbers::pi;
  return gaussian_packet(lattice, spec).state;
}

void BM_ApplyHamiltonian(benchmark::State& st) {
  const HubbardParams p;
  const auto lattice = lattice_of(static_cast<int>(st.range(0)));
  const auto pot = build_potential(p, lattice);
  const PairHamiltonian h(p, pot, lattice);
  const auto psi = packet(lattice);
  std::vector<cplx> out(psi.size());
  for (auto _ : st) {
    h.apply(psi.data(), out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(psi.size()));
}
BENCHMARK(BM_ApplyHamiltonian)->Arg(40)->Arg(80)->Arg(160);

void BM_ChebyshevStep(benchmark::State& st) {
  const HubbardParams p;
  const auto lattice = lattice_of(80);
  const auto pot = build_potential(p, lattice);
  const PairHamiltonian h(p, pot, lattice);
  ChebyshevPropagator prop(h, estimate_spectral_bounds(p, pot, lattice));
  auto psi = packet(lattice);
  for (auto _ : st) {
    prop.advance(psi, 0.1);
    benchmark::DoNotOptimize(psi.data().data());
  }
}
BENCHMARK(BM_ChebyshevStep)->Unit(benchmark::kMicrosecond);

void BM_BoundStatesConverged(benchmark::State& st) {
  const HubbardParams p;
  for (auto _ : st) {
    auto r = solve_bound_states_converged(p, 0.0);
    benchmark::DoNotOptimize(r.states.data());
  }
}
BENCHMARK(BM_BoundStatesConverged)->Unit(benchmark::kMillisecond);

void BM_BandSweep(benchmark::State& st) {
  const HubbardParams p;
  const auto grid = uniform_k_grid(9);
  for (auto _ : st) {
    auto rows = doublon_band_sweep(p, grid);
    benchmark::DoNotOptimize(rows.data());
  }
}
BENCHMARK(BM_BandSweep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
