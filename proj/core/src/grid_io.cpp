#include "h2p/grid_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace h2p {
namespace {

constexpr std::array<char, 4> kMagic{'H', '2', 'P', 'G'};

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  auto bits = std::bit_cast<U>(value);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>(bits & 0xffu);
    bits >>= 8;
  }
  os.write(bytes.data(), bytes.size());
}

template <class T>
T get_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw InvalidInput("grid dump truncated");
  }
  U bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) bits = (bits << 8) | bytes[i];
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_grid(std::ostream& os, const TwoParticleState& state) {
  os.write(kMagic.data(), kMagic.size());
  put_le(os, static_cast<std::uint32_t>(state.n_sites()));
  put_le(os, state.time());
  for (const cplx& a : state.data()) {
    put_le(os, a.real());
    put_le(os, a.imag());
  }
  if (!os) throw InvalidInput("failed writing grid dump");
}

void write_grid(const std::filesystem::path& path, const TwoParticleState& state) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput("cannot open " + path.string() + " for writing");
  write_grid(os, state);
}

TwoParticleState read_grid(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw InvalidInput("not a grid dump (bad magic)");
  }
  const auto n = get_le<std::uint32_t>(is);
  const double time = get_le<double>(is);
  if (n == 0 || n > 65535) throw InvalidInput("grid dump has an implausible size");
  std::vector<cplx> amps(static_cast<std::size_t>(n) * n);
  for (cplx& a : amps) {
    const double re = get_le<double>(is);
    const double im = get_le<double>(is);
    a = {re, im};
  }
  return TwoParticleState(static_cast<int>(n), std::move(amps), time);
}

TwoParticleState read_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open " + path.string());
  return read_grid(is);
}

}  // namespace h2p
