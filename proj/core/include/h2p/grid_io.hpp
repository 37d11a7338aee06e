#pragma once

// Binary grid dump:
//   bytes 0..3   magic "H2PG"
//   u32          n_sites (little-endian)
//   f64          time (little-endian)
//   n_sites^2 x  (f64 re, f64 im), row-major in x

#include <filesystem>
#include <iosfwd>

#include "h2p/model.hpp"

namespace h2p {

void write_grid(std::ostream& os, const TwoParticleState& state);
void write_grid(const std::filesystem::path& path, const TwoParticleState& state);

/// Throws InvalidInput on a bad magic, a truncated payload, or an I/O failure.
TwoParticleState read_grid(std::istream& is);
TwoParticleState read_grid(const std::filesystem::path& path);

}  // namespace h2p
