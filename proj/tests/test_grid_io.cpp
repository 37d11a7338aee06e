#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "h2p/grid_io.hpp"
#include "support.hpp"

using namespace h2p;

TEST_CASE("grid dump round trip is bit exact") {
  for (int n : {1, 4, 13}) {
    auto s = h2p::test::random_state(n, 100 + n);
    s.set_time(3.14159);
    std::stringstream buf;
    write_grid(buf, s);
    CHECK(buf.str().size() == 4 + 4 + 8 + 16 * static_cast<std::size_t>(n) * n);
    const auto back = read_grid(buf);
    CHECK(back.n_sites() == n);
    CHECK(back.time() == s.time());
    CHECK(std::memcmp(back.data().data(), s.data().data(), s.size() * sizeof(cplx)) == 0);
  }
}

TEST_CASE("grid dump header layout") {
  TwoParticleState s(2, 1.5);
  s(1, 0) = {0.25, -0.5};
  std::stringstream buf;
  write_grid(buf, s);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "H2PG");
  CHECK(static_cast<unsigned char>(bytes[4]) == 2);
  CHECK(bytes[5] == 0);
  double t = 0.0;
  std::memcpy(&t, bytes.data() + 8, 8);
  if constexpr (std::endian::native == std::endian::little) CHECK(t == 1.5);
}

TEST_CASE("grid dump file round trip") {
  const auto path = std::filesystem::temp_directory_path() / "h2p_grid_io_test.h2pg";
  const auto s = h2p::test::random_state(6, 5);
  write_grid(path, s);
  const auto back = read_grid(path);
  CHECK(h2p::test::distance(back, s) == 0.0);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_grid(path), InvalidInput);
}

TEST_CASE("grid dump rejects malformed input") {
  std::stringstream bad_magic("XXXX\x02\x00\x00\x00");
  CHECK_THROWS_AS(read_grid(bad_magic), InvalidInput);

  std::stringstream buf;
  write_grid(buf, h2p::test::random_state(3, 1));
  const std::string full = buf.str();
  std::stringstream truncated(full.substr(0, full.size() - 5));
  CHECK_THROWS_AS(read_grid(truncated), InvalidInput);

  std::string zero = full;
  std::memset(zero.data() + 4, 0, 4);
  std::stringstream zero_n(zero);
  CHECK_THROWS_AS(read_grid(zero_n), InvalidInput);

  std::stringstream empty;
  CHECK_THROWS_AS(read_grid(empty), InvalidInput);
}
