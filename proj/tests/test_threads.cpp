#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "h2p/threads.hpp"

TEST_CASE("H2P_THREADS caps the worker count") {
  ::setenv("H2P_THREADS", "1", 1);
  CHECK(h2p::worker_count() == 1);
  ::setenv("H2P_THREADS", "bogus", 1);
  CHECK(h2p::worker_count() >= 1);
  ::unsetenv("H2P_THREADS");
  CHECK(h2p::worker_count() >= 1);
}

TEST_CASE("parallel_for visits every index once") {
  ::setenv("H2P_THREADS", "4", 1);
  std::vector<std::atomic<int>> hits(1000);
  h2p::parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  h2p::parallel_for(0, [](std::size_t) { FAIL("no work expected"); });
  ::unsetenv("H2P_THREADS");
}

TEST_CASE("parallel_for rethrows a worker exception") {
  CHECK_THROWS_AS(h2p::parallel_for(50,
                                    [](std::size_t i) {
                                      if (i == 17) throw std::runtime_error("boom");
                                    }),
                  std::runtime_error);
}
