#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "h2p/experiment.hpp"
#include "h2p/observables.hpp"

using namespace h2p;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const char* root = std::getenv("H2P_TEST_TMP");
  const fs::path dir = fs::path(root ? root : fs::temp_directory_path().string()) / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c = preset("fig3");
  c.lattice.n_sites = 30;
  c.separation = 6.0;
  c.width = 3.0;
  c.params.gamma = 0.25;
  c.t_final = 2.0;
  c.snapshot_times = {0.0, 1.0};
  c.out_dir = out;
  return c;
}

}  // namespace

TEST_CASE("presets") {
  const auto f2 = preset("fig2");
  CHECK(f2.lattice.n_sites == 80);
  CHECK(f2.params.U == -6.0);
  CHECK(f2.params.gamma == doctest::Approx(1.0 / 12.0));
  CHECK(f2.width == 6.0);
  CHECK(f2.px == 0.0);
  CHECK(f2.py == 0.0);
  CHECK(f2.t_final == 20.0);
  CHECK(f2.dt_out == 0.1);
  CHECK(f2.snapshot_times == std::vector<double>{0.0, 10.0, 20.0});
  const auto pk = f2.packet();
  CHECK(pk.x0 == 35.0);
  CHECK(pk.y0 == 45.0);
  const auto f3 = preset("fig3");
  CHECK(f3.py == std::numbers::pi);
  CHECK(f3.t_final == 50.0);
  CHECK_THROWS_AS(preset("fig4"), InvalidInput);
}

TEST_CASE("config parsing") {
  SUBCASE("overlay with the pi token") {
    const auto c = parse_config(R"({"preset": "fig2", "py": "pi", "t_final": 5, "U": 6, "snapshot_times": [0, 5]})");
    CHECK(c.name == "fig2");
    CHECK(c.py == std::numbers::pi);
    CHECK(c.t_final == 5.0);
    CHECK(c.params.U == 6.0);
    CHECK(c.packet().x0 == 35.0);
  }
  SUBCASE("explicit centers define the separation") {
    const auto c = parse_config(R"({"x0": 20, "y0": 33, "snapshot_times": []})");
    CHECK(c.packet().y0 - c.packet().x0 == 13.0);
    CHECK_THROWS_AS(parse_config(R"({"x0": 20, "y0": 33, "d": 10, "snapshot_times": []})"), InvalidInput);
    const auto partial = parse_config(R"({"x0": 20, "d": 4, "snapshot_times": []})");
    CHECK(partial.packet().y0 == 24.0);
  }
  SUBCASE("diagnostics name the field or line") {
    auto message = [](const char* text) {
      try {
        parse_config(text);
      } catch (const InvalidInput& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message(R"({"Ux": 1})").find("'Ux'") != std::string::npos);
    CHECK(message(R"({"U": "big"})").find("'U'") != std::string::npos);
    CHECK(message(R"({"w": -1})").find("'w'") != std::string::npos);
    CHECK(message(R"({"n_sites": 2})").find("'n_sites'") != std::string::npos);
    CHECK(message(R"({"py": "tau"})").find("tau") != std::string::npos);
    CHECK(message("{\n\"U\": -6,\n\"w\": ,\n}").find("line 3") != std::string::npos);
    CHECK(message("[1, 2]").find("object") != std::string::npos);
    CHECK(message(R"({"x0": 95, "snapshot_times": []})").find("'x0'") != std::string::npos);
    CHECK(message(R"({"t_final": 5})").find("snapshot_times") != std::string::npos);
  }
  SUBCASE("momentum tokens") {
    CHECK(parse_momentum("pi") == std::numbers::pi);
    CHECK(parse_momentum("-pi") == -std::numbers::pi);
    CHECK(parse_momentum("0.25") == 0.25);
    CHECK_THROWS_AS(parse_momentum("0.25x"), InvalidInput);
    CHECK_THROWS_AS(parse_momentum(""), InvalidInput);
  }
  SUBCASE("resolved config round trips") {
    auto c = preset("fig3");
    c.params.statistics = Statistics::bosonic;
    c.lattice.boundary = Boundary::periodic;
    const auto back = parse_config(config_to_json(c));
    CHECK(back.py == c.py);
    CHECK(back.params.statistics == Statistics::bosonic);
    CHECK(back.lattice.boundary == Boundary::periodic);
    CHECK(back.snapshot_times == c.snapshot_times);
    CHECK(back.out_dir == c.out_dir);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/h2p.json"), InvalidInput);
}

TEST_CASE("compare_runs") {
  ObservableSeries q;
  Trajectory s;
  for (int i = 0; i < 5; ++i) {
    const double t = 0.1 * i;
    q.push_back({t, 1.0 + t, 5.0 - t, 4.0 - 2 * t, 3.0, 0, 0, 1, 0, 0});
    s.push_back({t, 1.0 + t, 5.0 - t, 0.0, 0.0});
  }
  SUBCASE("identical inputs") {
    const auto r = compare_runs(q, s);
    REQUIRE(r.samples.size() == 5);
    for (const auto& d : r.samples) {
      CHECK(d.dx == 0.0);
      CHECK(d.dy == 0.0);
      CHECK(d.dcom == 0.0);
    }
    CHECK_FALSE(r.first_exceed_x);
    CHECK(r.threshold == 1.5);
  }
  SUBCASE("threshold crossing and prefix grids") {
    s[3].x += 2.0;
    s[4].x += 2.0;
    const auto r = compare_runs(q, std::span(s).first(4), 1.5);
    CHECK(r.samples.size() == 4);
    REQUIRE(r.first_exceed_x);
    CHECK(*r.first_exceed_x == doctest::Approx(0.3));
    CHECK_FALSE(r.first_exceed_y);
    CHECK(r.max_dx == doctest::Approx(2.0));
  }
  SUBCASE("grid mismatch") {
    s[2].t += 0.01;
    CHECK_THROWS_AS(compare_runs(q, s), InvalidInput);
  }
}

TEST_CASE("run_experiment writes a complete, self-consistent bundle") {
  const auto dir = scratch("bundle");
  const auto r = run_experiment(small_config(dir));
  for (const char* f : {"series.csv", "semiclassical.csv", "semiclassical.json", "deviation.csv", "config.json",
                        "summary.json", "snapshot_t0.000.h2pg", "snapshot_t1.000.h2pg"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  const double F = summary["F"].get<double>();
  CHECK(summary["period"].get<double>() == doctest::Approx(2 * std::numbers::pi / std::abs(F)).epsilon(1e-15));
  CHECK(summary["doublon_count_k0"].get<int>() == r.doublon_count_k0);
  CHECK(summary.contains("max_separation_drift"));
  CHECK(summary.contains("max_com_drift"));
  CHECK(summary.contains("contamination_onset"));
  const auto sc = nlohmann::json::parse(slurp(dir / "semiclassical.json"));
  CHECK(sc["F"].get<double>() == F);

  std::ifstream qs(dir / "series.csv"), ss(dir / "semiclassical.csv");
  const auto q = read_series_csv(qs);
  const auto s = read_trajectory_csv(ss);
  REQUIRE(q.size() == 21);
  REQUIRE(s.size() == q.size());
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(q[i].t - s[i].t) < 1e-12);
  CHECK(compare_runs(q, s).max_dx == doctest::Approx(r.deviation.max_dx));
}

TEST_CASE("determinism: identical configs give identical bytes") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  run_experiment(small_config(a));
  run_experiment(small_config(b));
  for (const char* f : {"series.csv", "semiclassical.csv", "deviation.csv", "snapshot_t1.000.h2pg"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("run_experiment without artifacts and with unwritable output") {
  auto c = small_config("/proc/h2p_cannot_write_here");
  CHECK_NOTHROW(run_experiment(c, false));
  CHECK_THROWS_AS(run_experiment(c, true), InvalidInput);
}

TEST_CASE("no interaction: packet centers stay put") {
  auto c = preset("fig2");
  c.params.U = 0.0;
  const auto r = run_experiment(c, false);
  for (const auto& s : r.quantum.observables) {
    CHECK(std::abs(s.mean_x - 35.0) <= 0.1);
    CHECK(std::abs(s.mean_y - 45.0) <= 0.1);
  }
  CHECK_FALSE(r.period);
  CHECK(r.doublon_count_k0 == 0);
}

TEST_CASE("attractive pair at rest: center of mass tracks the Newtonian picture") {
  const auto r = run_experiment(preset("fig2"), false);
  CHECK(r.max_com_drift <= 0.5);
  REQUIRE(r.semiclassical_breakdown);
  for (const auto& d : r.deviation.samples) {
    if (d.t <= 10.0) CHECK(d.dcom <= 0.5);
  }
  CHECK(r.quantum.observables[100].separation < r.quantum.observables[0].separation);
}

TEST_CASE("opposite band edges: rigid pair that eventually leaves the semiclassical path") {
  const auto r = run_experiment(preset("fig3"), false);
  for (const auto& s : r.quantum.observables) {
    if (s.t <= 15.0) CHECK(std::abs(s.separation - 10.0) <= 1.0);
  }
  REQUIRE(r.deviation.first_exceed_x);
  CHECK(*r.deviation.first_exceed_x < 25.0);
  REQUIRE(r.period);
  CHECK(*r.period == doctest::Approx(28.92).epsilon(1e-3));
}
