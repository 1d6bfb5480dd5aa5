#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "cassi/config.hpp"

using namespace cassi;

TEST_CASE("defaults carry the published hyperparameters") {
  RunConfig cfg;
  CHECK(cfg.Nz == 6);
  CHECK(cfg.hI == 2);
  CHECK(cfg.hS == 8);
  CHECK(cfg.wS == 0.5);
  CHECK(cfg.gp_weight == 5.0);
  CHECK(cfg.lr == 1e-3);
  CHECK(cfg.n_envs == 64);
  CHECK(cfg.steps_per_iter == 24);
  CHECK(cfg.ensemble == 5);
  CHECK(cfg.dt == 0.02);
  CHECK(cfg.sigma_sq == 0.25);
  CHECK(cfg.disc_momentum == 0.5);
  CHECK(cfg.oracle_lr == 1e-5);
  CHECK(cfg.randomize);
  CHECK(cfg.obs_noise);
}

TEST_CASE("set parses every supported value shape") {
  RunConfig cfg;
  cfg.set("Nz", "8");
  CHECK(cfg.Nz == 8);
  cfg.set("wS", "0");
  CHECK(cfg.wS == 0.0);
  cfg.set("lr", "2.5e-4");
  CHECK(cfg.lr == 2.5e-4);
  cfg.set("out_dir", "/tmp/somewhere");
  CHECK(cfg.out_dir == "/tmp/somewhere");

  cfg.set("randomize", "false");
  CHECK(!cfg.randomize);
  cfg.set("randomize", "true");
  CHECK(cfg.randomize);
  cfg.set("randomize", "0");
  CHECK(!cfg.randomize);
  cfg.set("randomize", "1");
  CHECK(cfg.randomize);
}

TEST_CASE("set rejects unknown keys and garbage values") {
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.set("no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.set("lr", "fast"), ConfigError);
  CHECK_THROWS_AS(cfg.set("Nz", "six"), ConfigError);
  CHECK_THROWS_AS(cfg.set("randomize", "maybe"), ConfigError);
}

TEST_CASE("dump round-trips through set") {
  RunConfig a;
  a.seed = 42;
  a.Nz = 8;
  a.wT = 0.0;
  a.out_dir = "runs/x1";
  a.obs_noise = false;

  RunConfig b;
  std::istringstream lines(a.dump());
  std::string line;
  while (std::getline(lines, line)) {
    auto eq = line.find('=');
    REQUIRE(eq != std::string::npos);
    auto strip = [](std::string s) {
      auto l = s.find_first_not_of(" \t");
      auto r = s.find_last_not_of(" \t");
      return l == std::string::npos ? std::string() : s.substr(l, r - l + 1);
    };
    b.set(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
  CHECK(b.dump() == a.dump());
  CHECK(b.seed == 42);
  CHECK(b.Nz == 8);
  CHECK(b.wT == 0.0);
  CHECK(b.out_dir == "runs/x1");
  CHECK(!b.obs_noise);
}

TEST_CASE("load_file applies keys and skips comments") {
  const std::string path = "test_config_tmp.cfg";
  {
    std::ofstream f(path);
    f << "# run settings\n";
    f << "seed = 7\n";
    f << "\n";
    f << "wS = 0.25   # trailing comment\n";
    f << "dataset = data/walk\n";
  }
  RunConfig cfg;
  cfg.load_file(path);
  CHECK(cfg.seed == 7);
  CHECK(cfg.wS == 0.25);
  CHECK(cfg.dataset == "data/walk");
  std::remove(path.c_str());

  RunConfig missing;
  CHECK_THROWS_AS(missing.load_file("definitely_not_here.cfg"), ConfigError);
}

TEST_CASE("every field is reachable by name") {
  RunConfig cfg;
  for (const auto& f : cfg.fields()) {
    CHECK_NOTHROW(cfg.set(f.name, [&]() -> std::string {
      if (std::holds_alternative<std::string*>(f.ptr)) return "x";
      if (std::holds_alternative<bool*>(f.ptr)) return "true";
      return "1";
    }()));
  }
}
