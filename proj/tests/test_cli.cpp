// Drives the packinglab executable through std::system.
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = PACKINGLAB_FIXTURES;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("packinglab_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + PACKINGLAB_CLI + std::string(" ") + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string fixture(const char* name) { return (kFixtures / name).string(); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate writes the dumps and is reproducible") {
    const auto a = scratch("sim_a"), b = scratch("sim_b");
    REQUIRE(run("simulate --config " + fixture("two_atom.json") + " --out " + a.string()) == 0);
    REQUIRE(run("simulate --config " + fixture("two_atom.json") + " --out " + b.string()) == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    }
    CHECK(files == 4);
    CHECK(fs::exists(a / "thinning_k1.csv"));
    CHECK(fs::exists(a / "thinning_inf.csv"));
    CHECK(lines(a / "conflicts.csv").front() == "id_a,id_b");
    const auto c = scratch("sim_c");
    REQUIRE(run("simulate --seed 5 --config " + fixture("two_atom.json") + " --out " + c.string()) == 0);
    CHECK(slurp(a / "pattern.csv") != slurp(c / "pattern.csv"));
  }

  TEST_CASE("zero intensity gives header-only dumps") {
    const auto d = scratch("zero");
    REQUIRE(run("simulate --config " + fixture("zero_intensity.json") + " --out " + d.string()) == 0);
    CHECK(lines(d / "pattern.csv").size() == 1);
    CHECK(lines(d / "thinning_inf.csv") == std::vector<std::string>{"id,kept_flag"});
  }

  TEST_CASE("solve writes a curve and a report") {
    const auto d = scratch("solve");
    REQUIRE(run("solve --config " + fixture("two_atom.json") + " --out " + d.string()) == 0);
    const auto rows = lines(d / "curve.csv");
    CHECK(rows.front() == "t,value,lower,upper");
    CHECK(rows.size() == 22);
    const auto rep = nlohmann::json::parse(slurp(d / "solver_report.json"));
    // first arrival: e^{-2t} + (1 - e^{-2t}) (0.7 * 0.25 + 1.3 * 0.75) / 2 at t = 2
    const double e = std::exp(-4.0);
    CHECK(rep["value"].get<double>() == doctest::Approx(e + (1 - e) * 0.575).epsilon(1e-9));
  }

  TEST_CASE("moment curve on the line") {
    const auto d = scratch("moment");
    REQUIRE(run("solve --config " + fixture("homogeneous_1d.json") + " --out " + d.string()) == 0);
    const auto rows = lines(d / "curve.csv");
    REQUIRE(rows.size() == 5);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double t = std::stod(rows[i].substr(0, rows[i].find(',')));
      const double m = std::stod(rows[i].substr(rows[i].find(',') + 1));
      CHECK(m == doctest::Approx(1 - std::exp(-t)).epsilon(1e-6));
    }
  }

  TEST_CASE("palm curve and anchor errors") {
    const auto d = scratch("palm");
    REQUIRE(run("solve --config " + fixture("three_atom_palm.json") + " --out " + d.string()) == 0);
    const auto rows = lines(d / "palm_curve.csv");
    CHECK(rows.front() == "t,palm,reduced,m");
    CHECK(rows.size() == 4);
    CHECK(fs::exists(d / "palm_report.json"));
    // anchor off the atoms
    const auto cfg = d / "bad_anchor.json";
    auto j = nlohmann::json::parse(slurp(fixture("three_atom_palm.json")));
    j["solve"]["anchor"] = {0.5};
    std::ofstream(cfg) << j.dump();
    CHECK(run("solve --config " + cfg.string() + " --out " + d.string()) == 2);
  }

  TEST_CASE("exit codes") {
    const auto d = scratch("codes");
    CHECK(run("--help") == 0);
    CHECK(run("simulate --config " + fixture("infinite_density.json") + " --out " + d.string()) == 2);
    CHECK(run("simulate --config " + (kFixtures / "missing.json").string() + " --out " + d.string()) == 2);
    CHECK(run("simulate --config " + fixture("oversized.json") + " --out " + d.string()) == 3);
    CHECK(run("validate --suite nosuch --out " + d.string()) == 2);
    CHECK(run("frobnicate") == 2);
  }

  TEST_CASE("validate writes a report") {
    const auto d = scratch("validate");
    REQUIRE(run("validate --suite expansion --out " + d.string()) == 0);
    const auto rep = nlohmann::json::parse(slurp(d / "expansion_report.json"));
    REQUIRE(rep.is_array());
    for (const char* key : {"check", "mc_value", "solver_value", "stderr", "z_score", "pass"}) {
      CHECK(rep[0].contains(key));
    }
  }

  TEST_CASE("renyi writes its summary") {
    const auto d = scratch("renyi");
    REQUIRE(run("renyi --length 500 --t-max 5 --reps 4 --out " + d.string()) == 0);
    const auto rep = nlohmann::json::parse(slurp(d / "renyi.json"));
    CHECK(rep.contains("density"));
  }
}
