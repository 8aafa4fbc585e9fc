#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "toda/config.hpp"
#include "toda/error.hpp"
#include "toda/io.hpp"

using namespace toda;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("toda_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

int cli(const std::string& args) {
  const char* exe = std::getenv("TODA_CLI");
  REQUIRE(exe != nullptr);
  const std::string cmd = std::string(exe) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

nlohmann::json report(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "report.json")); }

const char* kSmall = R"(# small torus
[cross_section]
nx = 16
ny = 4

[bvp]
phi_cos_amp = 0.3
phi_cos_kx = 1
phi_cos_ky = 0

[grid]
length = 6
n_t = 160
)";

}  // namespace

TEST_CASE("config parse and render round trip") {
  auto c = RunConfig::parse(kSmall);
  CHECK(c.get_int("cross_section.nx") == 16);
  CHECK(c.get_double_list("bvp.phi_cos_amp") == std::vector<double>{0.3});
  CHECK(c.get_double("grid.length") == 6.0);
  CHECK(c.get_string("bvp.id") == "BVP1");  // default
  CHECK(!c.has("bvp.id"));

  const auto text = c.render();
  auto c2 = RunConfig::parse(text);
  CHECK(c2 == c);
  CHECK(c2.render() == text);
  auto full = RunConfig::parse(c.render(true));
  CHECK(full.render(true) == c.render(true));
  CHECK(full.hash() == c.hash());

  // spelling does not change the value or the hash
  auto c3 = RunConfig::parse("[grid]\nlength = 6.000\nn_t = +160\n[cross_section]\nny=4\nnx =16\n[bvp]\n"
                             "phi_cos_amp = 3e-1\nphi_cos_kx = 1\nphi_cos_ky = 0\n");
  CHECK(c3 == c);
  CHECK(c3.hash() == c.hash());
  auto c4 = c;
  c4.set("grid.length", "7");
  CHECK(c4.hash() != c.hash());

  // doubles keep every bit
  auto c5 = RunConfig::parse("[bvp]\na = 0.1\nphi_const = 0.3333333333333333\n");
  CHECK(RunConfig::parse(c5.render()).get_double("bvp.phi_const") == 0.3333333333333333);
  CHECK(RunConfig::parse(c5.render()).get_double("bvp.a") == 0.1);
}

TEST_CASE("config errors") {
  auto bad = [](const std::string& text, const std::string& needle) {
    try {
      RunConfig::parse(text);
      FAIL("expected a config error for: " << text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Config);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  bad("[grid]\nlenght = 3\n", "unknown key 'grid.lenght'");
  bad("[nope]\n", "unknown section");
  bad("length = 3\n", "outside a section");
  bad("[grid]\nlength = 3\nlength = 4\n", "duplicate");
  bad("[grid]\nn_t = 2.5\n", "expected an integer");
  bad("[grid]\nlength = abc\n", "line 2");
  bad("[bvp]\nid = BVP7\n", "not an accepted value");
  bad("[frame]\nenabled = yes\n", "true or false");
  bad("[grid]\nlength\n", "expected key = value");
  bad("[grid\n", "malformed section");
}

TEST_CASE("csv and json artifacts carry the hash and schema version") {
  const auto dir = scratch("io");
  io::Table t{{"x", "y"}, {}};
  t.add({io::cell(0.1), io::cell(1.0 / 3.0)});
  t.add({io::cell(1e-300), io::cell(-2.5)});
  io::write_csv(dir / "t.csv", {"abc123", "solve"}, t);
  const auto text = slurp(dir / "t.csv");
  CHECK(text.rfind("# schema_version=1\n# config_hash=abc123\n", 0) == 0);
  CHECK(text.find("0.1,0.3333333333333333\n") != std::string::npos);
  auto back = io::read_csv(dir / "t.csv");
  CHECK(back.columns == t.columns);
  CHECK(back.numbers("y")[0] == 1.0 / 3.0);
  CHECK(back.numbers("x")[1] == 1e-300);
  io::write_json(dir / "r.json", {"abc123", "solve"}, {{"v", 0.1}});
  auto j = nlohmann::json::parse(slurp(dir / "r.json"));
  CHECK(j["schema_version"] == 1);
  CHECK(j["config_hash"] == "abc123");
  CHECK(j["v"].get<double>() == 0.1);
}

TEST_CASE("cli: solve, determinism and exit codes") {
  const auto dir = scratch("solve");
  put(dir / "small.ini", kSmall);

  SUBCASE("trivial data sits at the tolerance floor") {
    put(dir / "zero.ini", "[cross_section]\nnx = 8\nny = 8\n[grid]\nn_t = 80\nlength = 4\n");
    CHECK(cli("solve --config " + (dir / "zero.ini").string() + " --out " + (dir / "z").string()) == 0);
    auto r = report(dir / "z");
    CHECK(r["status"] == "ok");
    CHECK(r["results"]["solve"]["u_sup"].get<double>() == 0.0);
    CHECK(r["results"]["frame"]["einstein_sup"].get<double>() < 1e-9);
    CHECK(r["config_hash"] == RunConfig::parse(slurp(dir / "zero.ini")).hash());
  }
  SUBCASE("repeated runs are byte-identical") {
    const std::string cfg = " --config " + (dir / "small.ini").string();
    REQUIRE(cli("solve" + cfg + " --out " + (dir / "a").string()) == 0);
    REQUIRE(cli("solve" + cfg + " --threads 1 --out " + (dir / "b").string()) == 0);
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
      CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
      ++files;
    }
    CHECK(files >= 4);
    const auto decay = slurp(dir / "a" / "decay.csv");
    CHECK(decay.find("# config_hash=" + RunConfig::parse(kSmall).hash()) != std::string::npos);
  }
  SUBCASE("unknown key: exit 2 with a report") {
    put(dir / "bad.ini", "[grid]\nlenght = 3\n");
    CHECK(cli("solve --config " + (dir / "bad.ini").string() + " --out " + (dir / "c").string()) == 2);
    auto r = report(dir / "c");
    CHECK(r["status"] == "error");
    CHECK(r["error"]["code"] == "config");
  }
  SUBCASE("bad flag: exit 2") { CHECK(cli("solve --bogus --out " + (dir / "f").string()) == 2); }
  SUBCASE("non-convergence: exit 3") {
    put(dir / "hard.ini", "[cross_section]\nnx = 16\nny = 4\n[bvp]\nphi_cos_amp = 3\nphi_cos_kx = 1\nphi_cos_ky = 0\n"
                          "[grid]\nlength = 6\nn_t = 160\n[solver]\nmax_newton = 1\n");
    CHECK(cli("solve --config " + (dir / "hard.ini").string() + " --out " + (dir / "n").string()) == 3);
    auto r = report(dir / "n");
    CHECK(r["error"]["code"] == "non_convergence");
    CHECK(r["results"]["solve"]["status"] != "converged");
  }
  SUBCASE("invariant violation: exit 4") {
    put(dir / "closure.ini", std::string(kSmall) + "[frame]\nclosure_tol = 1e-30\ndegree = 0\n");
    CHECK(cli("solve --config " + (dir / "closure.ini").string() + " --out " + (dir / "v").string()) == 4);
    CHECK(report(dir / "v")["error"]["code"] == "invariant_violation");
  }
  SUBCASE("command mismatch is a config error") {
    put(dir / "cmd.ini", "[run]\ncommand = dehn\n");
    CHECK(cli("solve --config " + (dir / "cmd.ini").string() + " --out " + (dir / "m").string()) == 2);
  }
}

TEST_CASE("cli: classify") {
  const auto dir = scratch("classify");
  put(dir / "c.ini", "[classify]\nfamily = type_ii_torus\na = 1\nb = 1\n");
  REQUIRE(cli("classify --config " + (dir / "c.ini").string() + " --out " + (dir / "one").string()) == 0);
  auto r = report(dir / "one");
  const auto& c = r["results"]["classification"];
  CHECK(c["table"] == 2);
  REQUIRE(c["intervals"].size() == 2);
  CHECK(c["intervals"][0]["lo"]["tag"] != c["intervals"][0]["hi"]["tag"]);

  REQUIRE(cli("classify --table 2 --out " + (dir / "t2").string()) == 0);
  auto t = io::read_csv(dir / "t2" / "classify_table2.csv");
  CHECK(t.rows.size() > 20);
  CHECK(report(dir / "t2")["results"]["table"] == 2);
}

TEST_CASE("cli: strict mode, diagnose, dehn and plot-data") {
  const auto dir = scratch("pipes");
  put(dir / "small.ini", kSmall);
  const std::string cfg = " --config " + (dir / "small.ini").string();

  SUBCASE("failed soft check: warning, or exit 4 under --strict") {
    put(dir / "deg.ini", std::string(kSmall) + "[degenerate]\nn_list = 4, 3, 2\nn_t = 160\n");
    const std::string c = " --config " + (dir / "deg.ini").string();
    CHECK(cli("degenerate" + c + " --out " + (dir / "soft").string()) == 0);
    auto r = report(dir / "soft");
    CHECK(r["results"]["monotone"] == false);
    CHECK(!r["warnings"].empty());
    CHECK(cli("degenerate" + c + " --strict --out " + (dir / "hard").string()) == 4);
    CHECK(report(dir / "hard")["error"]["code"] == "invariant_violation");
  }
  SUBCASE("diagnose then plot-data") {
    const auto out = dir / "diag";
    REQUIRE(cli("diagnose" + cfg + " --out " + out.string()) == 0);
    auto r = report(out);
    CHECK(r["results"]["energy"]["monotone"] == true);
    CHECK(r["results"]["energy"]["bound_ok"] == true);
    REQUIRE(cli("plot-data --out " + out.string()) == 0);
    auto p = io::read_csv(out / "plot_energy.csv");
    CHECK(p.columns == std::vector<std::string>{"series", "x", "y"});
    auto e = io::read_csv(out / "energy.csv");
    CHECK(p.rows.size() == 2 * e.rows.size());
  }
  SUBCASE("dehn ladder") {
    const auto out = dir / "dehn";
    REQUIRE(cli("dehn" + cfg + " --out " + out.string()) == 0);
    auto t = io::read_csv(out / "dehn.csv");
    REQUIRE(t.rows.size() == 4);
    const auto d = t.numbers("sup_defect");
    for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i] < d[i - 1]);
    for (double x : t.numbers("match_residual")) CHECK(x <= 1e-12);
    auto r = report(out);
    CHECK(r["results"]["weighted_slope"].get<double>() <= r["results"]["slope_bound"].get<double>());
    CHECK(fs::exists(out / "members" / "m3" / "defect.csv"));
  }
  SUBCASE("plot-data without inputs: exit 5") {
    fs::create_directories(dir / "empty");
    CHECK(cli("plot-data --out " + (dir / "empty").string()) == 5);
    CHECK(report(dir / "empty")["error"]["message"].get<std::string>().find("missing inputs") != std::string::npos);
  }
}

TEST_CASE("every schema default is already canonical") {
  for (const auto& k : config_schema()) {
    RunConfig c;
    c.set(k.name, k.fallback);
    CHECK_MESSAGE(c.render() == RunConfig::parse(c.render()).render(), k.name);
    CHECK_MESSAGE(c.hash() == RunConfig().hash(), k.name);
  }
}
