#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "doctest.h"

using namespace fracac::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("fracac_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_config(const std::string& name, const std::string& text) {
  const auto p = scratch() / (name + ".json");
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// key,value rows of a report file.
std::map<std::string, std::string> report(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto c = line.find(',');
    kv.emplace(line.substr(0, c), line.substr(c + 1));
  }
  return kv;
}

struct Outcome {
  int code;
  std::string log;
};

Outcome run_cmd(const std::string& cmd, const std::string& config, const std::string& out, std::string only = "",
                std::string subtask = "", unsigned threads = 0) {
  RunOptions o;
  o.config = config;
  o.out = (scratch() / out).string();
  o.only = only;
  o.subtask = subtask;
  o.threads = threads;
  std::ostringstream log;
  const int code = run(cmd, o, log);
  return {code, log.str()};
}

const char* kPrototype = R"({
  "grid": {"dim": 1, "h": 0.001953125, "omega": {"shape": "interval", "lo": [-1], "hi": [1]}, "r_trunc": 8},
  "physics": {"s": 0.25, "eps": 0.05, "g": {"kind": "sign"}},
  "solver": {"tol": 1e-8, "max_iters": 200000}
})";

std::string with(const std::string& base, const std::string& from, const std::string& to) {
  auto s = base;
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("config parsing is strict") {
  const auto c = parse_config(kPrototype);
  CHECK(c.dim == 1);
  CHECK(c.eps.value() == 0.05);
  CHECK(c.hash.size() == 40);
  CHECK(parse_config(kPrototype).hash == c.hash);
  // Key order does not change the canonical form.
  const auto reordered = parse_config(R"({"solver": {"max_iters": 200000, "tol": 1e-8},
    "physics": {"g": {"kind": "sign"}, "eps": 0.05, "s": 0.25},
    "grid": {"r_trunc": 8, "omega": {"hi": [1], "lo": [-1], "shape": "interval"}, "h": 0.001953125, "dim": 1}})");
  CHECK(reordered.hash == c.hash);
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");

  CHECK_THROWS_WITH_AS(parse_config(with(kPrototype, "\"tol\"", "\"tolerance\"")), "unknown key solver.tolerance",
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(with(kPrototype, "\"s\": 0.25", "\"s\": \"x\"")), "physics.s: expected a number",
                       ConfigError);
  try {
    parse_config("{\n  \"grid\": {\n    \"dim\": 1,,\n  }\n}");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"grid": {"dim": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"physics": {"potential": {"name": "quartic"}}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"diagnostics": {"levels": [1.0]}})"), ConfigError);
}

TEST_CASE("solve: prototype run writes headed CSV files") {
  const auto cfg = write_config("proto", kPrototype);
  const auto r = run_cmd("solve", cfg, "solve");
  CHECK(r.code == Ok);
  const auto sol = slurp(scratch() / "solve" / "solution.csv");
  CHECK(sol.rfind("# fracac ", 0) == 0);
  CHECK(sol.find("# config-sha1 " + parse_config(kPrototype).hash) != std::string::npos);
  CHECK(sol.find("x,v,W,residual\n") != std::string::npos);
  const auto rep = report(scratch() / "solve" / "report.csv");
  CHECK(rep.at("converged") == "true");
  CHECK(rep.at("max_principle") == "pass");
  CHECK(std::stod(rep.at("max_abs_v")) <= 1.0 + 1e-6);
}

TEST_CASE("solve: error exits") {
  const auto bad_s = write_config("bad_s", with(kPrototype, "\"s\": 0.25", "\"s\": 0.6"));
  const auto r1 = run_cmd("solve", bad_s, "bad_s");
  CHECK(r1.code == ConfigFailure);
  CHECK(r1.log.find("s must lie in (0, 1/2)") != std::string::npos);

  const auto one = write_config("one_iter", with(kPrototype, "\"max_iters\": 200000", "\"max_iters\": 1"));
  const auto r2 = run_cmd("solve", one, "one_iter");
  CHECK(r2.code == NotConverged);
  const auto rep = report(scratch() / "one_iter" / "report.csv");
  CHECK(rep.at("residual_above_tol") == "true");
  CHECK(std::stod(rep.at("final_residual")) > 1e-8);

  CHECK(run_cmd("solve", (scratch() / "missing.json").string(), "missing").code == ConfigFailure);
  const auto list = write_config("list", with(kPrototype, "\"eps\": 0.05", "\"eps_list\": [0.1, 0.05]"));
  CHECK(run_cmd("solve", list, "list").code == ConfigFailure);
}

TEST_CASE("solve: identical configs give byte-identical files across thread counts") {
  const auto cfg = write_config("repro", kPrototype);
  REQUIRE(run_cmd("solve", cfg, "rep_a", "", "", 1).code == Ok);
  REQUIRE(run_cmd("solve", cfg, "rep_b", "", "", 2).code == Ok);
  for (const char* f : {"solution.csv", "report.csv"})
    CHECK(slurp(scratch() / "rep_a" / f) == slurp(scratch() / "rep_b" / f));
}

TEST_CASE("a locked output directory is refused") {
  const auto cfg = write_config("lock", kPrototype);
  fs::create_directories(scratch() / "locked");
  const int fd = ::open((scratch() / "locked" / ".fracac.lock").c_str(), O_RDWR | O_CREAT, 0644);
  REQUIRE(fd >= 0);
  REQUIRE(::flock(fd, LOCK_EX) == 0);
  const auto r = run_cmd("solve", cfg, "locked");
  CHECK(r.code == ConfigFailure);
  CHECK(r.log.find("locked") != std::string::npos);
  ::close(fd);
  CHECK(run_cmd("solve", cfg, "locked").code == Ok);
}

TEST_CASE("sweep") {
  const std::string base = with(kPrototype, "\"eps\": 0.05", "\"eps_list\": [0.1, 0.05, 0.025, 0.0125]");
  const std::string cfg_text =
      with(base, "\"solver\"", R"("diagnostics": {"omega_prime": {"shape": "interval", "lo": [-0.5], "hi": [0.5]}}, "solver")");
  const auto r = run_cmd("sweep", write_config("sweep", cfg_text), "sweep");
  CHECK(r.code == Ok);
  const auto rep = report(scratch() / "sweep" / "report.csv");
  // P_{2s}((0, inf), (-L, L)) = (2L)^{1-2s} / (2s(1-2s)), which is 4 for s = 1/4, L = 1/2.
  const double gamma = std::sqrt(2.0) / (4.0 * std::sqrt(std::numbers::pi));
  CHECK(std::stod(rep.at("target_2gammaP")) == doctest::Approx(2 * gamma * 4.0).epsilon(0.03));
  CHECK(rep.at("gap_decreasing") == "true");
  CHECK(rep.count("potential_decay_slope") == 1);
  CHECK(rep.count("transition_slope") == 1);
  CHECK(rep.count("warning") == 0);
  const auto table = slurp(scratch() / "sweep" / "sweep.csv");
  CHECK(table.find("eps,energy,target,rel_gap,sum_W,iterations,converged,residual,d_0,d_0.5\n") != std::string::npos);
  CHECK(fs::exists(scratch() / "sweep" / "solution_3.csv"));

  const auto coarse = with(with(base, "0.001953125", "0.03125"), "0.0125", "0.04");
  const auto rc = run_cmd("sweep", write_config("coarse", coarse), "coarse");
  CHECK(rc.code == Ok);
  CHECK(rc.log.find("interface under-resolved") != std::string::npos);
  CHECK(report(scratch() / "coarse" / "report.csv").at("warning").find("interface under-resolved") == 0);

  const auto empty = with(kPrototype, "\"eps\": 0.05", "\"eps_list\": []");
  CHECK(run_cmd("sweep", write_config("empty", empty), "empty").code == ConfigFailure);
  const auto three = with(kPrototype, "\"eps\": 0.05", "\"eps_list\": [0.1, 0.05, 0.025]");
  CHECK(run_cmd("sweep", write_config("three", three), "three").code == ConfigFailure);
}

TEST_CASE("geometry") {
  const std::string half = R"({
    "grid": {"dim": 1, "h": 0.001953125, "r_trunc": 8},
    "physics": {"s": 0.25, "g": {"kind": "sign"}},
    "geometry": {"set": {"name": "half-line"}}})";
  REQUIRE(run_cmd("geometry", write_config("half", half), "per", "", "perimeter").code == Ok);
  const auto per = report(scratch() / "per" / "geometry_perimeter.csv");
  CHECK(std::stod(per.at("P_2s")) == doctest::Approx(4 * std::sqrt(2.0)).epsilon(0.03));
  CHECK(std::stod(per.at("identity_gap")) <= 1e-10);

  const std::string interval = R"({
    "grid": {"dim": 1, "h": 0.001953125, "omega": {"shape": "interval", "lo": [-1.5], "hi": [1.5]}, "r_trunc": 12},
    "physics": {"s": 0.25},
    "geometry": {"set": {"name": "interval", "lo": [-1], "hi": [1]}, "points": [[1], [-1]]}})";
  REQUIRE(run_cmd("geometry", write_config("interval", interval), "curv", "", "curvature").code == Ok);
  const auto curv = report(scratch() / "curv" / "geometry_curvature.csv");
  CHECK(std::stod(curv.at("point_0_x")) == doctest::Approx(1.0));
  CHECK(std::stod(curv.at("point_0_H")) == doctest::Approx(2 * std::sqrt(2.0)).epsilon(0.03));
  CHECK(std::stod(curv.at("point_1_H")) == doctest::Approx(2 * std::sqrt(2.0)).epsilon(0.03));

  const std::string cross = R"({
    "grid": {"dim": 2, "h": 0.03125, "offset": 0.5, "omega": {"shape": "disc", "radius": 1}, "r_trunc": 8},
    "physics": {"s": 0.25, "g": {"kind": "cross"}},
    "geometry": {"set": {"name": "cross"}}})";
  REQUIRE(run_cmd("geometry", write_config("cross", cross), "var", "", "variation").code == Ok);
  CHECK(std::stod(report(scratch() / "var" / "geometry_variation.csv").at("max_residual")) <= 0.1);

  const auto unknown = run_cmd("geometry", write_config("unknown", with(half, "half-line", "wedge")), "unk", "", "perimeter");
  CHECK(unknown.code == ConfigFailure);
  CHECK(unknown.log.find("unknown set name 'wedge'") != std::string::npos);
  CHECK(run_cmd("geometry", write_config("noset", R"({"physics": {"s": 0.25}})"), "noset", "", "perimeter").code ==
        ConfigFailure);
}

TEST_CASE("verify") {
  const auto cfg = write_config("verify", R"({"physics": {"s": 0.25}})");
  CHECK(run_cmd("verify", cfg, "verify_all").code == Ok);

  const auto only = run_cmd("verify", cfg, "verify_ext", "extension");
  CHECK(only.code == Ok);
  std::istringstream rows(slurp(scratch() / "verify_ext" / "verify.csv"));
  std::string line;
  int n = 0;
  while (std::getline(rows, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("group,", 0) == 0) continue;
    CHECK(line.rfind("extension,", 0) == 0);
    ++n;
  }
  CHECK(n == 4);

  const auto bad = write_config("bad_gamma", R"({"physics": {"s": 0.25, "gamma_override": 0.3}})");
  CHECK(run_cmd("verify", bad, "verify_bad", "constants").code == VerifyFailure);
  CHECK(slurp(scratch() / "verify_bad" / "verify.csv").find("constants,gamma_ns_formula,") != std::string::npos);
  CHECK(slurp(scratch() / "verify_bad" / "verify.csv").find(",fail\n") != std::string::npos);

  CHECK(run_cmd("verify", cfg, "verify_unknown", "kernels").code == ConfigFailure);
}
