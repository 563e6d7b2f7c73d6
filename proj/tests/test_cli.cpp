#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdde/pipeline.hpp"

using namespace qdde;
namespace fs = std::filesystem;

namespace {

const std::string example_path = std::string(QDDE_PROBLEMS_DIR) + "/example.json";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qdde_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_doc(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "problem.json";
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

}  // namespace

TEST_CASE("loading the shipped example") {
  json eff;
  const ProblemSpec p = load_problem(example_path, {}, &eff);
  CHECK(p.S == 1);
  CHECK(p.q.value() == cplx(2.0));
  CHECK(p.trunc.M == 24);
  CHECK(p.terms.size() == 1);
  CHECK(problem_hash(eff).size() == 16);
  CHECK(problem_hash(eff) == problem_hash(read_json_file(example_path)));
}

TEST_CASE("overrides supersede the file") {
  json eff;
  const ProblemSpec p = load_problem(example_path, {"truncation.M=20", "domain.V.0.re=0.85"}, &eff);
  CHECK(p.trunc.M == 20);
  CHECK(eff["domain"]["V"][0]["re"] == 0.85);
  CHECK(problem_hash(eff) != problem_hash(read_json_file(example_path)));
  CHECK_THROWS_AS(load_problem(example_path, {"truncation.M=60"}), ProblemError);
}

TEST_CASE("schema violations name the field") {
  try {
    load_problem(example_path, {"r2=0"});
    FAIL("r2 = 0 accepted");
  } catch (const ProblemError& e) {
    CHECK(e.field == "r2");
  }
  CHECK_THROWS_AS(load_problem(example_path, {"q.angle=1.0"}), ProblemError);  // b and angle together
}

TEST_CASE("syntax errors report line and column") {
  const fs::path dir = scratch("syntax");
  const fs::path p = write_doc(dir, "{\n  \"S\": 1,\n  \"r1\": ,\n}\n");
  try {
    read_json_file(p.string());
    FAIL("malformed document accepted");
  } catch (const ProblemError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("command names round-trip") {
  for (Command c : {Command::check, Command::solve_formal, Command::borel, Command::spiral, Command::evaluate,
                    Command::asymptotics, Command::majorant, Command::all})
    CHECK(parse_command(command_name(c)) == c);
  CHECK_FALSE(parse_command("solve").has_value());
  CHECK(parse_complex("0.5,-2") == cplx(0.5, -2.0));
  CHECK(parse_complex("3") == cplx(3.0));
}

TEST_CASE("solve-formal writes the coefficient table") {
  const fs::path dir = scratch("formal");
  RunConfig cfg;
  cfg.problem_path = example_path;
  cfg.command = Command::solve_formal;
  cfg.out_dir = dir.string();
  const RunResult r = run(cfg);
  REQUIRE(r.exit_code == 0);
  CHECK(r.report["formal"]["residual"].get<double>() <= 1e-12);
  const std::string csv = slurp(dir / "formal.csv");
  CHECK(csv.rfind("m,h,re,im\n", 0) == 0);
  CHECK(csv.find("\n2,1,2,0\n") != std::string::npos);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(fs::exists(dir / "report.json"));
}

TEST_CASE("check on a problem violating (A) exits with 2 and names the pair") {
  const fs::path dir = scratch("check");
  RunConfig cfg;
  cfg.problem_path = example_path;
  cfg.command = Command::check;
  cfg.out_dir = dir.string();
  cfg.overrides = {"terms.0.m1=0"};
  const RunResult r = run(cfg);
  CHECK(r.exit_code == 2);
  const json& failing = r.report["assumptions"]["failing"];
  REQUIRE(failing.is_array());
  bool found = false;
  for (const auto& w : failing)
    if (w.value("k", -1) == 0 && w.value("s", -1) == 0) found = true;
  CHECK(found);
  CHECK(r.report["exit_code"] == 2);
}

TEST_CASE("invalid input exits with 1 and a field path") {
  RunConfig cfg;
  cfg.problem_path = example_path;
  cfg.command = Command::check;
  cfg.out_dir = scratch("invalid").string();
  cfg.overrides = {"r2=0"};
  const RunResult r = run(cfg);
  CHECK(r.exit_code == 1);
  CHECK(r.error.find("r2") != std::string::npos);
}

TEST_CASE("evaluate requires a point and reproduces X(t, 0) = 1") {
  RunConfig cfg;
  cfg.problem_path = example_path;
  cfg.command = Command::evaluate;
  cfg.out_dir = scratch("evaluate").string();
  CHECK(run(cfg).exit_code == 1);
  cfg.t = cplx(0.05);
  cfg.z = cplx(0.0);
  const RunResult r = run(cfg);
  REQUIRE(r.exit_code == 0);
  CHECK(std::abs(r.report["evaluate"]["value"]["re"].get<double>() - 1.0) <= 1e-8);
  CHECK(std::abs(r.report["evaluate"]["value"]["im"].get<double>()) <= 1e-8);
}

TEST_CASE("artifacts are byte-identical across runs") {
  RunConfig cfg;
  cfg.problem_path = example_path;
  cfg.command = Command::spiral;
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  cfg.out_dir = a.string();
  REQUIRE(run(cfg).exit_code == 0);
  cfg.out_dir = b.string();
  REQUIRE(run(cfg).exit_code == 0);
  int files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const fs::path name = entry.path().filename();
    CAPTURE(name.string());
    CHECK(slurp(a / name) == slurp(b / name));
    ++files;
  }
  CHECK(files >= 2);
}
