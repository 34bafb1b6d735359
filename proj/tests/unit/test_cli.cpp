#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "charax/cli/cli.hpp"
#include "charax/core/errors.hpp"
#include "charax/core/parallel.hpp"
#include "doctest.h"

using namespace charax;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string specs = CHARAX_SPECS_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "charax_cli_test" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json summary(const fs::path& dir) { return json::parse(slurp(dir / "summary.json")); }

int run(std::vector<std::string> args) { return cli::run(args); }

std::string spec(const std::string& name) { return specs + "/" + name; }

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<std::string> na, nb;
  for (const auto& e : fs::directory_iterator(a)) na.push_back(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) nb.push_back(e.path().filename().string());
  std::sort(na.begin(), na.end());
  std::sort(nb.begin(), nb.end());
  if (na != nb) return false;
  for (const auto& n : na) {
    if (slurp(a / n) != slurp(b / n)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("shipped specs validate") {
  for (const auto& e : fs::directory_iterator(specs)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(cli::validate_spec(json::parse(slurp(e.path()))));
  }
}

TEST_CASE("validator names the offending path") {
  auto s = json::parse(slurp(spec("burgers.json")));
  auto bad = s;
  bad["solver"]["tolerance"] = 1e-3;
  try {
    cli::validate_spec(bad);
    FAIL("accepted an unknown key");
  } catch (const SpecError& e) {
    CHECK(std::string(e.what()).find("/solver/tolerance") != std::string::npos);
  }
  bad = s;
  bad["problem"]["F"] = {{"type", "linear_decay"}, {"rte", 2}};
  CHECK_THROWS_WITH_AS(cli::validate_spec(bad), doctest::Contains("/problem/F/rte"), SpecError);
  bad = s;
  bad["problem"]["U0"]["type"] = "sawtooth";
  CHECK_THROWS_WITH_AS(cli::validate_spec(bad), doctest::Contains("/problem/U0/type"), SpecError);
  bad = s;
  bad["solver"]["max_iters"] = 2.5;
  CHECK_THROWS_WITH_AS(cli::validate_spec(bad), doctest::Contains("/solver/max_iters"), SpecError);
  bad = s;
  bad["problem"]["domain"]["n_points"] = json::array({1});
  CHECK_THROWS_WITH_AS(cli::validate_spec(bad), doctest::Contains("/problem/domain/n_points/0"), SpecError);
  bad = s;
  bad.erase("problem");
  CHECK_THROWS_WITH_AS(cli::validate_spec(bad), doctest::Contains("/problem"), SpecError);
  bad = s;
  bad["family"] = "graphon";
  CHECK_THROWS_AS(cli::validate_spec(bad), SpecError);
}

TEST_CASE("overrides") {
  json s = {{"solver", {{"tol_sup", 1e-3}}}};
  cli::apply_override(s, "solver.tol_sup=1e-6");
  CHECK(s["solver"]["tol_sup"] == 1e-6);
  cli::apply_override(s, "output.directory=some/where");
  CHECK(s["output"]["directory"] == "some/where");
  cli::apply_override(s, "problem.lambdas=[0.1,0.2]");
  cli::apply_override(s, "problem.lambdas.1=0.5");
  CHECK(s["problem"]["lambdas"] == json::array({0.1, 0.5}));
  cli::apply_override(s, "solver.noise=true");
  CHECK(s["solver"]["noise"] == true);
  CHECK_THROWS_AS(cli::apply_override(s, "novalue"), SpecError);
  CHECK_THROWS_AS(cli::apply_override(s, "a..b=1"), SpecError);
  CHECK_THROWS_AS(cli::apply_override(s, "problem.lambdas.7=1"), SpecError);
}

TEST_CASE("schema subcommand and bad invocations") {
  CHECK(run({"schema"}) == cli::exit_ok);
  CHECK(cli::schema().contains("definitions"));
  CHECK(run({}) == cli::exit_spec_error);
  CHECK(run({"solve"}) == cli::exit_spec_error);
  CHECK(run({"solve", "--spec", "/does/not/exist.json"}) == cli::exit_spec_error);
}

TEST_CASE("spec errors write nothing") {
  const auto out = scratch("neg_tol");
  CHECK(run({"solve", "--spec", spec("burgers.json"), "--set", "solver.tol_sup=-1", "--out", out.string()}) ==
        cli::exit_spec_error);
  CHECK_FALSE(fs::exists(out));
  CHECK(run({"solve", "--spec", spec("burgers.json"), "--set", "solver.extra=1", "--out", out.string()}) ==
        cli::exit_spec_error);
  CHECK(run({"continue", "--spec", spec("measure.json"), "--out", out.string()}) == cli::exit_spec_error);
  CHECK(run({"solve", "--spec", spec("heat.json"), "--set", "solver={\"T\":0.5}", "--out", out.string()}) ==
        cli::exit_spec_error);
  CHECK(run({"solve", "--spec", spec("burgers.json"), "--set", "problem.domain.periods=[1,2]", "--out",
             out.string()}) == cli::exit_spec_error);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("unwritable output directory") {
  const auto blocker = scratch("blocker");
  fs::create_directories(blocker.parent_path());
  std::ofstream(blocker) << "a file, not a directory";
  CHECK(run({"solve", "--spec", spec("linear_decay.json"), "--out", (blocker / "sub").string()}) ==
        cli::exit_spec_error);
}

TEST_CASE("Burgers solve and continue") {
  const auto a = scratch("burgers_solve");
  CHECK(run({"solve", "--spec", spec("burgers.json"), "--out", a.string()}) == cli::exit_ok);
  CHECK(fs::exists(a / "U.csv"));
  CHECK(fs::exists(a / "lip_history.csv"));
  CHECK(summary(a)["T_reached"] == 0.05);

  const auto b = scratch("burgers_continue");
  CHECK(run({"continue", "--spec", spec("burgers.json"), "--out", b.string()}) == cli::exit_blowup);
  const double tc = summary(b)["t_c_estimate"];
  MESSAGE("t_c_estimate " << tc);
  CHECK(std::abs(tc - 0.159) <= 0.05 * 0.159);
}

TEST_CASE("override beats file value, per key") {
  const auto a = scratch("override");
  CHECK(run({"solve", "--spec", spec("linear_decay.json"), "--out", a.string(), "--set", "solver.T=0.3", "--set",
             "solver.dt=0.05"}) == cli::exit_ok);
  const auto s = summary(a);
  CHECK(s["T_reached"] == 0.3);
  CHECK(s["config"]["dt"] == 0.05);
  CHECK(s["config"]["n_sub"] == 2);  // from the file
}

TEST_CASE("constant solution gives equal tidy rows") {
  const auto a = scratch("constant");
  CHECK(run({"solve", "--spec", spec("burgers.json"), "--out", a.string(), "--set",
             "problem.U0={\"type\":\"constant\",\"value\":[0.3]}", "--set", "problem.domain.n_points=[16]", "--set",
             "solver.dt=0.01", "--set", "output.emit_plot_csv=true"}) == cli::exit_ok);
  std::istringstream in(slurp(a / "plot_values.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,x,component,value");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.substr(line.rfind(',') + 1) == "0.29999999999999999");
    ++rows;
  }
  CHECK(rows == 16 * 6);
}

TEST_CASE("Riccati a = -1 lip column") {
  const auto a = scratch("riccati");
  CHECK(run({"solve", "--spec", spec("riccati.json"), "--out", a.string()}) == cli::exit_ok);
  std::istringstream in(slurp(a / "plot_lip.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("t,lip_x", 0) == 0);
  int checked = 0;
  while (std::getline(in, line)) {
    const double t = std::stod(line.substr(0, line.find(',')));
    const double lip = std::stod(line.substr(line.find(',') + 1));
    if (std::abs(t * 10 - std::round(t * 10)) < 1e-9) {
      CHECK(std::abs(lip - 1.0 / (1.0 - t)) <= 1e-2);
      ++checked;
    }
  }
  CHECK(checked == 6);
}

TEST_CASE("seed from the environment") {
  const auto a = scratch("env_seed_a"), b = scratch("env_seed_b");
  const std::vector<std::string> common{"--set", "solver.mc_samples=300", "--set", "solver.dt=0.1"};
  auto args = std::vector<std::string>{"solve", "--spec", spec("heat.json"), "--out", a.string()};
  args.insert(args.end(), common.begin(), common.end());
  ::setenv("MFG_CHARAX_SEED", "424242", 1);
  CHECK(run(args) == cli::exit_ok);
  ::unsetenv("MFG_CHARAX_SEED");
  CHECK(summary(a)["seed"] == 424242);
  args[4] = b.string();
  args.insert(args.end(), {"--set", "solver.seed=424242"});
  CHECK(run(args) == cli::exit_ok);
  CHECK(slurp(a / "U.csv") == slurp(b / "U.csv"));
  ::setenv("MFG_CHARAX_SEED", "abc", 1);
  CHECK(run(args) == cli::exit_spec_error);
  ::unsetenv("MFG_CHARAX_SEED");
}

TEST_CASE("stochastic runs are byte-identical across reruns and worker counts") {
  struct Case {
    std::string spec;
    std::vector<std::string> sets;
  };
  const std::vector<Case> cases{
      {"heat.json", {"solver.mc_samples=2000"}},
      {"measure.json", {"solver.mc_samples=300", "problem.anchors.count=3"}},
      {"measure.json", {"solver.mc_samples=200", "problem.anchors.count=2", "problem.sigma_0=0.02",
                        "solver.common_paths=3"}},
  };
  int idx = 0;
  for (const auto& c : cases) {
    std::vector<fs::path> dirs;
    for (const char* w : {"1", "2", "3", "1"}) {
      dirs.push_back(scratch("det_" + std::to_string(idx) + "_" + std::to_string(dirs.size())));
      std::vector<std::string> args{"solve", "--spec", spec(c.spec), "--workers", w, "--out", dirs.back().string()};
      for (const auto& s : c.sets) args.insert(args.end(), {"--set", s});
      CHECK(run(args) == cli::exit_ok);
    }
    set_workers(1);
    for (std::size_t i = 1; i < dirs.size(); ++i) CHECK(same_tree(dirs[0], dirs[i]));
    ++idx;
  }
}

TEST_CASE("verify subcommand") {
  const auto a = scratch("verify_pass");
  CHECK(run({"verify", "--spec", spec("verify_linear_decay.json"), "--out", a.string()}) == cli::exit_ok);
  const auto cert = json::parse(slurp(a / "certificate.json"));
  CHECK(cert["passed"] == true);
  CHECK(cert["sup_gap"].get<double>() == doctest::Approx(0.01).epsilon(1e-6));

  // growth G = +p: a perturbed start separates like e^t, so C = 0 is too small
  const auto solved = scratch("verify_src");
  const std::vector<std::string> growth{"--set", "problem.G.rate=-1"};
  auto args = std::vector<std::string>{"solve", "--spec", spec("linear_decay.json"), "--out", solved.string(),
                                       "--set", "problem.U0.amplitude=1.5"};
  args.insert(args.end(), growth.begin(), growth.end());
  CHECK(run(args) == cli::exit_ok);
  const auto b = scratch("verify_fail");
  args = {"verify", "--spec", spec("verify_linear_decay.json"), "--out", b.string(), "--set",
          "verify.V=" + (solved / "U.csv").string()};
  args.insert(args.end(), growth.begin(), growth.end());
  CHECK(run(args) == cli::exit_ok);  // data-driven C covers it
  args.insert(args.end(), {"--set", "verify.C=0"});
  CHECK(run(args) == cli::exit_certificate_failed);
  CHECK(json::parse(slurp(b / "certificate.json"))["passed"] == false);

  CHECK(run({"verify", "--spec", spec("verify_linear_decay.json"), "--out", b.string(), "--set",
             "verify.V=missing.csv"}) == cli::exit_spec_error);
  CHECK(run({"verify", "--spec", spec("heat.json"), "--out", b.string()}) == cli::exit_spec_error);
}
