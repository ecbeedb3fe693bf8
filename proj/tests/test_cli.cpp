#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(NTK_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / ("ntk_cli_tests_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("kernel-eval prints the closed-form values") {
  const Run r = run("kernel-eval --family nt --s 1 --u 0 1");
  REQUIRE(r.code == 0);
  CHECK(r.out == "u,value\r\n0,0.3183098861837907\r\n1,2\r\n");

  const Run j = run("kernel-eval --family rf --s 2 --u 1 --format json");
  REQUIRE(j.code == 0);
  const auto doc = nlohmann::json::parse(j.out);
  CHECK(doc["command"] == "kernel-eval");
  CHECK(doc["result"]["values"][0]["value"].get<double>() == doctest::Approx(1.0));
  CHECK(doc["config"]["s"] == 2);
  CHECK(doc.contains("meta"));
}

TEST_CASE("kernel-eval reads point pairs") {
  const auto dir = scratch_dir();
  {
    std::ofstream f(dir / "pairs.txt");
    f << "1 0 0 0 1 0\n1,0,0,1,0,0\n";
  }
  const Run r = run("kernel-eval --family nt --s 1 --pairs " + (dir / "pairs.txt").string());
  REQUIRE(r.code == 0);
  CHECK(r.out == "u,value\r\n0,0.3183098861837907\r\n1,2\r\n");
  {
    std::ofstream f(dir / "bad.txt");
    f << "1 0 0 0 2 0\n";
  }
  CHECK(run("kernel-eval --pairs " + (dir / "bad.txt").string()).code == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("configuration errors exit with code 2") {
  CHECK(run("kernel-eval --s 5 --u 0.5").code == 2);
  CHECK(run("kernel-eval --family tanh --u 0.5").code == 2);
  CHECK(run("kernel-eval --u 1.5").code == 2);
  CHECK(run("kernel-eval").code == 2);
  CHECK(run("no-such-command").code == 2);
  CHECK(run("spectrum --max-degree -1").code == 2);
  CHECK(run("kernel-eval --u 0.5 --config /nonexistent/file.json").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("eigendecay fits and fit failures") {
  const Run even = run("eigendecay --family nt --s 1 --parity even --format json");
  REQUIRE(even.code == 0);
  const double slope = nlohmann::json::parse(even.out)["result"]["slope"].get<double>();
  CHECK(slope == doctest::Approx(-3.0).epsilon(0.1));
  // Odd degrees of the two-layer NT kernel with s = 1 vanish, so no fit exists.
  CHECK(run("eigendecay --family nt --s 1 --parity odd").code == 3);
  const Run matern = run("eigendecay --family matern --nu 0.5 --format json");
  REQUIRE(matern.code == 0);
  CHECK(nlohmann::json::parse(matern.out)["result"]["provenance"] == "analytic-Matern");
}

TEST_CASE("config files round-trip and flags override them") {
  const auto dir = scratch_dir();
  const std::string out = (dir / "first.json").string();
  REQUIRE(run("infogain --family rf --s 2 --d 4 --n 16 --lambda 0.5 --seed 7 --format json --out " + out).code == 0);
  const auto first = nlohmann::json::parse(slurp(out));
  CHECK(first["config"]["lambda"] == 0.5);

  const std::string again = (dir / "again.json").string();
  REQUIRE(run("infogain --config " + out + " --out " + again).code == 0);
  const auto second = nlohmann::json::parse(slurp(again));
  CHECK(second["config"] == first["config"]);
  CHECK(second["result"] == first["result"]);

  const std::string third = (dir / "third.json").string();
  REQUIRE(run("infogain --config " + out + " --n 8 --out " + third).code == 0);
  const auto overridden = nlohmann::json::parse(slurp(third));
  CHECK(overridden["config"]["n"] == 8);
  CHECK(overridden["config"]["s"] == 2);
  CHECK(overridden["result"]["reports"].size() == 8);

  {
    std::ofstream f(dir / "broken.json");
    f << "{ not json";
  }
  CHECK(run("infogain --config " + (dir / "broken.json").string()).code == 2);
  {
    std::ofstream f(dir / "unknown.json");
    f << R"({"n": 4, "colour": "blue"})";
  }
  CHECK(run("infogain --config " + (dir / "unknown.json").string()).code == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv output writes a config sidecar") {
  const auto dir = scratch_dir();
  const auto out = dir / "spec.csv";
  REQUIRE(run("spectrum --family matern --max-degree 3 --out " + out.string()).code == 0);
  CHECK(slurp(out).rfind("degree,eigenvalue,multiplicity\r\n0,1,1\r\n", 0) == 0);
  const auto side = nlohmann::json::parse(slurp(dir / "spec.csv.config.json"));
  CHECK(side["config"]["max-degree"] == 3);
  CHECK_FALSE(side.contains("result"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("experiments emit plot data") {
  const auto dir = scratch_dir();
  const auto plot = dir / "plot.csv";
  REQUIRE(run("mig-growth --n-max-exp 5 --candidates 256 --emit-plot-data " + plot.string()).code == 0);
  CHECK(slurp(plot).rfind("family,s,d,lambda,n,info_gain,effective_dim,theoretical_exponent\r\n", 0) == 0);
  CHECK(run("spectrum --max-degree 4 --emit-plot-data " + plot.string()).code == 2);
  std::filesystem::remove_all(dir);
}
