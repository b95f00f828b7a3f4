#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + HQO_CLI_PATH + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "hqo_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string at(const std::string& name) { return (scratch() / name).string(); }

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& row) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(row);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!row.empty() && row.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST_CASE("help text matches the golden files") {
  for (const std::string sub : {"", "mesh", "eig", "certify", "study"}) {
    const Run r = run(sub + " --help");
    CHECK(r.code == 0);
    const std::string name = (sub.empty() ? std::string("hqo") : sub) + ".help";
    CHECK_MESSAGE(r.out == slurp(fs::path(HQO_GOLDEN_DIR) / name), "golden file " << name);
  }
}

TEST_CASE("argument errors exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("nosuch").code == 2);
  CHECK(run("eig --m 0 -o " + at("x.csv")).code == 2);
  CHECK(run("eig --family q3 -o " + at("x.csv")).code == 2);
  CHECK(run("eig --n 4").code == 2);
  CHECK(run("certify --k2 100 -o " + at("x.csv")).code == 2);
  CHECK(run("certify --k2 -5 --istar 1 -o " + at("x.csv")).code == 2);
  CHECK(run("certify --k2 100 --estimate cr --family p1 -o " + at("x.csv")).code == 2);
  CHECK(run("mesh --geometry square-hole --outer 1 --inner 2 -o " + at("x.mesh")).code == 2);
  CHECK(run("eig --n 4 -o " + at("x.csv"), "HQO_SEED=abc").code == 2);
  // Validation happens before any output is written.
  fs::remove(at("never.csv"));
  CHECK(run("certify --k2 100 --istar 6 --family cr --p 2 -o " + at("never.csv")).code == 2);
  CHECK_FALSE(fs::exists(at("never.csv")));
}

TEST_CASE("mesh subcommand") {
  Run r = run("mesh --geometry unit-square --n 8 -o " + at("sq.mesh"));
  REQUIRE(r.code == 0);
  CHECK(slurp(at("sq.mesh")).find("$Triangles 128\n") != std::string::npos);
  r = run("mesh --geometry square-hole --outer 2 --inner 0.5 -o " + at("hole.mesh"));
  REQUIRE(r.code == 0);
  r = run("mesh --validate " + at("hole.mesh"));
  CHECK(r.code == 0);
  CHECK(r.out.find("holes 1") != std::string::npos);

  std::ofstream(at("bad.mesh")) << "$Vertices 3\n0 0\n1 0\n0 1\n$Triangles 1\n0 1 999\n";
  r = run("mesh --validate " + at("bad.mesh"));
  CHECK(r.code == 3);
  CHECK(r.out.find("line 6") != std::string::npos);
  CHECK(run("eig --mesh " + at("does-not-exist.mesh") + " -o " + at("x.csv")).code == 3);
}

TEST_CASE("eig subcommand") {
  const double two_pi2 = 2 * std::numbers::pi * std::numbers::pi;
  Run r = run("eig --n 64 --family p1 --m 3 -o " + at("p1.csv"));
  REQUIRE(r.code == 0);
  auto rows = lines(slurp(at("p1.csv")));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "index,lambda,lower,upper");
  auto first = split(rows[1]);
  CHECK(first.size() == 4);
  CHECK(first[2].empty());
  const double l1 = std::stod(first[1]);
  CHECK(l1 > two_pi2);
  CHECK(l1 < two_pi2 * 1.005);

  r = run("eig --n 64 --family cr --m 1 -o " + at("cr.csv"));
  REQUIRE(r.code == 0);
  rows = lines(slurp(at("cr.csv")));
  first = split(rows[1]);
  CHECK(std::stod(first[2]) <= two_pi2);
  CHECK(std::stod(first[3]) >= two_pi2);
}

TEST_CASE("certify subcommand") {
  Run r = run("certify --geometry unit-square --k2 100 --family p1 --refine uniform --istar 6 -o " +
              at("cert.csv") + " --mesh-out " + at("final.mesh") + " --solution-out " + at("u.csv"));
  REQUIRE(r.code == 0);
  const auto rows = lines(slurp(at("cert.csv")));
  CHECK(rows[0] == "iter,ndof,h,i_star,lambda_lo,lambda_hi,condition,enclosure,certified,eta_total");
  CHECK(std::stod(split(rows.back())[6]) > 0);
  CHECK(run("mesh --validate " + at("final.mesh")).code == 0);
  CHECK(fs::file_size(at("u.csv")) > 0);

  r = run("certify --k2 100 --istar 6 --max-iters 1 -o " + at("budget.csv"));
  CHECK(r.code == 5);
  CHECK(lines(slurp(at("budget.csv"))).size() == 3);

  const double res = 2 * std::numbers::pi * std::numbers::pi;
  std::ostringstream k2;
  k2.precision(17);
  k2 << res;
  r = run("certify --k2 " + k2.str() + " --istar 0 -o " + at("res.csv"));
  CHECK(r.code == 6);
  CHECK(r.out.find("resonance") != std::string::npos);
}

TEST_CASE("study subcommand and determinism") {
  Run a = run("study --k2 100 --refinements 2 -o " + at("s1.csv"));
  Run b = run("study --k2 100 --refinements 2 -o " + at("s2.csv"));
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(at("s1.csv")) == slurp(at("s2.csv")));
  CHECK(lines(slurp(at("s1.csv")))[0] == "h,ndof,error,EV_i,EV_ipo");

  // Seeds from the flag and from the environment give identical outputs.
  REQUIRE(run("eig --n 40 --m 12 --seed 3 -o " + at("e1.csv")).code == 0);
  REQUIRE(run("eig --n 40 --m 12 -o " + at("e2.csv"), "HQO_SEED=3").code == 0);
  CHECK(slurp(at("e1.csv")) == slurp(at("e2.csv")));
}
