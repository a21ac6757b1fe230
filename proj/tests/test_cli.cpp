#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "cli.hpp"
#include "pidkit/io.hpp"

using namespace pidkit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const char* name) { return std::string(PIDKIT_FIXTURES) + "/" + name; }

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("pidkit_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> csv_rows(const std::string& text, std::string& header) {
  std::stringstream ss(text);
  std::getline(ss, header);
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(ss, line);) {
    std::vector<double> r;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("roi on a simple device") {
  Result r = call({"roi", fixture("simple_pid.json")});
  CHECK(r.code == cli::kOk);
  json j = json::parse(r.out);
  CHECK(j["r"].get<double>() <= 1e-6);
  // thin adapter: same number as the library call
  CHECK(j["r"].get<double>() == roi_primal(expect_kind<Pid>(load_device(fixture("simple_pid.json")), "pid")).r);
}

TEST_CASE("validate") {
  Result bad = call({"validate", fixture("signaling_pid.json")});
  CHECK(bad.code == cli::kNegative);
  json j = json::parse(bad.out);
  CHECK(j["valid"] == false);
  CHECK(j["nonsignaling_defect"].get<double>() == doctest::Approx(2.0).epsilon(1e-9));

  for (const char* f : {"xz_pid.json", "simple_pid.json", "xz_pmd.json", "tetrahedron.json", "z_instrument.json",
                        "bell_state.json", "xz_game.json", "pigame.json", "simulation.json", "xz_certificate.json",
                        "functional.json"}) {
    CAPTURE(f);
    CHECK(call({"validate", fixture(f)}).code == cli::kOk);
  }
}

TEST_CASE("usage and format errors") {
  CHECK(call({}).code == cli::kUsage);
  CHECK(call({"frobnicate"}).code == cli::kUsage);
  CHECK(call({"roi"}).code == cli::kUsage);
  CHECK(call({"roi", (scratch() / "missing.json").string()}).code == cli::kUsage);
  CHECK(call({"roi", fixture("xz_pmd.json")}).code == cli::kUsage);
  CHECK(call({"verify-bound", fixture("xz_pid.json"), "--schedule", "8,x"}).code == cli::kUsage);
  CHECK(call({"--tol", "-1", "roi", fixture("xz_pid.json")}).code == cli::kUsage);

  Result r = call({"--json", "roi", fixture("xz_pmd.json")});
  CHECK(r.code == cli::kUsage);
  json e = json::parse(r.err);
  CHECK(e["error"] == "format");
  CHECK(e["exit_code"] == 2);

  CHECK(call({"--help"}).code == cli::kOk);
}

TEST_CASE("simplicity verdicts") {
  CHECK(call({"simplicity", fixture("simple_pid.json")}).code == cli::kOk);
  Result r = call({"simplicity", fixture("xz_pid.json")});
  CHECK(r.code == cli::kNegative);
  CHECK(json::parse(r.out)["simple"] == false);
}

TEST_CASE("device producing subcommands") {
  fs::path d = scratch();

  // steer reproduces the bundled X/Z device
  Result s = call({"steer", fixture("bell_state.json"), fixture("xz_pmd.json")});
  REQUIRE(s.code == cli::kOk);
  CHECK(pid_distance(expect_kind<Pid>(parse_device(s.out), "pid"),
                     expect_kind<Pid>(load_device(fixture("xz_pid.json")), "pid")) <= 1e-15);

  Result m = call({"sem", fixture("xz_pid.json"), "--out", (d / "sem.json").string()});
  REQUIRE(m.code == cli::kOk);
  CHECK(json::parse(m.out)["rank"] == 2);
  CHECK(call({"validate", (d / "sem.json").string()}).code == cli::kOk);

  Result sim = call({"simulate", fixture("simulation.json"), fixture("random_pid.json")});
  REQUIRE(sim.code == cli::kOk);
  CHECK(validate_pid(expect_kind<Pid>(parse_device(sim.out), "pid")).valid);

  Result a = call({"--seed", "3", "sample", "pid", "--effect-rank", "1"});
  Result b = call({"--seed", "3", "sample", "pid", "--effect-rank", "1"});
  REQUIRE(a.code == cli::kOk);
  CHECK(a.out == b.out);
  CHECK(parse_device(a.out).meta.seed == 3u);
  CHECK(call({"sample", "simulation", "--side", "3", "--out", (d / "sim.json").string()}).code == cli::kOk);
  CHECK(call({"validate", (d / "sim.json").string()}).code == cli::kOk);
  CHECK(call({"sample", "simple-pid", "--out", (d / "simple.json").string()}).code == cli::kOk);
  CHECK(call({"simplicity", (d / "simple.json").string()}).code == cli::kOk);
  CHECK(call({"sample", "banana"}).code == cli::kUsage);
}

TEST_CASE("certificates, games and their values") {
  fs::path d = scratch();
  const std::string cert = (d / "cert.json").string();
  Result r = call({"roi", fixture("xz_pid.json"), "--certificate", cert});
  REQUIRE(r.code == cli::kOk);
  json j = json::parse(r.out);
  CHECK(std::abs(j["r"].get<double>() - j["dual"].get<double>()) <= 1e-6);
  CHECK(call({"validate", cert}).code == cli::kOk);

  const std::string game = (d / "game.json").string();
  REQUIRE(call({"witness", fixture("xz_pid.json"), "--dummy", "16", "--out", game}).code == cli::kOk);
  json v = json::parse(call({"game-value", game, fixture("xz_pid.json")}).out);
  json p = json::parse(call({"pguess-simple", game}).out);
  double ratio = v["value"].get<double>() / p["value"].get<double>();
  CHECK(ratio > 1.0);
  CHECK(ratio <= 1 + j["r"].get<double>() + 1e-5);

  const std::string pig = (d / "pigame.json").string();
  Result w = call({"pi-witness", cert, "--ic-povm", fixture("tetrahedron.json"), "--out", pig});
  REQUIRE(w.code == cli::kOk);
  double ps = json::parse(w.out)["pi_pguess_simple"].get<double>();
  double pv = json::parse(call({"pi-value", pig, fixture("xz_pid.json")}).out)["value"].get<double>();
  CHECK(pv > ps);

  CHECK(call({"pi-witness", fixture("xz_pmd.json"), "--ic-povm", fixture("tetrahedron.json")}).code == cli::kOk);
  CHECK(call({"pi-witness", fixture("functional.json"), "--ic-povm", fixture("tetrahedron.json")}).code == cli::kOk);
  CHECK(call({"pi-witness", fixture("xz_pid.json"), "--ic-povm", fixture("tetrahedron.json")}).code == cli::kUsage);
  CHECK(call({"pi-witness", cert, "--ic-povm", fixture("xz_pmd.json")}).code == cli::kUsage);
}

TEST_CASE("verify-bound csv") {
  const std::string csv = (scratch() / "bound.csv").string();
  Result r = call({"verify-bound", fixture("xz_pid.json"), "--schedule", "8,64,512", "--csv", csv});
  CHECK(r.code == cli::kOk);
  CHECK(read(csv) == r.out);
  std::string header;
  auto rows = csv_rows(r.out, header);
  CHECK(header == "n_dummy,ratio,lower_bound,identity_value,seesaw_value,pguess_simple,cap");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0][0] == 8);
  CHECK(rows[2][0] == 512);
  for (const auto& row : rows) CHECK(row[1] <= row[6] + 1e-5);
  CHECK(rows[2][1] >= 0.99 * rows[2][6]);

  Result js = call({"--json", "verify-bound", fixture("simple_pid.json"), "--schedule", "8,64"});
  CHECK(js.code == cli::kOk);
  json j = json::parse(js.out);
  for (const auto& pt : j["points"]) CHECK(std::abs(pt["ratio"].get<double>() - 1) <= 1e-5);
}

// Expected to fail: sqrt2 = 1 + (sqrt2 - 1) is the white-noise robustness of this
// device, while the ratios converge to 1 + roi with roi = 3 - 2 sqrt2.
TEST_CASE("verify-bound on the X/Z device approaches sqrt2") {
  Result r = call({"verify-bound", fixture("xz_pid.json"), "--schedule", "8,64,512"});
  std::string header;
  auto rows = csv_rows(r.out, header);
  REQUIRE(rows.size() == 3);
  CHECK(rows[2][1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-2));
}
