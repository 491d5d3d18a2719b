#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("opkit_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  std::string cmd = std::string(GAMMA_OPKIT_BIN) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

fs::path write_json(const std::string& name, const json& j) {
  auto p = scratch() / name;
  std::ofstream(p) << j.dump();
  return p;
}

json real_matrix(std::initializer_list<std::initializer_list<double>> rows) {
  json m = json::array();
  for (auto r : rows) {
    json row = json::array();
    for (double v : r) row.push_back(v);
    m.push_back(row);
  }
  return m;
}

}  // namespace

TEST_CASE("check classifies and echoes the witness") {
  auto out = scratch() / "check_unitary.json";
  CHECK(run("check --generator symmetrized-unitaries --seed 3 --out " + out.string()) == 0);
  CHECK(read_json(out)["verdict"] == "GammaUnitary");

  auto in = write_json("three.json", {{"n", 2}, {"members", {real_matrix({{3, 0}, {0, 3}}), real_matrix({{0, 0}, {0, 0}})}}});
  out = scratch() / "check_refuted.json";
  CHECK(run("check --instance " + in.string() + " --out " + out.string()) == 0);
  auto j = read_json(out);
  CHECK(j["verdict"] == "Refuted");
  CHECK(j.contains("witness"));
  CHECK(j["witness"]["tuple_norm"].get<double>() > j["witness"]["sup_on_domain"].get<double>());
}

TEST_CASE("input errors") {
  auto bad = scratch() / "bad.json";
  std::ofstream(bad) << "{\"members\": [";
  CHECK(run("check --instance " + bad.string()) == 2);
  CHECK(run("check --instance " + (scratch() / "missing.json").string()) == 2);
  CHECK(run("check --generator scalar") == 2);
  CHECK(run("check --generator no-such-generator --seed 1") == 2);
  CHECK(run("check --generator scalar --seed 1 --params bogus=1") == 2);
  CHECK(run("verify --generator scalar --seed 1 --ids NOPE") == 2);
  CHECK(run("frobnicate") == 2);
  auto mismatch = write_json("mismatch.json", {{"members", {real_matrix({{1, 0}, {0, 1}}), real_matrix({{0.5}})}}});
  CHECK(run("check --instance " + mismatch.string()) == 3);
}

TEST_CASE("fo output") {
  auto out = scratch() / "fo_scalar.json";
  CHECK(run("fo --generator scalar --params n=2 point=1.2:0,0.5:0 --seed 1 --out " + out.string()) == 0);
  auto a = read_json(out)["A"]["ops"][0][0][0];
  CHECK(std::abs(a[0].get<double>() - 0.8) < 1e-12);

  auto zero = write_json("zero_p.json", {{"n", 2}, {"members", {real_matrix({{0.5, 0.1}, {0, -0.2}}), real_matrix({{0, 0}, {0, 0}})}}});
  out = scratch() / "fo_zero.json";
  CHECK(run("fo --instance " + zero.string() + " --out " + out.string()) == 0);
  auto ops = read_json(out)["A"]["ops"][0];
  CHECK(std::abs(ops[0][1][0].get<double>() - 0.1) < 1e-12);
  CHECK(std::abs(ops[1][1][0].get<double>() + 0.2) < 1e-12);

  out = scratch() / "fo_unitary.json";
  CHECK(run("fo --generator symmetrized-unitaries --seed 2 --out " + out.string()) == 0);
  auto j = read_json(out);
  CHECK(j["A"]["defect_dim"] == 0);
  CHECK(j["A"]["note"] == "defect dimension 0");

  auto off = write_json("off_range.json", {{"n", 2}, {"members", {real_matrix({{0, 1}, {0, 0}}), real_matrix({{1, 0}, {0, 0}})}}});
  CHECK(run("fo --instance " + off.string()) == 4);
}

TEST_CASE("verify examples") {
  CHECK(run("verify --generator binomial-isometry --params n=3 N=16 --seed 1 --ids MODEL-EXTRACT") == 0);
  auto out = scratch() / "appx.json";
  CHECK(run("verify --generator backshift-astar --params m_range=8 --seed 1 --ids MODEL-APPX --out " + out.string()) == 0);
  auto r = read_json(out);
  REQUIRE(r.size() == 1);
  CHECK(r[0]["identity"] == "MODEL-APPX");
  CHECK(r[0]["pass"] == true);
  CHECK(r[0]["window"]["m_range"] == 8);
}

TEST_CASE("corrupted fundamental operator fails the relation identity") {
  auto inst = scratch() / "pure.json";
  CHECK(run("generate --generator pure-compression --params n=2 dim=3 --seed 5 --out " + inst.string()) == 0);
  auto fo = scratch() / "pure_fo.json";
  CHECK(run("fo --instance " + inst.string() + " --out " + fo.string()) == 0);
  auto f = read_json(fo);
  auto j = read_json(inst);
  j["fundamental"] = {{"A", f["A"]["ops"]}, {"B", f["B"]["ops"]}};
  auto good = write_json("pure_good.json", j);
  CHECK(run("verify --instance " + good.string() + " --ids GAMMA-L44") == 0);
  double re = j["fundamental"]["A"][0][0][0][0].get<double>();
  j["fundamental"]["A"][0][0][0][0] = re + 1e-3;
  auto bad = write_json("pure_bad.json", j);
  CHECK(run("verify --instance " + bad.string() + " --ids GAMMA-L44") == 5);
}

TEST_CASE("reports are deterministic and skips are not failures") {
  auto a = scratch() / "det_a.json", b = scratch() / "det_b.json";
  CHECK(run("verify --generator zero-p --seed 4 --out " + a.string()) == 0);
  CHECK(run("verify --generator zero-p --seed 4 --out " + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));
  auto r = read_json(a);
  std::string digest = r[0]["instance_digest"];
  bool any_skip = false;
  for (const auto& x : r) {
    CHECK(x["instance_digest"] == digest);
    any_skip = any_skip || x.value("skipped", false);
  }
  CHECK(any_skip);
}

TEST_CASE("generate round trip") {
  auto g = scratch() / "e.json";
  CHECK(run("generate --generator product-pure --seed 2 --out " + g.string()) == 0);
  auto out = scratch() / "e_check.json";
  CHECK(run("check --instance " + g.string() + " --out " + out.string()) == 0);
  CHECK(read_json(out).contains("verdict"));
  auto v = scratch() / "e_verify.json";
  CHECK(run("verify --instance " + g.string() + " --ids TETRA-NEC,TETRA-DIL --out " + v.string()) == 0);
  CHECK(read_json(v).size() == 2);
}
