#include <doctest.h>

#include "l1min/cli.hpp"
#include "l1min/io.hpp"
#include "l1min/serialize.hpp"
#include "l1min/synth.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace l1min;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out, err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

fs::path scratch_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("l1min_cli_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

}  // namespace

TEST_CASE("cli solve writes the result schema") {
  const fs::path dir = scratch_dir("solve");
  REQUIRE(run_cli({"gen", "--n", "60", "--d", "30", "--k", "3", "--seed", "5", "--out-dir",
                   dir.string()}).code == cli::kOk);
  const Outcome o = run_cli({"solve", "--algo", "fista", "--matrix", (dir / "A.csv").string(),
                             "--rhs", (dir / "b.csv").string(), "--lambda", "0.01", "--out",
                             (dir / "r.json").string()});
  CHECK(o.code == cli::kOk);
  const Json r = read_json(dir / "r.json");
  std::vector<std::string> keys;
  for (auto it = r.begin(); it != r.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"algo", "n", "d", "lambda", "iterations", "converged",
                                         "wall_time_seconds", "x", "objective", "kkt_residual",
                                         "config_echo", "seed", "warnings"});
  CHECK(r["algo"] == "fista");
  CHECK(r["lambda"].get<double>() == 0.01);
  CHECK(r["x"].size() == 60);
  CHECK(r["n"] == 60);
  CHECK(r["d"] == 30);
  fs::remove_all(dir);
}

TEST_CASE("cli usage errors exit with 2") {
  const fs::path dir = scratch_dir("errors");
  write_text(dir / "A.csv", "1,0\n0,1\n1,1\n");
  write_text(dir / "b4.csv", "1\n2\n3\n4\n");
  const Outcome mismatch = run_cli({"solve", "--matrix", (dir / "A.csv").string(), "--rhs",
                                    (dir / "b4.csv").string(), "--out", (dir / "r.json").string()});
  CHECK(mismatch.code == cli::kUsage);
  CHECK(mismatch.err.find("3x2") != std::string::npos);
  CHECK(mismatch.err.find("length 4") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "r.json"));

  const Outcome missing = run_cli({"solve", "--matrix", (dir / "nope.csv").string(), "--rhs",
                                   (dir / "b4.csv").string()});
  CHECK(missing.code == cli::kUsage);
  CHECK(missing.err.find("nope.csv") != std::string::npos);

  write_text(dir / "bad.csv", "1,0\n0,oops\n");
  const Outcome bad = run_cli({"solve", "--matrix", (dir / "bad.csv").string(), "--rhs",
                               (dir / "b4.csv").string()});
  CHECK(bad.code == cli::kUsage);
  CHECK(bad.err.find("bad.csv:2") != std::string::npos);

  CHECK(run_cli({"solve", "--gen", "--bogus"}).code == cli::kUsage);
  CHECK(run_cli({"solve", "--gen", "--matrix", (dir / "A.csv").string(), "--rhs",
                 (dir / "b4.csv").string()}).code == cli::kUsage);
  CHECK(run_cli({"solve", "--n", "10"}).code == cli::kUsage);
  CHECK(run_cli({"solve", "--gen", "--algo", "simplex"}).code == cli::kUsage);
  CHECK(run_cli({}).code == cli::kUsage);
  CHECK(run_cli({"--help"}).code == cli::kOk);
  fs::remove_all(dir);
}

TEST_CASE("cli reports non-convergence with exit 1 and still writes results") {
  const fs::path dir = scratch_dir("nonconv");
  const Outcome o = run_cli({"solve", "--gen", "--n", "80", "--d", "40", "--k", "5", "--algo",
                             "fista", "--max-iter", "2", "--out", (dir / "r.json").string()});
  CHECK(o.code == cli::kNotConverged);
  REQUIRE(fs::exists(dir / "r.json"));
  CHECK(read_json(dir / "r.json")["converged"] == false);
  fs::remove_all(dir);
}

TEST_CASE("cli gen output reads back bit for bit") {
  const fs::path dir = scratch_dir("roundtrip");
  REQUIRE(run_cli({"gen", "--n", "40", "--d", "25", "--k", "4", "--seed", "123", "--out-dir",
                   dir.string()}).code == cli::kOk);
  synth::GenSpec spec;
  spec.n = 40;
  spec.d = 25;
  spec.k = 4;
  spec.seed = 123;
  const ProblemInstance p = synth::gen_problem(spec);
  const Matrix a = read_matrix_csv(dir / "A.csv");
  REQUIRE(a.rows() == 25);
  REQUIRE(a.cols() == 40);
  CHECK(std::memcmp(a.data(), p.A.data(), sizeof(double) * 25 * 40) == 0);
  CHECK((read_vector_csv(dir / "x0.csv").array() == p.ground_truth->array()).all());
  CHECK(read_json(dir / "meta.json")["generator"] == std::string(synth::kGeneratorName));
  fs::remove_all(dir);
}

TEST_CASE("cli phase is deterministic and honours the output directory variable") {
  const fs::path dir = scratch_dir("phase");
  ::setenv(cli::kOutputDirEnv, dir.string().c_str(), 1);
  const std::vector<std::string> base{"phase", "--algo", "homotopy", "--n", "40", "--grid",
                                      "4x4", "--trials", "3", "--seed", "42"};
  auto with_out = [&](const std::string& name, const std::string& jobs) {
    std::vector<std::string> a = base;
    a.insert(a.end(), {"--out", name, "--jobs", jobs});
    return a;
  };
  CHECK(run_cli(with_out("g1.csv", "1")).code == cli::kOk);
  CHECK(run_cli(with_out("sub/g2.csv", "3")).code == cli::kOk);
  ::unsetenv(cli::kOutputDirEnv);
  REQUIRE(fs::exists(dir / "g1.csv"));
  REQUIRE(fs::exists(dir / "sub" / "g2.csv"));
  CHECK(slurp(dir / "g1.csv") == slurp(dir / "sub" / "g2.csv"));
  CHECK(slurp(dir / "g1.csv").starts_with("solver,n,rho,delta,k,d,trials,success_rate\n"));

  const Outcome rep = run_cli({"report", "--in", (dir / "g1.csv").string()});
  CHECK(rep.code == cli::kOk);
  CHECK(rep.out.find("homotopy phase grid") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("cli default algorithms for cab and align") {
  const fs::path dir = scratch_dir("defaults");
  REQUIRE(run_cli({"gen", "--kind", "bouquet", "--n", "40", "--d", "30", "--groups", "4",
                   "--corruption", "0.1", "--out-dir", (dir / "cab").string()}).code == cli::kOk);
  CHECK(run_cli({"cab", "--matrix", (dir / "cab" / "A.csv").string(), "--rhs",
                 (dir / "cab" / "b.csv").string(), "--out", (dir / "cab.json").string()})
            .code != cli::kUsage);
  CHECK(read_json(dir / "cab.json")["algo"] == "homotopy");
  CHECK(run_cli({"align", "--gen", "--d", "30", "--m", "3", "--corrupted", "3", "--out",
                 (dir / "align.json").string()}).code != cli::kUsage);
  CHECK(read_json(dir / "align.json")["algo"] == "align_palm");
  fs::remove_all(dir);
}

TEST_CASE("property: --seed fully determines generated instances and solutions") {
  const fs::path dir = scratch_dir("seed");
  synth::Rng rng(50);
  for (int t = 0; t < 100; ++t) {
    const std::string seed = std::to_string(rng.below(1u << 30));
    const std::string n = std::to_string(10 + rng.below(20));
    const std::string algo = t % 2 ? "homotopy" : "ist";
    auto solve = [&](const std::string& name) {
      return run_cli({"solve", "--gen", "--n", n, "--d", "8", "--k", "2", "--seed", seed,
                      "--sigma", "0.01", "--algo", algo, "--out", (dir / name).string(), "--x-out",
                      (dir / (name + ".x.csv")).string()});
    };
    const Outcome a = solve("a.json");
    const Outcome b = solve("b.json");
    CHECK(a.code == b.code);
    CHECK(slurp(dir / "a.json.x.csv") == slurp(dir / "b.json.x.csv"));
    Json ja = read_json(dir / "a.json"), jb = read_json(dir / "b.json");
    ja.erase("wall_time_seconds");
    jb.erase("wall_time_seconds");
    CHECK(ja.dump() == jb.dump());

    for (const char* out : {"g1", "g2"}) {
      REQUIRE(run_cli({"gen", "--kind", t % 3 == 0 ? "alignment" : "gaussian", "--n", n, "--d",
                       "12", "--k", "2", "--m", "2", "--corrupted", "1", "--seed", seed,
                       "--out-dir", (dir / out).string()}).code == cli::kOk);
    }
    for (const auto& entry : fs::directory_iterator(dir / "g1")) {
      CHECK(slurp(entry.path()) == slurp(dir / "g2" / entry.path().filename()));
    }
    fs::remove_all(dir / "g1");
    fs::remove_all(dir / "g2");
  }
  fs::remove_all(dir);
}
