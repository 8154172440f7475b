#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcomb/bench.hpp"

using namespace qcomb;
using namespace qcomb::bench;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qcomb_bench_tests";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  fs::remove_all(p);
  return p;
}

ResultRow sample_row() {
  ResultRow r;
  r.model = "DampingPerp";
  r.p = 0.1 + 0.2;
  r.C = -0.75;
  r.N = 7;
  r.d_A = 2;
  r.seed = 12345678901234ULL;
  r.qfi = 1.0 / 3.0;
  r.qfi_per_n = r.qfi / 7;
  r.split_qfi_per_n = 5e-324;
  r.iterations = 42;
  r.wall_ms = 123.456;
  r.converged = true;
  r.status = "ok, \"quoted\"";
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config(const fs::path& csv) {
  ExperimentConfig c;
  c.model = {NoiseVariant::DephasingPerp, 0.9, 0.0};
  c.N = {1, 2, 3};
  c.d_A = {2};
  c.seeds = {1};
  c.iss.restarts = 1;
  c.csv = csv;
  c.workers = 1;
  return c;
}

}  // namespace

TEST_CASE("CSV rows round trip bit for bit") {
  const ResultRow r = sample_row();
  CHECK(parse_csv_row(to_csv(r)) == r);
  const auto path = scratch("rows.csv");
  write_csv(path, {r, r});
  const auto back = read_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == r);
  CHECK(slurp(path).rfind(csv_header() + "\n", 0) == 0);
  CHECK(read_csv(scratch("absent.csv")).empty());
}

TEST_CASE("torn trailing rows are skipped and bad rows rejected") {
  const auto path = scratch("torn.csv");
  write_csv(path, {sample_row()});
  {
    std::ofstream out(path, std::ios::app);
    out << "DampingPerp,0.3,0,8,2,1,1.";
  }
  CHECK(read_csv(path).size() == 1);
  CHECK_THROWS(parse_csv_row("a,b,c"));
  std::string bad = to_csv(sample_row());
  bad.replace(bad.find(",1,\""), 3, ",7,");
  CHECK_THROWS(parse_csv_row(bad));
}

TEST_CASE("best split over available N") {
  const auto s = best_split({{1, 1.0}, {2, 1.5}, {4, 3.5}});
  CHECK(s.at(1) == doctest::Approx(1.0));
  CHECK(s.at(2) == doctest::Approx(2.0));
  CHECK(s.at(4) == doctest::Approx(4.0));
  CHECK(best_split({{2, 3.0}, {3, 2.0}, {5, 4.0}}).at(5) == doctest::Approx(5.0));
  const auto linear = best_split({{1, 1.0}, {2, 2.0}, {3, 3.0}});
  for (const auto& [n, v] : linear) CHECK(v == doctest::Approx(double(n)));
  // split values dominate the raw values and are superadditive over present N
  const std::map<std::size_t, double> f{{1, 0.9}, {2, 3.1}, {3, 5.0}, {5, 7.0}, {6, 9.5}};
  const auto b = best_split(f);
  for (const auto& [n, v] : f) CHECK(b.at(n) >= v);
  for (const auto& [n, v] : b)
    for (const auto& [m, w] : b)
      if (b.count(n + m)) CHECK(b.at(n + m) >= v + w - 1e-12);
}

TEST_CASE("split columns use the best seed per series") {
  std::vector<ResultRow> rows;
  for (std::uint64_t seed : {1u, 2u})
    for (std::size_t N : {1u, 2u}) {
      ResultRow r = sample_row();
      r.N = N;
      r.seed = seed;
      r.status = "ok";
      r.qfi = (N == 1 ? 1.0 : 1.5) + (seed == 2 ? 0.1 : 0.0);
      r.qfi_per_n = r.qfi / N;
      rows.push_back(r);
    }
  apply_split(rows);
  for (const auto& r : rows) {
    if (r.N == 1) CHECK(r.split_qfi_per_n == doctest::Approx(1.1));
    if (r.N == 2) CHECK(r.split_qfi_per_n == doctest::Approx(1.1));
  }
}

TEST_CASE("config parsing with comments, relative paths and overrides") {
  const fs::path dir = scratch("cfgdir");
  fs::create_directories(dir);
  const fs::path cfg = dir / "exp.json";
  {
    std::ofstream out(cfg);
    out << R"({
  // damping sweep
  "model": {"variant": "DampingPerp", "p": 0.75},
  "N": [1, 2], "d_A": [2], "seeds": [3, 4],
  "solver": {"gap_tol": 1e-9},
  "convergence": {"threshold": 1e-5, "restarts": 2, "fixed_sweeps": 0},
  "output": {"csv": "out.csv", "plot": "out.svg"},
  "workers": 2
})";
  }
  const auto c = load_config(cfg);
  CHECK(c.model.variant == NoiseVariant::DampingPerp);
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(c.iss.sdp.gap_tol == 1e-9);
  CHECK(c.iss.threshold == 1e-5);
  CHECK(c.iss.restarts == 2);
  CHECK(c.csv == dir / "out.csv");
  CHECK(c.plot == dir / "out.svg");
  CHECK(c.workers == 2);
  setenv("QCOMB_CSV", "/tmp/elsewhere.csv", 1);
  CHECK(load_config(cfg).csv == fs::path("/tmp/elsewhere.csv"));
  unsetenv("QCOMB_CSV");
  auto j = nlohmann::json::parse(R"({"model": {"variant": "Nope", "p": 0.5}, "N": [1], "d_A": [1]})");
  CHECK_THROWS(config_from_json(j));
  j = nlohmann::json::parse(R"({"model": {"variant": "DampingPerp", "p": 0.5}, "N": [], "d_A": [1]})");
  CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);
}

TEST_CASE("experiments resume from a partial CSV") {
  const auto path = scratch("resume.csv");
  const auto cfg = small_config(path);
  int calls = 0;
  const auto first = run_experiment(cfg, [&](const ResultRow&) { ++calls; });
  CHECK(calls == 3);
  REQUIRE(first.size() == 3);
  CHECK(first[1].qfi == doctest::Approx(3.6).epsilon(1e-3));
  for (const auto& r : first) CHECK(r.split_qfi_per_n >= r.qfi_per_n);

  // keep the header and first row, then a torn line as if the process had died mid-write
  std::vector<ResultRow> kept{first[0]};
  write_csv(path, kept);
  {
    std::ofstream out(path, std::ios::app);
    out << "DephasingPerp,0.9,0,2,2,1,3.5";
  }
  calls = 0;
  const auto second = run_experiment(cfg, [&](const ResultRow&) { ++calls; });
  CHECK(calls == 2);
  REQUIRE(second.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    ResultRow a = first[i], b = second[i];
    a.wall_ms = b.wall_ms = 0;
    CHECK(a == b);
  }
  CHECK(read_csv(path).size() == 3);
  calls = 0;
  run_experiment(cfg, [&](const ResultRow&) { ++calls; });
  CHECK(calls == 0);
}

TEST_CASE("plots are deterministic and contain the bound overlay") {
  std::vector<ResultRow> rows;
  for (std::size_t N : {1u, 2u, 4u}) {
    ResultRow r;
    r.model = "DephasingParallel";
    r.p = 0.85;
    r.N = N;
    r.d_A = 2;
    r.seed = 1;
    r.qfi = 0.9 * N;
    r.qfi_per_n = 0.9;
    r.split_qfi_per_n = 0.9;
    r.converged = true;
    r.status = "ok";
    rows.push_back(r);
  }
  const std::string a = emit_plot(rows), b = emit_plot(rows);
  CHECK(a == b);
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("bound") != std::string::npos);
  PlotStyle plain;
  plain.bound = false;
  CHECK(emit_plot(rows, plain).find("bound") == std::string::npos);
  CHECK_THROWS_AS(emit_plot({}), std::invalid_argument);
}

TEST_CASE("command line smoke tests") {
  const std::string cli = QCOMB_CLI_PATH;
  CHECK(std::system((cli + " bound perp-dephasing-n2 --p 0.9 > /dev/null").c_str()) == 0);
  CHECK(std::system((cli + " bound perp-damping --p 0.75 --N 5 > /dev/null").c_str()) == 0);
  CHECK(std::system((cli + " --help > /dev/null").c_str()) == 0);
  CHECK(std::system((cli + " bound nonsense --p 0.9 > /dev/null 2>&1").c_str()) != 0);

  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  const fs::path csv = dir / "grid.csv", svg = dir / "grid.svg";
  const std::string run = cli + " --log warn optimize --model DephasingPerp --p 0.9 --N 1 2 --dA 2 --restarts 1 --csv " +
                          csv.string() + " --plot " + svg.string() + " > /dev/null";
  CHECK(std::system(run.c_str()) == 0);
  CHECK(read_csv(csv).size() == 2);
  CHECK(fs::exists(svg));

  CHECK(std::system((cli + " fixtures --dir " + dir.string() + " > /dev/null").c_str()) == 0);
  const fs::path fx = dir / "damping_p0.5_one_qubit.json";
  CHECK(fs::exists(fx));
  CHECK(std::system((cli + " evaluate " + fx.string() + " --model DampingParallel --p 0.5 > /dev/null").c_str()) == 0);
  CHECK(std::system((cli + " decompose " + fx.string() + " --out " + (dir / "iso.json").string() + " > /dev/null").c_str()) == 0);
}
