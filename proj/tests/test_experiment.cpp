#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "tdsmor/benchmarks.hpp"
#include "tdsmor/cli.hpp"
#include "tdsmor/errors.hpp"
#include "tdsmor/experiment.hpp"
#include "tdsmor/serialization.hpp"

using namespace tdsmor;

namespace {

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / ("tdsmor-cli-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tdsmor");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("input descriptors") {
  const InputSignal ramp = parse_input("ramp-sine 5 0.2", 1);
  CHECK(ramp(10)(0) == doctest::Approx(50.0 * std::sin(2.0)));
  const InputSignal two = parse_input("ramp-sine 0.05 0.2; exp -0.2", 2);
  CHECK(two(3)(1) == doctest::Approx(std::exp(-0.6)));
  CHECK(parse_input("zero", 3)(4).isZero(0.0));
  CHECK(parse_input("zero; exp 0", 2)(4)(1) == 1.0);
  CHECK_THROWS_AS(parse_input("ramp-sine 1", 1), ArgumentError);
  CHECK_THROWS_AS(parse_input("exp 1; exp 2", 1), ArgumentError);
  CHECK_THROWS_AS(parse_input("exp abc", 1), ArgumentError);
  CHECK_THROWS_AS(parse_input("square 1", 1), ArgumentError);

  const auto path = scratch_dir() / "u.csv";
  std::ofstream(path) << "# t rows\n1, 2\n3 4\n5,6\n";
  const InputSignal file = parse_input("file " + path.string(), 2);
  CHECK(file(1)(0) == 3.0);
  CHECK(file(2)(1) == 6.0);
  CHECK_THROWS_AS(file(3), ArgumentError);
}

TEST_CASE("number formatting is exact and locale independent") {
  for (double v : {0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0, 123456789.0}) {
    const std::string s = format_number(v);
    CHECK(s.find(',') == std::string::npos);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("comparison tables") {
  const Benchmark b = gen_random_stable({6, {1}, 3, 0.1, 1, 2});
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(6, 6);
  const ReducedSystem same = project_system(b.system, b.init, id, id, Method::dominant);
  const InputSignal u = parse_input("exp -0.1", 1);
  const Comparison cmp = compare_models(b.system, b.init, {same}, {"same"}, u, 40);
  CHECK(cmp.models[0].metrics.absolute.maxCoeff() <= 1e-10);
  const std::string csv = comparison_csv(cmp);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 41 + 1);
  CHECK(csv.substr(0, csv.find('\n')) == "t,y_full_1,y_full_2,same_y_1,same_y_2,same_abs_err");
  const auto summary = nlohmann::json::parse(comparison_json(cmp, "exp -0.1"));
  CHECK(summary["models"][0]["label"] == "same");
  CHECK(summary["models"][0]["rel_l2"].get<double>() <= 1e-12);

  const Benchmark other = gen_random_stable({6, {1}, 3, 0.1, 2, 2});
  const ReducedSystem wrong = project_system(other.system, other.init, id, id, Method::dominant);
  CHECK_THROWS_AS(compare_models(b.system, b.init, {wrong}, {"wrong"}, u, 40), ArgumentError);
}

TEST_CASE("selftest passes") { CHECK(run_selftest().passed()); }

TEST_CASE("command line round trip") {
  const auto dir = scratch_dir();
  const std::string sys = (dir / "random.bin").string();
  const std::string sys2 = (dir / "random2.bin").string();
  REQUIRE(run_cli({"generate", "--benchmark", "random", "--size", "12", "--delays", "1,2", "--seed", "7",
                   "--out", sys}) == cli::ok);
  REQUIRE(run_cli({"generate", "--benchmark", "random", "--size", "12", "--delays", "1,2", "--seed", "7",
                   "--out", sys2}) == cli::ok);
  CHECK(slurp(sys) == slurp(sys2));

  const std::string red = (dir / "red.json").string();
  const std::string report = (dir / "report.json").string();
  REQUIRE(run_cli({"reduce", "--system", sys, "--method", "combbt", "--order", "4", "--laguerre-K", "20",
                   "--discount", "0.5", "--out", red, "--format", "json", "--report", report}) == cli::ok);
  const auto rep = nlohmann::json::parse(slurp(report));
  CHECK(rep["result"]["r"] == 4);
  CHECK(rep["arguments"]["discount"] == 0.5);
  CHECK(rep["arguments"]["laguerre_K"] == 20);
  CHECK(load_model(red).reduced);

  const std::string walsh = (dir / "walsh.bin").string();
  REQUIRE(run_cli({"reduce", "--system", sys, "--method", "walsh", "--walsh-N", "8", "--input", "exp -0.1",
                   "--out", walsh, "--report", (dir / "w.json").string()}) == cli::ok);
  CHECK(load_model(walsh).system.states() <= 8 + 2 + 1);

  const std::string csv = (dir / "cmp.csv").string();
  const std::string summary = (dir / "cmp.json").string();
  REQUIRE(run_cli({"compare", "--system", sys, "--reduced", red, "--reduced", walsh, "--input", "exp -0.1",
                   "--horizon", "30", "--out", csv, "--summary", summary}) == cli::ok);
  const std::string table = slurp(csv);
  CHECK(std::count(table.begin(), table.end(), '\n') == 32);
  CHECK(nlohmann::json::parse(slurp(summary))["models"].size() == 2);

  const std::string sim = (dir / "sim.json").string();
  REQUIRE(run_cli({"simulate", "--system", red, "--horizon", "10", "--format", "json", "--out", sim}) == cli::ok);
  CHECK(nlohmann::json::parse(slurp(sim))["outputs"][0].size() == 11);

  CHECK(run_cli({"reduce", "--system", sys, "--method", "combbt"}) == cli::argument_error);
  CHECK(run_cli({"reduce", "--system", sys, "--method", "nope", "--order", "2"}) == cli::argument_error);
  CHECK(run_cli({"reduce", "--system", (dir / "missing.bin").string(), "--method", "combbt", "--order", "2"}) ==
        cli::io_error);
  CHECK(run_cli({"reduce", "--system", sys, "--method", "lifted-walsh", "--walsh-N", "8", "--lifted-cap", "5",
                 "--report", (dir / "l.json").string()}) == cli::capacity_error);
  CHECK(run_cli({"frobnicate"}) == cli::argument_error);
  std::filesystem::remove_all(dir);
}
