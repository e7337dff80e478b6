#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "fairtax/io.hpp"

using Catch::Approx;

namespace {

struct CliResult {
  int exit_code;
  std::string out;
};

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args, const std::string& env = "") {
  const std::string out_path = "cli_stdout.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + FAIRTAX_CLI_PATH +
                          " " + args + " > " + out_path + " 2> cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(out_path)};
}

nlohmann::json parse_json(const std::string& text) {
  return nlohmann::json::parse(text);
}

}  // namespace

TEST_CASE("analyze command") {
  SECTION("uniform marginal") {
    const auto r = run_cli("analyze --marginal uniform");
    REQUIRE(r.exit_code == 0);
    const auto j = parse_json(r.out);
    REQUIRE(j["theta_star"].get<double>() == Approx(0.5).margin(1e-8));
    REQUIRE(j["regularity"]["strongly_regular"].get<bool>());
  }
  SECTION("power and truncated exponential regularity") {
    const auto power = parse_json(run_cli("analyze --marginal power:2").out);
    REQUIRE(power["regularity"]["strongly_regular"].get<bool>());
    const auto texp = run_cli("analyze --marginal texp:1");
    REQUIRE(texp.exit_code == 0);
    REQUIRE_FALSE(
        parse_json(texp.out)["regularity"]["strongly_regular"].get<bool>());
  }
  SECTION("csv table parses back") {
    const auto r = run_cli("analyze --marginal uniform --format csv --table-grid 64");
    REQUIRE(r.exit_code == 0);
    std::istringstream is(r.out);
    const auto table = fairtax::read_csv(is);
    REQUIRE(table.header ==
            std::vector<std::string>{"theta", "cdf", "pdf", "psi", "W"});
    REQUIRE(table.rows.size() == 65);
    REQUIRE(table.rows[32][3] == Approx(0.0).margin(1e-9));  // psi(1/2)
  }
  SECTION("exit codes: invalid spec 2, precondition failure 3") {
    REQUIRE(run_cli("analyze --marginal nonsense").exit_code == 2);
    REQUIRE(run_cli("analyze --marginal power:0.5").exit_code == 3);
    REQUIRE(run_cli("analyze").exit_code == 2);  // missing required option
  }
}

TEST_CASE("frontier command") {
  SECTION("interval JSON") {
    const auto r = run_cli("frontier --marginal uniform");
    REQUIRE(r.exit_code == 0);
    const auto j = parse_json(r.out);
    REQUIRE(j["k_low"].get<double>() == Approx(2.0 / 3.0).margin(1e-8));
    REQUIRE(j["k_high"].get<double>() == Approx(0.75).margin(1e-8));
    REQUIRE(j["strongly_regular"].get<bool>());
  }
  SECTION("sweep CSV has the requested rows and parses back") {
    const auto r = run_cli(
        "frontier --marginal uniform --sweep 11 --gini-grid 256 "
        "--out frontier.json --sweep-out sweep.csv");
    REQUIRE(r.exit_code == 0);
    const auto table = fairtax::read_csv_file("sweep.csv");
    REQUIRE(table.header.size() == 8);
    REQUIRE(table.header[0] == "k");
    REQUIRE(table.header[6] == "gini");
    REQUIRE(table.rows.size() == 11);
    REQUIRE(table.rows.front()[0] == Approx(2.0 / 3.0).margin(1e-8));
    REQUIRE(table.rows.back()[0] == Approx(0.75).margin(1e-8));
  }
  SECTION("non-strongly-regular marginals warn but succeed") {
    REQUIRE(run_cli("frontier --marginal texp:1").exit_code == 0);
  }
  SECTION("irregular marginals are a precondition failure") {
    REQUIRE(run_cli("frontier --marginal power:0.5").exit_code == 3);
  }
}

TEST_CASE("couplings command") {
  SECTION("gaussian concordance comparison") {
    const auto r = run_cli(
        "couplings --marginals uniform,uniform "
        "--compare gaussian:0.8 gaussian:0.2 --grid 64");
    REQUIRE(r.exit_code == 0);
    REQUIRE(parse_json(r.out)["dominates"].get<bool>());
  }
  SECTION("battery entries are emitted with gaps") {
    const auto r = run_cli(
        "couplings --marginals uniform,uniform "
        "--battery monotone independent --grid 128 --count 4 --seed 1");
    REQUIRE(r.exit_code == 0);
    const auto j = parse_json(r.out);
    REQUIRE(j["entries"].size() == 7);  // xy, min, exp + 4 indicators
    REQUIRE(j["entries"][0]["function"].get<std::string>() == "xy");
    REQUIRE(j["entries"][0]["gap"].get<double>() > 0.0);
  }
  SECTION("samples export as CSV and parse back") {
    const auto r = run_cli(
        "couplings --marginals uniform,uniform --sample antitone "
        "--count 50 --seed 3");
    REQUIRE(r.exit_code == 0);
    std::istringstream is(r.out);
    const auto table = fairtax::read_csv(is);
    REQUIRE(table.header == std::vector<std::string>{"x1", "x2"});
    REQUIRE(table.rows.size() == 50);
    for (const auto& row : table.rows) {
      REQUIRE(row[0] + row[1] == Approx(1.0).margin(1e-9));
    }
  }
}

TEST_CASE("oracle command") {
  const auto r = run_cli(
      "oracle --marginal uniform --grid 16 --random 20 --seed 0 --out oracle.json");
  REQUIRE(r.exit_code == 0);
  const auto j = parse_json(slurp("oracle.json"));
  REQUIRE(j["frontier_undominated"].get<bool>());
  REQUIRE(j["monopoly_dominated_by_frontier"].get<bool>());
  REQUIRE(j["undominated_all_thresholds"].get<bool>());
}

TEST_CASE("reproduce-section5 command") {
  const auto r = run_cli("reproduce-section5 --out section5.json");
  REQUIRE(r.exit_code == 0);
  const auto j = parse_json(slurp("section5.json"));
  REQUIRE(j["all_pass"].get<bool>());
  REQUIRE(j["coupling_curves"]["antitone_max_deviation"].get<double>() < 1e-3);
  REQUIRE(j["supra_pricing"]["margin"].get<double>() ==
          Approx(1.0 / 6.0).margin(1e-8));
}

TEST_CASE("determinism: identical config gives byte-identical files") {
  const std::string args =
      "couplings --marginals uniform,power:2 --sample gaussian:0.4 "
      "--count 200 --seed 9";
  const auto first = run_cli(args);
  const auto second = run_cli(args);
  REQUIRE(first.exit_code == 0);
  REQUIRE(first.out == second.out);

  const auto oracle_a = run_cli(
      "oracle --marginal power:2 --grid 16 --random 10 --seed 4");
  const auto oracle_b = run_cli(
      "oracle --marginal power:2 --grid 16 --random 10 --seed 4");
  REQUIRE(oracle_a.out == oracle_b.out);
}

TEST_CASE("FAIRTAX_OUT_DIR resolves relative outputs") {
  std::system("mkdir -p outdir_test");
  const auto r = run_cli("frontier --marginal uniform --out iv.json",
                         "FAIRTAX_OUT_DIR=outdir_test");
  REQUIRE(r.exit_code == 0);
  const auto j = parse_json(slurp("outdir_test/iv.json"));
  REQUIRE(j["k_low"].get<double>() == Approx(2.0 / 3.0).margin(1e-8));
}

TEST_CASE("mechanism JSON round trip") {
  const auto u = fairtax::uniform_marginal();
  const fairtax::MarketMechanism mech{
      fairtax::AllocationRule::threshold(2.0 / 3.0),
      fairtax::TaxPolicy::excise(fairtax::excise_for_threshold(u, 2.0 / 3.0)),
      u};
  const auto j = fairtax::mechanism_to_json(mech);
  const auto back = fairtax::mechanism_from_json(j);
  REQUIRE(back.allocation.threshold_point() == Approx(2.0 / 3.0));
  REQUIRE(back.tax.as_excise().per_unit == Approx(1.0 / 3.0).margin(1e-12));
  REQUIRE(back.marginal.name == "uniform");

  const fairtax::MarketMechanism stepped{
      fairtax::AllocationRule({0.0, 0.4}, {0.1, 0.6}),
      fairtax::tax_for_allocation(u, fairtax::AllocationRule({0.0, 0.4}, {0.1, 0.6})),
      u};
  const auto j2 = fairtax::mechanism_to_json(stepped);
  const auto back2 = fairtax::mechanism_from_json(j2);
  REQUIRE(back2.allocation.values() == stepped.allocation.values());
  for (double q : {0.0, 0.3, 0.7, 1.0}) {
    REQUIRE(back2.tax(q) == Approx(stepped.tax(q)).margin(1e-9));
  }
}

TEST_CASE("tax schedule CSV round trip") {
  const auto u = fairtax::uniform_marginal();
  const auto q = fairtax::AllocationRule::from_function(
      [](double t) { return t * t; }, 64);
  const auto policy = fairtax::tax_for_allocation(u, q);
  {
    std::ofstream os("tax_schedule.csv");
    fairtax::write_tax_csv(os, policy);
  }
  const auto back = fairtax::read_tax_csv("tax_schedule.csv");
  for (double x : {0.0, 0.2, 0.5, 0.9, 1.0}) {
    REQUIRE(back(x) == Approx(policy(x)).margin(1e-9));
  }
}
