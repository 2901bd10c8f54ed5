#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

using json = nlohmann::ordered_json;

namespace {

const std::string kCli = DOSEADAPT_CLI_PATH;
const std::string kDataDir = DOSEADAPT_DATA_DIR;

int run_cli(const std::string& args, const std::string& out_file) {
    const std::string cmd = kCli + " " + args + " >" + out_file + " 2>&1";
    const int status = std::system(cmd.c_str());
    return status < 0 ? status : WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("analyze on the subject-level dataset emits a complete report") {
    const std::string out = "/tmp/doseadapt_cli_biom.json";
    int rc = run_cli("analyze " + kDataDir + "/biom.csv --umbrella -B 5000 --seed 4242"
                     " --delta 0.4 --always-fit",
                     out);
    REQUIRE(rc == 0);
    json report = json::parse(slurp(out));

    CHECK(report["tool"]["name"] == "doseadapt");
    REQUIRE(report["summaries"]["arms"].size() == 5);
    CHECK(report["summaries"]["arms"][0]["n"] == 20);
    CHECK(std::fabs(report["statistic"]["t_value"].get<double>() - 3.518) < 0.005);
    CHECK(report["permutation"]["p_value"].get<double>() < 0.01);
    CHECK(report["poc_shown"] == true);
    REQUIRE(report["fits"].size() == 6);
    CHECK(report["best_model"] == "emax");
    CHECK(report["fits"][0]["curve"]["dose"].size() == 101);
    CHECK(report["recommended_doses"].contains("diff_from_placebo"));

    // The report must survive a parse -> dump round trip unchanged.
    CHECK(json::parse(slurp(out)).dump(2) + "\n" == slurp(out));
}

TEST_CASE("analyze --summary skips permutation and honours the variance override") {
    const std::string out = "/tmp/doseadapt_cli_evo.json";
    int rc = run_cli("analyze " + kDataDir +
                     "/evocalcet_summary.csv --summary --direction decreasing"
                     " --pooled-variance 773.17 --always-fit --delta -10",
                     out);
    REQUIRE(rc == 0);
    json report = json::parse(slurp(out));

    CHECK(report["permutation"].is_null());
    CHECK(report["permutation_note"].is_string());
    CHECK(std::fabs(report["statistic"]["t_value"].get<double>() - 3.482) < 0.001);
    CHECK(report["best_model"] == "linear-log");
    const double cfb = report["recommended_doses"]["change_from_baseline"].get<double>();
    const double dfp = report["recommended_doses"]["diff_from_placebo"].get<double>();
    CHECK(std::fabs(cfb - 0.893) < 0.005);
    CHECK(std::fabs(dfp - 0.511) < 0.005);
}

TEST_CASE("plot-data curves has the dose grid plus one row per arm") {
    const std::string report = "/tmp/doseadapt_cli_plot_report.json";
    const std::string out = "/tmp/doseadapt_cli_plot.csv";
    REQUIRE(run_cli("analyze " + kDataDir + "/biom.csv --umbrella -B 1000 --always-fit",
                    report) == 0);
    REQUIRE(run_cli("plot-data " + report + " --what curves", out) == 0);
    auto lines = lines_of(slurp(out));
    REQUIRE(lines.size() == 1 + 101 + 5);
    CHECK(lines[0].rfind("dose,emax,linear-log,linear,exponential,quadratic,logistic,observed",
                         0) == 0);
}

TEST_CASE("power emits one CSV row per scenario x N x variant") {
    const std::string out = "/tmp/doseadapt_cli_power.csv";
    int rc = run_cli("power --scenario Scenario10 --n 25,50 --nsim 20 --nperm 200"
                     " --constraint both --seed 7",
                     out);
    REQUIRE(rc == 0);
    auto lines = lines_of(slurp(out));
    REQUIRE(lines.size() == 1 + 4);
    CHECK(lines[0] == "scenario,constraint_variant,N,n_sim,n_perm,alpha,power,mc_se,seed");
    CHECK(lines[1].rfind("Scenario10,umbrella,25,", 0) == 0);
    CHECK(lines[4].rfind("Scenario10,full-chain,50,", 0) == 0);

    // JSON form feeds plot-data power.
    const std::string jout = "/tmp/doseadapt_cli_power.json";
    REQUIRE(run_cli("power --scenario Scenario10 --n 25,50 --nsim 20 --nperm 200"
                    " --constraint both --seed 7 --json",
                    jout) == 0);
    const std::string pout = "/tmp/doseadapt_cli_power_matrix.csv";
    REQUIRE(run_cli("plot-data " + jout + " --what power", pout) == 0);
    auto matrix = lines_of(slurp(pout));
    REQUIRE(matrix.size() == 1 + 2);
    CHECK(matrix[0] == "scenario,constraint_variant,N=25,N=50");
}

TEST_CASE("bad input exits with a nonzero diagnostic code") {
    const std::string out = "/tmp/doseadapt_cli_err.txt";
    CHECK(run_cli("analyze /tmp/doseadapt_no_such_file.csv", out) == 2);
    CHECK(run_cli("power --scenario NoSuchScenario --nsim 20 --nperm 200 --n 25", out) == 2);
    CHECK(slurp(out).rfind("error:", 0) == 0);
}
