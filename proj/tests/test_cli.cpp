#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nilcorr/serialize.hpp"

namespace fs = std::filesystem;
using namespace nilcorr;

namespace {

struct RunResult {
    int exit_code;
    std::string stderr_text;
};

RunResult run_cli(const std::string& args) {
    fs::path errfile = fs::temp_directory_path() / "nilcorr_cli_err.txt";
    std::string cmd = std::string(NILCORR_CLI_PATH) + " " + args + " 2>" + errfile.string();
    int rc = std::system(cmd.c_str());
    std::ifstream err(errfile);
    std::stringstream ss;
    ss << err.rdbuf();
    return RunResult{WEXITSTATUS(rc), ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path config_dir() { return fs::path(NILCORR_CONFIG_DIR); }

} // namespace

TEST_CASE("selftest passes") {
    auto r = run_cli("selftest");
    CHECK(r.exit_code == 0);
}

TEST_CASE("decompose run: skew example emits CSVs and a null report") {
    fs::path out = fs::temp_directory_path() / "nilcorr_cli_skew";
    fs::remove_all(out);
    auto r = run_cli("decompose --config " + (config_dir() / "decompose_skew.json").string() +
                     " --out " + out.string() + " --seed 7 --range -8..8");
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(out / "correlation.csv"));
    CHECK(fs::exists(out / "nil.csv"));
    CHECK(fs::exists(out / "null.csv"));
    Json report = Json::parse(slurp(out / "report.json"));
    CHECK(report.at("verdict") == "null");
    // null.csv: first column n, value 1 at n=0, 0 elsewhere
    std::string csv = slurp(out / "null.csv");
    CHECK(csv.rfind("n_1,re,im\n", 0) == 0);
    CHECK(csv.find("0,1,0\n") != std::string::npos);
}

TEST_CASE("byte-identical outputs for a fixed seed") {
    fs::path out1 = fs::temp_directory_path() / "nilcorr_cli_a";
    fs::path out2 = fs::temp_directory_path() / "nilcorr_cli_b";
    fs::remove_all(out1);
    fs::remove_all(out2);
    std::string cfg = (config_dir() / "decompose_rotation.json").string();
    REQUIRE(run_cli("decompose --config " + cfg + " --out " + out1.string() + " --seed 99").exit_code == 0);
    REQUIRE(run_cli("decompose --config " + cfg + " --out " + out2.string() + " --seed 99").exit_code == 0);
    CHECK(slurp(out1 / "nil.csv") == slurp(out2 / "nil.csv"));
    CHECK(slurp(out1 / "correlation.csv") == slurp(out2 / "correlation.csv"));
    CHECK(slurp(out1 / "report.json") == slurp(out2 / "report.json"));
}

TEST_CASE("validation failures exit 2 with structured stderr") {
    fs::path bad = fs::temp_directory_path() / "nilcorr_bad.json";
    {
        std::ofstream out(bad);
        out << R"({"schema_version": 1,
                   "basis": {"symbols": []},
                   "nilseq": {"function": {"presentation": {"kind": "torus", "dim": 1},
                                            "terms": [{"coeff": {"re": 1}, "freq": ["1"]}]},
                              "sequence": {"presentation": {"kind": "torus", "dim": 1}, "d": 1,
                                           "factors": [{"base": [{"q0": "0", "terms": {"b9": "1"}}],
                                                        "exponent": {"d": 1, "terms": []}}]}}})";
    }
    auto r = run_cli("nilseq --config " + bad.string() + " --out " +
                     (fs::temp_directory_path() / "nilcorr_bad_out").string());
    CHECK(r.exit_code == 2);
    Json err = Json::parse(r.stderr_text);
    CHECK(err.at("code") == "Validation");
    CHECK(err.at("location").get<std::string>().find("b9") != std::string::npos);
}

TEST_CASE("unknown schema version exits 2") {
    fs::path bad = fs::temp_directory_path() / "nilcorr_badver.json";
    {
        std::ofstream out(bad);
        out << R"({"schema_version": 99})";
    }
    auto r = run_cli("density --config " + bad.string());
    CHECK(r.exit_code == 2);
}

TEST_CASE("wiener run on the exact example") {
    fs::path out = fs::temp_directory_path() / "nilcorr_cli_wiener";
    fs::remove_all(out);
    auto r = run_cli("wiener --config " + (config_dir() / "wiener_exact.json").string() + " --out " +
                     out.string() + " --range -32..33 --schedule 100,1000");
    REQUIRE(r.exit_code == 0);
    Json report = Json::parse(slurp(out / "report.json"));
    CHECK(report.at("atomic_mass").get<double>() == Catch::Approx(0.5));
    std::string residual = slurp(out / "residual.csv");
    CHECK(residual.find("0,0.5,0\n") != std::string::npos);
}

TEST_CASE("density run with a nilsequence source in plain mode") {
    fs::path out = fs::temp_directory_path() / "nilcorr_cli_density";
    fs::remove_all(out);
    auto r = run_cli("density --config " + (config_dir() / "density_rotation_plain.json").string() +
                     " --out " + out.string() + " --seed 3");
    REQUIRE(r.exit_code == 0);
    Json report = Json::parse(slurp(out / "report.json"));
    CHECK(report.at("verdict") == "null");
}

TEST_CASE("gpoly run evaluates bracket polynomials") {
    fs::path out = fs::temp_directory_path() / "nilcorr_cli_gpoly";
    fs::remove_all(out);
    auto r = run_cli("gpoly --config " + (config_dir() / "gpoly_frac.json").string() + " --out " +
                     out.string() + " --range 0..4");
    REQUIRE(r.exit_code == 0);
    std::string csv = slurp(out / "values.csv");
    CHECK(csv.rfind("n_1,re,im\n", 0) == 0);
    CHECK(csv.find("0,0,0\n") != std::string::npos);
}
