#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qpfer/report_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("qpfer_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

int run_cli(const std::string& args, const fs::path& stdout_file) {
    const std::string cmd =
        std::string(QPFER_CLI_PATH) + " " + args + " > " + stdout_file.string() + " 2> /dev/null";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("report formatting: 12 significant digits, scientific below 1e-4, sorted keys") {
    using qpfer::format_double;
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(0.26) == "0.26");
    CHECK(format_double(1.0 / 3.0) == "0.333333333333");       // 12 significant digits
    CHECK(format_double(25.0 / 34.0) == "0.735294117647");
    CHECK(format_double(5e-5) == "5.00000000000e-05");          // scientific below 1e-4
    CHECK(format_double(-5e-5) == "-5.00000000000e-05");
    CHECK(format_double(1e-4) == "0.0001");
    CHECK(format_double(1234567.0) == "1234567");

    const std::string obj =
        qpfer::JsonObject{}.put("zeta", 1).put("alpha", 2).put("mid", 3).render();
    CHECK(obj == R"({"alpha":2,"mid":3,"zeta":1})");
}

TEST_CASE("verify-oracle passes and emits 16 rows") {
    TempDir tmp;
    const fs::path out = tmp.path / "oracle.json";
    REQUIRE(run_cli("verify-oracle", out) == 0);
    const json j = json::parse(slurp(out));
    CHECK(j.at("matches_reference").get<bool>());
    CHECK(j.at("rows").size() == 16);

    const fs::path csv = tmp.path / "oracle.csv";
    REQUIRE(run_cli("verify-oracle --format csv --out " + csv.string(), tmp.path / "log.txt") == 0);
    const std::string table = slurp(csv);
    CHECK(table.rfind("e1,e2,kept,bell,raw_error\n", 0) == 0);
    CHECK(table.find("Z,Z,1,phi+,I") != std::string::npos);
}

TEST_CASE("threshold command reports the four-state symmetric threshold") {
    TempDir tmp;
    const fs::path out = tmp.path / "threshold.json";
    REQUIRE(run_cli("threshold --family symmetric --variant four-state", out) == 0);
    const json j = json::parse(slurp(out));
    CHECK(std::abs(j.at("threshold_bit_flip_rate").get<double>() - 0.26) < 0.01);
    CHECK(j.at("spec_version").get<std::string>() == "1.0");
    CHECK(j.at("witness_schedule").contains("log10_reps"));
    CHECK(j.at("feasibility_scan").size() > 50);
}

TEST_CASE("threshold csv, sensitivity sweep and finite repetition cap") {
    TempDir tmp;
    const fs::path csv = tmp.path / "th.csv";
    REQUIRE(run_cli("threshold --family symmetric --variant four-state --format csv "
                    "--sensitivity --out " + csv.string(), tmp.path / "log") == 0);
    const std::string body = slurp(csv);
    CHECK(body.rfind("family,variant,q_star,threshold_bit_flip_rate,", 0) == 0);
    CHECK(body.find("r_max,g_max,eta,odd_reps_only,q_star") != std::string::npos);
    CHECK(body.find("symmetric,four-state,0.13") != std::string::npos);

    // a finite cap on the repetition count lowers the threshold
    const fs::path capped = tmp.path / "capped.json";
    REQUIRE(run_cli("threshold --family symmetric --variant four-state --r-max 2000001 --out " +
                        capped.string(), tmp.path / "log2") == 0);
    const json j = json::parse(slurp(capped));
    CHECK(j.at("r_max").get<std::uint64_t>() == 2000001);
    CHECK(j.at("threshold_bit_flip_rate").get<double>() < 0.25);
    CHECK(j.at("witness_schedule").at("reps").get<std::uint64_t>() > 0);  // representable under the cap
}

TEST_CASE("iterate command emits the decode row first") {
    TempDir tmp;
    const fs::path out = tmp.path / "iterate.csv";
    REQUIRE(run_cli("iterate --channel 0.7,0.1,0.1,0.1 --variant six-state --g 3 --reps 11 "
                    "--format csv",
                    out) == 0);
    const std::string csv = slurp(out);
    std::istringstream is(csv);
    std::string header, first;
    std::getline(is, header);
    std::getline(is, first);
    CHECK(header == "stage,p_I,p_x,p_y,p_z,survival,cumulative_yield");
    CHECK(first.rfind("decode,", 0) == 0);
    // first row rates are the decode map output 25/34, 7/34, 1/34, 1/34
    std::istringstream row(first);
    std::string tok;
    std::getline(row, tok, ',');
    std::getline(row, tok, ',');
    CHECK(std::abs(std::stod(tok) - 25.0 / 34.0) < 1e-9);
    std::getline(row, tok, ',');
    CHECK(std::abs(std::stod(tok) - 7.0 / 34.0) < 1e-9);
    // 1 decode row + 3 rejection rows
    int data_rows = 1;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) ++data_rows;
    CHECK(data_rows == 4);
}

TEST_CASE("iterate via family flags matches explicit rates") {
    TempDir tmp;
    const fs::path a = tmp.path / "a.json", b = tmp.path / "b.json";
    REQUIRE(run_cli("iterate --channel 0.7,0.1,0.1,0.1 --variant six-state --g 2 --reps 3", a) == 0);
    REQUIRE(run_cli("iterate --family symmetric --q 0.1 --variant six-state --g 2 --reps 3", b) == 0);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("simulate runs and reports json plus per-round csv") {
    TempDir tmp;
    const fs::path out = tmp.path / "sim.json";
    REQUIRE(run_cli("simulate --family symmetric --q 0.05 --variant four-state --n-codes 50000 "
                    "--g 2 --reps 3 --seed 42",
                    out) == 0);
    const json j = json::parse(slurp(out));
    CHECK(j.at("sent").get<std::int64_t>() == 50000);
    CHECK(j.at("per_round_empirical").size() == 2);
    CHECK_FALSE(j.at("aborted").get<bool>());

    const fs::path csv = tmp.path / "rounds.csv";
    REQUIRE(run_cli("simulate --family symmetric --q 0.05 --variant four-state --n-codes 50000 "
                    "--g 2 --reps 3 --seed 42 --format csv --out " +
                        csv.string(),
                    tmp.path / "log.txt") == 0);
    const std::string rounds = slurp(csv);
    CHECK(rounds.rfind("round,p_I,p_x,p_y,p_z,survivors\n", 0) == 0);
}

TEST_CASE("simulate is byte-identical across seeds, formats and worker counts") {
    TempDir tmp;
    const std::string base =
        "simulate --family symmetric --q 0.05 --variant four-state --n-codes 100000 --g 2 "
        "--reps 3";
    const fs::path a = tmp.path / "a.json", b = tmp.path / "b.json", c = tmp.path / "c.json";
    REQUIRE(run_cli(base + " --seed 42 --workers 1 --out " + a.string(), tmp.path / "la") == 0);
    REQUIRE(run_cli(base + " --seed 42 --workers 8 --out " + b.string(), tmp.path / "lb") == 0);
    REQUIRE(run_cli(base + " --seed 42 --workers 1 --out " + c.string(), tmp.path / "lc") == 0);
    const std::string ja = slurp(a);
    CHECK(ja == slurp(b));
    CHECK(ja == slurp(c));
    CHECK(!ja.empty());

    const fs::path d = tmp.path / "d.json";
    REQUIRE(run_cli(base + " --seed 43 --workers 1 --out " + d.string(), tmp.path / "ld") == 0);
    CHECK(slurp(d) != ja);
}

TEST_CASE("config file supplies defaults and flags override it") {
    TempDir tmp;
    const fs::path cfg = tmp.path / "cfg.json";
    {
        std::ofstream f(cfg);
        f << R"({"family":"symmetric","q":0.05,"variant":"four-state","n-codes":20000,"g":1,)"
          << R"("reps":3,"seed":7})";
    }
    const fs::path a = tmp.path / "a.json", b = tmp.path / "b.json", c = tmp.path / "c.json";
    REQUIRE(run_cli("simulate --config " + cfg.string(), a) == 0);
    REQUIRE(run_cli("simulate --family symmetric --q 0.05 --variant four-state --n-codes 20000 "
                    "--g 1 --reps 3 --seed 7",
                    b) == 0);
    CHECK(slurp(a) == slurp(b));

    // a flag wins over the config value
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --seed 8", c) == 0);
    CHECK(slurp(c) != slurp(a));
}

TEST_CASE("invalid input yields a nonzero exit and no payload") {
    TempDir tmp;
    CHECK(run_cli("threshold --family bogus", tmp.path / "x1") != 0);
    CHECK(run_cli("iterate --channel 0.5,0.5 --g 1 --reps 3", tmp.path / "x2") != 0);
    CHECK(run_cli("simulate --family symmetric --q 0.05 --n-codes 1000 --reps 2 --seed 1",
                  tmp.path / "x3") != 0);
    CHECK(run_cli("iterate --g 1 --reps 3", tmp.path / "x4") != 0);  // no channel given
}
