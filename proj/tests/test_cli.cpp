#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string cli = DCIO_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("dcio_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_tiny_config(const fs::path& p) {
    std::ofstream out(p);
    out << R"({"N": 2, "N_J": 0, "M": 2, "N_b": 1, "P_total": 2.0, "mode": "full"})";
}

void write_small_config(const fs::path& p, double p_total) {
    std::ofstream out(p);
    out << R"({"N": 8, "N_J": 3, "M": 4, "N_b": 2, "P_total": )" << p_total
        << R"(, "mode": "full"})";
}

}  // namespace

TEST_CASE("design/verify/label/ber round trip on the tiny instance") {
    TempDir tmp;
    const auto cfg = tmp.path / "cfg.json";
    write_tiny_config(cfg);
    const auto out = tmp.path / "run1";

    REQUIRE(run("design --config " + cfg.string() + " --restarts 3 --seed 5 --out " +
                out.string()) == 0);
    REQUIRE(fs::exists(out / "constellation.txt"));
    REQUIRE(fs::exists(out / "design_report.txt"));

    // audit info embedded
    const std::string cons = slurp(out / "constellation.txt");
    CHECK(cons.find("# config:") != std::string::npos);
    CHECK(cons.find("# seed: 5") != std::string::npos);

    CHECK(run("verify --constellation " + (out / "constellation.txt").string() + " --config " +
              cfg.string()) == 0);
    CHECK(run("label --constellation " + (out / "constellation.txt").string() + " --seed 9") == 0);

    const auto csv = tmp.path / "ber.csv";
    REQUIRE(run("ber --constellation " + (out / "constellation.txt").string() + " --config " +
                cfg.string() + " --snr-grid 60 --trials 20000 --seed 3 --out " + csv.string()) ==
            0);
    std::ifstream in(csv);
    std::string line, data;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0) continue;
        if (!header_seen) {
            CHECK(line == "snr_db,ser,ber,trials,ci95,scheme,power");
            header_seen = true;
            continue;
        }
        data = line;
    }
    REQUIRE(header_seen);
    // noiseless point: ser and ber are exactly zero
    CHECK(data.find(",0,0,") != std::string::npos);
}

TEST_CASE("identical seeds give byte-identical outputs") {
    TempDir tmp;
    const auto cfg = tmp.path / "cfg.json";
    write_tiny_config(cfg);
    const auto out_a = tmp.path / "a", out_b = tmp.path / "b";
    REQUIRE(run("design --config " + cfg.string() + " --restarts 3 --seed 42 --out " +
                out_a.string()) == 0);
    REQUIRE(run("design --config " + cfg.string() + " --restarts 3 --seed 42 --out " +
                out_b.string()) == 0);
    CHECK(slurp(out_a / "constellation.txt") == slurp(out_b / "constellation.txt"));

    const auto csv_a = tmp.path / "a.csv", csv_b = tmp.path / "b.csv";
    const std::string ber_args = "--config " + cfg.string() +
                                 " --snr-grid 8,10,12 --trials 30000 --seed 17 --out ";
    REQUIRE(run("ber --constellation " + (out_a / "constellation.txt").string() + " " + ber_args +
                csv_a.string()) == 0);
    REQUIRE(run("ber --constellation " + (out_a / "constellation.txt").string() + " " + ber_args +
                csv_b.string()) == 0);
    CHECK(slurp(csv_a) == slurp(csv_b));
}

TEST_CASE("usage errors exit with status 1") {
    TempDir tmp;
    CHECK(run("design --config " + (tmp.path / "missing.json").string() + " --out " +
              (tmp.path / "x").string()) == 1);
    CHECK(run("nonsense") == 1);
    const auto cfg = tmp.path / "bad.json";
    {
        std::ofstream out(cfg);  // invalid invariants: M != 2^Nb
        out << R"({"N": 8, "N_J": 3, "M": 64, "N_b": 5, "P_total": 10.0})";
    }
    CHECK(run("design --config " + cfg.string() + " --out " + (tmp.path / "y").string()) == 1);
}

TEST_CASE("infeasible designs exit with status 2") {
    TempDir tmp;
    const auto cfg = tmp.path / "cfg.json";
    {
        std::ofstream out(cfg);  // joint budget negative: M_f=4, 4*2 > 6
        out << R"({"N": 12, "N_J": 1, "M": 4, "N_b": 2, "P_total": 6.0, "P_indep": 2.0,)"
            << R"( "mode": "partial"})";
    }
    CHECK(run("design --config " + cfg.string() + " --restarts 1 --seed 1 --out " +
              (tmp.path / "out").string()) == 2);
}

TEST_CASE("compare runs at matched power and refuses mismatches") {
    TempDir tmp;
    const auto cfg = tmp.path / "cfg.json";
    write_small_config(cfg, 12.0 + 2.14 * 2.14);
    const auto out = tmp.path / "design";
    REQUIRE(run("design --config " + cfg.string() + " --restarts 2 --seed 3 --out " +
                out.string()) == 0);
    const std::string cons = (out / "constellation.txt").string();
    // matched power: DCO at bias 2.14 has power 16.58 under paper-sec4
    CHECK(run("compare --dcio " + cons + " --config " + cfg.string() +
              " --dco-bias 2.14 --target-ber 1e-4 --trials 0") == 0);
    // mismatched power refused as a usage error
    CHECK(run("compare --dcio " + cons + " --config " + cfg.string() +
              " --dco-bias 5.33 --target-ber 1e-4 --trials 0") == 1);
}
