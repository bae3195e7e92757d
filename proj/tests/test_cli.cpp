#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "maddr/cli.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using maddr::run_cli;

namespace {

struct Result {
    int code{0};
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "maddr");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::size_t count_lines(const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("discover lists three paths per source") {
    const auto r = cli({"discover", "--scenario", testing::scenario_file("maddr13"), "--format", "csv"});
    CHECK(r.code == maddr::kExitOk);
    CHECK(count_lines(r.out) == 1 + 9);
    CHECK(r.out.find("1-7-8-9-6") != std::string::npos);
    const auto text = cli({"discover", "--scenario", testing::scenario_file("maddr13")});
    CHECK(text.out.find("K_r=") != std::string::npos);
}

TEST_CASE("allocate reproduces the worked example") {
    const auto r = cli({"allocate", "--scenario", testing::scenario_file("maddr13"), "--source", "3",
                        "--packets", "100", "--scheme", "3", "--format", "csv"});
    CHECK(r.code == maddr::kExitOk);
    CHECK(r.out.find(",45") != std::string::npos);
    CHECK(r.out.find(",35") != std::string::npos);
    CHECK(r.out.find(",20") != std::string::npos);
    const auto eq = cli({"allocate", "--scenario", testing::scenario_file("maddr13"), "--source", "3",
                         "--packets", "99", "--scheme", "2", "--format", "csv"});
    CHECK(count_lines(eq.out) == 4);
    CHECK(eq.out.find(",34") == std::string::npos);
}

TEST_CASE("allocate with probed contention") {
    const auto r = cli({"allocate", "--scenario", testing::scenario_file("maddr13"), "--packets",
                        "1000", "--choke", "--probe-at", "1.0", "--format", "csv"});
    CHECK(r.code == maddr::kExitOk);
    CHECK(count_lines(r.out) == 1 + 9);
}

TEST_CASE("run writes byte-identical outputs") {
    TempDir a("maddr_cli_a");
    TempDir b("maddr_cli_b");
    for (const auto* d : {&a, &b}) {
        const auto r = cli({"run", "--scenario", testing::scenario_file("maddr13"), "--out",
                            d->path.string(), "--trace", "--format", "csv"});
        REQUIRE(r.code == maddr::kExitOk);
    }
    for (const char* f : {"metrics.csv", "sources.csv", "trace.csv", "summary.txt"}) {
        CHECK_MESSAGE(fs::exists(a.path / f), f);
        CHECK(slurp(a.path / f) == slurp(b.path / f));
    }
    CHECK(slurp(a.path / "metrics.csv").find("scenario_hash") != std::string::npos);
}

TEST_CASE("missing scenario fails without output") {
    TempDir d("maddr_cli_missing");
    const auto r = cli({"run", "--scenario", "/no/such/file.json", "--out", d.path.string()});
    CHECK(r.code != maddr::kExitOk);
    CHECK_FALSE(r.err.empty());
    CHECK_FALSE(fs::exists(d.path));
}

TEST_CASE("disconnected source is a scenario error") {
    TempDir d("maddr_cli_disc");
    fs::create_directories(d.path);
    std::ofstream(d.path / "s.json") << R"({"nodes": [{"id": 1, "x": 0, "y": 0}, {"id": 2, "x": 9, "y": 0}],
                                           "sink": 2, "sources": [{"id": 1, "packets": 3}]})";
    const auto r = cli({"discover", "--scenario", (d.path / "s.json").string()});
    CHECK(r.code == maddr::kExitScenario);
    CHECK(r.err.find("1") != std::string::npos);
    const auto run = cli({"run", "--scenario", (d.path / "s.json").string(), "--out",
                          (d.path / "out").string()});
    CHECK(run.code == maddr::kExitScenario);
    CHECK_FALSE(fs::exists(d.path / "out"));
}

TEST_CASE("livelock is a simulation error") {
    TempDir d("maddr_cli_cap");
    fs::create_directories(d.path);
    maddr::Scenario s = testing::load("maddr13");
    s.engine.event_cap = 10;
    maddr::save_scenario(s, d.path / "s.json");
    const auto r = cli({"run", "--scenario", (d.path / "s.json").string(), "--out",
                        (d.path / "out").string()});
    CHECK(r.code == maddr::kExitSimulation);
    CHECK_FALSE(fs::exists(d.path / "out"));
}

TEST_CASE("usage errors") {
    CHECK(cli({}).code == maddr::kExitUsage);
    CHECK(cli({"bogus"}).code == maddr::kExitUsage);
    CHECK(cli({"allocate", "--scenario", testing::scenario_file("maddr13"), "--scheme", "4"}).code ==
          maddr::kExitUsage);
    CHECK(cli({"run", "--scenario", testing::scenario_file("maddr13"), "--format", "xml"}).code ==
          maddr::kExitUsage);
    CHECK(cli({"--help"}).code == maddr::kExitOk);
}

TEST_CASE("experiment suite reports its checks") {
    TempDir d("maddr_cli_exp");
    const auto r = cli({"experiment", "--scenario", testing::scenario_file("single_source_5path"),
                        "--suite", "schemes", "--packets", "100,200", "--out", d.path.string(),
                        "--format", "csv", "--plot-data"});
    CHECK(r.code == maddr::kExitOk);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(fs::exists(d.path / "checks.csv"));
    CHECK(fs::exists(d.path / "schemes.csv"));
}

TEST_CASE("gen-topology") {
    TempDir d("maddr_cli_gen");
    fs::create_directories(d.path);
    const auto a = cli({"gen-topology", "--count", "2", "--width", "1", "--height", "1", "--radius",
                        "2", "--seed", "4", "--out", (d.path / "a.json").string()});
    CHECK(a.code == maddr::kExitOk);
    CHECK(a.err.find("warning") == std::string::npos);
    const auto b = cli({"gen-topology", "--count", "1000", "--seed", "4", "--out",
                        (d.path / "b.json").string()});
    CHECK(b.code == maddr::kExitOk);
    CHECK(b.err.find("warning") != std::string::npos);
    cli({"gen-topology", "--count", "1000", "--seed", "4", "--out", (d.path / "c.json").string()});
    CHECK(slurp(d.path / "b.json") == slurp(d.path / "c.json"));
    CHECK(maddr::load_scenario(d.path / "a.json").nodes.size() == 2);
}

TEST_CASE("installed binary maps errors to exit codes") {
    const std::string cmd = std::string(MADDR_CLI) + " run --scenario /no/such.json 2>/dev/null";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) != 0);
    const std::string ok = std::string(MADDR_CLI) + " discover --scenario " +
                           testing::scenario_file("maddr13") + " >/dev/null";
    const int st2 = std::system(ok.c_str());
    REQUIRE(WIFEXITED(st2));
    CHECK(WEXITSTATUS(st2) == 0);
}
