#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tnale/io.hpp"

namespace fs = std::filesystem;
using tnale::io::Json;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("tnale_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args) {
        const std::string cmd = std::string(TNALE_CLI_PATH) + " " + args + " >" + (dir_ / "stdout.txt").string() +
                                " 2>" + (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string p(const std::string& rel) const { return (dir_ / rel).string(); }

    static std::string slurp(const fs::path& f) {
        std::ifstream is(f, std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    }

    std::string generate(const std::string& out, const std::string& extra = "") {
        EXPECT_EQ(run("generate --template tr --order 4 --dim 3 --rank-lo 1 --rank-hi 2 --seed 3 --out " + p(out) + " " +
                      extra),
                  0);
        return p(out);
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateWritesDecodableFiles) {
    ASSERT_EQ(run("generate --template tr --order 8 --dim 3 --rank-lo 1 --rank-hi 4 --permute --seed 7 --out " + p("g")),
              0);
    const auto t = tnale::io::load_tnsr(p("g/target.tnsr"));
    EXPECT_EQ(t.dims(), tnale::Shape(8, 3));
    const auto truth = tnale::io::structure_from_json(tnale::io::read_json(p("g/truth.json")));
    EXPECT_EQ(truth.n_vertices(), 8u);
    const Json m = tnale::io::read_json(p("g/manifest.json"));
    EXPECT_EQ(m["command"], "generate");
    EXPECT_EQ(m["seed"], 7);
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("generate --template tr --dim 3 --out " + p("x")), 2);
    EXPECT_EQ(run("generate --template nope --order 4 --out " + p("x")), 2);
    EXPECT_EQ(run("search --algo genetic --input a --template tr --out " + p("x")), 2);
    EXPECT_EQ(run("search --algo tnale --input a --template tr --budget 0 --out " + p("x")), 2);
    EXPECT_EQ(run(""), 2);
}

TEST_F(Cli, RuntimeErrorsExitOne) {
    EXPECT_EQ(run("search --algo tnale --input " + p("missing.tnsr") + " --template tr --out " + p("x")), 1);
}

TEST_F(Cli, GenerateIsReproducible) {
    generate("a");
    generate("b");
    EXPECT_EQ(slurp(p("a/target.tnsr")), slurp(p("b/target.tnsr")));
    EXPECT_EQ(slurp(p("a/truth.json")), slurp(p("b/truth.json")));
}

TEST_F(Cli, ConfigFileMirrorsFlags) {
    generate("a");
    std::ofstream(p("run.json")) << R"({"template": "tr", "order": 4, "dim": 3, "rank-lo": 1, "rank-hi": 2, "seed": 3})";
    ASSERT_EQ(run("generate --config " + p("run.json") + " --out " + p("c")), 0);
    EXPECT_EQ(slurp(p("a/target.tnsr")), slurp(p("c/target.tnsr")));
    std::ofstream(p("bad.json")) << "[1, 2]";
    EXPECT_EQ(run("generate --config " + p("bad.json") + " --out " + p("d")), 2);
}

TEST_F(Cli, SearchBudgetAndReproducibility) {
    const std::string g = generate("g");
    const std::string common = "search --algo tnale --input " + g + "/target.tnsr --template tr --truth " + g +
                               "/truth.json --budget 10 --solver-iters 200 --seed 1 --out ";
    ASSERT_EQ(run(common + p("s1")), 0);
    ASSERT_EQ(run(common + p("s2")), 0);
    const auto rows = tnale::io::load_trace_csv(p("s1/trace.csv"));
    std::size_t explicit_rows = 0;
    for (const auto& r : rows) explicit_rows += r.estimated ? 0 : 1;
    EXPECT_LE(explicit_rows, 10u);
    EXPECT_EQ(slurp(p("s1/trace.csv")), slurp(p("s2/trace.csv")));

    Json r1 = tnale::io::read_json(p("s1/result.json"));
    Json r2 = tnale::io::read_json(p("s2/result.json"));
    EXPECT_LE(r1["n_eval"].get<std::size_t>(), 10u);
    EXPECT_TRUE(r1.contains("eff"));
    EXPECT_TRUE(r1.contains("success"));
    r1.erase("wall_time_s");
    r2.erase("wall_time_s");
    EXPECT_EQ(r1.dump(), r2.dump());
}

TEST_F(Cli, BruteRefusesLargeGrid) {
    ASSERT_EQ(run("generate --template tr --order 8 --dim 2 --rank-hi 2 --seed 1 --out " + p("g")), 0);
    EXPECT_EQ(run("search --algo brute --input " + p("g/target.tnsr") + " --template tr --out " + p("s")), 1);
    EXPECT_NE(slurp(p("stderr.txt")).find("refused"), std::string::npos);
}

TEST_F(Cli, LandscapeOnInstance) {
    const std::string g = generate("g");
    ASSERT_EQ(run("landscape --input " + g + "/target.tnsr --template tr --center-ranks 2,2,2,2 --radius 1 --rank-lo 1 "
                  "--rank-hi 3 --spot-checks 20 --out " + p("l")),
              0);
    const Json s = tnale::io::read_json(p("l/spectra.json"));
    EXPECT_EQ(s["modes"].size(), 4u);
    EXPECT_TRUE(s["spot_check"]["passed"].get<bool>());
    EXPECT_EQ(tnale::io::load_tnsr(p("l/landscape.tnsr")).dims(), (tnale::Shape{3, 3, 3, 3}));

    ASSERT_EQ(run("landscape --input " + g + "/target.tnsr --template tr --center-ranks 2,2,2,2 --radius 0 --graph-mode "
                  "--out " + p("lg")),
              0);
    EXPECT_EQ(tnale::io::read_json(p("lg/spectra.json"))["modes"].size(), 5u);
}

TEST_F(Cli, LandscapeSeparableFixtureAgrees) {
    ASSERT_EQ(run("landscape --fixture separable --fixture-order 5 --fixture-size 5 --seed 2 --out " + p("f")), 0);
    const Json s = tnale::io::read_json(p("f/spectra.json"));
    EXPECT_TRUE(s["min_entry"]["agree"].get<bool>());
    EXPECT_LE(s["min_entry"]["ale_reads"].get<std::size_t>(), 25u);
}

TEST_F(Cli, ReportMergesTraces) {
    const std::string g = generate("g");
    const std::string common =
        "search --input " + g + "/target.tnsr --template tr --budget 5 --solver-iters 100 --truth " + g + "/truth.json ";
    ASSERT_EQ(run(common + "--algo tnale --out " + p("runs/a")), 0);
    ASSERT_EQ(run(common + "--algo tnls --samples 3 --out " + p("runs/b")), 0);
    ASSERT_EQ(run("report " + p("runs") + " --out " + p("r")), 0);
    std::ifstream is(p("r/curves.csv"));
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "series,algorithm,eval_index,log_best_objective");
    std::set<std::string> series;
    while (std::getline(is, line)) series.insert(line.substr(0, line.find(',')));
    EXPECT_EQ(series.size(), 2u);
    const Json summary = tnale::io::read_json(p("r/summary.json"));
    ASSERT_EQ(summary.size(), 2u);
    EXPECT_NE(summary[0]["cell"].get<std::string>().find('['), std::string::npos);

    fs::create_directories(p("empty"));
    EXPECT_EQ(run("report " + p("empty") + " --out " + p("r2")), 2);
}
