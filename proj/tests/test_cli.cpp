#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string l; std::getline(ss, l);) {
        if (!l.empty() && l.front() != '#') out.push_back(l);
    }
    return out;
}

std::size_t fields(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("imbtrade_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

// Runs imbtrade with the fixture config; returns the exit status.
int run(const fs::path& out, const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" IMBTRADE_PATH "\" --config \"" FIXTURE_CONFIG "\" --quiet --out \"" +
                            out.string() + "\" " + args + " > \"" + (out / "stdout.txt").string() + "\" 2> \"" +
                            (out / "stderr.txt").string() + "\"";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void pipeline(const fs::path& out) {
    ASSERT_EQ(run(out, "generate"), 0) << slurp(out / "stderr.txt");
    ASSERT_EQ(run(out, "train"), 0) << slurp(out / "stderr.txt");
}

} // namespace

TEST(Cli, GenerateTrainBacktestWritesLedger) {
    const auto out = scratch("smoke");
    pipeline(out);
    ASSERT_EQ(run(out, "backtest"), 0) << slurp(out / "stderr.txt");
    const auto ledger = lines(slurp(out / "ledger.csv"));
    // 4 days of quarter-hours, with the spring DST day still 96 UTC periods.
    ASSERT_EQ(ledger.size(), 1u + 4 * 96);
    EXPECT_EQ(fields(ledger.front()), 9u);
    EXPECT_TRUE(fs::exists(out / "report.csv"));
    EXPECT_TRUE(fs::exists(out / "daily.csv"));
    EXPECT_TRUE(fs::exists(out / "alpha.csv"));
    EXPECT_EQ(lines(slurp(out / "daily.csv")).size(), 5u);
}

TEST(Cli, BenchmarkEmitsFourByFourTable) {
    const auto out = scratch("bench");
    pipeline(out);
    ASSERT_EQ(run(out, "benchmark"), 0) << slurp(out / "stderr.txt");
    const auto t = lines(slurp(out / "benchmark.csv"));
    ASSERT_EQ(t.size(), 5u);
    EXPECT_EQ(t[0], "model,rmse,mae,std,crps");
    const char* names[] = {"static_rsmm", "dynamic_rsmm", "linear_quantile", "mixture"};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(fields(t[i + 1]), 5u);
        EXPECT_EQ(t[i + 1].rfind(names[i], 0), 0u);
    }
    EXPECT_EQ(lines(slurp(out / "benchmark.txt")).size(), 5u);
}

TEST(Cli, SweepEmitsTwoByTwoMatrix) {
    const auto out = scratch("sweep");
    pipeline(out);
    ASSERT_EQ(run(out, "sweep"), 0) << slurp(out / "stderr.txt");
    const auto t = lines(slurp(out / "sweep.csv"));
    ASSERT_EQ(t.size(), 3u);
    for (const auto& l : t) EXPECT_EQ(fields(l), 3u);
    ASSERT_EQ(run(out, "sweep --beta-est 0,0.5,1 --beta-true 1 --workers 2"), 0) << slurp(out / "stderr.txt");
    const auto u = lines(slurp(out / "sweep.csv"));
    ASSERT_EQ(u.size(), 4u);
    EXPECT_EQ(fields(u[0]), 2u);
}

TEST(Cli, CommandsAreIdempotent) {
    const auto a = scratch("idem_a");
    const auto b = scratch("idem_b");
    for (const auto& d : {a, b}) {
        pipeline(d);
        ASSERT_EQ(run(d, "forecast"), 0);
        ASSERT_EQ(run(d, "benchmark"), 0);
        ASSERT_EQ(run(d, "backtest"), 0);
        ASSERT_EQ(run(d, "sweep"), 0);
        ASSERT_EQ(run(d, "report"), 0);
    }
    for (const char* f : {"market.csv", "books.csv", "truth.json", "models.json", "forecasts.csv", "benchmark.csv",
                          "ledger.csv", "report.csv", "daily.csv", "alpha.csv", "sweep.csv", "summary.csv"}) {
        const auto x = slurp(a / f);
        EXPECT_FALSE(x.empty()) << f;
        EXPECT_EQ(x, slurp(b / f)) << f;
    }
}

TEST(Cli, ReportReadsOnlyTheLedger) {
    const auto out = scratch("report");
    pipeline(out);
    ASSERT_EQ(run(out, "backtest"), 0);
    const auto alone = scratch("report_alone");
    fs::copy_file(out / "ledger.csv", alone / "run1.csv");
    ASSERT_EQ(run(alone, "report --ledger run1.csv", "IMBALANCE_DATA_DIR=\"" + alone.string() + "\""), 0)
        << slurp(alone / "stderr.txt");
    EXPECT_EQ(slurp(alone / "run1_report.csv"), slurp(out / "report.csv"));
    EXPECT_EQ(slurp(alone / "run1_daily.csv"), slurp(out / "daily.csv"));
    EXPECT_EQ(lines(slurp(alone / "summary.csv")).size(), 2u);
}

TEST(Cli, ErrorsAreReportedWithNonzeroExit) {
    const auto out = scratch("errors");
    EXPECT_NE(run(out, "train"), 0);
    EXPECT_NE(slurp(out / "stderr.txt").find("cannot open"), std::string::npos) << slurp(out / "stderr.txt");
    EXPECT_NE(run(out, "frobnicate"), 0);
    pipeline(out);
    EXPECT_NE(run(out, "backtest --measure median"), 0);
    EXPECT_NE(run(out, "backtest --alpha 1.5"), 0);
    EXPECT_NE(run(out, "backtest --from 2024-03-25"), 0);
    EXPECT_NE(slurp(out / "stderr.txt").find("overlaps"), std::string::npos) << slurp(out / "stderr.txt");
    EXPECT_NE(run(out, "backtest --models missing.json"), 0);
}
