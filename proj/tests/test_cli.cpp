#include "pnce_cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace {

struct Run
{
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "pnce");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = pnce::cli::cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Drops the wall-clock latency column (index 13).
std::string mask_latency(const std::string& csv)
{
    std::string out;
    for (auto line : pnce::lines_of(csv)) {
        auto f = pnce::split(line, ',');
        f.erase(f.begin() + 13);
        for (std::size_t i = 0; i < f.size(); ++i) {
            out += (i ? "," : "") + std::string(f[i]);
        }
        out += '\n';
    }
    return out;
}

class Cli : public ::testing::Test
{
protected:
    void SetUp() override
    {
        dir = fs::temp_directory_path()
              / ("pnce_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    void write(const std::string& name, const std::string& text) const
    {
        std::ofstream(dir / name) << text;
    }

    fs::path dir;
};

} // namespace

TEST_F(Cli, GenPnEmitsOnePeriod)
{
    const auto r = run({"gen-pn", "--degree", "9"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(pnce::lines_of(r.out).size(), 511u);
    const auto j = nlohmann::json::parse(run({"gen-pn", "--degree", "3", "--format", "json"}).out);
    EXPECT_EQ(j["length"], 7);
    EXPECT_EQ(j["chips"].size(), 7u);
}

TEST_F(Cli, GenPnRejectsNonPrimitiveTaps)
{
    const auto r = run({"gen-pn", "--degree", "9", "--taps", "9,1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("73"), std::string::npos) << r.err;
}

TEST_F(Cli, UsageErrorsPrintSynopsis)
{
    for (const auto& args : std::vector<std::vector<std::string>>{{}, {"frobnicate"}, {"gen-pn"}, {"gen-pn", "--degree", "x"}}) {
        const auto r = run(args);
        EXPECT_EQ(r.code, 1);
        EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
    }
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, MissingConfigNamesThePath)
{
    const auto r = run({"sweep", "--config", path("missing.json")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find(path("missing.json")), std::string::npos) << r.err;
}

TEST_F(Cli, SimulateThenEstimate)
{
    const auto sim = run({"simulate", "--degree", "9", "--cir-length", "32", "--nonzero-taps", "8", "--nt", "4",
                          "--nr", "3", "--n-batch", "2", "--snr", "20", "--seed", "7", "--out", path("f.iq"),
                          "--truth", path("truth.csv")});
    ASSERT_EQ(sim.code, 0) << sim.err;
    EXPECT_EQ(fs::file_size(path("f.iq")), pnce::kIqHeaderBytes + 2u * 3u * (511u + 32u) * 8u);
    const auto est = run({"estimate", "--in", path("f.iq"), "--backend", "tensor16", "--out", path("cir.csv"),
                          "--truth", path("truth.csv")});
    ASSERT_EQ(est.code, 0) << est.err;
    EXPECT_EQ(pnce::lines_of(slurp(path("cir.csv"))).size(), 1u + 4u * 3u * 32u);
    ASSERT_EQ(est.err.rfind("mae ", 0), 0u) << est.err;
    EXPECT_LT(std::stod(est.err.substr(4)), 0.05);
    EXPECT_EQ(run({"estimate", "--in", path("f.iq"), "--backend", "gpu"}).code, 2);
    write("junk.iq", "XXXXjunk");
    EXPECT_EQ(run({"estimate", "--in", path("junk.iq")}).code, 2);
}

TEST_F(Cli, SweepIsDeterministic)
{
    write("s.json", R"({"experiment": "snr", "nt": 4, "nr": 2, "pn_lengths": [127], "cir_length": 16,
                        "l_nz": [16], "n_batch": [1, 2], "snr_db": [0, 20], "iterations": 3, "seed": 3,
                        "backends": ["reference64", "reference32"]})");
    const auto a = run({"sweep", "--config", path("s.json"), "--out", path("a.csv")});
    const auto b = run({"sweep", "--config", path("s.json"), "--out", path("b.csv")});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0);
    const auto ta = slurp(path("a.csv")), tb = slurp(path("b.csv"));
    EXPECT_EQ(pnce::parse_csv(ta).size(), 8u);
    EXPECT_EQ(mask_latency(ta), mask_latency(tb));
    run({"sweep", "--config", path("s.json"), "--out", path("c.csv"), "--seed", "4"});
    EXPECT_NE(mask_latency(ta), mask_latency(slurp(path("c.csv"))));

    const auto plot = run({"plot", "--csv", path("a.csv"), "--figure", "fig3"});
    EXPECT_EQ(plot.code, 0);
    EXPECT_NE(plot.out.find("$curve3"), std::string::npos);
    write("bad.csv", "not,a,header\n");
    EXPECT_EQ(run({"plot", "--csv", path("bad.csv")}).code, 2);
}

TEST_F(Cli, BenchWritesLatencyRows)
{
    write("b.json", R"({"experiment": "latency", "nt": 4, "nr": 2, "pn_lengths": [127], "cir_length": 16,
                        "l_nz": [16], "n_batch": [1, 2, 4], "repetitions": 10, "warmup": 1})");
    const auto r = run({"bench", "--config", path("b.json"), "--out", path("lat.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = pnce::parse_csv(slurp(path("lat.csv")));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[2].samples_moved, 2u * 143u * 4u / 4u);
    EXPECT_EQ(run({"sweep", "--config", path("b.json")}).code, 2);
}
