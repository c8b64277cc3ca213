#include "s2c/candidates.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include "json.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <sstream>

using namespace s2c;
using namespace s2c::test;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run s2crop(const std::string& args) {
    const std::string cmd = std::string(S2CROP_PATH) + " " + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

/// Small images and a narrow model keep every command well under a second per image.
fs::path tiny_config(const fs::path& dir) {
    const auto path = dir / "tiny.json";
    std::ofstream(path) << R"({
  "model": {"d": 8, "heads": 2, "layers": 1, "map_channels": 8, "proposals": 4, "roi_size": 3, "spatial_hidden": 4},
  "train": {"epochs": 2, "learning_rate": 0.001, "candidate_sample_k": 8},
  "anchors": {"target_count": 24},
  "synth": {"width": 96, "height": 64, "grid": {"target_count": 24}}
})";
    return path;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = scratch_dir("cli");
        cfg_ = tiny_config(dir_).string();
        const auto s = s2crop("synth --n 10 --seed 4 --config " + cfg_ + " --out " + (dir_ / "data").string());
        ASSERT_EQ(s.code, 0) << s.out;
        const auto t = s2crop("train --manifest " + (dir_ / "data/manifest.jsonl").string() + " --config " + cfg_ +
                              " --out " + (dir_ / "run").string());
        ASSERT_EQ(t.code, 0) << t.out;
    }
    static std::string manifest() { return (dir_ / "data/manifest.jsonl").string(); }
    static std::string checkpoint() { return (dir_ / "run/checkpoint.s2ck").string(); }
    static std::string image() {
        return (dir_ / "data/images" / fs::directory_iterator(dir_ / "data/images")->path().filename()).string();
    }
    static inline fs::path dir_;
    static inline std::string cfg_;
};

} // namespace

TEST_F(Cli, SynthWritesOneLinePerImageAndIsDeterministic) {
    const auto a = dir_ / "s100a", b = dir_ / "s100b";
    ASSERT_EQ(s2crop("synth --n 100 --seed 9 --config " + cfg_ + " --out " + a.string()).code, 0);
    ASSERT_EQ(s2crop("synth --n 100 --seed 9 --config " + cfg_ + " --out " + b.string()).code, 0);
    const auto ma = read_file(a / "manifest.jsonl");
    EXPECT_EQ(line_count(ma), 100u);
    EXPECT_EQ(ma, read_file(b / "manifest.jsonl"));
    EXPECT_EQ(read_file(a / "oracle.json"), read_file(b / "oracle.json"));
    EXPECT_TRUE(fs::exists(a / "config.json"));
}

TEST_F(Cli, TrainOutputsAreSelfDescribing) {
    const auto run = dir_ / "run";
    for (const char* f : {"checkpoint.s2ck", "metrics.csv", "summary.json", "timing.json", "config.json"})
        EXPECT_TRUE(fs::exists(run / f)) << f;
    const auto metrics = read_file(run / "metrics.csv");
    EXPECT_EQ(metrics.substr(0, metrics.find('\n')), "epoch,train_loss,val_srcc,val_acc5,val_acc10");
    EXPECT_EQ(line_count(metrics), 3u);
    const auto summary = nlohmann::json::parse(read_file(run / "summary.json"));
    EXPECT_EQ(summary["checkpoint_sha1"].get<std::string>().size(), 40u);
}

TEST_F(Cli, CropRatioKeepsAspect) {
    const auto r = s2crop("crop --checkpoint " + checkpoint() + " --image " + image() + " --ratio 16:9 --top 3");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["results"].size(), 3u);
    double last = 1e300;
    for (const auto& e : j["results"]) {
        const auto& b = e["box"];
        const double w = b[2].get<double>() - b[0].get<double>(), h = b[3].get<double>() - b[1].get<double>();
        EXPECT_NEAR(w / h, 16.0 / 9.0, kRatioTolerance * 16.0 / 9.0);
        EXPECT_LE(e["score"].get<double>(), last);
        last = e["score"].get<double>();
    }
}

TEST_F(Cli, CropTopOneReturnsSingleBestBox) {
    const auto one = nlohmann::json::parse(s2crop("crop --checkpoint " + checkpoint() + " --image " + image() + " --top 1").out);
    const auto all = nlohmann::json::parse(s2crop("crop --checkpoint " + checkpoint() + " --image " + image() + " --top 1000").out);
    ASSERT_EQ(one["results"].size(), 1u);
    EXPECT_EQ(one["results"][0]["rank"], 1);
    EXPECT_EQ(one["results"][0]["box"], all["results"][0]["box"]);
    EXPECT_EQ(all["results"].size(), all["candidates"].get<std::size_t>());
    for (std::size_t i = 1; i < all["results"].size(); ++i)
        EXPECT_GE(all["results"][i - 1]["score"].get<double>(), all["results"][i]["score"].get<double>());
}

TEST_F(Cli, CropCircleReportsCircles) {
    const auto r = s2crop("crop --checkpoint " + checkpoint() + " --image " + image() + " --circle --top 2");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    for (const auto& e : j["results"]) EXPECT_TRUE(e.contains("circle"));
}

TEST_F(Cli, CropWithoutProposalsAndNoFallbackFails) {
    const auto r = s2crop("crop --checkpoint " + checkpoint() + " --image " + image() + " --no-heuristic");
    EXPECT_EQ(r.code, 2) << r.out;
}

TEST_F(Cli, EvalOracleIsPerfect) {
    const auto out = dir_ / "eval_oracle";
    const auto r = s2crop("eval --oracle --manifest " + manifest() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(read_file(out / "summary.json"));
    EXPECT_NEAR(j["srcc"].get<double>(), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(j["acc5"].get<double>(), 100.0);
}

TEST_F(Cli, EvalReportsColumnsAndThroughput) {
    const auto out = dir_ / "eval_model";
    const auto r = s2crop("eval --checkpoint " + checkpoint() + " --manifest " + manifest() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(read_file(out / "summary.json"));
    for (const char* k : {"srcc", "acc5", "acc10"}) EXPECT_TRUE(j.contains(k)) << k;
    const auto timing = nlohmann::json::parse(read_file(out / "timing.json"));
    EXPECT_GT(timing["images_per_second"].get<double>(), 0.0);
    const auto csv = read_file(out / "report.csv");
    EXPECT_EQ(line_count(csv), 11u);
}

TEST_F(Cli, GradcheckPassesAndNegativeControlFails) {
    const auto ok = s2crop("gradcheck");
    EXPECT_EQ(ok.code, 0) << ok.out;
    const auto bad = s2crop("gradcheck --corrupt softmax_rows");
    EXPECT_EQ(bad.code, 3);
    EXPECT_NE(bad.out.find("softmax_rows"), std::string::npos);
    EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(s2crop("").code, 1);
    EXPECT_EQ(s2crop("frobnicate").code, 1);
    EXPECT_EQ(s2crop("train").code, 1);  // missing --manifest
    EXPECT_EQ(s2crop("crop --checkpoint " + checkpoint() + " --image " + image() + " --ratio 16x9").code, 1);
    EXPECT_EQ(s2crop("gradcheck --corrupt no_such_op").code, 1);
    EXPECT_EQ(s2crop("synth --spatial nearest --out " + (dir_ / "x").string()).code, 1);
}

TEST_F(Cli, DataErrorsExitTwo) {
    EXPECT_EQ(s2crop("eval --oracle --manifest " + (dir_ / "missing.jsonl").string()).code, 2);
    EXPECT_EQ(s2crop("crop --checkpoint " + manifest() + " --image " + image()).code, 2);
}

TEST_F(Cli, BenchReportsThroughput) {
    const auto out = dir_ / "bench";
    const auto r = s2crop("bench --config " + cfg_ + " --iterations 3 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(read_file(out / "bench.json"));
    EXPECT_EQ(j["feature_passes"], 3);
    EXPECT_GT(j["images_per_second"].get<double>(), 0.0);
}

TEST_F(Cli, AblateWritesOneRowPerVariant) {
    const auto out = dir_ / "ablate";
    const auto r = s2crop("ablate --axis spatial --epochs 1 --manifest " + manifest() + " --config " + cfg_ + " --out " +
                          out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    const auto csv = read_file(out / "ablation_spatial.csv");
    EXPECT_EQ(line_count(csv), 5u);  // header, DisEmb, three DisDrop thresholds
}

TEST_F(Cli, AblateScoresHeldOutManifestWhenGiven) {
    const auto out = dir_ / "ablate_held";
    const auto r = s2crop("ablate --axis proposals --epochs 1 --manifest " + manifest() + " --held-out " + manifest() +
                          " --config " + cfg_ + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    std::istringstream csv(read_file(out / "ablation_proposals.csv"));
    std::string line;
    std::getline(csv, line);
    ASSERT_TRUE(std::getline(csv, line));
    EXPECT_EQ(line.substr(0, line.find(',')), "N=8");
    EXPECT_EQ(s2crop("ablate --epochs 1 --manifest " + manifest() + " --held-out " + (dir_ / "none.jsonl").string() +
                     " --config " + cfg_ + " --out " + out.string())
                  .code,
              2);
}
