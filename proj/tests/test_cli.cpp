// Copyright (C) 2026 The styldiff authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "commands.hpp"
#include "run_config.hpp"
#include "styldiff/error.hpp"
#include "styldiff/image.hpp"
#include "styldiff/toyworld.hpp"

namespace styldiff::cli {
namespace {

namespace fs = std::filesystem;

TEST(RunConfig, DefaultsMatchModuleDefaults) {
    const RunConfig c;
    EXPECT_EQ(c.removal().T_remov, 601);
    EXPECT_EQ(c.removal().K_r, 5);
    EXPECT_EQ(c.finetune().T_trans, 301);
    EXPECT_EQ(c.finetune().S_rev, 6);
    EXPECT_DOUBLE_EQ(c.finetune().base_lr, 1e-4);
    EXPECT_EQ(c.schedule().steps(), 1000);
    EXPECT_EQ(c.projector().seed(), Projector::kDefaultSeed);
}

TEST(RunConfig, MergeOverridesAndRejects) {
    RunConfig c;
    c.merge_text("# comment\n\n removal.T_remov = 401 \nfinetune.sr_substep=false\n");
    EXPECT_EQ(c.removal().T_remov, 401);
    EXPECT_FALSE(c.finetune().sr_substep);
    EXPECT_THROW(c.merge_text("removal.T_remove = 3"), ConfigError);
    EXPECT_THROW(c.merge_text("no equals sign"), ConfigError);
    c.set("removal.K_r", "five");
    EXPECT_THROW(c.removal(), ConfigError);
    c.set("removal.K_r", "2");
    c.set("finetune.sr_substep", "maybe");
    EXPECT_THROW(c.get_bool("finetune.sr_substep"), ConfigError);
    EXPECT_THROW(c.set("nope", "1"), ConfigError);
    EXPECT_THROW(RunConfig::from_file("/nonexistent/run.cfg"), ConfigError);
}

TEST(RunConfig, AutoSeedsFollowGlobalSeed) {
    RunConfig a, b;
    b.set("seed", "1");
    EXPECT_NE(a.get_seed("finetune.seed"), b.get_seed("finetune.seed"));
    EXPECT_NE(a.get_seed("finetune.seed"), a.get_seed("pretrain.seed"));
    EXPECT_EQ(a.get_seed("finetune.seed"), RunConfig().get_seed("finetune.seed"));
    a.set("finetune.seed", "42");
    EXPECT_EQ(a.get_seed("finetune.seed"), 42u);
    EXPECT_EQ(a.resolved_text().find("auto"), std::string::npos);
    RunConfig round;
    round.merge_text(a.resolved_text());
    EXPECT_EQ(round.resolved_text(), a.resolved_text());
}

// Whole pipeline at toy sizes, run once for the suite.
class Pipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = fs::temp_directory_path() / "styldiff_test_cli";
        fs::remove_all(root_);
        RunConfig c;
        c.merge_text(R"(
seed = 4
data.n = 4
data.size = 16
data.styles_per_kind = 1
denoiser.image_size = 16
denoiser.base_width = 2
denoiser.time_embed_dim = 16
pretrain.steps = 4
pretrain.batch = 2
removal.S_for = 4
removal.S_rev = 4
removal.K_r = 1
finetune.S_for = 4
finetune.S_rev = 3
finetune.epochs = 1
finetune.K_s = 1
finetune.n_contents = 2
)");
        c.set("paths.data", (root_ / "data").string());
        c.set("paths.model", (root_ / "pre" / "model.sdfz").string());
        c.set("paths.tuned", (root_ / "ft" / "tuned.sdfz").string());
        config_ = new RunConfig(c);
        cmd_gen_data(ctx(root_ / "data"));
        cmd_pretrain(ctx(root_ / "pre"), std::nullopt);
        cmd_finetune(ctx(root_ / "ft"), {root_ / "data" / "styles" / "s_stripes_0.png", std::nullopt});
    }
    static void TearDownTestSuite() { delete config_; }

    static Context ctx(const fs::path& out) {
        Context x;
        x.config = *config_;
        x.out = out;
        return x;
    }

    static fs::path root_;
    static RunConfig* config_;
};

fs::path Pipeline::root_;
RunConfig* Pipeline::config_ = nullptr;

TEST_F(Pipeline, GenDataWritesCorpusAndManifest) {
    EXPECT_EQ(list_pngs(root_ / "data" / "contents").size(), 4u);
    // One style image per kind plus the content it was painted over.
    EXPECT_EQ(list_pngs(root_ / "data" / "styles").size(), 8u);
    const auto entries = read_manifest(root_ / "data" / "manifest.tsv");
    EXPECT_EQ(entries.size(), 4u + 4u + 4u);
    const fs::path again = root_ / "data2";
    cmd_gen_data(ctx(again));
    const auto a = list_pngs(root_ / "data" / "contents"), b = list_pngs(again / "contents");
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(bit_equal(read_png(a[i]), read_png(b[i])));
}

TEST_F(Pipeline, PretrainWritesModelAndResolvedConfig) {
    EXPECT_TRUE(fs::exists(root_ / "pre" / "model.sdfz"));
    std::ifstream f(root_ / "pre" / kResolvedConfigName);
    const std::string text{std::istreambuf_iterator<char>(f), {}};
    EXPECT_NE(text.find("pretrain.steps = 4\n"), std::string::npos);
}

TEST_F(Pipeline, ResumeFinishesTheRemainingSteps) {
    RunConfig more = *config_;
    more.set("pretrain.steps", "6");
    Context x = ctx(root_ / "pre_resumed");
    x.config = more;
    cmd_pretrain(x, root_ / "pre");
    std::ifstream f(root_ / "pre_resumed" / "pretrain_loss.tsv");
    EXPECT_TRUE(f.good());
}

TEST_F(Pipeline, RemoveStylePresets) {
    const std::vector<fs::path> in = {root_ / "data" / "styles" / "s_blocks_0.png"};
    const auto one = cmd_remove_style(ctx(root_ / "rm"), in, RemovalPreset::artistic);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(read_png(one[0]).shape(), (Shape{3, 16, 16}));
    EXPECT_EQ(cmd_remove_style(ctx(root_ / "rm_sweep"), in, RemovalPreset::sweep).size(), 4u);
}

TEST_F(Pipeline, FinetuneWritesModelAndLogs) {
    for (const char* name : {"tuned.sdfz", "latents.sdls", "finetune_sr.tsv", "finetune_sd.tsv", "finetune_meta.txt"}) {
        EXPECT_TRUE(fs::exists(root_ / "ft" / name)) << name;
    }
    // A second run reuses the stored latents.
    std::vector<std::string> lines;
    Context x = ctx(root_ / "ft");
    x.log = [&](const std::string& l) { lines.push_back(l); };
    cmd_finetune(x, {root_ / "data" / "styles" / "s_stripes_0.png", std::nullopt});
    EXPECT_NE(std::find_if(lines.begin(), lines.end(), [](const std::string& l) { return l.rfind("reusing", 0) == 0; }),
              lines.end());
}

TEST_F(Pipeline, StylizeSweepsAndDiversity) {
    const std::vector<fs::path> contents = {list_pngs(root_ / "data" / "contents")[0]};
    StylizeArgs plain{contents, {}, 0, false};
    const auto a = cmd_stylize(ctx(root_ / "sty_a"), plain);
    const auto b = cmd_stylize(ctx(root_ / "sty_b"), plain);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_TRUE(bit_equal(read_png(a[0]), read_png(b[0])));

    StylizeArgs sweep{contents, {101, 201, 301, 401, 601}, 0, false};
    EXPECT_EQ(cmd_stylize(ctx(root_ / "sty_sweep"), sweep).size(), 5u);

    StylizeArgs diverse{contents, {}, 4, false};
    const auto d = cmd_stylize(ctx(root_ / "sty_div"), diverse);
    ASSERT_EQ(d.size(), 4u);
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = i + 1; j < d.size(); ++j) EXPECT_FALSE(bit_equal(read_png(d[i]), read_png(d[j])));
    }
}

TEST_F(Pipeline, EvaluateSelfPairsScorePerfectSsim) {
    const auto contents = list_pngs(root_ / "data" / "contents");
    const fs::path pairs = root_ / "pairs.tsv";
    {
        std::ofstream f(pairs);
        f << "# content style content.png style.png output.png\n";
        for (const auto& p : contents) {
            const std::string rel = fs::relative(p, root_).string();
            f << p.stem().string() << "\tself\t" << rel << '\t' << rel << '\t' << rel << '\n';
        }
    }
    const std::string report = cmd_evaluate(ctx(root_ / "eval"), pairs);
    EXPECT_EQ(report, cmd_evaluate(ctx(root_ / "eval"), pairs));
    std::stringstream ss(report);
    std::string metric, c, s, value;
    int ssim_rows = 0;
    while (ss >> metric >> c >> s >> value) {
        if (metric == "ssim_content") {
            EXPECT_NEAR(std::strtod(value.c_str(), nullptr), 1.0, 1e-12);
            ++ssim_rows;
        }
    }
    EXPECT_EQ(ssim_rows, 4);
}

TEST_F(Pipeline, GridTilesInputs) {
    const auto contents = list_pngs(root_ / "data" / "contents");
    GridArgs g;
    g.inputs = contents;
    g.rows = 2;
    g.cols = 2;
    const fs::path out = cmd_grid(ctx(root_ / "grid"), g);
    EXPECT_EQ(read_png(out).shape(), (Shape{3, 2 * (16 + kLabelStripHeight) + 2, 2 * 16 + 2}));
    g.labels = {"only one"};
    EXPECT_THROW(cmd_grid(ctx(root_ / "grid"), g), Error);
}

}  // namespace
}  // namespace styldiff::cli
