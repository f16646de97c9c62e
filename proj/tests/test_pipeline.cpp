#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "support.hpp"
#include "tweetopics.hpp"

namespace tp = tweetopics;
namespace tt = tweetopics::testing;
namespace fs = std::filesystem;

namespace {

tp::PipelineConfig small_config(const tt::TempDir& dir) {
  tt::write_text(dir / "corpus.jsonl", tt::two_topic_corpus(40, 20, 60, 11).jsonl);
  tp::PipelineConfig cfg;
  cfg.input = (dir / "corpus.jsonl").string();
  cfg.output_dir = (dir / "out").string();
  cfg.dims = 10;
  cfg.epochs = 2;
  cfg.k_min = 1;
  cfg.k_max = 4;
  cfg.k_step = 1;
  cfg.B = 3;
  cfg.restarts = 2;
  cfg.representatives = 5;
  return cfg;
}

std::vector<std::string> all_stages() { return {tp::kStageOrder.begin(), tp::kStageOrder.end()}; }

std::string cli() { return TWEETOPICS_CLI_PATH; }

int run_cli(const std::string& args, const fs::path& stdout_file = "/dev/null") {
  const std::string cmd = cli() + " " + args + " >" + stdout_file.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Pipeline, RunAllWritesEveryArtifactWithHeaders) {
  const tt::TempDir dir("pipe_all");
  const auto cfg = small_config(dir);
  EXPECT_EQ(tp::run_pipeline(cfg, {}), all_stages());
  const tp::PipelinePaths p(cfg.output_dir);
  for (const auto& f : p.all()) {
    ASSERT_TRUE(fs::exists(f)) << f;
    EXPECT_TRUE(tt::slurp(f).starts_with("#tweetopics-artifact v1 ")) << f;
  }
  const auto gap = tp::parse_gap_curve(tp::read_artifact(p.gap, "gap").body);
  EXPECT_GE(gap.selected_k, 1u);
  const auto centroids = tp::parse_centroids(tp::read_artifact(tp::centroids_path(p.cluster_prefix)).body);
  EXPECT_EQ(centroids.rows(), gap.selected_k);
}

TEST(Pipeline, DeterministicAcrossRuns) {
  const tt::TempDir a("pipe_det_a"), b("pipe_det_b");
  auto ca = small_config(a);
  auto cb = small_config(b);
  cb.input = ca.input;
  tp::run_pipeline(ca, {});
  tp::run_pipeline(cb, {});
  const tp::PipelinePaths pa(ca.output_dir), pb(cb.output_dir);
  const auto fa = pa.all(), fb = pb.all();
  for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_EQ(tt::slurp(fa[i]), tt::slurp(fb[i])) << fa[i].filename();
}

TEST(Pipeline, MissingUpstreamIsDependencyError) {
  const tt::TempDir dir("pipe_dep");
  auto cfg = small_config(dir);
  tp::run_pipeline(cfg, {"ingest", "train", "embed"});
  try {
    tp::run_pipeline(cfg, {"report"});
    FAIL() << "expected a dependency error";
  } catch (const tp::DependencyError& e) {
    EXPECT_NE(std::string(e.what()).find("'cluster'"), std::string::npos) << e.what();
  }
  cfg.k = 2;
  EXPECT_EQ(tp::run_pipeline(cfg, {"cluster", "report"}), (std::vector<std::string>{"cluster", "report"}));
}

TEST(Pipeline, SkipFreshOnlyRerunsChangedStages) {
  const tt::TempDir dir("pipe_fresh");
  auto cfg = small_config(dir);
  cfg.k = 2;
  const std::vector<std::string> stages{"ingest", "train", "embed", "cluster", "report"};
  tp::run_pipeline(cfg, stages, {.skip_fresh = true});
  EXPECT_TRUE(tp::run_pipeline(cfg, stages, {.skip_fresh = true}).empty());
  cfg.k = 3;
  EXPECT_EQ(tp::run_pipeline(cfg, stages, {.skip_fresh = true}), (std::vector<std::string>{"cluster", "report"}));
  cfg.epochs = 3;
  EXPECT_EQ(tp::run_pipeline(cfg, stages, {.skip_fresh = true}),
            (std::vector<std::string>{"train", "embed", "cluster", "report"}));
}

TEST(Pipeline, StaleUpstreamIsRejected) {
  const tt::TempDir dir("pipe_stale");
  auto cfg = small_config(dir);
  cfg.k = 2;
  tp::run_pipeline(cfg, {"ingest", "train", "embed", "cluster"});
  // Retraining replaces the model the document vectors were built from.
  cfg.train_seed = 7;
  tp::run_pipeline(cfg, {"train"});
  EXPECT_THROW(tp::run_pipeline(cfg, {"report"}), tp::DependencyError);
}

TEST(PipelineConfig, ParsingAndValidation) {
  tp::PipelineConfig cfg;
  tp::apply_config_text(cfg, "# comment\n dims = 12 \nrule=argmaxGap\nseed = 5  # all seeds\n\n");
  EXPECT_EQ(cfg.dims, 12u);
  EXPECT_EQ(cfg.rule, "argmaxGap");
  EXPECT_EQ(cfg.train_seed, 5u);
  EXPECT_EQ(cfg.gap_seed, 5u);
  EXPECT_EQ(cfg.kmeans_seed, 5u);
  EXPECT_THROW(tp::apply_config_text(cfg, "dims 12\n"), tp::ConfigError);
  EXPECT_THROW(tp::apply_config_text(cfg, "colour = red\n"), tp::ConfigError);
  EXPECT_THROW(tp::apply_config_text(cfg, "dims = -3\n"), tp::ConfigError);
  EXPECT_THROW(tp::apply_config_text(cfg, "tol = fast\n"), tp::ConfigError);
  EXPECT_THROW(tp::load_config_file("/nonexistent/tweetopics.conf"), tp::ConfigError);
  EXPECT_THROW(tp::parse_stage_list("ingest,cook"), tp::ConfigError);
  cfg = {};
  cfg.k_min = 0;
  EXPECT_THROW(cfg.validate(), tp::ConfigError);
  cfg = {};
  cfg.format = "xml";
  EXPECT_THROW(cfg.validate(), tp::ConfigError);
}

TEST(Cli, ExitCodesAndTokenize) {
  if (cli().empty()) GTEST_SKIP() << "command-line tool not built";
  const tt::TempDir dir("cli");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("train --docstore x --dims notanumber --output y"), 2);
  EXPECT_EQ(run_cli("run --all --set colour=red"), 2);
  EXPECT_EQ(run_cli("report --assignments " + (dir / "none.tsv").string() + " --centroids " +
                    (dir / "none.txt").string() + " --docvecs " + (dir / "dv.txt").string() + " --docstore " +
                    (dir / "ds.tsv").string() + " --model " + (dir / "m.txt").string() + " --output " +
                    (dir / "r.tsv").string()),
            3);
  EXPECT_EQ(run_cli("ingest --input " + (dir / "missing.jsonl").string() + " --output " + (dir / "ds.tsv").string()),
            4);
  tt::write_text(dir / "empty.jsonl", "{\"user_id\":\"u\",\"text\":\"short\"}\n");
  EXPECT_EQ(run_cli("ingest --input " + (dir / "empty.jsonl").string() + " --output " + (dir / "ds.tsv").string()), 0);
  EXPECT_EQ(run_cli("train --docstore " + (dir / "ds.tsv").string() + " --output " + (dir / "m.txt").string()), 4);

  EXPECT_EQ(run_cli("tokenize --text 'Hola :) #paz'", dir / "tok.txt"), 0);
  EXPECT_EQ(tt::slurp(dir / "tok.txt"), "hola\tword\n:)\temoticon\n#paz\thashtag\n");
}
