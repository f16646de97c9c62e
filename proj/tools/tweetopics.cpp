// Command line front end: one subcommand per pipeline stage plus `run`.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tweetopics.hpp"

namespace tp = tweetopics;

namespace {

struct IngestArgs {
  std::string input, format = "jsonl", output;
  std::size_t min_chars = 20;
};

struct TrainArgs {
  std::string docstore, output;
  tp::TrainConfig config;
  std::uint64_t min_count = 10;
  double exponent = 0.75;
};

struct EmbedArgs {
  std::string docstore, model, output;
  std::size_t min_occurrences = tp::kDefaultMinOccurrences;
};

struct GapArgs {
  std::string docvecs, output, rule = "firstSE";
  std::size_t k_min = 5, k_max = 140, k_step = 5, B = 10, restarts = 10, workers = 1;
  std::uint64_t seed = 42;
};

struct ClusterArgs {
  std::string docvecs, gap, prefix;
  std::size_t k = 0, restarts = 10, max_iter = 300;
  double tol = 1e-6;
  std::uint64_t seed = 42;
};

struct ProjectArgs {
  std::string docvecs, assignments, centroids, what = "documents", output;
  std::size_t top = 0;
};

struct ReportArgs {
  std::string assignments, centroids, docvecs, docstore, model, output, pretty_output;
  std::size_t R = tp::kDefaultRepresentatives, top_n = 10;
  bool pretty = false;
};

struct RunArgs {
  std::string config_file, stages, input, output_dir;
  std::vector<std::string> sets;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  bool all = false, skip_fresh = false;
};

std::optional<std::string> opt_path(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic discovery over short-text corpora: CBOW embeddings, gap statistic, k-means"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse a record file and group posts into per-user documents");
  ingest_cmd->add_option("--input", ingest.input, "Line-delimited corpus file")->required();
  ingest_cmd->add_option("--format", ingest.format, "jsonl or tsv")->capture_default_str();
  ingest_cmd->add_option("--min-chars", ingest.min_chars, "Drop posts shorter than this")->capture_default_str();
  ingest_cmd->add_option("--output", ingest.output, "Docstore path")->required();

  std::string tokenize_text;
  auto* tokenize_cmd = app.add_subcommand("tokenize", "Print the tokens of a text, one per line with its kind");
  tokenize_cmd->add_option("--text", tokenize_text, "Text to tokenize")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train CBOW embeddings with negative sampling");
  train_cmd->add_option("--docstore", train.docstore)->required();
  train_cmd->add_option("--dims", train.config.dims)->capture_default_str();
  train_cmd->add_option("--window", train.config.window)->capture_default_str();
  train_cmd->add_option("--min-count", train.min_count)->capture_default_str();
  train_cmd->add_option("--negatives", train.config.negatives)->capture_default_str();
  train_cmd->add_option("--epochs", train.config.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train.config.initial_lr, "Initial learning rate")->capture_default_str();
  train_cmd->add_option("--final-lr", train.config.final_lr)->capture_default_str();
  train_cmd->add_option("--noise-exponent", train.exponent)->capture_default_str();
  train_cmd->add_option("--seed", train.config.seed)->capture_default_str();
  train_cmd->add_option("--workers", train.config.workers)->capture_default_str();
  train_cmd->add_option("--output", train.output, "Model path; .wprime and .vocab sidecars are written next to it")
      ->required();

  EmbedArgs embed;
  auto* embed_cmd = app.add_subcommand("embed", "Average word vectors into document vectors");
  embed_cmd->add_option("--docstore", embed.docstore)->required();
  embed_cmd->add_option("--model", embed.model)->required();
  embed_cmd->add_option("--min-occurrences", embed.min_occurrences)->capture_default_str();
  embed_cmd->add_option("--output", embed.output)->required();

  GapArgs gap;
  auto* gap_cmd = app.add_subcommand("gap", "Gap statistic over a k sweep");
  gap_cmd->add_option("--docvecs", gap.docvecs)->required();
  gap_cmd->add_option("--k-min", gap.k_min)->capture_default_str();
  gap_cmd->add_option("--k-max", gap.k_max)->capture_default_str();
  gap_cmd->add_option("--k-step", gap.k_step)->capture_default_str();
  gap_cmd->add_option("--B", gap.B, "Number of reference data sets")->capture_default_str();
  gap_cmd->add_option("--seed", gap.seed)->capture_default_str();
  gap_cmd->add_option("--restarts", gap.restarts)->capture_default_str();
  gap_cmd->add_option("--workers", gap.workers)->capture_default_str();
  gap_cmd->add_option("--rule", gap.rule, "firstSE or argmaxGap")->capture_default_str();
  gap_cmd->add_option("--output", gap.output)->required();

  ClusterArgs cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "k-means over document vectors");
  cluster_cmd->add_option("--docvecs", cluster.docvecs)->required();
  cluster_cmd->add_option("--k", cluster.k, "Cluster count; 0 reads K from --gap")->capture_default_str();
  cluster_cmd->add_option("--gap", cluster.gap, "Gap table providing K when --k is 0");
  cluster_cmd->add_option("--seed", cluster.seed)->capture_default_str();
  cluster_cmd->add_option("--restarts", cluster.restarts)->capture_default_str();
  cluster_cmd->add_option("--max-iter", cluster.max_iter)->capture_default_str();
  cluster_cmd->add_option("--tol", cluster.tol)->capture_default_str();
  cluster_cmd->add_option("--output-prefix", cluster.prefix, "Writes <prefix>.assignments.tsv and <prefix>.centroids.txt")
      ->required();

  ProjectArgs project;
  auto* project_cmd = app.add_subcommand("project", "2D PCA coordinates of documents or centroids");
  project_cmd->add_option("--docvecs", project.docvecs)->required();
  project_cmd->add_option("--assignments", project.assignments)->required();
  project_cmd->add_option("--centroids", project.centroids);
  project_cmd->add_option("--what", project.what, "documents or centroids")->capture_default_str();
  project_cmd->add_option("--top", project.top, "Only the N documents nearest each centroid (0 = all)")
      ->capture_default_str();
  project_cmd->add_option("--output", project.output)->required();

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Per-cluster representatives, word frequencies and post lengths");
  report_cmd->add_option("--assignments", report.assignments)->required();
  report_cmd->add_option("--centroids", report.centroids)->required();
  report_cmd->add_option("--docvecs", report.docvecs)->required();
  report_cmd->add_option("--docstore", report.docstore)->required();
  report_cmd->add_option("--model", report.model)->required();
  report_cmd->add_option("-R,--representatives", report.R)->capture_default_str();
  report_cmd->add_option("--top-n", report.top_n)->capture_default_str();
  report_cmd->add_option("--output", report.output)->required();
  report_cmd->add_flag("--pretty", report.pretty, "Also print an aligned table to stdout");
  report_cmd->add_option("--pretty-output", report.pretty_output, "Write the aligned table to this file");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run pipeline stages from a config file");
  run_cmd->add_option("--config", run.config_file, "key = value config file");
  run_cmd->add_flag("--all", run.all, "Run every stage");
  run_cmd->add_option("--stages", run.stages, "Comma-separated subset of ingest,train,embed,gap,cluster,report,project");
  run_cmd->add_option("--set", run.sets, "Override a config key (key=value), repeatable");
  run_cmd->add_option("--input", run.input, "Override input");
  run_cmd->add_option("--output-dir", run.output_dir, "Override output_dir");
  run_cmd->add_option("--workers", run.workers, "Override workers");
  run_cmd->add_option("--seed", run.seed, "Override every seed");
  run_cmd->add_flag("--skip-fresh", run.skip_fresh, "Skip stages whose outputs are up to date");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(tp::ExitCode::config);
  }

  try {
    if (*ingest_cmd) {
      tp::run_ingest(ingest.input, tp::parse_record_format(ingest.format), ingest.min_chars, ingest.output,
                     ingest.format);
    } else if (*tokenize_cmd) {
      for (const auto& t : tp::tokenize_post(tokenize_text)) std::cout << t.surface << '\t' << tp::to_string(t.kind) << '\n';
    } else if (*train_cmd) {
      tp::run_train(train.docstore, train.config, train.min_count, train.exponent, train.output);
    } else if (*embed_cmd) {
      tp::run_embed(embed.docstore, embed.model, embed.min_occurrences, embed.output);
    } else if (*gap_cmd) {
      tp::GapOptions opts;
      opts.B = gap.B;
      opts.seed = gap.seed;
      opts.kmeans.seed = gap.seed;
      opts.kmeans.restarts = gap.restarts;
      opts.workers = gap.workers;
      opts.rule = tp::parse_selection_rule(gap.rule);
      const auto curve = tp::run_gap(gap.docvecs, tp::k_sweep(gap.k_min, gap.k_max, gap.k_step), opts, gap.output);
      std::cout << "selected_K=" << curve.selected_k << (curve.no_elbow ? " (no elbow; argmax)" : "") << '\n';
    } else if (*cluster_cmd) {
      tp::KMeansOptions opts;
      opts.seed = cluster.seed;
      opts.restarts = cluster.restarts;
      opts.max_iter = cluster.max_iter;
      opts.tol = cluster.tol;
      if (cluster.k == 0 && cluster.gap.empty()) throw tp::ConfigError("--k 0 needs --gap");
      tp::run_cluster(cluster.docvecs, cluster.k, cluster.gap, opts, cluster.prefix);
    } else if (*project_cmd) {
      tp::run_project(project.docvecs, project.assignments, opt_path(project.centroids),
                      tp::parse_project_what(project.what), project.top, project.output);
    } else if (*report_cmd) {
      const auto reports = tp::run_report(report.assignments, report.centroids, report.docvecs, report.docstore,
                                          report.model, report.R, report.top_n, report.output,
                                          opt_path(report.pretty_output));
      if (report.pretty) std::cout << tp::format_report_pretty(reports);
    } else if (*run_cmd) {
      tp::PipelineConfig cfg;
      if (!run.config_file.empty()) cfg = tp::load_config_file(run.config_file);
      for (const auto& kv : run.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw tp::ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (!run.input.empty()) cfg.input = run.input;
      if (!run.output_dir.empty()) cfg.output_dir = run.output_dir;
      if (run.workers) cfg.workers = *run.workers;
      if (run.seed) cfg.train_seed = cfg.gap_seed = cfg.kmeans_seed = *run.seed;
      if (!run.all && run.stages.empty()) throw tp::ConfigError("run needs --all or --stages");
      const auto stages = run.all ? std::vector<std::string>{} : tp::parse_stage_list(run.stages);
      tp::run_pipeline(cfg, stages, {.skip_fresh = run.skip_fresh});
    }
  } catch (const tp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(tp::ExitCode::data);
  }
  return 0;
}
