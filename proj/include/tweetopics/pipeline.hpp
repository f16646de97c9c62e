#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tweetopics/artifact.hpp"
#include "tweetopics/cluster.hpp"
#include "tweetopics/docmodel.hpp"
#include "tweetopics/error.hpp"
#include "tweetopics/gapstat.hpp"
#include "tweetopics/ingest.hpp"
#include "tweetopics/project.hpp"
#include "tweetopics/report.hpp"
#include "tweetopics/text_io.hpp"
#include "tweetopics/trainer.hpp"
#include "tweetopics/vocab.hpp"

namespace tweetopics {

namespace fs = std::filesystem;

struct PipelineConfig {
  // ingest
  std::string input;
  std::string format = "jsonl";
  std::size_t min_chars = 20;
  // train
  std::uint64_t min_count = 10;
  std::size_t dims = 150;
  std::size_t window = 6;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double initial_lr = 0.025;
  double final_lr = 0.0001;
  double noise_exponent = 0.75;
  std::uint64_t train_seed = 42;
  // embed
  std::size_t min_occurrences = 40;
  // gap
  std::size_t k_min = 5;
  std::size_t k_max = 140;
  std::size_t k_step = 5;
  std::size_t B = 10;
  std::uint64_t gap_seed = 42;
  std::string rule = "firstSE";
  // cluster; k = 0 takes K from the gap stage
  std::size_t k = 0;
  std::uint64_t kmeans_seed = 42;
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  double tol = 1e-6;
  // report / project
  std::size_t representatives = 15;
  std::size_t top_n = 10;
  std::size_t project_top = 0;  // 0: project every document, else only the R nearest per cluster
  // runtime
  std::size_t workers = 1;
  std::string output_dir = "out";

  TrainConfig train_config() const {
    TrainConfig t;
    t.dims = dims;
    t.window = window;
    t.epochs = epochs;
    t.negatives = negatives;
    t.initial_lr = initial_lr;
    t.final_lr = final_lr;
    t.seed = train_seed;
    t.workers = workers;
    return t;
  }

  KMeansOptions kmeans_options() const {
    KMeansOptions o;
    o.seed = kmeans_seed;
    o.restarts = restarts;
    o.max_iter = max_iter;
    o.tol = tol;
    return o;
  }

  GapOptions gap_options() const {
    GapOptions g;
    g.B = B;
    g.seed = gap_seed;
    g.kmeans = kmeans_options();
    g.workers = workers;
    g.rule = parse_selection_rule(rule);
    return g;
  }

  void validate() const {
    parse_record_format(format);
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    train_config().validate();
    if (!(noise_exponent > 0.0)) throw ConfigError("noise_exponent must be > 0");
    if (k_min < 1 || k_max < k_min || k_step < 1) throw ConfigError("k sweep must satisfy 1 <= k_min <= k_max, k_step >= 1");
    if (B < 2) throw ConfigError("B must be >= 2");
    parse_selection_rule(rule);
    kmeans_options().validate();
    if (representatives < 1) throw ConfigError("representatives must be >= 1");
    if (top_n < 1) throw ConfigError("top_n must be >= 1");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  }

  // Applies one key=value setting; unknown keys are rejected.
  void set(std::string_view key, std::string_view value) {
    const auto as_size = [&] {
      try {
        return parse_integer<std::size_t>(value);
      } catch (const Error&) {
        throw ConfigError("config '" + std::string(key) + "': expected a non-negative integer, got '" +
                          std::string(value) + "'");
      }
    };
    const auto as_real = [&] {
      try {
        return parse_double(value);
      } catch (const Error&) {
        throw ConfigError("config '" + std::string(key) + "': expected a number, got '" + std::string(value) + "'");
      }
    };
    if (key == "input") input = value;
    else if (key == "format") format = value;
    else if (key == "min_chars") min_chars = as_size();
    else if (key == "min_count") min_count = as_size();
    else if (key == "dims") dims = as_size();
    else if (key == "window") window = as_size();
    else if (key == "negatives") negatives = as_size();
    else if (key == "epochs") epochs = as_size();
    else if (key == "initial_lr") initial_lr = as_real();
    else if (key == "final_lr") final_lr = as_real();
    else if (key == "noise_exponent") noise_exponent = as_real();
    else if (key == "train_seed") train_seed = as_size();
    else if (key == "min_occurrences") min_occurrences = as_size();
    else if (key == "k_min") k_min = as_size();
    else if (key == "k_max") k_max = as_size();
    else if (key == "k_step") k_step = as_size();
    else if (key == "B") B = as_size();
    else if (key == "gap_seed") gap_seed = as_size();
    else if (key == "rule") rule = value;
    else if (key == "k") k = as_size();
    else if (key == "kmeans_seed") kmeans_seed = as_size();
    else if (key == "restarts") restarts = as_size();
    else if (key == "max_iter") max_iter = as_size();
    else if (key == "tol") tol = as_real();
    else if (key == "representatives") representatives = as_size();
    else if (key == "top_n") top_n = as_size();
    else if (key == "project_top") project_top = as_size();
    else if (key == "workers") workers = as_size();
    else if (key == "output_dir") output_dir = value;
    else if (key == "seed") train_seed = gap_seed = kmeans_seed = as_size();
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
};

// key = value lines; '#' starts a comment.
inline void apply_config_text(PipelineConfig& cfg, std::string_view text) {
  std::size_t lineno = 0;
  for (auto raw : split(text, '\n')) {
    ++lineno;
    auto line = strip_cr(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto trim = [](std::string_view s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string_view::npos) return std::string_view{};
      return s.substr(b, s.find_last_not_of(" \t") - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

inline PipelineConfig load_config_file(const fs::path& path, PipelineConfig base = {}) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  apply_config_text(base, text);
  return base;
}

// ---------------------------------------------------------------------------
// Stage configuration fingerprints. Only settings that change a stage's output
// are included, so e.g. a new k sweep does not invalidate the trained model.

inline std::string ingest_config_hash(std::string_view format, std::size_t min_chars) {
  return content_hash("ingest format=" + std::string(format) + " min_chars=" + std::to_string(min_chars));
}

inline std::string train_config_hash(const TrainConfig& t, std::uint64_t min_count, double exponent) {
  return content_hash("train dims=" + std::to_string(t.dims) + " window=" + std::to_string(t.window) +
                      " epochs=" + std::to_string(t.epochs) + " negatives=" + std::to_string(t.negatives) +
                      " lr=" + format_double(t.initial_lr) + ":" + format_double(t.final_lr) +
                      " seed=" + std::to_string(t.seed) + " workers=" + std::to_string(t.workers) +
                      " min_count=" + std::to_string(min_count) + " exponent=" + format_double(exponent));
}

inline std::string embed_config_hash(std::size_t min_occurrences) {
  return content_hash("embed min_occurrences=" + std::to_string(min_occurrences));
}

inline std::string kmeans_fingerprint(const KMeansOptions& o) {
  return "seed=" + std::to_string(o.seed) + " restarts=" + std::to_string(o.restarts) +
         " max_iter=" + std::to_string(o.max_iter) + " tol=" + format_double(o.tol);
}

inline std::string gap_config_hash(const std::vector<std::size_t>& ks, const GapOptions& g) {
  std::string s = "gap ks=";
  for (auto k : ks) s += std::to_string(k) + ',';
  s += " B=" + std::to_string(g.B) + " seed=" + std::to_string(g.seed) + " rule=" + std::string(to_string(g.rule)) +
       " " + kmeans_fingerprint(g.kmeans);
  return content_hash(s);
}

inline std::string cluster_config_hash(std::size_t k, const KMeansOptions& o) {
  return content_hash("cluster k=" + std::to_string(k) + " " + kmeans_fingerprint(o));
}

inline std::string report_config_hash(std::size_t R, std::size_t top_n) {
  return content_hash("report R=" + std::to_string(R) + " top_n=" + std::to_string(top_n));
}

inline std::string project_config_hash(std::string_view what, std::size_t top) {
  return content_hash("project what=" + std::string(what) + " top=" + std::to_string(top));
}

// ---------------------------------------------------------------------------
// Stage implementations operating on artifact files.

inline Artifact require_artifact(const fs::path& path, std::string_view kind, std::string_view producer) {
  if (!fs::exists(path))
    throw DependencyError("missing " + std::string(kind) + " artifact " + path.string() + "; run the '" +
                          std::string(producer) + "' stage first");
  return read_artifact(path, kind);
}

inline fs::path output_sidecar(const fs::path& model_path) { return fs::path(model_path.string() + ".wprime"); }
inline fs::path vocab_sidecar(const fs::path& model_path) { return fs::path(model_path.string() + ".vocab"); }

struct IngestSummary {
  std::size_t records = 0;
  std::size_t skipped = 0;
  std::size_t documents = 0;
  std::size_t posts = 0;
};

inline IngestSummary run_ingest(const fs::path& input, RecordFormat format, std::size_t min_chars,
                                const fs::path& output, std::string_view format_tag) {
  if (!fs::exists(input)) throw DataError("corpus file not found: " + input.string());
  const std::string raw = read_file(input);
  std::istringstream in(raw);
  auto parsed = parse_corpus(in, format);
  for (const auto& d : parsed.stats.diagnostics) log(LogLevel::debug, "ingest: skipped ", d);
  if (parsed.stats.skipped) log(LogLevel::info, "ingest: skipped ", parsed.stats.skipped, " malformed line(s)");
  IngestSummary s;
  s.records = parsed.records.size();
  s.skipped = parsed.stats.skipped;
  const auto docs = filter_and_group(std::move(parsed.records), min_chars);
  s.documents = docs.size();
  for (const auto& d : docs) s.posts += d.posts.size();
  write_artifact(output, "docstore", ingest_config_hash(format_tag, min_chars), {{"corpus", content_hash(raw)}},
                 format_docstore(docs));
  log(LogLevel::info, "ingest: ", s.records, " records -> ", s.documents, " documents (", s.posts, " posts)");
  return s;
}

struct LoadedModel {
  Artifact artifact;
  Vocabulary vocab;
  EmbeddingModel model;
};

inline LoadedModel load_model(const fs::path& model_path) {
  LoadedModel m{require_artifact(model_path, "model", "train"), {}, {}};
  auto parsed = parse_embeddings(m.artifact.body);
  const auto vpath = vocab_sidecar(model_path);
  if (fs::exists(vpath)) {
    const auto va = read_artifact(vpath, "vocab");
    m.vocab = parse_vocabulary(va.body);
    if (m.vocab.size() != parsed.words.size()) throw DataError(vpath.string() + " does not match the model");
    for (std::size_t i = 0; i < parsed.words.size(); ++i)
      if (m.vocab.word(static_cast<WordIndex>(i)) != parsed.words[i])
        throw DataError(vpath.string() + " does not match the model word order");
  } else {
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    for (auto& w : parsed.words) entries.emplace_back(std::move(w), 0);
    m.vocab = Vocabulary(std::move(entries));
  }
  m.model.input = std::move(parsed.vectors);
  const auto opath = output_sidecar(model_path);
  if (fs::exists(opath)) m.model.output = parse_embeddings(read_artifact(opath, "model-output").body).vectors;
  return m;
}

inline void run_train(const fs::path& docstore_path, const TrainConfig& config, std::uint64_t min_count,
                      double exponent, const fs::path& output) {
  config.validate();
  const auto ds = require_artifact(docstore_path, "docstore", "ingest");
  const auto docs = parse_docstore(ds.body);
  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(docs.size());
  for (const auto& d : docs) tokens.push_back(tokenize_document(d));
  const auto vocab = build_vocabulary(tokens, min_count);
  if (vocab.size() < 2) throw DataError("vocabulary has fewer than two words at min_count=" + std::to_string(min_count));
  const auto noise = build_noise_distribution(vocab, exponent);
  std::vector<std::vector<WordIndex>> encoded;
  encoded.reserve(tokens.size());
  for (const auto& t : tokens) encoded.push_back(encode_document(t, vocab));
  TrainReport report;
  const auto model = train(encoded, vocab, noise, config, &report);
  for (std::size_t e = 0; e < report.epoch_mean_loss.size(); ++e)
    log(LogLevel::debug, "train: epoch ", e + 1, " mean loss ", report.epoch_mean_loss[e]);
  const auto cfg = train_config_hash(config, min_count, exponent);
  const std::vector<std::pair<std::string, std::string>> up{{"docstore", ds.header.content}};
  write_artifact(vocab_sidecar(output), "vocab", cfg, up, format_vocabulary(vocab));
  write_artifact(output_sidecar(output), "model-output", cfg, up, format_embeddings(model.output, vocab));
  write_artifact(output, "model", cfg, up, format_embeddings(model.input, vocab));
  log(LogLevel::info, "train: V=", vocab.size(), " N=", config.dims, " windows/epoch=", report.windows_per_epoch);
}

inline std::size_t run_embed(const fs::path& docstore_path, const fs::path& model_path, std::size_t min_occurrences,
                             const fs::path& output) {
  const auto ds = require_artifact(docstore_path, "docstore", "ingest");
  const auto m = load_model(model_path);
  if (m.artifact.has_header) require_lineage(m.artifact, ds);
  const auto docvecs = embed_corpus(parse_docstore(ds.body), m.model, m.vocab, min_occurrences);
  write_artifact(output, "docvecs", embed_config_hash(min_occurrences),
                 {{"docstore", ds.header.content}, {"model", m.artifact.header.content}}, format_docvecs(docvecs));
  log(LogLevel::info, "embed: ", docvecs.size(), " documents with >= ", min_occurrences, " in-vocabulary tokens");
  return docvecs.size();
}

inline GapCurve run_gap(const fs::path& docvecs_path, std::vector<std::size_t> ks, const GapOptions& options,
                        const fs::path& output) {
  const auto dv = require_artifact(docvecs_path, "docvecs", "embed");
  const auto docvecs = parse_docvecs(dv.body);
  const auto points = as_matrix(docvecs);
  const auto before = ks.size();
  std::erase_if(ks, [&](std::size_t k) { return k > points.rows(); });
  if (ks.size() != before)
    log(LogLevel::info, "gap: dropped ", before - ks.size(), " k value(s) larger than the document count ",
        points.rows());
  if (ks.empty()) throw DataError("no k in the sweep fits " + std::to_string(points.rows()) + " documents");
  auto curve = gap_curve(points, ks, options);
  write_artifact(output, "gap", gap_config_hash(ks, options), {{"docvecs", dv.header.content}},
                 format_gap_curve(curve));
  log(LogLevel::info, "gap: selected K=", curve.selected_k, " (", to_string(curve.rule), ")");
  return curve;
}

inline fs::path assignments_path(const fs::path& prefix) { return fs::path(prefix.string() + ".assignments.tsv"); }
inline fs::path centroids_path(const fs::path& prefix) { return fs::path(prefix.string() + ".centroids.txt"); }

// k == 0 reads K from the gap artifact.
inline ClusterModel run_cluster(const fs::path& docvecs_path, std::size_t k, const fs::path& gap_path,
                                const KMeansOptions& options, const fs::path& prefix) {
  const auto dv = require_artifact(docvecs_path, "docvecs", "embed");
  std::vector<std::pair<std::string, std::string>> up{{"docvecs", dv.header.content}};
  if (k == 0) {
    const auto gap = require_artifact(gap_path, "gap", "gap");
    require_lineage(gap, dv);
    k = parse_gap_curve(gap.body).selected_k;
    if (k == 0) throw DataError("gap artifact did not select a K");
    up.emplace_back("gap", gap.header.content);
  }
  const auto docvecs = parse_docvecs(dv.body);
  const auto model = kmeans(as_matrix(docvecs), k, options);
  std::vector<std::string> ids;
  for (const auto& d : docvecs) ids.push_back(d.user_id);
  const auto cfg = cluster_config_hash(k, options);
  const auto ch = write_artifact(centroids_path(prefix), "centroids", cfg, up, format_centroids(model.centroids));
  up.emplace_back("centroids", ch.content);
  write_artifact(assignments_path(prefix), "assignments", cfg, up, format_assignments(ids, model));
  log(LogLevel::info, "cluster: k=", k, " inertia=", model.inertia, " W_k=", model.dispersion);
  return model;
}

struct ClusterArtifacts {
  Artifact docvecs_artifact;
  Artifact assignments_artifact;
  Artifact centroids_artifact;
  std::vector<DocumentVector> docvecs;
  std::vector<std::size_t> assignments;
  MatrixD centroids;
};

// Loads docvecs + assignments + centroids and checks they belong together.
inline ClusterArtifacts load_clusters(const fs::path& docvecs_path, const fs::path& assign_path,
                                      const std::optional<fs::path>& centroid_path) {
  ClusterArtifacts c;
  c.docvecs_artifact = require_artifact(docvecs_path, "docvecs", "embed");
  c.assignments_artifact = require_artifact(assign_path, "assignments", "cluster");
  require_lineage(c.assignments_artifact, c.docvecs_artifact);
  c.docvecs = parse_docvecs(c.docvecs_artifact.body);
  const auto parsed = parse_assignments(c.assignments_artifact.body);
  if (parsed.user_ids.size() != c.docvecs.size()) throw DataError("assignments do not cover the document vectors");
  for (std::size_t i = 0; i < parsed.user_ids.size(); ++i)
    if (parsed.user_ids[i] != c.docvecs[i].user_id) throw DataError("assignments are not in document-vector order");
  c.assignments = parsed.clusters;
  if (centroid_path) {
    c.centroids_artifact = require_artifact(*centroid_path, "centroids", "cluster");
    require_lineage(c.assignments_artifact, c.centroids_artifact);
    c.centroids = parse_centroids(c.centroids_artifact.body);
    for (auto a : c.assignments)
      if (a >= c.centroids.rows()) throw DataError("assignment refers to a missing centroid");
  }
  return c;
}

inline std::vector<ClusterReport> run_report(const fs::path& assign_path, const fs::path& centroid_path,
                                             const fs::path& docvecs_path, const fs::path& docstore_path,
                                             const fs::path& model_path, std::size_t R, std::size_t top_n,
                                             const fs::path& output, const std::optional<fs::path>& pretty_output) {
  const auto c = load_clusters(docvecs_path, assign_path, centroid_path);
  const auto ds = require_artifact(docstore_path, "docstore", "ingest");
  const auto m = load_model(model_path);
  require_lineage(c.docvecs_artifact, ds);
  require_lineage(c.docvecs_artifact, m.artifact);
  auto docs = parse_docstore(ds.body);
  const auto reports = full_report(c.centroids, c.assignments, c.docvecs, docs, m.vocab, R, top_n);
  const std::vector<std::pair<std::string, std::string>> up{{"assignments", c.assignments_artifact.header.content},
                                                            {"centroids", c.centroids_artifact.header.content},
                                                            {"docvecs", c.docvecs_artifact.header.content},
                                                            {"docstore", ds.header.content},
                                                            {"model", m.artifact.header.content}};
  const auto cfg = report_config_hash(R, top_n);
  write_artifact(output, "report", cfg, up, format_report_tsv(reports));
  if (pretty_output) write_artifact(*pretty_output, "report-table", cfg, up, format_report_pretty(reports));
  log(LogLevel::info, "report: ", reports.size(), " clusters");
  return reports;
}

enum class ProjectWhat { documents, centroids };

inline ProjectWhat parse_project_what(std::string_view s) {
  if (s == "documents") return ProjectWhat::documents;
  if (s == "centroids") return ProjectWhat::centroids;
  throw ConfigError("--what must be 'documents' or 'centroids'");
}

// PCA is fitted on all document vectors; centroids are mapped into that basis.
// Rows: id TAB x TAB y TAB cluster.
inline void run_project(const fs::path& docvecs_path, const fs::path& assign_path,
                        const std::optional<fs::path>& centroid_path, ProjectWhat what, std::size_t top,
                        const fs::path& output) {
  if (what == ProjectWhat::centroids && !centroid_path) throw ConfigError("projecting centroids needs --centroids");
  if (top > 0 && !centroid_path) throw ConfigError("selecting representatives needs --centroids");
  const auto c = load_clusters(docvecs_path, assign_path, centroid_path);
  const auto points = as_matrix(c.docvecs);
  const auto proj = fit_pca2(points);
  std::string body = "id\tx\ty\tcluster\n";
  std::vector<std::pair<std::string, std::string>> up{{"docvecs", c.docvecs_artifact.header.content},
                                                      {"assignments", c.assignments_artifact.header.content}};
  if (centroid_path) up.emplace_back("centroids", c.centroids_artifact.header.content);
  const std::string_view what_tag = what == ProjectWhat::documents ? "documents" : "centroids";
  if (what == ProjectWhat::documents) {
    std::set<std::string> keep;
    if (top > 0) {
      for (std::size_t r = 0; r < c.centroids.rows(); ++r) {
        if (std::find(c.assignments.begin(), c.assignments.end(), r) == c.assignments.end()) continue;
        for (auto& u : representatives(r, c.centroids, c.assignments, c.docvecs, top)) keep.insert(u);
      }
    }
    for (std::size_t i = 0; i < c.docvecs.size(); ++i) {
      if (top > 0 && !keep.contains(c.docvecs[i].user_id)) continue;
      body += c.docvecs[i].user_id + '\t' + format_double(proj.coords(i, 0)) + '\t' +
              format_double(proj.coords(i, 1)) + '\t' + std::to_string(c.assignments[i]) + '\n';
    }
  } else {
    const auto coords = transform(proj, c.centroids);
    for (std::size_t r = 0; r < coords.rows(); ++r)
      body += "centroid" + std::to_string(r) + '\t' + format_double(coords(r, 0)) + '\t' + format_double(coords(r, 1)) +
              '\t' + std::to_string(r) + '\n';
  }
  write_artifact(output, "coords", project_config_hash(what_tag, top), up, body);
}

// ---------------------------------------------------------------------------
// Whole-pipeline orchestration.

inline constexpr std::array<std::string_view, 7> kStageOrder = {"ingest",  "train",  "embed",  "gap",
                                                                 "cluster", "report", "project"};

struct PipelinePaths {
  fs::path docstore, model, docvecs, gap, cluster_prefix, report, report_table, coords_documents, coords_centroids;

  explicit PipelinePaths(const fs::path& dir)
      : docstore(dir / "docstore.tsv"),
        model(dir / "model.txt"),
        docvecs(dir / "docvecs.txt"),
        gap(dir / "gap.tsv"),
        cluster_prefix(dir / "clusters"),
        report(dir / "report.tsv"),
        report_table(dir / "report.txt"),
        coords_documents(dir / "coords.documents.tsv"),
        coords_centroids(dir / "coords.centroids.tsv") {}

  // Every file the full pipeline writes, in stage order.
  std::vector<fs::path> all() const {
    return {docstore,           vocab_sidecar(model),     output_sidecar(model),
            model,              docvecs,                  gap,
            centroids_path(cluster_prefix), assignments_path(cluster_prefix), report,
            report_table,       coords_documents,         coords_centroids};
  }
};

inline std::vector<std::string> parse_stage_list(std::string_view list) {
  std::vector<std::string> out;
  for (auto s : split(list, ',')) {
    if (s.empty()) continue;
    if (std::find(kStageOrder.begin(), kStageOrder.end(), s) == kStageOrder.end())
      throw ConfigError("unknown stage '" + std::string(s) + "'");
    out.emplace_back(s);
  }
  return out;
}

namespace detail {

inline std::optional<ArtifactHeader> peek_header(const fs::path& p) {
  if (!fs::exists(p)) return std::nullopt;
  try {
    const auto a = read_artifact(p);
    if (!a.has_header) return std::nullopt;
    return a.header;
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Outputs exist, were built with `config`, and record the current content of
// every upstream file.
inline bool is_fresh(const std::vector<fs::path>& outputs, const std::string& config,
                     const std::vector<std::pair<std::string, fs::path>>& upstream) {
  for (const auto& out : outputs) {
    const auto h = peek_header(out);
    if (!h || h->config != config) return false;
    for (const auto& [kind, path] : upstream) {
      const auto uh = peek_header(path);
      const auto recorded = h->upstream_of(kind);
      if (!uh || !recorded || *recorded != uh->content) return false;
    }
  }
  return true;
}

}  // namespace detail

struct RunOptions {
  bool skip_fresh = false;
};

// Runs the requested stages (all when empty) in pipeline order. Returns the
// names of stages actually executed.
inline std::vector<std::string> run_pipeline(const PipelineConfig& cfg, std::vector<std::string> stages,
                                             const RunOptions& opts = {}) {
  cfg.validate();
  if (stages.empty()) stages.assign(kStageOrder.begin(), kStageOrder.end());
  const auto requested = [&](std::string_view s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
  const PipelinePaths p(cfg.output_dir);
  const auto format = parse_record_format(cfg.format);
  const auto ks = k_sweep(cfg.k_min, cfg.k_max, cfg.k_step);
  const auto gap_opts = cfg.gap_options();
  const auto km = cfg.kmeans_options();
  const auto tc = cfg.train_config();

  // Inputs produced by stages that are not being run must already exist.
  const std::vector<std::pair<std::string_view, std::vector<std::pair<fs::path, std::string_view>>>> needs = {
      {"train", {{p.docstore, "ingest"}}},
      {"embed", {{p.docstore, "ingest"}, {p.model, "train"}}},
      {"gap", {{p.docvecs, "embed"}}},
      {"cluster", {{p.docvecs, "embed"}}},
      {"report",
       {{assignments_path(p.cluster_prefix), "cluster"}, {p.docvecs, "embed"}, {p.docstore, "ingest"}, {p.model, "train"}}},
      {"project", {{assignments_path(p.cluster_prefix), "cluster"}, {p.docvecs, "embed"}}},
  };
  for (const auto& [stage, inputs] : needs) {
    if (!requested(stage)) continue;
    for (const auto& [path, producer] : inputs)
      if (!requested(producer) && !fs::exists(path))
        throw DependencyError("stage '" + std::string(stage) + "' needs " + path.string() + "; run the '" +
                              std::string(producer) + "' stage first");
  }
  if (requested("cluster") && cfg.k == 0 && !requested("gap") && !fs::exists(p.gap))
    throw DependencyError("stage 'cluster' with k=0 needs " + p.gap.string() + "; run the 'gap' stage first");

  std::vector<std::string> ran;
  const auto stage = [&](std::string_view name, const std::vector<fs::path>& outputs, const std::string& config,
                         const std::vector<std::pair<std::string, fs::path>>& upstream, const auto& body) {
    if (!requested(name)) return;
    if (opts.skip_fresh && detail::is_fresh(outputs, config, upstream)) {
      log(LogLevel::info, name, ": up to date, skipped");
      return;
    }
    body();
    ran.emplace_back(name);
  };

  if (requested("ingest") && cfg.input.empty()) throw ConfigError("the ingest stage needs 'input'");
  {
    // The corpus is not an artifact; its hash is compared directly.
    const bool fresh = opts.skip_fresh && fs::exists(cfg.input) && [&] {
      const auto h = detail::peek_header(p.docstore);
      return h && h->config == ingest_config_hash(cfg.format, cfg.min_chars) &&
             h->upstream_of("corpus") == content_hash(read_file(cfg.input));
    }();
    if (requested("ingest")) {
      if (fresh) {
        log(LogLevel::info, "ingest: up to date, skipped");
      } else {
        run_ingest(cfg.input, format, cfg.min_chars, p.docstore, cfg.format);
        ran.emplace_back("ingest");
      }
    }
  }
  stage("train", {p.model, output_sidecar(p.model), vocab_sidecar(p.model)},
        train_config_hash(tc, cfg.min_count, cfg.noise_exponent), {{"docstore", p.docstore}},
        [&] { run_train(p.docstore, tc, cfg.min_count, cfg.noise_exponent, p.model); });
  stage("embed", {p.docvecs}, embed_config_hash(cfg.min_occurrences), {{"docstore", p.docstore}, {"model", p.model}},
        [&] { run_embed(p.docstore, p.model, cfg.min_occurrences, p.docvecs); });
  {
    // The effective sweep depends on the document count.
    std::vector<std::size_t> eff = ks;
    if (fs::exists(p.docvecs)) {
      const auto m = parse_docvecs(read_artifact(p.docvecs, "docvecs").body).size();
      std::erase_if(eff, [&](std::size_t k) { return k > m; });
    }
    stage("gap", {p.gap}, gap_config_hash(eff, gap_opts), {{"docvecs", p.docvecs}},
          [&] { run_gap(p.docvecs, ks, gap_opts, p.gap); });
  }
  {
    std::vector<std::pair<std::string, fs::path>> up{{"docvecs", p.docvecs}};
    std::size_t k = cfg.k;
    if (k == 0) {
      up.emplace_back("gap", p.gap);
      if (fs::exists(p.gap)) k = parse_gap_curve(read_artifact(p.gap, "gap").body).selected_k;
    }
    stage("cluster", {centroids_path(p.cluster_prefix), assignments_path(p.cluster_prefix)},
          cluster_config_hash(k, km), up, [&] { run_cluster(p.docvecs, cfg.k, p.gap, km, p.cluster_prefix); });
  }
  const auto assign = assignments_path(p.cluster_prefix);
  const auto cents = centroids_path(p.cluster_prefix);
  stage("report", {p.report, p.report_table}, report_config_hash(cfg.representatives, cfg.top_n),
        {{"assignments", assign}, {"centroids", cents}, {"docvecs", p.docvecs}, {"docstore", p.docstore}, {"model", p.model}},
        [&] {
          run_report(assign, cents, p.docvecs, p.docstore, p.model, cfg.representatives, cfg.top_n, p.report,
                     p.report_table);
        });
  if (requested("project")) {
    const std::vector<std::pair<std::string, fs::path>> up{
        {"docvecs", p.docvecs}, {"assignments", assign}, {"centroids", cents}};
    const bool fresh = opts.skip_fresh &&
                       detail::is_fresh({p.coords_documents}, project_config_hash("documents", cfg.project_top), up) &&
                       detail::is_fresh({p.coords_centroids}, project_config_hash("centroids", cfg.project_top), up);
    if (fresh) {
      log(LogLevel::info, "project: up to date, skipped");
    } else {
      run_project(p.docvecs, assign, cents, ProjectWhat::documents, cfg.project_top, p.coords_documents);
      run_project(p.docvecs, assign, cents, ProjectWhat::centroids, cfg.project_top, p.coords_centroids);
      ran.emplace_back("project");
    }
  }
  return ran;
}

}  // namespace tweetopics
