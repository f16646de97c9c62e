#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tweetopics/cluster.hpp"
#include "tweetopics/docmodel.hpp"
#include "tweetopics/error.hpp"
#include "tweetopics/ingest.hpp"
#include "tweetopics/text_io.hpp"
#include "tweetopics/tokenize.hpp"
#include "tweetopics/vocab.hpp"

namespace tweetopics {

inline constexpr std::size_t kDefaultRepresentatives = 15;
inline constexpr std::size_t kHistogramBucketWidth = 10;
// Buckets [0,10), [10,20), ..., [130,140), then one bucket for >= 140.
inline constexpr std::size_t kHistogramBuckets = 15;

using WordCount = std::pair<std::string, std::uint64_t>;

struct TweetLengthStats {
  double average_chars = 0.0;
  std::size_t posts = 0;
  std::vector<std::size_t> histogram = std::vector<std::size_t>(kHistogramBuckets, 0);
};

struct ClusterReport {
  std::size_t cluster_id = 0;
  std::size_t size = 0;
  std::vector<std::string> representative_user_ids;  // closest to the centroid first
  std::vector<WordCount> top_words;
  TweetLengthStats lengths;
};

class DocumentIndex {
 public:
  explicit DocumentIndex(const std::vector<RawDocument>& docs) {
    for (const auto& d : docs) by_user_.emplace(d.user_id, &d);
  }
  const RawDocument& at(const std::string& user_id) const {
    const auto it = by_user_.find(user_id);
    if (it == by_user_.end()) throw DataError("user '" + user_id + "' is not in the docstore");
    return *it->second;
  }

 private:
  std::unordered_map<std::string, const RawDocument*> by_user_;
};

// The R members of `cluster` nearest (euclidean) to its centroid, ties by
// user id. Returns all members, flagging `undersized`, when fewer than R exist.
inline std::vector<std::string> representatives(std::size_t cluster, const MatrixD& centroids,
                                                std::span<const std::size_t> assignments,
                                                const std::vector<DocumentVector>& docvecs,
                                                std::size_t R = kDefaultRepresentatives, bool* undersized = nullptr) {
  if (assignments.size() != docvecs.size()) throw DataError("assignments do not match document vectors");
  if (cluster >= centroids.rows()) throw DataError("cluster index out of range");
  std::vector<std::pair<double, const std::string*>> ranked;
  for (std::size_t i = 0; i < docvecs.size(); ++i)
    if (assignments[i] == cluster)
      ranked.emplace_back(std::sqrt(squared_distance(docvecs[i].vector, centroids.row(cluster))), &docvecs[i].user_id);
  if (ranked.empty()) throw DataError("cluster " + std::to_string(cluster) + " is empty");
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first != b.first ? a.first < b.first : *a.second < *b.second; });
  if (undersized) *undersized = ranked.size() < R;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(R, ranked.size()); ++i) out.push_back(*ranked[i].second);
  return out;
}

// Counts in-vocabulary tokens of the users' documents; descending count, ties
// lexicographic, truncated to top_n.
inline std::vector<WordCount> word_frequencies(std::span<const std::string> users, const DocumentIndex& docs,
                                               const Vocabulary& vocab, std::size_t top_n) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& u : users)
    for (const auto& post : docs.at(u).posts)
      for (auto& t : tokenize_post(post.text))
        if (vocab.contains(t.surface)) ++counts[t.surface];
  std::vector<WordCount> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  if (out.size() > top_n) out.resize(top_n);
  return out;
}

inline TweetLengthStats tweet_length_stats(std::span<const std::string> users, const DocumentIndex& docs) {
  TweetLengthStats s;
  double total = 0.0;
  for (const auto& u : users) {
    for (auto len : docs.at(u).post_lengths) {
      total += static_cast<double>(len);
      ++s.posts;
      ++s.histogram[std::min(len / kHistogramBucketWidth, kHistogramBuckets - 1)];
    }
  }
  s.average_chars = s.posts ? total / static_cast<double>(s.posts) : 0.0;
  return s;
}

// One report per cluster, sorted by descending average post length (cluster
// id on ties).
inline std::vector<ClusterReport> full_report(const MatrixD& centroids, std::span<const std::size_t> assignments,
                                              const std::vector<DocumentVector>& docvecs,
                                              const std::vector<RawDocument>& docstore, const Vocabulary& vocab,
                                              std::size_t R = kDefaultRepresentatives, std::size_t top_n = 10) {
  const DocumentIndex index(docstore);
  std::vector<std::size_t> sizes(centroids.rows(), 0);
  for (auto a : assignments) {
    if (a >= centroids.rows()) throw DataError("assignment outside the centroid range");
    ++sizes[a];
  }
  std::vector<ClusterReport> reports;
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    ClusterReport r;
    r.cluster_id = c;
    r.size = sizes[c];
    if (r.size > 0) {
      r.representative_user_ids = representatives(c, centroids, assignments, docvecs, R);
      r.top_words = word_frequencies(r.representative_user_ids, index, vocab, top_n);
      r.lengths = tweet_length_stats(r.representative_user_ids, index);
    }
    reports.push_back(std::move(r));
  }
  std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
    return a.lengths.average_chars > b.lengths.average_chars;
  });
  return reports;
}

inline std::string format_report_tsv(const std::vector<ClusterReport>& reports) {
  std::string out = "cluster\tsize\tavg_tweet_chars\tposts\trepresentatives\ttop_words\tlength_histogram\n";
  for (const auto& r : reports) {
    out += std::to_string(r.cluster_id) + '\t' + std::to_string(r.size) + '\t' + format_double(r.lengths.average_chars) +
           '\t' + std::to_string(r.lengths.posts) + '\t';
    for (std::size_t i = 0; i < r.representative_user_ids.size(); ++i) {
      if (i) out += ',';
      out += r.representative_user_ids[i];
    }
    out += '\t';
    for (std::size_t i = 0; i < r.top_words.size(); ++i) {
      if (i) out += ' ';
      out += r.top_words[i].first + ':' + std::to_string(r.top_words[i].second);
    }
    out += '\t';
    for (std::size_t i = 0; i < r.lengths.histogram.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(r.lengths.histogram[i]);
    }
    out += '\n';
  }
  return out;
}

// Aligned text table (cluster, size, average chars, top words).
inline std::string format_report_pretty(const std::vector<ClusterReport>& reports) {
  std::vector<std::array<std::string, 4>> rows;
  rows.push_back({"#", "size", "avg chars", "most frequent words"});
  for (const auto& r : reports) {
    char avg[32];
    std::snprintf(avg, sizeof(avg), "%.1f", r.lengths.average_chars);
    std::string words;
    for (std::size_t i = 0; i < r.top_words.size(); ++i) {
      if (i) words += ", ";
      words += r.top_words[i].first + " (" + std::to_string(r.top_words[i].second) + ")";
    }
    rows.push_back({std::to_string(r.cluster_id), std::to_string(r.size), avg, words});
  }
  std::array<std::size_t, 3> width{};
  for (const auto& row : rows)
    for (std::size_t c = 0; c < 3; ++c) width[c] = std::max(width[c], utf8::scalar_count(row[c]));
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 3; ++c) {
      out += std::string(width[c] - utf8::scalar_count(row[c]), ' ') + row[c];
      out += "  ";
    }
    out += row[3];
    out += '\n';
  }
  return out;
}

}  // namespace tweetopics
