#pragma once

// Fixtures shared by the unit tests and the acceptance runner.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "tweetopics.hpp"

namespace tweetopics::testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = fs::temp_directory_path() /
            ("tweetopics_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Word `i` of topic `t`: five lowercase letters, distinct across topics.
inline std::string topic_word(int topic, int i) {
  static constexpr const char* prefixes[] = {"tax", "voy", "qem", "wub"};
  std::string w = prefixes[topic % 4];
  w += static_cast<char>('a' + i / 10);
  w += static_cast<char>('b' + i % 10);
  return w;
}

struct SyntheticCorpus {
  std::string jsonl;
  std::vector<std::string> user_ids;
  std::vector<int> topic_of_user;
  std::vector<std::vector<std::string>> topic_words;
};

// `users_per_topic` users per topic; each writes posts of 8 words drawn
// uniformly from its topic's `words_per_topic` words until it has at least
// `min_tokens` tokens.
inline SyntheticCorpus two_topic_corpus(std::size_t users_per_topic, std::size_t words_per_topic,
                                        std::size_t min_tokens, std::uint64_t seed, int topics = 2) {
  SyntheticCorpus c;
  c.topic_words.resize(static_cast<std::size_t>(topics));
  for (int t = 0; t < topics; ++t)
    for (std::size_t i = 0; i < words_per_topic; ++i) c.topic_words[t].push_back(topic_word(t, static_cast<int>(i)));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, words_per_topic - 1);
  std::uniform_int_distribution<std::size_t> extra(0, 16);
  for (std::size_t u = 0; u < users_per_topic * static_cast<std::size_t>(topics); ++u) {
    // Interleave topics so the docstore order carries no topic signal.
    const int topic = static_cast<int>(u % static_cast<std::size_t>(topics));
    const std::string id = "user" + std::to_string(u);
    c.user_ids.push_back(id);
    c.topic_of_user.push_back(topic);
    const std::size_t target = min_tokens + extra(rng);
    std::size_t written = 0;
    while (written < target) {
      std::string text;
      for (int j = 0; j < 8; ++j) {
        if (j) text += ' ';
        text += c.topic_words[topic][pick(rng)];
      }
      written += 8;
      c.jsonl += "{\"user_id\":\"" + id + "\",\"text\":\"" + text + "\"}\n";
    }
  }
  return c;
}

// Independent loss oracle: softplus form of -log sigma, no shared code with
// the library besides the matrix container.
inline double oracle_loss(const std::vector<WordIndex>& context, WordIndex target,
                          const std::vector<WordIndex>& negs, const MatrixD& W, const MatrixD& Wp) {
  const std::size_t n = W.cols();
  std::vector<double> h(n, 0.0);
  for (auto c : context)
    for (std::size_t j = 0; j < n; ++j) h[j] += W(c, j) / static_cast<double>(context.size());
  const auto score = [&](WordIndex w) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += Wp(w, j) * h[j];
    return s;
  };
  const auto softplus = [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); };
  double e = softplus(-score(target));
  for (auto k : negs) e += softplus(score(k));
  return e;
}

}  // namespace tweetopics::testing
