#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tweetopics/error.hpp"
#include "tweetopics/random.hpp"
#include "tweetopics/text_io.hpp"

namespace tweetopics {

using WordIndex = std::uint32_t;

// Model vocabulary: words ordered by descending corpus frequency, ties
// lexicographic. Lookups of unknown words return std::nullopt, never index 0.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Keeps the given order; used when loading a persisted vocabulary.
  explicit Vocabulary(std::vector<std::pair<std::string, std::uint64_t>> entries) {
    words_.reserve(entries.size());
    counts_.reserve(entries.size());
    for (auto& [w, c] : entries) {
      const auto idx = static_cast<WordIndex>(words_.size());
      if (!index_.emplace(w, idx).second) throw DataError("duplicate vocabulary word '" + w + "'");
      words_.push_back(std::move(w));
      counts_.push_back(c);
      total_ += c;
    }
  }

  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }

  std::optional<WordIndex> index_of(const std::string& word) const {
    const auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(const std::string& word) const { return index_.contains(word); }

  const std::string& word(WordIndex i) const { return words_.at(i); }
  std::uint64_t count(WordIndex i) const { return counts_.at(i); }
  std::span<const std::string> words() const noexcept { return words_; }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }
  std::uint64_t total_tokens() const noexcept { return total_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.words_ == b.words_ && a.counts_ == b.counts_;
  }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, WordIndex> index_;
  std::uint64_t total_ = 0;
};

template <typename Documents>
Vocabulary build_vocabulary(const Documents& documents, std::uint64_t min_count = 10) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& doc : documents)
    for (const auto& tok : doc) ++counts[tok];
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [w, c] : counts)
    if (c >= min_count) kept.emplace_back(w, c);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return Vocabulary(std::move(kept));
}

// Text persistence: one "word TAB count" line per word, in index order.
inline std::string format_vocabulary(const Vocabulary& vocab) {
  std::string out;
  for (WordIndex i = 0; i < vocab.size(); ++i) {
    out += vocab.word(i);
    out += '\t';
    out += std::to_string(vocab.count(i));
    out += '\n';
  }
  return out;
}

inline Vocabulary parse_vocabulary(std::string_view body) {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  std::size_t lineno = 0;
  for (auto raw : split(body, '\n')) {
    ++lineno;
    const auto line = strip_cr(raw);
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string_view::npos || tab == 0)
      throw DataError("vocabulary line " + std::to_string(lineno) + ": expected word TAB count");
    entries.emplace_back(std::string(line.substr(0, tab)), parse_integer<std::uint64_t>(line.substr(tab + 1)));
  }
  return Vocabulary(std::move(entries));
}

// Negative-sampling noise distribution: count^exponent, renormalized, with a
// Walker/Vose alias table for O(1) draws.
class NoiseDistribution {
 public:
  NoiseDistribution() = default;

  explicit NoiseDistribution(std::span<const std::uint64_t> counts, double exponent = 0.75) {
    if (counts.empty()) throw DataError("noise distribution needs a non-empty vocabulary");
    const std::size_t n = counts.size();
    probabilities_.resize(n);
    long double total = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      probabilities_[i] = std::pow(static_cast<double>(counts[i]), exponent);
      total += probabilities_[i];
    }
    if (!(total > 0.0L)) throw DataError("noise distribution has zero total mass");
    for (auto& p : probabilities_) p = static_cast<double>(p / total);
    build_alias();
  }

  std::size_t size() const noexcept { return probabilities_.size(); }
  std::span<const double> probabilities() const noexcept { return probabilities_; }

  WordIndex draw(Rng& rng) const noexcept {
    const auto column = static_cast<WordIndex>(uniform_index(rng, probabilities_.size()));
    return uniform01(rng) < accept_[column] ? column : alias_[column];
  }

 private:
  void build_alias() {
    const std::size_t n = probabilities_.size();
    accept_.assign(n, 1.0);
    alias_.resize(n);
    std::vector<double> scaled(n);
    std::vector<WordIndex> small;
    std::vector<WordIndex> large;
    for (std::size_t i = 0; i < n; ++i) {
      alias_[i] = static_cast<WordIndex>(i);
      scaled[i] = probabilities_[i] * static_cast<double>(n);
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<WordIndex>(i));
    }
    while (!small.empty() && !large.empty()) {
      const WordIndex s = small.back();
      small.pop_back();
      const WordIndex l = large.back();
      accept_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    // Leftovers are 1 up to rounding.
    for (WordIndex i : small) accept_[i] = 1.0;
    for (WordIndex i : large) accept_[i] = 1.0;
  }

  std::vector<double> probabilities_;
  std::vector<double> accept_;
  std::vector<WordIndex> alias_;
};

inline NoiseDistribution build_noise_distribution(const Vocabulary& vocab, double exponent = 0.75) {
  return NoiseDistribution(vocab.counts(), exponent);
}

// Draws a noise word, redrawing while it equals `exclude`.
inline WordIndex sample_negative(const NoiseDistribution& noise, Rng& rng,
                                 std::optional<WordIndex> exclude = std::nullopt) {
  if (exclude) {
    if (noise.size() < 2) throw DataError("cannot draw a negative distinct from the target when V = 1");
    if (noise.probabilities()[*exclude] >= 1.0)
      throw DataError("excluded word carries all noise mass");
  }
  for (;;) {
    const WordIndex w = noise.draw(rng);
    if (!exclude || w != *exclude) return w;
  }
}

}  // namespace tweetopics
