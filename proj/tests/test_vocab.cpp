#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "tweetopics.hpp"

namespace tp = tweetopics;

namespace {

std::vector<std::vector<std::string>> corpus_with_counts(const std::map<std::string, int>& counts) {
  std::vector<std::vector<std::string>> docs(3);
  int i = 0;
  for (const auto& [w, c] : counts)
    for (int k = 0; k < c; ++k) docs[static_cast<std::size_t>(i++ % 3)].push_back(w);
  return docs;
}

}  // namespace

TEST(Vocabulary, MinCountThreshold) {
  const auto v = tp::build_vocabulary(corpus_with_counts({{"a", 12}, {"b", 10}, {"c", 9}}), 10);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.word(0), "a");
  EXPECT_EQ(v.word(1), "b");
  EXPECT_EQ(v.total_tokens(), 22u);
  EXPECT_FALSE(v.index_of("c").has_value());
}

TEST(Vocabulary, MinCountOneKeepsEverything) {
  const auto v = tp::build_vocabulary(corpus_with_counts({{"a", 1}, {"b", 3}, {"c", 2}}), 1);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.word(0), "b");
}

TEST(Vocabulary, TiesAreLexicographic) {
  const auto v = tp::build_vocabulary(corpus_with_counts({{"y", 10}, {"x", 10}}), 10);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.word(0), "x");
  EXPECT_EQ(v.word(1), "y");
}

TEST(Vocabulary, EmptyCorpusAndBadThreshold) {
  EXPECT_TRUE(tp::build_vocabulary(std::vector<std::vector<std::string>>{}, 10).empty());
  EXPECT_THROW(tp::build_vocabulary(std::vector<std::vector<std::string>>{}, 0), tp::ConfigError);
}

TEST(Vocabulary, UnknownWordsAreAbsentNotIndexZero) {
  const tp::Vocabulary v({{"a", 5}, {"b", 3}});
  EXPECT_EQ(v.index_of("a"), std::optional<tp::WordIndex>(0));
  EXPECT_EQ(v.index_of("zzz"), std::nullopt);
  EXPECT_THROW(tp::Vocabulary({{"a", 1}, {"a", 2}}), tp::DataError);
}

TEST(Vocabulary, TextRoundTrip) {
  const tp::Vocabulary v({{"hola", 50}, {":)", 20}, {"#paz", 10}});
  EXPECT_EQ(tp::format_vocabulary(v), "hola\t50\n:)\t20\n#paz\t10\n");
  EXPECT_EQ(tp::parse_vocabulary(tp::format_vocabulary(v)), v);
}

// Property: bijective indices, counts >= min_count, descending frequency.
TEST(Vocabulary, RandomCorpusProperties) {
  std::mt19937_64 rng(8);
  std::vector<std::vector<std::string>> docs(20);
  std::map<std::string, std::uint64_t> truth;
  for (auto& d : docs)
    for (int i = 0; i < 300; ++i) {
      const auto w = "w" + std::to_string(static_cast<int>(std::sqrt(static_cast<double>(rng() % 2500))));
      d.push_back(w);
      ++truth[w];
    }
  const auto v = tp::build_vocabulary(docs, 10);
  std::size_t expected = 0;
  for (const auto& [w, c] : truth) expected += c >= 10;
  ASSERT_EQ(v.size(), expected);
  for (tp::WordIndex i = 0; i < v.size(); ++i) {
    EXPECT_EQ(v.index_of(v.word(i)), std::optional<tp::WordIndex>(i));
    EXPECT_EQ(v.count(i), truth.at(v.word(i)));
    EXPECT_GE(v.count(i), 10u);
    if (i) { EXPECT_GE(v.count(i - 1), v.count(i)); }
  }
}

TEST(NoiseDistribution, ThreeQuarterPower) {
  const std::vector<std::uint64_t> counts{81, 16};
  const tp::NoiseDistribution n(counts);
  EXPECT_NEAR(n.probabilities()[0], 27.0 / 35.0, 1e-12);
  EXPECT_NEAR(n.probabilities()[1], 8.0 / 35.0, 1e-12);
}

TEST(NoiseDistribution, SingleAndUniform) {
  const std::vector<std::uint64_t> one{7};
  const tp::NoiseDistribution single(one);
  EXPECT_DOUBLE_EQ(single.probabilities()[0], 1.0);
  const std::vector<std::uint64_t> same{5, 5, 5};
  const tp::NoiseDistribution uniform(same);
  for (double p : uniform.probabilities()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  EXPECT_THROW(tp::NoiseDistribution(std::vector<std::uint64_t>{}), tp::DataError);
}

// Property: sums to 1 and is strictly monotone in the counts.
TEST(NoiseDistribution, NormalizedAndMonotone) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint64_t> counts(1 + rng() % 300);
    for (auto& c : counts) c = 1 + rng() % 100000;
    const tp::NoiseDistribution n(counts);
    double sum = 0.0;
    for (double p : n.probabilities()) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (std::size_t i = 0; i < counts.size(); ++i)
      for (std::size_t j = 0; j < std::min<std::size_t>(counts.size(), 20); ++j)
        if (counts[i] > counts[j]) { EXPECT_GT(n.probabilities()[i], n.probabilities()[j]); }
  }
}

// Monte Carlo check of the alias table on a skewed distribution.
TEST(NoiseDistribution, DrawsMatchProbabilities) {
  const std::vector<std::uint64_t> counts{1000, 300, 50, 7, 1, 1, 200};
  const tp::NoiseDistribution n(counts);
  tp::Rng rng(10);
  std::vector<double> freq(counts.size(), 0.0);
  const int draws = 2'000'000;
  for (int i = 0; i < draws; ++i) freq[n.draw(rng)] += 1.0 / draws;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double p = n.probabilities()[i];
    EXPECT_NEAR(freq[i], p, 5.0 * std::sqrt(p * (1 - p) / draws) + 1e-6) << i;
  }
}

TEST(SampleNegative, ExclusionForcesTheOther) {
  const std::vector<std::uint64_t> counts{81, 16};
  const tp::NoiseDistribution n(counts);
  tp::Rng rng(11);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(tp::sample_negative(n, rng, 0u), 1u);
}

TEST(SampleNegative, DeterministicForSeed) {
  const std::vector<std::uint64_t> counts{5, 4, 3, 2, 1};
  const tp::NoiseDistribution n(counts);
  tp::Rng a(12), b(12);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(tp::sample_negative(n, a, 2u), tp::sample_negative(n, b, 2u));
}

TEST(SampleNegative, SingleWordWithExclusionFails) {
  const std::vector<std::uint64_t> counts{5};
  const tp::NoiseDistribution n(counts);
  tp::Rng rng(13);
  EXPECT_THROW(tp::sample_negative(n, rng, 0u), tp::DataError);
  EXPECT_EQ(tp::sample_negative(n, rng), 0u);
}
