#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "tweetopics.hpp"

namespace tp = tweetopics;
namespace tt = tweetopics::testing;
using Windows = std::vector<tp::ContextWindow>;

namespace {

tp::MatrixD random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  tp::MatrixD m(r, c);
  for (auto& v : m.flat()) v = u(rng);
  return m;
}

bool all_finite(const tp::MatrixD& m) {
  for (double v : m.flat())
    if (!std::isfinite(v)) return false;
  return true;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  return tp::dot(a, b) / std::sqrt(tp::dot(a, a) * tp::dot(b, b));
}

}  // namespace

TEST(ContextWindows, ThreeTokens) {
  const std::vector<tp::WordIndex> doc{0, 1, 2};
  const Windows expected{{0, {1}}, {1, {0, 2}}, {2, {1}}};
  EXPECT_EQ(tp::context_windows(doc, 1), expected);
}

TEST(ContextWindows, SingleTokenHasNoWindows) {
  const std::vector<tp::WordIndex> doc{4};
  EXPECT_TRUE(tp::context_windows(doc, 3).empty());
  EXPECT_THROW(tp::context_windows(doc, 0), tp::ConfigError);
}

TEST(ContextWindows, WindowWiderThanDocument) {
  const std::vector<tp::WordIndex> doc{0, 1, 2, 3, 4};
  const auto w = tp::context_windows(doc, 6);
  ASSERT_EQ(w.size(), 5u);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(w[t].context.size(), 4u);
    for (auto c : w[t].context) EXPECT_NE(c, w[t].target);
  }
}

TEST(ContextWindows, OutOfVocabularyTokensAreDeletedFirst) {
  const tp::Vocabulary v({{"a", 10}, {"b", 10}});
  const std::vector<std::string> tokens{"a", "zzz", "zzz", "b"};
  const auto doc = tp::encode_document(tokens, v);
  EXPECT_EQ(doc, (std::vector<tp::WordIndex>{0, 1}));
  // With OOV removed, a and b are adjacent even at c = 1.
  EXPECT_EQ(tp::context_windows(doc, 1), (Windows{{0, {1}}, {1, {0}}}));
}

TEST(HiddenVector, AveragesContextRows) {
  tp::MatrixD w(3, 2);
  w(0, 0) = 1, w(0, 1) = 2;
  w(1, 0) = -1, w(1, 1) = -2;
  w(2, 0) = 4, w(2, 1) = 0;
  const std::vector<tp::WordIndex> one{2}, opposite{0, 1}, repeated{0, 0};
  EXPECT_EQ(tp::hidden_vector(one, w), (std::vector<double>{4, 0}));
  EXPECT_EQ(tp::hidden_vector(opposite, w), (std::vector<double>{0, 0}));
  EXPECT_EQ(tp::hidden_vector(repeated, w), (std::vector<double>{1, 2}));
  EXPECT_THROW(tp::hidden_vector(std::vector<tp::WordIndex>{}, w), tp::DataError);
}

TEST(Probabilities, SigmoidValuesAndSaturation) {
  tp::MatrixD out(1, 1, 0.0);
  const std::vector<double> h{1.0};
  EXPECT_DOUBLE_EQ(tp::positive_probability(0, h, out), 0.5);
  out(0, 0) = 1e6;
  EXPECT_DOUBLE_EQ(tp::positive_probability(0, h, out), 1.0);
  EXPECT_DOUBLE_EQ(tp::negative_probability(0, h, out), 0.0);
  out(0, 0) = -1e6;
  EXPECT_DOUBLE_EQ(tp::positive_probability(0, h, out), 0.0);
  EXPECT_TRUE(std::isfinite(tp::sigmoid(-1e308)) && std::isfinite(tp::sigmoid(1e308)));
}

TEST(Probabilities, ComplementsSumToOne) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    const auto out = random_matrix(5, 6, rng, 5.0);
    const auto h = random_matrix(1, 6, rng, 2.0);
    for (tp::WordIndex w = 0; w < 5; ++w)
      EXPECT_NEAR(tp::positive_probability(w, h.row(0), out) + tp::negative_probability(w, h.row(0), out), 1.0,
                  1e-12);
  }
}

TEST(Softmax, UniformDegenerateAndNormalized) {
  const tp::MatrixD zeros(7, 3, 0.0);
  const std::vector<double> h{0.3, -1, 2};
  for (tp::WordIndex j = 0; j < 7; ++j) EXPECT_NEAR(tp::softmax_context_probability(j, h, zeros), 1.0 / 7, 1e-15);
  const tp::MatrixD single(1, 3, 5.0);
  EXPECT_DOUBLE_EQ(tp::softmax_context_probability(0, h, single), 1.0);
  std::mt19937_64 rng(2);
  const auto out = random_matrix(100, 8, rng, 4.0);
  const auto hh = random_matrix(1, 8, rng, 4.0);
  double s = 0.0;
  for (tp::WordIndex j = 0; j < 100; ++j) s += tp::softmax_context_probability(j, hh.row(0), out);
  EXPECT_NEAR(s, 1.0, 1e-9);
}

TEST(Loss, ZeroScoresGiveTwoLogTwo) {
  const tp::MatrixD out(3, 4, 0.0);
  const std::vector<double> h{0.1, 0.2, 0.3, 0.4};
  const std::vector<tp::WordIndex> negs{2};
  EXPECT_NEAR(tp::negative_sampling_loss(1, negs, h, out), 2.0 * std::log(2.0), 1e-15);
  EXPECT_NEAR(tp::negative_sampling_loss(1, negs, h, out), 1.3863, 1e-4);
}

TEST(Loss, PerfectClassificationLimit) {
  tp::MatrixD out(2, 1);
  out(0, 0) = 1e3;
  out(1, 0) = -1e3;
  const std::vector<double> h{1.0};
  EXPECT_NEAR(tp::negative_sampling_loss(0, std::vector<tp::WordIndex>{1}, h, out), 0.0, 1e-12);
  // The clamp keeps the opposite extreme finite.
  const double worst = tp::negative_sampling_loss(1, std::vector<tp::WordIndex>{0}, h, out);
  EXPECT_TRUE(std::isfinite(worst));
  EXPECT_NEAR(worst, -2.0 * std::log(tp::kProbabilityFloor), 1e-9);
}

TEST(Loss, MatchesIndependentOracleAndIsMonotone) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    tp::EmbeddingModel m;
    m.input = random_matrix(10, 4, rng);
    m.output = random_matrix(10, 4, rng);
    const std::vector<tp::WordIndex> ctx{1, 2, 2}, negs{4, 5, 6};
    const auto h = tp::hidden_vector(ctx, m.input);
    const double e = tp::negative_sampling_loss(0, negs, h, m.output);
    EXPECT_NEAR(e, tt::oracle_loss(ctx, 0, negs, m.input, m.output), 1e-12);
    EXPECT_GE(e, 0.0);
    // Raising the positive score along h lowers the loss.
    auto bumped = m.output;
    for (std::size_t j = 0; j < 4; ++j) bumped(0, j) += 0.1 * h[j];
    EXPECT_LT(tp::negative_sampling_loss(0, negs, h, bumped), e);
  }
}

// Central differences at N = 5, K = 3 against the oracle loss.
TEST(Loss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    tp::EmbeddingModel m;
    m.input = random_matrix(12, 5, rng, 0.7);
    m.output = random_matrix(12, 5, rng, 0.7);
    const std::vector<tp::WordIndex> ctx{3, 7, 3, 9}, negs{1, 2, 7};
    tp::MatrixD gi(12, 5, 0.0), go(12, 5, 0.0);
    tp::accumulate_loss_gradient(ctx, 0, negs, m, gi, go);
    const double eps = 1e-5;
    for (auto* p : {&m.input, &m.output}) {
      const auto& g = p == &m.input ? gi : go;
      for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
          const double saved = (*p)(i, j);
          (*p)(i, j) = saved + eps;
          const double up = tt::oracle_loss(ctx, 0, negs, m.input, m.output);
          (*p)(i, j) = saved - eps;
          const double down = tt::oracle_loss(ctx, 0, negs, m.input, m.output);
          (*p)(i, j) = saved;
          const double numeric = (up - down) / (2 * eps);
          EXPECT_LE(std::abs(numeric - g(i, j)), 1e-5 * std::max(1.0, std::abs(numeric))) << i << "," << j;
        }
    }
  }
}

TEST(SgdStep, ZeroLearningRateIsBitExactNoOp) {
  std::mt19937_64 rng(5);
  tp::EmbeddingModel m;
  m.input = random_matrix(6, 3, rng);
  m.output = random_matrix(6, 3, rng);
  const auto before = m;
  const std::vector<tp::WordIndex> ctx{1, 2}, negs{3, 4};
  const double loss = tp::sgd_step(ctx, 0, negs, m, 0.0);
  EXPECT_EQ(m.input, before.input);
  EXPECT_EQ(m.output, before.output);
  EXPECT_NEAR(loss, tt::oracle_loss(ctx, 0, negs, m.input, m.output), 1e-12);
}

TEST(SgdStep, MatchesExplicitGradientForDistinctWords) {
  // With distinct target and negatives the sequential update equals one
  // gradient step computed from the full gradient.
  std::mt19937_64 rng(6);
  tp::EmbeddingModel m;
  m.input = random_matrix(8, 4, rng, 0.5);
  m.output = random_matrix(8, 4, rng, 0.5);
  const std::vector<tp::WordIndex> ctx{5, 6}, negs{1, 2};
  tp::MatrixD gi(8, 4, 0.0), go(8, 4, 0.0);
  tp::accumulate_loss_gradient(ctx, 0, negs, m, gi, go);
  auto expected = m;
  const double lr = 0.05;
  for (std::size_t k = 0; k < gi.flat().size(); ++k) {
    expected.input.flat()[k] -= lr * gi.flat()[k];
    expected.output.flat()[k] -= lr * go.flat()[k];
  }
  tp::sgd_step(ctx, 0, negs, m, lr);
  for (std::size_t k = 0; k < gi.flat().size(); ++k) {
    EXPECT_NEAR(m.input.flat()[k], expected.input.flat()[k], 1e-15);
    EXPECT_NEAR(m.output.flat()[k], expected.output.flat()[k], 1e-15);
  }
}

TEST(SgdStep, RepeatedSampleLossDecreasesMonotonically) {
  tp::TrainConfig cfg;
  cfg.dims = 10;
  auto m = tp::initialize_model(20, cfg);
  const std::vector<tp::WordIndex> ctx{3, 4, 5, 6}, negs{7, 8, 9, 10, 11};
  double prev = tt::oracle_loss(ctx, 2, negs, m.input, m.output);
  for (int step = 0; step < 100; ++step) {
    tp::sgd_step(ctx, 2, negs, m, 0.025);
    const double now = tt::oracle_loss(ctx, 2, negs, m.input, m.output);
    ASSERT_LT(now, prev) << "step " << step;
    prev = now;
  }
}

TEST(Train, TwoWordToyCorpus) {
  const tp::Vocabulary v({{"a", 500}, {"b", 500}});
  std::vector<std::vector<tp::WordIndex>> docs(10);
  for (auto& d : docs)
    for (int i = 0; i < 100; ++i) d.push_back(static_cast<tp::WordIndex>(i % 2));
  tp::TrainConfig cfg;
  cfg.dims = 10;
  cfg.window = 1;  // the only context of b is a, and vice versa
  cfg.negatives = 1;
  const auto m = tp::train(docs, v, tp::build_noise_distribution(v), cfg);
  EXPECT_GT(tp::sigmoid(tp::dot(m.output.row(1), m.input.row(0))), 0.9);
  EXPECT_GT(tp::sigmoid(tp::dot(m.output.row(0), m.input.row(1))), 0.9);
}

TEST(Train, DeterministicWithOneWorker) {
  const tp::Vocabulary v({{"a", 30}, {"b", 20}, {"c", 10}});
  std::vector<std::vector<tp::WordIndex>> docs{{0, 1, 2, 0, 1, 0}, {2, 2, 1, 0}};
  tp::TrainConfig cfg;
  cfg.dims = 8;
  const auto noise = tp::build_noise_distribution(v);
  const auto a = tp::train(docs, v, noise, cfg);
  const auto b = tp::train(docs, v, noise, cfg);
  EXPECT_EQ(a.input, b.input);
  EXPECT_EQ(a.output, b.output);
  cfg.seed = 43;
  EXPECT_NE(tp::train(docs, v, noise, cfg).input, a.input);
}

TEST(Train, InitializationRangeAndZeroOutput) {
  tp::TrainConfig cfg;
  cfg.dims = 16;
  const auto m = tp::initialize_model(50, cfg);
  for (double x : m.input.flat()) {
    EXPECT_GE(x, -0.5 / 16);
    EXPECT_LE(x, 0.5 / 16);
  }
  for (double x : m.output.flat()) EXPECT_EQ(x, 0.0);
}

TEST(Train, ConfigAndInputValidation) {
  tp::TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), tp::ConfigError);
  cfg = {};
  cfg.initial_lr = 0.001;
  cfg.final_lr = 0.01;
  EXPECT_THROW(cfg.validate(), tp::ConfigError);
  cfg = {};
  cfg.negatives = 0;
  EXPECT_THROW(cfg.validate(), tp::ConfigError);
  const tp::Vocabulary v({{"a", 3}, {"b", 3}});
  const auto noise = tp::build_noise_distribution(v);
  EXPECT_THROW(tp::train({}, v, noise, tp::TrainConfig{}), tp::DataError);
  EXPECT_THROW(tp::train({{0}}, v, noise, tp::TrainConfig{}), tp::DataError);
}

// Words of a topic end up closer to each other than to the other topic's.
TEST(Train, TwoTopicWordVectorsSeparate) {
  const auto corpus = tt::two_topic_corpus(500, 50, 60, 21);
  std::istringstream in(corpus.jsonl);
  const auto docs = tp::filter_and_group(tp::parse_corpus(in, tp::RecordFormat::jsonl).records);
  std::vector<std::vector<std::string>> tokens;
  for (const auto& d : docs) tokens.push_back(tp::tokenize_document(d));
  const auto vocab = tp::build_vocabulary(tokens, 10);
  ASSERT_EQ(vocab.size(), 100u);
  std::vector<std::vector<tp::WordIndex>> encoded;
  for (const auto& t : tokens) encoded.push_back(tp::encode_document(t, vocab));
  tp::TrainConfig cfg;
  cfg.dims = 50;
  cfg.window = 6;
  cfg.negatives = 5;
  tp::TrainReport report;
  const auto m = tp::train(encoded, vocab, tp::build_noise_distribution(vocab), cfg, &report);
  EXPECT_TRUE(all_finite(m.input) && all_finite(m.output));
  EXPECT_LT(report.epoch_mean_loss.back(), report.epoch_mean_loss.front());

  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (int t1 = 0; t1 < 2; ++t1)
    for (int t2 = 0; t2 < 2; ++t2)
      for (const auto& a : corpus.topic_words[t1])
        for (const auto& b : corpus.topic_words[t2]) {
          if (a == b) continue;
          const double c = cosine(m.input.row(*vocab.index_of(a)), m.input.row(*vocab.index_of(b)));
          (t1 == t2 ? intra : inter) += c;
          ++(t1 == t2 ? n_intra : n_inter);
        }
  intra /= static_cast<double>(n_intra);
  inter /= static_cast<double>(n_inter);
  EXPECT_GE(intra - inter, 0.2) << "intra " << intra << " inter " << inter;
}

TEST(Train, SeveralWorkersStayFinite) {
  const auto corpus = tt::two_topic_corpus(100, 30, 60, 22);
  std::istringstream in(corpus.jsonl);
  const auto docs = tp::filter_and_group(tp::parse_corpus(in, tp::RecordFormat::jsonl).records);
  std::vector<std::vector<std::string>> tokens;
  for (const auto& d : docs) tokens.push_back(tp::tokenize_document(d));
  const auto vocab = tp::build_vocabulary(tokens, 10);
  std::vector<std::vector<tp::WordIndex>> encoded;
  for (const auto& t : tokens) encoded.push_back(tp::encode_document(t, vocab));
  tp::TrainConfig cfg;
  cfg.dims = 20;
  cfg.workers = 4;
  tp::TrainReport report;
  const auto m = tp::train(encoded, vocab, tp::build_noise_distribution(vocab), cfg, &report);
  EXPECT_TRUE(all_finite(m.input) && all_finite(m.output));
  EXPECT_LT(report.epoch_mean_loss.back(), report.epoch_mean_loss.front());
}

TEST(Embeddings, TextRoundTrip) {
  const tp::Vocabulary v({{"hola", 3}, {":)", 2}});
  std::mt19937_64 rng(7);
  const auto w = random_matrix(2, 3, rng);
  const auto text = tp::format_embeddings(w, v);
  EXPECT_TRUE(text.starts_with("2 3\nhola "));
  const auto parsed = tp::parse_embeddings(text);
  EXPECT_EQ(parsed.words, (std::vector<std::string>{"hola", ":)"}));
  EXPECT_EQ(parsed.vectors, w);
  EXPECT_THROW(tp::parse_embeddings("2 3\nhola 1 2 3\n"), tp::DataError);
}
