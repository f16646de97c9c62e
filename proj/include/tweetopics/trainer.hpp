#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "tweetopics/error.hpp"
#include "tweetopics/matrix.hpp"
#include "tweetopics/random.hpp"
#include "tweetopics/text_io.hpp"
#include "tweetopics/vocab.hpp"

namespace tweetopics {

struct TrainConfig {
  std::size_t dims = 150;
  std::size_t window = 6;  // context distance c
  std::size_t epochs = 5;
  std::size_t negatives = 5;  // K
  double initial_lr = 0.025;
  double final_lr = 0.0001;
  std::uint64_t seed = 42;
  std::size_t workers = 1;

  void validate() const {
    if (dims < 1) throw ConfigError("dims must be >= 1");
    if (window < 1) throw ConfigError("window must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (negatives < 1) throw ConfigError("negatives must be >= 1");
    if (!(final_lr >= 0.0) || !(initial_lr > final_lr))
      throw ConfigError("learning rates must satisfy initial_lr > final_lr >= 0");
    if (workers < 1) throw ConfigError("workers must be >= 1");
  }
};

// CBOW parameters. Row i of `input` is the embedding of word i (W); row i of
// `output` is its output vector (W').
struct EmbeddingModel {
  MatrixD input;
  MatrixD output;
  std::size_t window = 6;
  std::size_t negatives = 5;

  std::size_t dims() const noexcept { return input.cols(); }
  std::size_t vocab_size() const noexcept { return input.rows(); }
};

// Maps tokens to vocabulary indices, deleting out-of-vocabulary tokens.
template <typename Tokens>
std::vector<WordIndex> encode_document(const Tokens& tokens, const Vocabulary& vocab) {
  std::vector<WordIndex> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens)
    if (auto i = vocab.index_of(t)) out.push_back(*i);
  return out;
}

struct ContextWindow {
  WordIndex target;
  std::vector<WordIndex> context;

  friend bool operator==(const ContextWindow&, const ContextWindow&) = default;
};

// Calls f(target, context) for every position whose context (tokens at
// distance 1..c, clipped to the document) is non-empty.
template <typename F>
void for_each_window(std::span<const WordIndex> doc, std::size_t c, F&& f) {
  std::vector<WordIndex> context;
  context.reserve(2 * c);
  for (std::size_t t = 0; t < doc.size(); ++t) {
    context.clear();
    const std::size_t lo = t >= c ? t - c : 0;
    const std::size_t hi = std::min(doc.size() - 1, t + c);
    for (std::size_t i = lo; i <= hi; ++i)
      if (i != t) context.push_back(doc[i]);
    if (!context.empty()) f(doc[t], std::span<const WordIndex>(context));
  }
}

inline std::vector<ContextWindow> context_windows(std::span<const WordIndex> doc, std::size_t c) {
  if (c < 1) throw ConfigError("context distance must be >= 1");
  std::vector<ContextWindow> out;
  for_each_window(doc, c, [&](WordIndex target, std::span<const WordIndex> ctx) {
    out.push_back({target, {ctx.begin(), ctx.end()}});
  });
  return out;
}

inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline constexpr double kProbabilityFloor = 1e-12;

// Mean of the context rows of W.
inline std::vector<double> hidden_vector(std::span<const WordIndex> context, const MatrixD& input) {
  if (context.empty()) throw DataError("hidden vector of an empty context");
  std::vector<double> h(input.cols(), 0.0);
  for (WordIndex c : context) {
    const auto row = input.row(c);
    for (std::size_t j = 0; j < h.size(); ++j) h[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(context.size());
  for (auto& v : h) v *= inv;
  return h;
}

// P(d=1 | w, C) = sigma(<w'_w, h>).
inline double positive_probability(WordIndex w, std::span<const double> h, const MatrixD& output) {
  return sigmoid(dot(output.row(w), h));
}

// P(d=0 | w, C) = 1 / (exp(<w'_w, h>) + 1).
inline double negative_probability(WordIndex w, std::span<const double> h, const MatrixD& output) {
  return sigmoid(-dot(output.row(w), h));
}

// Full-softmax P(w_j | C) with h as the input representation. Diagnostic only.
inline std::vector<double> softmax_distribution(std::span<const double> h, const MatrixD& output) {
  std::vector<double> scores(output.rows());
  for (std::size_t k = 0; k < scores.size(); ++k) scores[k] = dot(output.row(k), h);
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (auto& s : scores) z += (s = std::exp(s - mx));
  for (auto& s : scores) s /= z;
  return scores;
}

inline double softmax_context_probability(WordIndex wj, std::span<const double> h, const MatrixD& output) {
  if (output.rows() == 0) throw DataError("softmax over an empty vocabulary");
  return softmax_distribution(h, output).at(wj);
}

// E = -log sigma(<w'_w, h>) - sum_k log sigma(-<w'_{n_k}, h>), probabilities
// floored at 1e-12.
inline double negative_sampling_loss(WordIndex w, std::span<const WordIndex> negs, std::span<const double> h,
                                     const MatrixD& output) {
  if (negs.empty()) throw DataError("negative sampling loss needs at least one negative");
  double e = -std::log(std::max(positive_probability(w, h, output), kProbabilityFloor));
  for (WordIndex n : negs) e -= std::log(std::max(negative_probability(n, h, output), kProbabilityFloor));
  return e;
}

// Adds dE/dW and dE/dW' for one (context, target, negatives) sample into
// dense accumulators shaped like the model matrices.
inline void accumulate_loss_gradient(std::span<const WordIndex> context, WordIndex target,
                                     std::span<const WordIndex> negs, const EmbeddingModel& model,
                                     MatrixD& grad_input, MatrixD& grad_output) {
  const auto h = hidden_vector(context, model.input);
  std::vector<double> grad_h(h.size(), 0.0);
  const auto add_term = [&](WordIndex w, double label) {
    const auto row = model.output.row(w);
    const double g = sigmoid(dot(row, h)) - label;  // dE/d<w'_w, h>
    auto grow = grad_output.row(w);
    for (std::size_t j = 0; j < h.size(); ++j) {
      grad_h[j] += g * row[j];
      grow[j] += g * h[j];
    }
  };
  add_term(target, 1.0);
  for (WordIndex n : negs) add_term(n, 0.0);
  const double share = 1.0 / static_cast<double>(context.size());
  for (WordIndex c : context) {
    auto grow = grad_input.row(c);
    for (std::size_t j = 0; j < h.size(); ++j) grow[j] += share * grad_h[j];
  }
}

namespace detail {

// Relaxed atomic access lets several workers update the shared matrices
// without locks (lost updates are tolerated); plain access otherwise.
template <bool Shared>
inline double load(const double& x) noexcept {
  if constexpr (Shared) {
    return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
  } else {
    return x;
  }
}

template <bool Shared>
inline void store(double& x, double v) noexcept {
  if constexpr (Shared) {
    std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
  } else {
    x = v;
  }
}

struct Scratch {
  std::vector<double> h;
  std::vector<double> grad_h;
  std::vector<WordIndex> negs;
};

template <bool Shared>
double cbow_update(std::span<const WordIndex> context, WordIndex target, std::span<const WordIndex> negs,
                   MatrixD& input, MatrixD& output, double lr, Scratch& s) {
  const std::size_t n = input.cols();
  s.h.assign(n, 0.0);
  s.grad_h.assign(n, 0.0);
  for (WordIndex c : context) {
    const auto row = input.row(c);
    for (std::size_t j = 0; j < n; ++j) s.h[j] += load<Shared>(row[j]);
  }
  const double inv_c = 1.0 / static_cast<double>(context.size());
  for (auto& v : s.h) v *= inv_c;

  double loss = 0.0;
  const auto term = [&](WordIndex w, double label) {
    auto row = output.row(w);
    double f = 0.0;
    for (std::size_t j = 0; j < n; ++j) f += load<Shared>(row[j]) * s.h[j];
    const double p = sigmoid(label > 0.0 ? f : -f);
    loss -= std::log(std::max(p, kProbabilityFloor));
    const double g = sigmoid(f) - label;
    for (std::size_t j = 0; j < n; ++j) {
      const double r = load<Shared>(row[j]);
      s.grad_h[j] += g * r;
      store<Shared>(row[j], r - lr * g * s.h[j]);
    }
  };
  term(target, 1.0);
  for (WordIndex w : negs) term(w, 0.0);

  const double step = lr * inv_c;
  for (WordIndex c : context) {
    auto row = input.row(c);
    for (std::size_t j = 0; j < n; ++j) store<Shared>(row[j], load<Shared>(row[j]) - step * s.grad_h[j]);
  }
  return loss;
}

}  // namespace detail

// One SGD step on a window with the given negatives. Output rows are updated
// one term at a time; the returned loss sums each term as it is applied, which
// is the pre-update loss unless a word repeats among target and negatives.
inline double sgd_step(std::span<const WordIndex> context, WordIndex target, std::span<const WordIndex> negs,
                       EmbeddingModel& model, double lr) {
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (lr == 0.0) {
    const auto h = hidden_vector(context, model.input);
    return negative_sampling_loss(target, negs, h, model.output);
  }
  detail::Scratch scratch;
  return detail::cbow_update<false>(context, target, negs, model.input, model.output, lr, scratch);
}

// As above, drawing `model.negatives` noise words (never the target).
inline double sgd_step(const ContextWindow& window, EmbeddingModel& model, const NoiseDistribution& noise,
                       double lr, Rng& rng) {
  std::vector<WordIndex> negs(model.negatives);
  for (auto& n : negs) n = sample_negative(noise, rng, window.target);
  return sgd_step(window.context, window.target, negs, model, lr);
}

inline EmbeddingModel initialize_model(std::size_t vocab_size, const TrainConfig& config) {
  EmbeddingModel model;
  model.window = config.window;
  model.negatives = config.negatives;
  model.input = MatrixD(vocab_size, config.dims);
  model.output = MatrixD(vocab_size, config.dims, 0.0);
  Rng rng(derive_seed(config.seed, 0));
  const double scale = 1.0 / static_cast<double>(config.dims);
  for (auto& v : model.input.flat()) v = (uniform01(rng) - 0.5) * scale;
  return model;
}

struct TrainReport {
  std::uint64_t windows_per_epoch = 0;
  std::vector<double> epoch_mean_loss;  // summed over workers
};

namespace detail {

inline std::uint64_t window_count(std::span<const WordIndex> doc) noexcept {
  return doc.size() >= 2 ? doc.size() : 0;
}

template <bool Shared>
void train_shard(std::span<const std::vector<WordIndex>> docs, EmbeddingModel& model, const NoiseDistribution& noise,
                 const TrainConfig& config, std::uint64_t worker, std::vector<double>& epoch_loss) {
  std::uint64_t per_epoch = 0;
  for (const auto& d : docs) per_epoch += window_count(d);
  const double total = static_cast<double>(per_epoch * config.epochs);
  Rng rng(derive_seed(config.seed, 1, worker));
  Scratch scratch;
  scratch.negs.resize(config.negatives);
  std::uint64_t done = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = 0.0;
    for (const auto& doc : docs) {
      for_each_window(std::span<const WordIndex>(doc), config.window,
                      [&](WordIndex target, std::span<const WordIndex> ctx) {
                        const double progress = total > 0 ? static_cast<double>(done) / total : 0.0;
                        const double lr = config.initial_lr - (config.initial_lr - config.final_lr) * progress;
                        for (auto& n : scratch.negs) n = sample_negative(noise, rng, target);
                        loss += cbow_update<Shared>(ctx, target, scratch.negs, model.input, model.output, lr,
                                                    scratch);
                        ++done;
                      });
    }
    epoch_loss[epoch] = loss;
  }
}

}  // namespace detail

// Trains on documents already encoded to vocabulary indices. The learning rate
// decays linearly from initial_lr to final_lr over all scheduled updates. With
// workers == 1 the result depends only on the inputs and the seed.
inline EmbeddingModel train(const std::vector<std::vector<WordIndex>>& documents, const Vocabulary& vocab,
                            const NoiseDistribution& noise, const TrainConfig& config,
                            TrainReport* report = nullptr) {
  config.validate();
  if (vocab.empty()) throw DataError("cannot train on an empty vocabulary");
  if (noise.size() != vocab.size()) throw DataError("noise distribution does not match the vocabulary");
  if (vocab.size() < 2) throw DataError("negative sampling needs at least two vocabulary words");
  std::uint64_t per_epoch = 0;
  for (const auto& d : documents) {
    for (WordIndex w : d)
      if (w >= vocab.size()) throw DataError("document index outside the vocabulary");
    per_epoch += detail::window_count(d);
  }
  if (per_epoch == 0) throw DataError("corpus has no context windows to train on");

  EmbeddingModel model = initialize_model(vocab.size(), config);
  const std::size_t workers = std::min<std::size_t>(config.workers, documents.size());
  std::vector<std::vector<double>> losses(workers, std::vector<double>(config.epochs, 0.0));

  if (workers <= 1) {
    detail::train_shard<false>(documents, model, noise, config, 0, losses[0]);
  } else {
    // Contiguous shards of roughly equal window counts.
    std::vector<std::size_t> bounds{0};
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < documents.size() && bounds.size() < workers; ++i) {
      acc += detail::window_count(documents[i]);
      if (acc * workers >= per_epoch * bounds.size()) bounds.push_back(i + 1);
    }
    while (bounds.size() < workers) bounds.push_back(documents.size());
    bounds.push_back(documents.size());
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::span<const std::vector<WordIndex>> shard(documents.data() + bounds[w], bounds[w + 1] - bounds[w]);
      threads.emplace_back([&, shard, w] { detail::train_shard<true>(shard, model, noise, config, w, losses[w]); });
    }
  }

  if (report) {
    report->windows_per_epoch = per_epoch;
    report->epoch_mean_loss.assign(config.epochs, 0.0);
    for (const auto& l : losses)
      for (std::size_t e = 0; e < config.epochs; ++e) report->epoch_mean_loss[e] += l[e];
    for (auto& l : report->epoch_mean_loss) l /= static_cast<double>(per_epoch);
  }
  return model;
}

// Text embedding format: "V N" header, then "word v1 ... vN" per row.
inline std::string format_embeddings(const MatrixD& m, const Vocabulary& vocab) {
  if (m.rows() != vocab.size()) throw DataError("matrix rows do not match the vocabulary");
  std::string out = std::to_string(m.rows()) + ' ' + std::to_string(m.cols()) + '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out += vocab.word(static_cast<WordIndex>(i));
    for (double v : m.row(i)) {
      out += ' ';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

struct ParsedEmbeddings {
  std::vector<std::string> words;
  MatrixD vectors;
};

inline ParsedEmbeddings parse_embeddings(std::string_view body) {
  const auto lines = split(body, '\n');
  if (lines.empty() || strip_cr(lines[0]).empty()) throw DataError("embedding file is empty");
  const auto head = split_ws(strip_cr(lines[0]));
  if (head.size() != 2) throw DataError("embedding header must be 'V N'");
  const auto v = parse_integer<std::size_t>(head[0]);
  const auto n = parse_integer<std::size_t>(head[1]);
  ParsedEmbeddings out;
  out.vectors = MatrixD(v, n);
  out.words.reserve(v);
  std::size_t row = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = strip_cr(lines[li]);
    if (line.empty()) continue;
    const auto fields = split(line, ' ');
    if (row >= v || fields.size() != n + 1)
      throw DataError("embedding line " + std::to_string(li + 1) + ": expected word and " + std::to_string(n) +
                      " values");
    out.words.emplace_back(fields[0]);
    auto r = out.vectors.row(row);
    for (std::size_t j = 0; j < n; ++j) r[j] = parse_double(fields[j + 1]);
    ++row;
  }
  if (row != v) throw DataError("embedding file declares " + std::to_string(v) + " rows, found " + std::to_string(row));
  return out;
}

}  // namespace tweetopics
