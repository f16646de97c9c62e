#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tweetopics/error.hpp"
#include "tweetopics/ingest.hpp"
#include "tweetopics/matrix.hpp"
#include "tweetopics/text_io.hpp"
#include "tweetopics/tokenize.hpp"
#include "tweetopics/trainer.hpp"
#include "tweetopics/vocab.hpp"

namespace tweetopics {

inline constexpr std::size_t kDefaultMinOccurrences = 40;

struct DocumentVector {
  std::string user_id;
  std::vector<double> vector;
  std::size_t in_vocab_occurrences = 0;
  std::vector<std::size_t> post_lengths;
};

// All tokens of a document, posts concatenated in order.
inline std::vector<std::string> tokenize_document(const RawDocument& doc) {
  std::vector<std::string> out;
  for (const auto& p : doc.posts)
    for (auto& t : tokenize_post(p.text)) out.push_back(std::move(t.surface));
  return out;
}

// Mean of the input vectors of every in-vocabulary occurrence, or nullopt
// when there are fewer than `min_occurrences` of them.
inline std::optional<DocumentVector> embed_document(std::string user_id, const std::vector<std::string>& tokens,
                                                    const EmbeddingModel& model, const Vocabulary& vocab,
                                                    std::size_t min_occurrences = kDefaultMinOccurrences) {
  if (model.vocab_size() != vocab.size()) throw DataError("model is not bound to this vocabulary");
  DocumentVector dv;
  dv.user_id = std::move(user_id);
  dv.vector.assign(model.dims(), 0.0);
  for (const auto& t : tokens) {
    const auto idx = vocab.index_of(t);
    if (!idx) continue;
    const auto row = model.input.row(*idx);
    for (std::size_t j = 0; j < dv.vector.size(); ++j) dv.vector[j] += row[j];
    ++dv.in_vocab_occurrences;
  }
  if (dv.in_vocab_occurrences < min_occurrences) return std::nullopt;
  if (dv.in_vocab_occurrences > 0) {
    const double inv = 1.0 / static_cast<double>(dv.in_vocab_occurrences);
    for (auto& v : dv.vector) v *= inv;
  }
  return dv;
}

inline std::vector<DocumentVector> embed_corpus(const std::vector<RawDocument>& docs, const EmbeddingModel& model,
                                                const Vocabulary& vocab,
                                                std::size_t min_occurrences = kDefaultMinOccurrences) {
  std::vector<DocumentVector> out;
  for (const auto& d : docs) {
    auto dv = embed_document(d.user_id, tokenize_document(d), model, vocab, min_occurrences);
    if (!dv) continue;
    dv->post_lengths = d.post_lengths;
    out.push_back(std::move(*dv));
  }
  return out;
}

// Stacks document vectors into an M x N matrix.
inline MatrixD as_matrix(const std::vector<DocumentVector>& docs) {
  MatrixD m;
  for (const auto& d : docs) m.append_row(d.vector);
  return m;
}

// "M N" header, then "user_id occurrences v1 ... vN" per document.
inline std::string format_docvecs(const std::vector<DocumentVector>& docs) {
  const std::size_t n = docs.empty() ? 0 : docs.front().vector.size();
  std::string out = std::to_string(docs.size()) + ' ' + std::to_string(n) + '\n';
  for (const auto& d : docs) {
    out += d.user_id;
    out += ' ';
    out += std::to_string(d.in_vocab_occurrences);
    for (double v : d.vector) {
      out += ' ';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<DocumentVector> parse_docvecs(std::string_view body) {
  const auto lines = split(body, '\n');
  if (lines.empty() || strip_cr(lines[0]).empty()) throw DataError("document vector file is empty");
  const auto head = split_ws(strip_cr(lines[0]));
  if (head.size() != 2) throw DataError("document vector header must be 'M N'");
  const auto m = parse_integer<std::size_t>(head[0]);
  const auto n = parse_integer<std::size_t>(head[1]);
  std::vector<DocumentVector> out;
  out.reserve(m);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = strip_cr(lines[li]);
    if (line.empty()) continue;
    const auto fields = split(line, ' ');
    if (fields.size() != n + 2)
      throw DataError("document vector line " + std::to_string(li + 1) + ": expected id, count and " +
                      std::to_string(n) + " values");
    DocumentVector d;
    d.user_id = fields[0];
    d.in_vocab_occurrences = parse_integer<std::size_t>(fields[1]);
    d.vector.reserve(n);
    for (std::size_t j = 0; j < n; ++j) d.vector.push_back(parse_double(fields[j + 2]));
    out.push_back(std::move(d));
  }
  if (out.size() != m)
    throw DataError("document vector file declares " + std::to_string(m) + " rows, found " + std::to_string(out.size()));
  return out;
}

}  // namespace tweetopics
