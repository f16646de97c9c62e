#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "tweetopics/error.hpp"
#include "tweetopics/text_io.hpp"
#include "tweetopics/utf8.hpp"

namespace tweetopics {

struct PostRecord {
  std::string user_id;
  std::string text;
  std::size_t char_length = 0;  // Unicode scalar values in `text`

  friend bool operator==(const PostRecord&, const PostRecord&) = default;
};

inline PostRecord make_post(std::string user_id, std::string text) {
  const std::size_t n = utf8::scalar_count(text);
  return {std::move(user_id), std::move(text), n};
}

// All retained posts of one author, in input order.
struct RawDocument {
  std::string user_id;
  std::vector<PostRecord> posts;
  std::vector<std::size_t> post_lengths;

  friend bool operator==(const RawDocument&, const RawDocument&) = default;
};

enum class RecordFormat { jsonl, tsv };

inline RecordFormat parse_record_format(std::string_view tag) {
  if (tag == "jsonl" || tag == "json") return RecordFormat::jsonl;
  if (tag == "tsv") return RecordFormat::tsv;
  throw ConfigError("unknown record format '" + std::string(tag) + "' (expected jsonl or tsv)");
}

struct ParseStats {
  std::size_t accepted = 0;
  std::size_t skipped = 0;
  std::vector<std::string> diagnostics;  // one per skipped line
};

namespace detail {

// user ids end up as whitespace-delimited fields in downstream files.
inline bool valid_user_id(std::string_view id) {
  if (id.empty()) return false;
  for (unsigned char c : id)
    if (c <= 0x20 || c == 0x7F) return false;
  return true;
}

inline std::optional<PostRecord> parse_jsonl_line(std::string_view line, std::string& why) {
  const auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    why = "not a JSON object";
    return std::nullopt;
  }
  const auto uid = j.find("user_id");
  const auto text = j.find("text");
  if (uid == j.end() || text == j.end()) {
    why = "missing user_id or text";
    return std::nullopt;
  }
  std::string id;
  if (uid->is_string()) {
    id = uid->get<std::string>();
  } else if (uid->is_number_integer()) {
    id = uid->dump();
  } else {
    why = "user_id is not a string";
    return std::nullopt;
  }
  if (!text->is_string()) {
    why = "text is not a string";
    return std::nullopt;
  }
  if (!valid_user_id(id)) {
    why = "empty or whitespace-containing user_id";
    return std::nullopt;
  }
  return make_post(std::move(id), text->get<std::string>());
}

inline std::optional<PostRecord> parse_tsv_line(std::string_view line, std::string& why) {
  const auto tab = line.find('\t');
  if (tab == std::string_view::npos) {
    why = "missing tab separator";
    return std::nullopt;
  }
  const auto id = line.substr(0, tab);
  if (!valid_user_id(id)) {
    why = "empty or whitespace-containing user_id";
    return std::nullopt;
  }
  return make_post(std::string(id), std::string(line.substr(tab + 1)));
}

}  // namespace detail

// Streams records to `sink` in file order. Blank lines are ignored; malformed
// lines are skipped and reported in the returned stats.
inline ParseStats for_each_record(std::istream& in, RecordFormat format,
                                  const std::function<void(PostRecord&&)>& sink) {
  ParseStats stats;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = strip_cr(line);
    if (view.find_first_not_of(" \t") == std::string_view::npos) continue;
    std::string why;
    auto rec = format == RecordFormat::jsonl ? detail::parse_jsonl_line(view, why)
                                             : detail::parse_tsv_line(view, why);
    if (!rec) {
      ++stats.skipped;
      stats.diagnostics.push_back("line " + std::to_string(lineno) + ": " + why);
      continue;
    }
    ++stats.accepted;
    sink(std::move(*rec));
  }
  return stats;
}

struct ParsedCorpus {
  std::vector<PostRecord> records;
  ParseStats stats;
};

inline ParsedCorpus parse_corpus(std::istream& in, RecordFormat format) {
  ParsedCorpus out;
  out.stats = for_each_record(in, format, [&](PostRecord&& r) { out.records.push_back(std::move(r)); });
  return out;
}

inline ParsedCorpus parse_corpus(const std::filesystem::path& path, RecordFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read corpus file " + path.string());
  return parse_corpus(in, format);
}

// Drops posts shorter than `min_chars` and groups the rest by author,
// documents ordered by first appearance of each author.
inline std::vector<RawDocument> filter_and_group(std::vector<PostRecord> posts, std::size_t min_chars = 20) {
  std::vector<RawDocument> docs;
  std::unordered_map<std::string, std::size_t> slot;
  for (auto& p : posts) {
    if (p.char_length < min_chars) continue;
    auto [it, inserted] = slot.try_emplace(p.user_id, docs.size());
    if (inserted) docs.push_back(RawDocument{p.user_id, {}, {}});
    auto& doc = docs[it->second];
    doc.post_lengths.push_back(p.char_length);
    doc.posts.push_back(std::move(p));
  }
  return docs;
}

// Docstore line: user_id TAB comma-separated post lengths TAB posts joined by U+001F.
inline constexpr char docstore_post_separator = '\x1f';

namespace detail {

// Field and record separators cannot appear inside a post; each is replaced
// by one space so scalar counts are unchanged.
inline std::string sanitize_post(std::string_view text) {
  std::string out(text);
  for (char& c : out)
    if (c == '\t' || c == '\n' || c == '\r' || c == docstore_post_separator) c = ' ';
  return out;
}

}  // namespace detail

inline std::string format_docstore(const std::vector<RawDocument>& docs) {
  std::string out;
  for (const auto& d : docs) {
    out += d.user_id;
    out += '\t';
    for (std::size_t i = 0; i < d.post_lengths.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(d.post_lengths[i]);
    }
    out += '\t';
    for (std::size_t i = 0; i < d.posts.size(); ++i) {
      if (i) out += docstore_post_separator;
      out += detail::sanitize_post(d.posts[i].text);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<RawDocument> parse_docstore(std::string_view body) {
  std::vector<RawDocument> docs;
  std::size_t lineno = 0;
  for (auto raw : split(body, '\n')) {
    ++lineno;
    const auto line = strip_cr(raw);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3)
      throw DataError("docstore line " + std::to_string(lineno) + ": expected 3 tab-separated fields");
    RawDocument d;
    d.user_id = fields[0];
    for (auto len : split(fields[1], ',')) d.post_lengths.push_back(parse_integer<std::size_t>(len));
    const auto texts = split(fields[2], docstore_post_separator);
    if (texts.size() != d.post_lengths.size())
      throw DataError("docstore line " + std::to_string(lineno) + ": post count does not match length list");
    for (std::size_t i = 0; i < texts.size(); ++i)
      d.posts.push_back(PostRecord{d.user_id, std::string(texts[i]), d.post_lengths[i]});
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace tweetopics
