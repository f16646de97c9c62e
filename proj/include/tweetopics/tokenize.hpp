#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tweetopics/utf8.hpp"

// Tweet tokenizer. Rules, tried in this order at each token start:
//
//   1. url          http://..., https://..., www.... up to whitespace -> "<url>";
//                   the literal "<url>" is also a url token
//   2. mention      '@' followed by word characters, lowercased
//   3. hashtag      '#' followed by word characters, lowercased
//   4. emoticon     longest match from kEmoticons (case-sensitive, verbatim), or
//                   an emoji code point with its modifiers / ZWJ continuations.
//                   An emoticon ending in a letter or digit must not be followed
//                   by a word character ("xdd" is a word, ":Dios" is ':' + "dios")
//   5. number       ASCII digits with internal '.', ',' or ':' groups ("10:30")
//   6. word         a letter followed by letters, digits, '_', combining marks, or
//                   an apostrophe between letters; lowercased, runs of one
//                   character longer than 3 cut to 3 ("jajaaaaa" -> "jajaaa")
//   7. punctuation  any other single non-space code point
//
// Nothing is stemmed and no stop words are removed.
namespace tweetopics {

enum class TokenKind { word, emoticon, hashtag, mention, url, punctuation, number };

inline std::string_view to_string(TokenKind k) noexcept {
  switch (k) {
    case TokenKind::word: return "word";
    case TokenKind::emoticon: return "emoticon";
    case TokenKind::hashtag: return "hashtag";
    case TokenKind::mention: return "mention";
    case TokenKind::url: return "url";
    case TokenKind::punctuation: return "punctuation";
    case TokenKind::number: return "number";
  }
  return "?";
}

struct Token {
  std::string surface;
  TokenKind kind;

  friend bool operator==(const Token&, const Token&) = default;
};

inline constexpr std::string_view url_placeholder = "<url>";

inline constexpr std::array<std::u32string_view, 40> kEmoticons = {
    U":-)", U":)",  U":-(", U":(",  U":-D", U":D",  U";-)", U";)",  U";D",  U":-P",
    U":P",  U":-p", U":p",  U":'(", U":')", U":-/", U":/",  U":O",  U":o",  U":*",
    U":|",  U":v",  U":3",  U"=)",  U"=(",  U"=D",  U"<3",  U"</3", U"^^",  U"^_^",
    U"-_-", U"xD",  U"XD",  U"xd",  U"Xd",  U"o.O", U"O.o", U":S",  U":$",  U";p",
};

namespace chars {

inline bool is_space(char32_t c) noexcept {
  return c == U' ' || (c >= U'\t' && c <= U'\r') || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000 || c == 0x1F;
}

inline bool is_digit(char32_t c) noexcept { return c >= U'0' && c <= U'9'; }

inline bool is_mark(char32_t c) noexcept {
  return (c >= 0x0300 && c <= 0x036F) || (c >= 0x1AB0 && c <= 0x1AFF) || (c >= 0x1DC0 && c <= 0x1DFF);
}

inline bool is_letter(char32_t c) noexcept {
  if ((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z')) return true;
  if (c < 0xAA) return false;
  if (c == 0xAA || c == 0xB5 || c == 0xBA) return true;
  if (c >= 0xC0 && c <= 0x24F) return c != 0xD7 && c != 0xF7;
  return (c >= 0x0250 && c <= 0x02AF) ||  // IPA
         (c >= 0x0370 && c <= 0x03FF && c != 0x037E && c != 0x0387) ||  // Greek
         (c >= 0x0400 && c <= 0x052F) ||  // Cyrillic
         (c >= 0x05D0 && c <= 0x05EA) ||  // Hebrew
         (c >= 0x0620 && c <= 0x064A) ||  // Arabic
         (c >= 0x0900 && c <= 0x0DFF) ||  // Indic
         (c >= 0x0E00 && c <= 0x0EFF) ||  // Thai, Lao
         (c >= 0x1E00 && c <= 0x1FFF) ||  // Latin extended additional, Greek extended
         (c >= 0x3040 && c <= 0x30FF) ||  // kana
         (c >= 0x4E00 && c <= 0x9FFF) ||  // CJK
         (c >= 0xAC00 && c <= 0xD7AF);    // Hangul
}

inline bool is_word_char(char32_t c) noexcept {
  return is_letter(c) || is_digit(c) || c == U'_' || is_mark(c);
}

inline bool is_emoji(char32_t c) noexcept {
  return (c >= 0x1F000 && c <= 0x1FAFF) || (c >= 0x2600 && c <= 0x27BF) ||
         (c >= 0x2300 && c <= 0x23FF) || (c >= 0x2B00 && c <= 0x2BFF) || c == 0x3030 ||
         c == 0x303D || c == 0x3297 || c == 0x3299;
}

inline bool is_emoji_modifier(char32_t c) noexcept {
  return c == 0xFE0F || c == 0xFE0E || c == 0x20E3 || (c >= 0x1F3FB && c <= 0x1F3FF) ||
         (c >= 0xE0020 && c <= 0xE007F);
}

inline bool is_apostrophe(char32_t c) noexcept { return c == U'\'' || c == 0x2019; }

inline char32_t to_lower(char32_t c) noexcept {
  if (c < 0x80) return (c >= U'A' && c <= U'Z') ? c + 0x20 : c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c >= 0x100 && c <= 0x17F) {
    if (c == 0x130) return U'i';
    if (c == 0x178) return 0xFF;
    const bool odd_upper = (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
    if (c == 0x131 || c == 0x138 || c == 0x149 || c == 0x17F) return c;
    if (odd_upper) return (c % 2 == 1) ? c + 1 : c;
    return (c % 2 == 0) ? c + 1 : c;
  }
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

}  // namespace chars

namespace detail {

inline bool starts_with_ci(std::u32string_view s, std::size_t pos, std::u32string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (chars::to_lower(s[pos + i]) != prefix[i]) return false;
  return true;
}

inline std::size_t match_url(std::u32string_view s, std::size_t pos) {
  if (s.substr(pos).starts_with(U"<url>")) {
    const std::size_t end = pos + 5;
    if (end == s.size() || !chars::is_word_char(s[end])) return 5;
  }
  if (!starts_with_ci(s, pos, U"http://") && !starts_with_ci(s, pos, U"https://") &&
      !starts_with_ci(s, pos, U"www."))
    return 0;
  std::size_t end = pos;
  while (end < s.size() && !chars::is_space(s[end])) ++end;
  return end - pos;
}

inline std::size_t match_prefixed(std::u32string_view s, std::size_t pos, char32_t sigil) {
  if (s[pos] != sigil || pos + 1 >= s.size() || !chars::is_word_char(s[pos + 1])) return 0;
  std::size_t end = pos + 1;
  while (end < s.size() && chars::is_word_char(s[end])) ++end;
  return end - pos;
}

inline std::size_t match_emoticon(std::u32string_view s, std::size_t pos) {
  std::size_t best = 0;
  for (auto e : kEmoticons) {
    if (e.size() <= best || !s.substr(pos).starts_with(e)) continue;
    const std::size_t end = pos + e.size();
    const char32_t last = e.back();
    const bool alnum_tail = chars::is_letter(last) || chars::is_digit(last);
    if (alnum_tail && end < s.size() && chars::is_word_char(s[end])) continue;
    best = e.size();
  }
  if (best) return best;
  if (!chars::is_emoji(s[pos])) return 0;
  std::size_t end = pos + 1;
  for (;;) {
    while (end < s.size() && chars::is_emoji_modifier(s[end])) ++end;
    if (end + 1 < s.size() && s[end] == 0x200D && chars::is_emoji(s[end + 1])) {
      end += 2;
      continue;
    }
    // Regional indicator pairs form one flag.
    if (end < s.size() && s[end - 1] >= 0x1F1E6 && s[end - 1] <= 0x1F1FF && s[end] >= 0x1F1E6 &&
        s[end] <= 0x1F1FF && end - pos == 1) {
      ++end;
      continue;
    }
    break;
  }
  return end - pos;
}

inline std::size_t match_number(std::u32string_view s, std::size_t pos) {
  if (!chars::is_digit(s[pos])) return 0;
  std::size_t end = pos;
  while (end < s.size() && chars::is_digit(s[end])) ++end;
  while (end + 1 < s.size() && (s[end] == U'.' || s[end] == U',' || s[end] == U':') &&
         chars::is_digit(s[end + 1])) {
    ++end;
    while (end < s.size() && chars::is_digit(s[end])) ++end;
  }
  return end - pos;
}

inline std::size_t match_word(std::u32string_view s, std::size_t pos) {
  if (!chars::is_letter(s[pos])) return 0;
  std::size_t end = pos + 1;
  for (;;) {
    if (end < s.size() && chars::is_word_char(s[end])) {
      ++end;
    } else if (end + 1 < s.size() && chars::is_apostrophe(s[end]) && chars::is_letter(s[end + 1])) {
      end += 2;
    } else {
      return end - pos;
    }
  }
}

inline std::string lowered(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) utf8::append(out, chars::to_lower(c));
  return out;
}

// Lowercases and caps runs of one repeated character at 3.
inline std::string normalize_word(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  char32_t prev = 0;
  std::size_t run = 0;
  for (char32_t c : s) {
    const char32_t lc = chars::to_lower(c);
    run = (lc == prev) ? run + 1 : 1;
    prev = lc;
    if (run <= 3) utf8::append(out, lc);
  }
  return out;
}

}  // namespace detail

inline std::vector<Token> tokenize_post(std::string_view text) {
  const std::u32string s = utf8::decode(text);
  const std::u32string_view v(s);
  std::vector<Token> tokens;
  std::size_t pos = 0;
  while (pos < v.size()) {
    if (chars::is_space(v[pos])) {
      ++pos;
      continue;
    }
    std::size_t n;
    if ((n = detail::match_url(v, pos))) {
      tokens.push_back({std::string(url_placeholder), TokenKind::url});
    } else if ((n = detail::match_prefixed(v, pos, U'@'))) {
      tokens.push_back({detail::lowered(v.substr(pos, n)), TokenKind::mention});
    } else if ((n = detail::match_prefixed(v, pos, U'#'))) {
      tokens.push_back({detail::lowered(v.substr(pos, n)), TokenKind::hashtag});
    } else if ((n = detail::match_emoticon(v, pos))) {
      tokens.push_back({utf8::encode(v.substr(pos, n)), TokenKind::emoticon});
    } else if ((n = detail::match_number(v, pos))) {
      tokens.push_back({utf8::encode(v.substr(pos, n)), TokenKind::number});
    } else if ((n = detail::match_word(v, pos))) {
      tokens.push_back({detail::normalize_word(v.substr(pos, n)), TokenKind::word});
    } else {
      n = 1;
      tokens.push_back({utf8::encode(v.substr(pos, 1)), TokenKind::punctuation});
    }
    pos += n;
  }
  return tokens;
}

inline std::vector<std::string> token_surfaces(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_post(text)) out.push_back(std::move(t.surface));
  return out;
}

}  // namespace tweetopics
