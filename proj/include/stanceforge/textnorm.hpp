// Canonical tweet tokenizer and Turkish-aware folding.
//
// Every module that compares text (gazetteer matching, feature keys, span
// validation in the corpus loader) goes through the functions in this header,
// so a token index or a folded key means the same thing everywhere.
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "stanceforge/utf8.hpp"

namespace stanceforge::textnorm {

enum class TokenKind { Word, Hashtag, Mention, Url, Number, Punct };

inline std::string_view to_string(TokenKind k) {
  switch (k) {
    case TokenKind::Word: return "Word";
    case TokenKind::Hashtag: return "Hashtag";
    case TokenKind::Mention: return "Mention";
    case TokenKind::Url: return "Url";
    case TokenKind::Number: return "Number";
    case TokenKind::Punct: return "Punct";
  }
  return "?";
}

struct Token {
  std::string surface;
  std::size_t start_char = 0;  // code point offset
  std::size_t end_char = 0;    // exclusive
  TokenKind kind = TokenKind::Word;

  bool operator==(const Token&) const = default;
};

namespace detail {

inline constexpr char32_t kDottedCapitalI = U'İ';
inline constexpr char32_t kDotlessSmallI = U'ı';

inline bool in(char32_t c, char32_t lo, char32_t hi) { return c >= lo && c <= hi; }

inline char32_t lower_one(char32_t c) {
  if (c < 0x80) {
    if (c == U'I') return kDotlessSmallI;
    return in(c, U'A', U'Z') ? c + 32 : c;
  }
  if (c == kDottedCapitalI) return U'i';
  if (in(c, 0xC0, 0xDE) && c != 0xD7) return c + 32;
  if (in(c, 0x100, 0x12F) || in(c, 0x132, 0x137) || in(c, 0x14A, 0x177))
    return (c % 2 == 0) ? c + 1 : c;
  if (in(c, 0x139, 0x148) || in(c, 0x179, 0x17E)) return (c % 2 == 1) ? c + 1 : c;
  if (c == 0x178) return 0xFF;
  if (c == 0x386) return 0x3AC;
  if (in(c, 0x388, 0x38A)) return c + 37;
  if (c == 0x38C) return 0x3CC;
  if (in(c, 0x38E, 0x38F)) return c + 63;
  if (in(c, 0x391, 0x3AB) && c != 0x3A2) return c + 32;
  if (in(c, 0x400, 0x40F)) return c + 80;
  if (in(c, 0x410, 0x42F)) return c + 32;
  if (in(c, 0x460, 0x481) || in(c, 0x48A, 0x4BF)) return (c % 2 == 0) ? c + 1 : c;
  if (in(c, 0x1E00, 0x1E95) || in(c, 0x1EA0, 0x1EFF)) return (c % 2 == 0) ? c + 1 : c;
  if (in(c, 0xFF21, 0xFF3A)) return c + 32;
  return c;
}

// Inverse of lower_one on its image; code points without an uppercase
// partner in the table are returned unchanged.
inline char32_t upper_one(char32_t c) {
  if (c == U'i') return kDottedCapitalI;
  if (c == kDotlessSmallI) return U'I';
  if (c == 0xFF) return 0x178;
  if (c == 0x3AC) return 0x386;
  if (c == 0x3CC) return 0x38C;
  for (char32_t delta : {32u, 1u, 37u, 63u, 80u}) {
    if (c < delta) continue;
    const char32_t cand = c - delta;
    if (cand != c && lower_one(cand) == c) return cand;
  }
  return c;
}

inline char32_t fold_diacritic_one(char32_t c) {
  switch (c) {
    case U'ç': return U'c';
    case U'ğ': return U'g';
    case kDotlessSmallI: return U'i';
    case U'ö': return U'o';
    case U'ş': return U's';
    case U'ü': return U'u';
    case U'Ç': return U'C';
    case U'Ğ': return U'G';
    case kDottedCapitalI: return U'I';
    case U'Ö': return U'O';
    case U'Ş': return U'S';
    case U'Ü': return U'U';
    default: return c;
  }
}

inline bool is_space(char32_t c) {
  return in(c, 0x09, 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         in(c, 0x2000, 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

inline bool is_punct(char32_t c) {
  if (c < 0x80) {
    return !(in(c, U'a', U'z') || in(c, U'A', U'Z') || in(c, U'0', U'9') || c == U'_') &&
           !is_space(c);
  }
  if (in(c, 0x80, 0xBF)) return c != 0xAA && c != 0xB5 && c != 0xBA;
  return c == 0xD7 || c == 0xF7 || in(c, 0x2000, 0x2BFF) || in(c, 0x3000, 0x303F) ||
         in(c, 0xFE00, 0xFE0F) || in(c, 0xFE30, 0xFE4F) || in(c, 0xFF01, 0xFF0F) ||
         in(c, 0xFF1A, 0xFF20) || in(c, 0xFF3B, 0xFF40) || in(c, 0xFF5B, 0xFF65) ||
         in(c, 0x1F000, 0x1FAFF);
}

inline bool is_word_char(char32_t c) { return !is_space(c) && !is_punct(c); }

inline bool is_ascii_digit(char32_t c) { return in(c, U'0', U'9'); }

inline bool starts_with_ci(std::u32string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char32_t c = s[i];
    if (in(c, U'A', U'Z')) c += 32;
    if (c != static_cast<unsigned char>(prefix[i])) return false;
  }
  return true;
}

inline TokenKind classify_core(std::u32string_view core) {
  if (core.size() > 1 && core.front() == U'#') return TokenKind::Hashtag;
  if (core.size() > 1 && core.front() == U'@') return TokenKind::Mention;
  if (is_ascii_digit(core.front()) && is_ascii_digit(core.back())) {
    bool numeric = true;
    for (char32_t c : core) {
      if (!is_ascii_digit(c) && c != U'.' && c != U',' && c != U':' && c != U'/' && c != U'-') {
        numeric = false;
        break;
      }
    }
    if (numeric) return TokenKind::Number;
  }
  return TokenKind::Word;
}

template <class F>
std::string map_code_points(std::string_view s, F f) {
  std::u32string cps = utf8::decode(s);
  for (char32_t& c : cps) c = f(c);
  return utf8::encode(cps);
}

}  // namespace detail

inline bool is_apostrophe(char32_t c) { return c == U'\'' || c == U'’'; }

/// Turkish-locale lowercase: İ -> i, I -> ı, everything else by the standard
/// simple mapping. Maps code points one-to-one, so offsets are preserved.
inline std::string fold_case(std::string_view s) {
  return detail::map_code_points(s, detail::lower_one);
}

/// Turkish-locale uppercase, the inverse of fold_case on lowercase letters.
inline std::string to_upper(std::string_view s) {
  return detail::map_code_points(s, detail::upper_one);
}

/// ç ğ ı ö ş ü (and Ç Ğ İ Ö Ş Ü) to their undecorated ASCII letters.
inline std::string fold_diacritics(std::string_view s) {
  return detail::map_code_points(s, detail::fold_diacritic_one);
}

/// Matching key space: fold_diacritics(fold_case(s)).
inline std::string canon(std::string_view s) {
  return detail::map_code_points(
      s, [](char32_t c) { return detail::fold_diacritic_one(detail::lower_one(c)); });
}

inline std::u32string canon(std::u32string_view s) {
  std::u32string out(s);
  for (char32_t& c : out) c = detail::fold_diacritic_one(detail::lower_one(c));
  return out;
}

/// Splits on whitespace, then peels leading and trailing punctuation off each
/// chunk one code point at a time. `#` and `@` directly followed by a word
/// character stay attached (Hashtag / Mention). Apostrophes inside a chunk
/// are kept, so `Fenerbahçe'nin` is a single Word. A chunk whose remainder
/// starts with http://, https:// or www. becomes a single Url token.
inline std::vector<Token> tokenize(std::string_view text) {
  using namespace detail;
  const std::u32string cps = utf8::decode(text);
  std::vector<Token> tokens;
  const auto emit = [&](std::size_t b, std::size_t e, TokenKind kind) {
    tokens.push_back(Token{utf8::encode(std::u32string_view(cps).substr(b, e - b)), b, e, kind});
  };

  std::size_t i = 0;
  while (i < cps.size()) {
    if (is_space(cps[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < cps.size() && !is_space(cps[end])) ++end;

    std::size_t b = i;
    while (b < end && is_punct(cps[b])) {
      const bool binds = (cps[b] == U'#' || cps[b] == U'@') && b + 1 < end &&
                         is_word_char(cps[b + 1]);
      if (binds) break;
      emit(b, b + 1, TokenKind::Punct);
      ++b;
    }

    const std::u32string_view rest(cps.data() + b, end - b);
    if (starts_with_ci(rest, "http://") || starts_with_ci(rest, "https://") ||
        starts_with_ci(rest, "www.")) {
      emit(b, end, TokenKind::Url);
      i = end;
      continue;
    }

    std::size_t e = end;
    while (e > b && is_punct(cps[e - 1])) --e;
    if (e > b) emit(b, e, classify_core(std::u32string_view(cps.data() + b, e - b)));
    for (std::size_t p = e; p < end; ++p) emit(p, p + 1, TokenKind::Punct);
    i = end;
  }
  return tokens;
}

}  // namespace stanceforge::textnorm
