#include "capeval/core.hpp"

#include <algorithm>
#include <cstdint>

namespace capeval {
namespace {

struct Codepoint {
  char32_t value;
  std::string_view bytes;
};

std::vector<Codepoint> decode_utf8(std::string_view s) {
  std::vector<Codepoint> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) { len = 1; cp = b0; }
    else if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else throw ValueError("invalid UTF-8 lead byte at offset " + std::to_string(i));
    if (i + len > s.size()) throw ValueError("truncated UTF-8 sequence at offset " + std::to_string(i));
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) throw ValueError("invalid UTF-8 continuation at offset " + std::to_string(i + k));
      cp = (cp << 6) | (b & 0x3F);
    }
    out.push_back({cp, s.substr(i, len)});
    i += len;
  }
  return out;
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == 0x3000 || c == 0x00A0;
}

bool is_cjk(char32_t c) {
  return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) ||
         (c >= 0x20000 && c <= 0x2A6DF) || (c >= 0xF900 && c <= 0xFAFF) ||
         (c >= 0x2F800 && c <= 0x2FA1F) || (c >= 0x3040 && c <= 0x30FF) ||
         (c >= 0xAC00 && c <= 0xD7AF);
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  return (c >= 0x2010 && c <= 0x205E) ||  // general punctuation
         (c >= 0x3001 && c <= 0x303F) ||  // CJK symbols and punctuation
         (c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) ||
         (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65) || c == 0x00B7;
}

using Field = std::vector<Codepoint>;

void flush(std::string& cur, std::vector<std::string>& out) {
  if (!cur.empty()) out.push_back(std::move(cur));
  cur.clear();
}

void emit_field(const Field& field, bool split_cjk, const TokenizerOptions& opt,
                std::vector<std::string>& out) {
  std::string cur;
  for (const auto& cp : field) {
    if (opt.strip_punctuation && is_punct(cp.value)) {
      flush(cur, out);
      continue;
    }
    if (split_cjk && is_cjk(cp.value)) {
      flush(cur, out);
      out.emplace_back(cp.bytes);
      continue;
    }
    if (opt.lowercase && cp.value < 0x80)
      cur.push_back(static_cast<char>(cp.value >= 'A' && cp.value <= 'Z' ? cp.value + 32 : cp.value));
    else
      cur.append(cp.bytes);
  }
  flush(cur, out);
}

}  // namespace

Sentence tokenize(std::string_view raw, Language language, const TokenizerOptions& options) {
  const auto cps = decode_utf8(raw);

  std::vector<Field> fields;
  Field cur;
  for (const auto& cp : cps) {
    if (is_space(cp.value)) {
      if (!cur.empty()) fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(cp);
    }
  }
  if (!cur.empty()) fields.push_back(std::move(cur));

  bool split_cjk = options.policy == TokenizerPolicy::cjk_char;
  if (options.policy == TokenizerPolicy::automatic && fields.size() == 1) {
    // A single whitespace field with CJK inside is unsegmented text.
    const auto& f = fields.front();
    split_cjk = f.size() > 1 && std::any_of(f.begin(), f.end(), [](const Codepoint& c) { return is_cjk(c.value); });
  }

  std::vector<std::string> tokens;
  for (const auto& f : fields) emit_field(f, split_cjk, options, tokens);
  if (tokens.empty()) throw EmptySentence(std::string(raw));
  return Sentence(std::move(tokens), language, std::string(raw));
}

}  // namespace capeval
