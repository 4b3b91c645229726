#include "asrsplit/text_features.hpp"

#include <set>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "asrsplit/error.hpp"

namespace asrsplit {

namespace {

icu::UnicodeString nfc(const icu::UnicodeString& s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString out = norm->normalize(s, status);
  if (U_FAILURE(status)) throw DataError("text is not valid Unicode");
  return out;
}

bool punctuation_only(const icu::UnicodeString& tok) {
  for (int32_t i = 0; i < tok.length();) {
    const UChar32 c = tok.char32At(i);
    if (!u_ispunct(c)) return false;
    i += U16_LENGTH(c);
  }
  return true;
}

}  // namespace

std::vector<std::string> tokenize_lenient(std::string_view text) {
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  s = nfc(s);
  s.toLower(icu::Locale::getRoot());
  s = nfc(s);

  std::vector<std::string> tokens;
  icu::UnicodeString current;
  auto flush = [&] {
    if (!current.isEmpty() && !punctuation_only(current)) {
      std::string utf8;
      current.toUTF8String(utf8);
      tokens.push_back(std::move(utf8));
    }
    current.remove();
  };
  for (int32_t i = 0; i < s.length();) {
    const UChar32 c = s.char32At(i);
    if (u_isUWhiteSpace(c)) {
      flush();
    } else {
      current.append(c);
    }
    i += U16_LENGTH(c);
  }
  flush();
  return tokens;
}

std::vector<std::string> tokenize(std::string_view text) {
  auto tokens = tokenize_lenient(text);
  if (tokens.empty()) throw DataError("transcript has no tokens after normalization");
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

LexicalProfile lexical_profile(std::span<const std::string> tokens, const Vocabulary& vocab) {
  if (tokens.empty()) throw DataError("lexical_profile needs at least one token");
  std::set<std::string_view> types;
  int oov = 0;
  for (const auto& t : tokens) {
    types.insert(t);
    if (!vocab.contains(t)) ++oov;
  }
  LexicalProfile p;
  p.n_tokens = static_cast<int>(tokens.size());
  p.n_types = static_cast<int>(types.size());
  p.oov_rate = static_cast<double>(oov) / p.n_tokens;
  return p;
}

}  // namespace asrsplit
