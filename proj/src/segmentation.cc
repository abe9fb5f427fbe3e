// Copyright 2026 The explplan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "explplan/segmentation.h"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "explplan/common.h"

namespace explplan {
namespace {

std::u32string decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  int32_t i = 0;
  const auto length = static_cast<int32_t>(text.size());
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? 0xFFFD : static_cast<char32_t>(c));
  }
  return out;
}

std::string encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    uint8_t buf[4];
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, 4, static_cast<UChar32>(c), error);
    if (error) continue;
    out.append(reinterpret_cast<const char*>(buf), n);
  }
  return out;
}

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }
bool is_letter(char32_t c) { return u_isalpha(static_cast<UChar32>(c)); }
bool is_digit(char32_t c) { return u_isdigit(static_cast<UChar32>(c)); }
bool is_alnum(char32_t c) { return is_letter(c) || is_digit(c); }
bool is_upper(char32_t c) { return u_isupper(static_cast<UChar32>(c)); }

bool is_terminal(char32_t c) {
  return c == U'.' || c == U'!' || c == U'?' || c == U'…';
}

bool is_closing(char32_t c) {
  return c == U'"' || c == U'\'' || c == U')' || c == U']' || c == U'}' ||
         c == U'”' || c == U'’' || c == U'»';
}

bool is_opening(char32_t c) {
  return c == U'"' || c == U'\'' || c == U'(' || c == U'[' || c == U'{' ||
         c == U'“' || c == U'‘' || c == U'«';
}

bool is_connector(char32_t c) {
  return c == U'\'' || c == U'’' || c == U'-' || c == U'.';
}

std::u32string lower_ascii(std::u32string_view s) {
  std::u32string out(s);
  for (auto& c : out) {
    if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
  }
  return out;
}

// Words that take a period without ending the sentence.
const std::unordered_set<std::u32string>& abbreviations() {
  static const std::unordered_set<std::u32string> kSet = {
      U"e.g", U"i.e",  U"etc", U"vs",   U"al",    U"fig",  U"figs", U"eq",
      U"eqs", U"dr",   U"mr",  U"mrs",  U"ms",    U"prof", U"st",   U"vol",
      U"approx", U"ca", U"cf", U"jr",   U"sr",    U"inc",  U"ltd",  U"dept",
      U"univ", U"resp", U"ref", U"refs", U"sec",  U"ph.d", U"u.s",  U"u.k",
      U"a.m", U"p.m",  U"mt",  U"no"};
  return kSet;
}

// Abbreviations that never end a sentence, even before a capital.
const std::unordered_set<std::u32string>& titles() {
  static const std::unordered_set<std::u32string> kSet = {
      U"dr", U"mr", U"mrs", U"ms", U"prof", U"st", U"fig", U"figs",
      U"eq", U"eqs", U"e.g", U"i.e", U"vs", U"cf", U"mt", U"no"};
  return kSet;
}

bool is_dotted_initialism(std::u32string_view word) {
  // ph.d, u.s, e.g: alphabetic parts of at most three letters joined by dots.
  if (word.find(U'.') == std::u32string_view::npos) return false;
  std::size_t part = 0;
  for (char32_t c : word) {
    if (c == U'.') {
      if (part == 0) return false;
      part = 0;
    } else if (is_letter(c)) {
      if (++part > 3) return false;
    } else {
      return false;
    }
  }
  return part > 0;
}

// The whitespace-delimited word that ends right before position `period`,
// lowercased and stripped of opening punctuation.
std::u32string word_before(const std::u32string& s, std::size_t period) {
  std::size_t start = period;
  while (start > 0 && !is_space(s[start - 1])) --start;
  while (start < period && !is_alnum(s[start])) ++start;
  return lower_ascii(std::u32string_view(s).substr(start, period - start));
}

bool ends_sentence(const std::u32string& s, std::size_t terminal, std::size_t next) {
  const char32_t follower = s[next];
  const bool upper_start = is_upper(follower) || is_opening(follower);
  if (s[terminal] != U'.') {
    return upper_start || is_digit(follower);
  }
  // An ellipsis or a run like "?." behaves like '!'/'?'.
  if (terminal > 0 && is_terminal(s[terminal - 1])) return upper_start || is_digit(follower);
  const std::u32string word = word_before(s, terminal);
  const bool abbreviation = abbreviations().count(word) > 0 || is_dotted_initialism(word);
  if (abbreviation) {
    if (titles().count(word) > 0) return false;
    return upper_start;
  }
  return upper_start || is_digit(follower);
}

}  // namespace

std::string hex64(std::uint64_t value) {
  static const char* kDigits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xF];
    value >>= 4;
  }
  return out;
}

std::string trim(std::string_view text) {
  const char* ws = " \t\r\n\f\v";
  const auto first = text.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(ws);
  return std::string(text.substr(first, last - first + 1));
}

std::string normalize_nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(text);
  const icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (nfc->isNormalized(source, status) && U_SUCCESS(status)) {
    return std::string(text);
  }
  status = U_ZERO_ERROR;
  const icu::UnicodeString normalized = nfc->normalize(source, status);
  if (U_FAILURE(status)) return std::string(text);
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::size_t char_length(std::string_view text) { return decode(text).size(); }

std::string substr_chars(std::string_view text, std::size_t start, std::size_t end) {
  const std::u32string chars = decode(text);
  end = std::min(end, chars.size());
  if (start >= end) return {};
  return encode(std::u32string_view(chars).substr(start, end - start));
}

std::vector<Sentence> segment_sentences(std::string_view text) {
  const std::u32string s = decode(normalize_nfc(text));
  std::vector<Sentence> out;
  const std::size_t n = s.size();
  std::size_t i = 0;

  auto emit = [&](std::size_t start, std::size_t end) {
    while (end > start && is_space(s[end - 1])) --end;
    if (end <= start) return;
    Sentence sentence;
    sentence.index = out.size();
    sentence.char_start = start;
    sentence.char_end = end;
    sentence.text = encode(std::u32string_view(s).substr(start, end - start));
    out.push_back(std::move(sentence));
  };

  while (i < n) {
    while (i < n && is_space(s[i])) ++i;
    if (i >= n) break;
    const std::size_t start = i;
    std::size_t end = n;
    while (i < n) {
      if (!is_terminal(s[i])) {
        ++i;
        continue;
      }
      std::size_t terminal = i;
      std::size_t j = i + 1;
      while (j < n && is_terminal(s[j])) terminal = j++;
      while (j < n && is_closing(s[j])) ++j;
      if (j >= n) {
        end = j;
        i = j;
        break;
      }
      if (!is_space(s[j])) {
        i = j;
        continue;
      }
      std::size_t k = j;
      while (k < n && is_space(s[k])) ++k;
      if (k >= n || ends_sentence(s, terminal, k)) {
        end = j;
        i = j;
        break;
      }
      i = j;
    }
    emit(start, end);
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  const std::u32string s = decode(normalize_nfc(text));
  std::vector<Token> out;
  const std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    if (is_space(s[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    bool has_letter = false;
    if (is_alnum(s[i])) {
      while (i < n) {
        if (is_alnum(s[i])) {
          has_letter = has_letter || is_letter(s[i]);
          ++i;
        } else if (is_connector(s[i]) && i + 1 < n && is_alnum(s[i + 1])) {
          ++i;
        } else {
          break;
        }
      }
      if (i < n && s[i] == U'.' && has_letter) {
        const std::u32string word =
            lower_ascii(std::u32string_view(s).substr(start, i - start));
        if (abbreviations().count(word) > 0 && word != U"no") {
          ++i;
        } else if (is_dotted_initialism(word)) {
          ++i;
        }
      }
    } else {
      const char32_t c = s[i];
      while (i < n && s[i] == c) ++i;
    }
    Token token;
    token.char_start = start;
    token.char_end = i;
    token.text = encode(std::u32string_view(s).substr(start, i - start));
    token.is_word = has_letter;
    out.push_back(std::move(token));
  }
  return out;
}

std::vector<std::string> token_texts(std::string_view text, bool lowercase) {
  std::vector<std::string> out;
  for (auto& token : tokenize(text)) {
    if (lowercase) {
      icu::UnicodeString u = icu::UnicodeString::fromUTF8(token.text);
      u.toLower();
      std::string lowered;
      u.toUTF8String(lowered);
      out.push_back(std::move(lowered));
    } else {
      out.push_back(std::move(token.text));
    }
  }
  return out;
}

int count_syllables(std::string_view word) {
  const std::u32string chars = decode(word);
  if (std::none_of(chars.begin(), chars.end(), is_letter)) {
    throw std::invalid_argument("count_syllables: '" + std::string(word) +
                                "' contains no letters");
  }
  std::string w;
  for (char32_t c : chars) {
    if (c >= U'A' && c <= U'Z') w.push_back(static_cast<char>(c - U'A' + U'a'));
    else if (c >= U'a' && c <= U'z') w.push_back(static_cast<char>(c));
  }
  auto is_vowel = [&](std::size_t pos) {
    const char c = w[pos];
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
    return c == 'y' && pos > 0;
  };
  const std::size_t n = w.size();
  auto ends_with = [&](std::string_view suffix) {
    return n >= suffix.size() && std::string_view(w).substr(n - suffix.size()) == suffix;
  };
  // Occurrences of `pair` not preceded by any character in `not_after` and,
  // when given, not followed by `not_before`.
  auto count_pair = [&](std::string_view pair, std::string_view not_after, char not_before = 0) {
    int count = 0;
    for (std::size_t at = w.find(pair); at != std::string::npos; at = w.find(pair, at + 1)) {
      if (at > 0 && not_after.find(w[at - 1]) != std::string_view::npos) continue;
      if (not_before && at + pair.size() < n && w[at + pair.size()] == not_before) continue;
      ++count;
    }
    return count;
  };
  int groups = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_vowel(i) && (i == 0 || !is_vowel(i - 1))) ++groups;
  }
  if (groups > 1) {
    if (ends_with("e") && n >= 2 && !is_vowel(n - 2)) {
      // "-le" after a consonant is syllabic (ta-ble, peo-ple).
      const bool syllabic_le = n >= 3 && w[n - 2] == 'l' && !is_vowel(n - 3);
      if (!syllabic_le) --groups;
    } else if (ends_with("ed") && n >= 3 && !is_vowel(n - 3) && w[n - 3] != 't' &&
               w[n - 3] != 'd') {
      --groups;  // measured, reduced
    } else if (ends_with("es") && n >= 3 && !is_vowel(n - 3)) {
      const bool sibilant = ends_with("ses") || ends_with("xes") || ends_with("zes") ||
                            ends_with("ches") || ends_with("shes") || ends_with("ces") ||
                            ends_with("ges");
      const bool syllabic_les = w[n - 3] == 'l' && n >= 4 && !is_vowel(n - 4);
      if (!sibilant && !syllabic_les) --groups;  // becomes, improves
    } else if (ends_with("ely") && n >= 4 && !is_vowel(n - 4)) {
      --groups;  // rarely
    } else if ((ends_with("ement") || ends_with("ements")) && n >= 7) {
      const std::size_t e = w.rfind("ement");
      if (e >= 2 && !is_vowel(e - 1) && is_vowel(e - 2)) --groups;  // statement
    }
  }
  // Vowel pairs that are usually two syllables.
  groups += count_pair("ia", "ctsg");
  groups += count_pair("io", "ctsx", 'n');
  groups += count_pair("ua", "qg");
  groups += count_pair("eing", "") + count_pair("yi", "");
  groups += count_pair("scia", "") + count_pair("scie", "");
  groups -= count_pair("ically", "");
  if (ends_with("ier") && groups > 1) ++groups;
  return std::max(groups, 1);
}

}  // namespace explplan
