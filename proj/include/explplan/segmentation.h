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

// Sentence splitting, word tokenization and syllable counting.
//
// All offsets are code point offsets into the NFC-normalized input, so the
// same text yields the same offsets no matter how it was encoded upstream.
// Texts handed back in Sentence/Token are UTF-8.

#ifndef EXPLPLAN_SEGMENTATION_H_
#define EXPLPLAN_SEGMENTATION_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace explplan {

struct Sentence {
  std::size_t index = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;  // exclusive
  std::string text;

  bool operator==(const Sentence&) const = default;
};

struct Token {
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;  // exclusive
  bool is_word = false;

  bool operator==(const Token&) const = default;
};

std::string normalize_nfc(std::string_view text);

// Code point slice [start, end) of a UTF-8 string.
std::string substr_chars(std::string_view text, std::size_t start, std::size_t end);

std::size_t char_length(std::string_view text);

std::vector<Sentence> segment_sentences(std::string_view text);

std::vector<Token> tokenize(std::string_view text);

// Lowercased texts of all tokens (words and punctuation), the token stream
// used by ROUGE-free length statistics.
std::vector<std::string> token_texts(std::string_view text, bool lowercase);

// Vowel-group heuristic. Throws std::invalid_argument when the word has no
// letters.
int count_syllables(std::string_view word);

}  // namespace explplan

#endif  // EXPLPLAN_SEGMENTATION_H_
