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

#ifndef EXPLPLAN_COMMON_H_
#define EXPLPLAN_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace explplan {

// Input data that does not follow an expected schema or text format.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A discourse tree whose shape violates the binary/partition invariants.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Chat-completion endpoint failed, possibly after retries.
class GatewayError : public std::runtime_error {
 public:
  GatewayError(const std::string& what, int attempts, int http_status = 0)
      : std::runtime_error(what), attempts_(attempts), http_status_(http_status) {}
  int attempts() const { return attempts_; }
  int http_status() const { return http_status_; }

 private:
  int attempts_;
  int http_status_;
};

// The endpoint answered, but with no text.
class EmptyResponseError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

// A model completion could not be parsed into the requested structure.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::string raw)
      : std::runtime_error(what), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RetrievalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Entailment scorer failure; sentence_index is the summary sentence being
// scored when it happened (or -1 if unknown).
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, long sentence_index = -1)
      : std::runtime_error(what), sentence_index_(sentence_index) {}
  long sentence_index() const { return sentence_index_; }

 private:
  long sentence_index_;
};

// 64-bit FNV-1a. Used for configuration fingerprints and per-record seeds.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value);

// Strips ASCII whitespace from both ends.
std::string trim(std::string_view text);

}  // namespace explplan

#endif  // EXPLPLAN_COMMON_H_
