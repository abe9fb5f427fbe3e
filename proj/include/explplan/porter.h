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

#ifndef EXPLPLAN_PORTER_H_
#define EXPLPLAN_PORTER_H_

#include <string>
#include <string_view>

namespace explplan {

// The original (1980) Porter suffix-stripping algorithm. Expects a lowercase
// ASCII word.
std::string porter_stem(std::string_view word);

}  // namespace explplan

#endif  // EXPLPLAN_PORTER_H_
