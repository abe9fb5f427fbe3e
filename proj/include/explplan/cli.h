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


#ifndef EXPLPLAN_CLI_H_
#define EXPLPLAN_CLI_H_

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace explplan {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitGateway = 3,
};

struct CliEnv {
  std::function<const char*(const char*)> getenv;
  std::ostream* out = nullptr;  // --help text
  std::ostream* err = nullptr;  // progress and diagnostics
};

// Entry point behind the executable. args[0] is the program name.
int run(const std::vector<std::string>& args, const CliEnv& env);
int run(int argc, const char* const* argv);

}  // namespace explplan

#endif  // EXPLPLAN_CLI_H_
