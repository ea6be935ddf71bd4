// Copyright 2026 The occlunet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef OCCLUNET_TOOLS_COMMANDS_HPP_
#define OCCLUNET_TOOLS_COMMANDS_HPP_

#include <iostream>

namespace occlunet::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,    // bad flags or config
  kExitNumeric = 2,  // NaN, divergence, failed gradient check
  kExitIo = 3,       // unreadable, unwritable or malformed files
};

int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace occlunet::cli

#endif  // OCCLUNET_TOOLS_COMMANDS_HPP_
