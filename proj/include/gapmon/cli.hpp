/*
 * Copyright 2026 The gapmon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <iosfwd>

namespace gapmon {

/// Process exit codes of the gapmon tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvalidInput = 2,
  kExitImpossible = 3,
  kExitResourceLimit = 4,
  kExitInternal = 5,
};

/// Entry point of the `gapmon` command line tool. Reports go to `out` as JSON
/// lines, diagnostics to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gapmon
