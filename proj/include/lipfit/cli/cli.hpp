// Copyright 2026 The lipfit Authors
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

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lipfit::cli {

/// Process exit codes; stable across releases.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,     ///< bad flags, config or parameters
    kExitData = 2,      ///< unreadable or inconsistent input data
    kExitNumerical = 3, ///< non-finite loss, divergence
};

/**
 * Entry point behind the `lipfit` binary. `args` excludes the program name.
 *
 * Settings resolve in order: built-in defaults, --config file, LIPFIT_*
 * environment variables (LIPFIT_SECTION__KEY=value), --set key=value, then
 * dedicated flags. The resolved config is written to <out>/run_config.cfg
 * before the command runs; passing that file back with --config reproduces
 * the run. `envp` defaults to the process environment.
 */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, char** envp = nullptr);

} // namespace lipfit::cli
