/*
 * Copyright 2026 The mpai-sim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
// Command-line front end: calibrate, partition, simulate, throughput, pareto
// and validate.
#ifndef MPAI_CLI_HPP
#define MPAI_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace mpai {

/// Exit codes returned by run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;  ///< unreadable or invalid input
inline constexpr int kExitInfeasible = 2;  ///< constraints or targets cannot be met
inline constexpr int kExitUsage = 64;      ///< bad command line

/// Runs one subcommand. `args` excludes the program name. Outputs are staged
/// and renamed into place only after every one of them has been produced.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace mpai

#endif // MPAI_CLI_HPP
