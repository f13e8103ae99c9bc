/* Copyright 2026 The dallv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Command-line front end. Every stage is a subcommand:
//
//   synth, zeroshot, train-source, adapt-target, distill, eval,
//   sweep-templates, export-predictions
//
// A subcommand reads a benchmark manifest (--manifest, a manifest.json or
// the directory holding one), writes its artifacts plus run.json into --out,
// and returns 0 on success, 1 on invalid input and 2 on filesystem errors.
//
// --config names a flat `key = value` file whose keys are the long flag
// names of the subcommand; flags given on the command line win.

#ifndef DALLV_CLI_HPP_
#define DALLV_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace dallv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitIo = 2;

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dallv::cli

#endif  // DALLV_CLI_HPP_
