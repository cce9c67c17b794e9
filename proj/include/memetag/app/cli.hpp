// Copyright 2026 The memetag Authors
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

namespace memetag::app {

/// Exit statuses of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitMissingArtifact = 2;

/// Parses arguments, runs one stage and maps failures to exit statuses.
/// Precedence: command-line flags, then the config file, then defaults.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace memetag::app
