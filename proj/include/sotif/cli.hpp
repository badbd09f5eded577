// Copyright 2026 The sotif-fm Authors
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

namespace sotif::cli
{

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kSeriesFailed = 1,
  kInvalidInput = 2,  // usage, parse or validation error
  kEpisodeError = 3,  // the simulation itself failed
  kIoError = 4,       // outputs could not be written, port unavailable
};

int run(int argc, char ** argv);

}  // namespace sotif::cli
