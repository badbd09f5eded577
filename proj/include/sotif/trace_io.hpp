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

#include <string>
#include <string_view>

#include "sotif/scenario.hpp"

namespace sotif::scenario
{

/// CSV with header `t,s,y,heading,speed,swa,mode,driver_swa`, 6 decimals;
/// driver_swa is empty while the ADS is in control.
std::string write_trace_csv(const EpisodeTrace & trace);

/// JSON lines `{"t":..,"kind":".."}`.
std::string write_events_jsonl(const EpisodeTrace & trace);

/// Inverse of the two writers. Throws PARSE_ERROR.
EpisodeTrace parse_trace(std::string_view trace_csv, std::string_view events_jsonl);

}  // namespace sotif::scenario
