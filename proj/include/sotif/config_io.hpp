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

// JSON representation of simulator and classifier settings. Readers are
// strict: unknown keys and type mismatches are reported, all at once.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sotif/misuse.hpp"
#include "sotif/scenario.hpp"

namespace sotif::config
{

nlohmann::json to_json(const scenario::SimConfig & config);
nlohmann::json to_json(const misuse::ClassifierConfig & config);
nlohmann::json to_json(const misuse::DetectorConfig & config);

/// Reads a complete SimConfig document, appending "path.field: message"
/// entries to errors, including the simulator's own validation findings.
scenario::SimConfig read_sim_config(const nlohmann::json & j, std::vector<std::string> & errors,
                                    const std::string & path = "");
misuse::ClassifierConfig read_classifier(const nlohmann::json & j, std::vector<std::string> & errors,
                                         const std::string & path = "classifier");
misuse::DetectorConfig read_detector(const nlohmann::json & j, std::vector<std::string> & errors,
                                     const std::string & path = "detector");

/// Defaults merged with a partial override document (JSON merge patch).
nlohmann::json merged(const nlohmann::json & base, const nlohmann::json & patch);

/// Parses text as JSON, throwing PARSE_ERROR with the reader's position.
nlohmann::json parse_json(const std::string & text, const std::string & what);

/// Reads a whole file, throwing PARSE_ERROR if it cannot be opened.
std::string read_file(const std::string & path);

/// Parses a SimConfig file body: partial documents override the defaults.
/// Throws PARSE_ERROR or VALIDATION_ERROR.
scenario::SimConfig load_sim_config(const std::string & text);

}  // namespace sotif::config
