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

// Interactive driver-in-the-loop sessions. SessionCore is the transport-free
// state machine behind the /session socket: frames in, frames out, one
// simulation tick at a time.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sotif/driver.hpp"
#include "sotif/misuse.hpp"
#include "sotif/scenario.hpp"
#include "sotif/testmanager.hpp"

namespace sotif::session
{

inline constexpr double kTickPeriod = 0.02;       // s, 50 Hz
inline constexpr double kBroadcastPeriod = 0.05;  // s, 20 Hz

struct SessionOptions
{
  scenario::SimConfig defaults;
  misuse::ClassifierConfig classifier;
  misuse::DetectorConfig detector;
};

struct SessionResult
{
  int tc{0};
  std::uint64_t seed{0};
  scenario::SimConfig config;
  std::vector<driver::TimedAction> log;
  testmgr::CaseResult result;
};

struct Outbound
{
  std::vector<std::string> frames;  // each one JSON object plus '\n'
  bool close{false};
};

enum class Phase { kIdle, kRunning, kDone };

class SessionCore
{
public:
  SessionCore(SessionOptions options, int tc_index);

  Outbound receive(std::string_view frame);
  /// Advances the simulation by one tick. No-op unless running.
  Outbound tick();

  Phase phase() const { return phase_; }
  int steps_per_tick() const { return steps_per_tick_; }
  const std::optional<SessionResult> & result() const { return result_; }

private:
  Outbound start(const nlohmann::json & j);
  Outbound control(const nlohmann::json & j);
  Outbound finish(std::optional<std::string> error);
  driver::DriverAction next_action();
  nlohmann::json state_frame() const;

  SessionOptions options_;
  int tc_;
  Phase phase_{Phase::kIdle};
  std::uint64_t seed_{0};
  scenario::SimConfig config_;
  std::optional<scenario::Episode> episode_;
  driver::DriverAction pending_;
  bool take_over_logged_{false};
  std::vector<driver::TimedAction> log_;
  int steps_per_tick_{2};
  long broadcast_every_{5};
  long steps_{0};
  std::optional<SessionResult> result_;
};

std::string error_frame(std::string_view message);
std::string busy_frame();

/// Append-only store for interactive campaigns: records.csv and
/// results.jsonl in the series layout, plus per-session driver logs and
/// resolved configs under sessions/ for scripted replay.
class SessionStore
{
public:
  explicit SessionStore(std::filesystem::path dir);

  int next_tc() const { return next_tc_; }
  void append(const SessionResult & r);

private:
  std::filesystem::path dir_;
  int next_tc_{1};
};

}  // namespace sotif::session
