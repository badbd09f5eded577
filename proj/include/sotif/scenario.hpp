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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sotif/driver.hpp"

// Missing-lane-marking take-over scenario on a straight two-lane one-way
// highway. Lateral axis points left (west); y = 0 is the right-lane center.
namespace sotif::scenario
{

/// Duration of the right-to-left lane change maneuver.
inline constexpr double kLaneChangeDuration = 4.0;

struct RoadSpec
{
  double lane_width{3.5};
  int lane_count{2};
  // Absent values are placed from the timeline by resolve().
  std::optional<double> marking_gap_start;
  std::optional<double> marking_gap_end;

  double left_lane_center() const { return lane_width; }
  double west_edge_y() const { return lane_width + lane_width / 2.0; }
  double east_edge_y() const { return -lane_width / 2.0; }

  bool operator==(const RoadSpec &) const = default;
};

struct VehicleState
{
  double s{0.0};
  double y{0.0};
  double heading{0.0};   // rad, relative to the road axis
  double speed{27.78};   // m/s
  double swa{0.0};       // deg, positive = left

  bool operator==(const VehicleState &) const = default;
};

enum class AdsMode {
  kAutomated,
  kWarningIssued,
  kTorIssued,
  kDriverControl,
  kReducedFunctionalityMrm,
  kStopped,
};

std::string_view to_string(AdsMode mode);
std::optional<AdsMode> parse_ads_mode(std::string_view text);

/// True for the legal mode-machine edges and for staying in the same mode.
bool is_legal_transition(AdsMode from, AdsMode to);

/// Modes in which the lateral controller owns the steering wheel.
bool ads_controls(AdsMode mode);

struct ScenarioTimeline
{
  double warning_time{6.04};
  double tor_time{7.96};
  double lane_change_start{4.0};
  double episode_max_duration{30.0};

  bool operator==(const ScenarioTimeline &) const = default;
};

struct SimConfig
{
  RoadSpec road;
  ScenarioTimeline timeline;
  VehicleState initial_state;
  double dt{0.01};
  double wheelbase{2.7};
  double steering_ratio{15.0};
  double mrm_grace{5.0};
  double mrm_decel{2.0};
  double kp{0.1};
  double kd{0.05};
  double kh{1.0};
  double vehicle_width{1.8};

  bool operator==(const SimConfig &) const = default;
};

/// Every violated invariant, one message each. Empty when valid.
std::vector<std::string> validation_errors(const SimConfig & config);

/// Throws CONFIG_INVALID listing all violations.
void validate(const SimConfig & config);

/// Validates and fills in the marking gap when it was left unset. The gap
/// starts where the nominal vehicle is at warning_time, so the warning
/// emerges from the geometry.
SimConfig resolve(SimConfig config);

enum class EventKind {
  kMarkingGap,
  kWarning,
  kTor,
  kTakeOver,
  kHazardEast,
  kHazardWest,
  kMrmStart,
  kMrmStopped,
  kEpisodeEnd,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);
bool is_hazard(EventKind kind);

struct Event
{
  double t{0.0};
  EventKind kind{EventKind::kEpisodeEnd};

  bool operator==(const Event &) const = default;
};

struct Sample
{
  double t{0.0};
  VehicleState state;
  AdsMode mode{AdsMode::kAutomated};
  std::optional<double> driver_swa;

  bool operator==(const Sample &) const = default;
};

struct EpisodeTrace
{
  std::vector<Sample> samples;
  std::vector<Event> events;

  std::optional<Event> first(EventKind kind) const;
  std::optional<Event> first_hazard() const;
  bool has(EventKind kind) const { return first(kind).has_value(); }
  bool complete() const { return has(EventKind::kEpisodeEnd); }

  bool operator==(const EpisodeTrace &) const = default;
};

/// Kinematic bicycle update. The steering wheel angle in the returned
/// state is left untouched; the episode loop records the applied command.
VehicleState step(
  const VehicleState & state, double swa_command, double accel_command, double dt,
  const SimConfig & config);

struct Command
{
  double swa{0.0};
  double accel{0.0};
};

/// Lane-centering law plus the longitudinal command for the given mode.
Command ads_controller(
  const VehicleState & state, const RoadSpec & road, double target_lane_center, AdsMode mode,
  const SimConfig & config);

/// Target lateral center along the quintic right-to-left lane change.
double lane_change_target(double t, const ScenarioTimeline & timeline, const RoadSpec & road);

/// Steering wheel angle that centers the vehicle in the left lane.
double ideal_swa(const VehicleState & state, const RoadSpec & road, const SimConfig & config);

enum class Hazard { kNone, kWest, kEast };

Hazard detect_hazard(const VehicleState & state, const RoadSpec & road, double vehicle_width = 1.8);

/// Fixed-timestep episode. Each advance() executes exactly one step at
/// time() using the driver's action for that step. Used directly by the
/// live session server; run_episode() drives it from a DriverInstance.
class Episode
{
public:
  explicit Episode(const SimConfig & config);

  bool finished() const { return finished_; }
  double time() const;
  const VehicleState & state() const { return state_; }
  AdsMode mode() const { return mode_; }
  const SimConfig & config() const { return config_; }

  /// Ideal steering at the current state.
  double ideal() const;
  /// Lateral target the ADS is tracking at the current time.
  double target_lane() const;
  /// Time of the TOR event once issued.
  std::optional<double> tor_time() const { return tor_t_; }

  /// Runs one step. Returns the events emitted during it.
  std::span<const Event> advance(const driver::DriverAction & action);

  const EpisodeTrace & trace() const { return trace_; }

private:
  void emit(double t, EventKind kind);
  void transition(AdsMode next);

  SimConfig config_;
  VehicleState state_;
  AdsMode mode_{AdsMode::kAutomated};
  long step_index_{0};
  bool finished_{false};
  bool gap_entered_{false};
  bool hazard_armed_{false};
  bool hazard_seen_{false};
  bool pending_take_over_{false};
  std::optional<double> pending_swa_;
  std::optional<double> warning_t_;
  std::optional<double> tor_t_;
  std::optional<double> mrm_start_t_;
  double mrm_target_{0.0};
  double driver_swa_{0.0};
  EpisodeTrace trace_;
  std::size_t step_events_begin_{0};
};

/// Runs a complete episode. Deterministic in (config, driver, seed).
/// Driver inputs as applied during the episode, in session-log form.
/// Replaying them as a scripted driver reproduces the trace.
std::vector<driver::TimedAction> driver_inputs(const EpisodeTrace & trace);

EpisodeTrace run_episode(const SimConfig & config, const driver::DriverSpec & driver, std::uint64_t seed);

}  // namespace sotif::scenario
