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

#include "sotif/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sotif/error.hpp"

namespace sotif::scenario
{
namespace
{

// Tolerance for comparing step times against configured instants.
constexpr double kTimeEps = 1e-9;
constexpr double kMaxControllerSwa = 90.0;

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

bool finite(const VehicleState & s)
{
  return std::isfinite(s.s) && std::isfinite(s.y) && std::isfinite(s.heading) && std::isfinite(s.speed) &&
         std::isfinite(s.swa);
}

}  // namespace

std::string_view to_string(AdsMode mode)
{
  switch (mode) {
    case AdsMode::kAutomated: return "AUTOMATED";
    case AdsMode::kWarningIssued: return "WARNING_ISSUED";
    case AdsMode::kTorIssued: return "TOR_ISSUED";
    case AdsMode::kDriverControl: return "DRIVER_CONTROL";
    case AdsMode::kReducedFunctionalityMrm: return "REDUCED_FUNCTIONALITY_MRM";
    case AdsMode::kStopped: return "STOPPED";
  }
  return "AUTOMATED";
}

std::optional<AdsMode> parse_ads_mode(std::string_view text)
{
  for (auto m : {AdsMode::kAutomated, AdsMode::kWarningIssued, AdsMode::kTorIssued, AdsMode::kDriverControl,
                 AdsMode::kReducedFunctionalityMrm, AdsMode::kStopped}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

bool is_legal_transition(AdsMode from, AdsMode to)
{
  if (from == to) return true;
  switch (from) {
    case AdsMode::kAutomated:
      return to == AdsMode::kWarningIssued;
    case AdsMode::kWarningIssued:
      return to == AdsMode::kTorIssued;
    case AdsMode::kTorIssued:
      return to == AdsMode::kDriverControl || to == AdsMode::kReducedFunctionalityMrm;
    case AdsMode::kReducedFunctionalityMrm:
      return to == AdsMode::kDriverControl || to == AdsMode::kStopped;
    case AdsMode::kDriverControl:
    case AdsMode::kStopped:
      return false;
  }
  return false;
}

bool ads_controls(AdsMode mode)
{
  return mode == AdsMode::kAutomated || mode == AdsMode::kWarningIssued || mode == AdsMode::kTorIssued ||
         mode == AdsMode::kReducedFunctionalityMrm;
}

std::vector<std::string> validation_errors(const SimConfig & c)
{
  std::vector<std::string> errors;
  auto require = [&errors](bool ok, const char * message) {
    if (!ok) errors.emplace_back(message);
  };
  const auto & tl = c.timeline;
  require(std::isfinite(tl.lane_change_start) && std::isfinite(tl.warning_time) && std::isfinite(tl.tor_time) &&
            std::isfinite(tl.episode_max_duration),
          "timeline: all times must be finite");
  require(0.0 < tl.lane_change_start && tl.lane_change_start < tl.warning_time && tl.warning_time < tl.tor_time &&
            tl.tor_time < tl.episode_max_duration,
          "timeline: requires 0 < lane_change_start < warning_time < tor_time < episode_max_duration");
  require(std::isfinite(c.dt) && c.dt > 0.0, "dt must be > 0");
  require(std::isfinite(c.wheelbase) && c.wheelbase > 0.0, "wheelbase must be > 0");
  require(std::isfinite(c.steering_ratio) && c.steering_ratio > 0.0, "steering_ratio must be > 0");
  require(std::isfinite(c.mrm_grace) && c.mrm_grace > 0.0, "mrm_grace must be > 0");
  require(std::isfinite(c.mrm_decel) && c.mrm_decel > 0.0, "mrm_decel must be > 0");
  require(std::isfinite(c.kp) && std::isfinite(c.kd) && std::isfinite(c.kh), "controller gains must be finite");
  require(std::isfinite(c.vehicle_width) && c.vehicle_width > 0.0, "vehicle_width must be > 0");
  require(std::isfinite(c.road.lane_width) && c.road.lane_width > 0.0, "road: lane_width must be > 0");
  require(c.road.lane_count == 2, "road: lane_count must be 2");
  require(c.road.marking_gap_start.has_value() == c.road.marking_gap_end.has_value(),
          "road: marking_gap_start and marking_gap_end must be given together");
  if (c.road.marking_gap_start && c.road.marking_gap_end) {
    require(*c.road.marking_gap_start < *c.road.marking_gap_end, "road: requires marking_gap_start < marking_gap_end");
  }
  require(finite(c.initial_state), "initial_state: values must be finite");
  require(c.initial_state.speed >= 0.0, "initial_state: speed must be >= 0");
  require(std::abs(c.initial_state.heading) < std::numbers::pi / 2.0, "initial_state: |heading| must be < pi/2");
  return errors;
}

void validate(const SimConfig & config)
{
  const auto errors = validation_errors(config);
  if (errors.empty()) return;
  std::string message;
  for (const auto & e : errors) {
    if (!message.empty()) message += "; ";
    message += e;
  }
  throw Error(ErrorCode::kConfigInvalid, message);
}

SimConfig resolve(SimConfig config)
{
  validate(config);
  if (!config.road.marking_gap_start) {
    const auto & init = config.initial_state;
    // Half a step early so the entry step is the warning_time step even
    // with the path shortening of the lane change.
    const double start = init.s + init.speed * (config.timeline.warning_time - config.dt / 2.0);
    config.road.marking_gap_start = start;
    config.road.marking_gap_end =
      start + std::max(init.speed, 1.0) * (config.timeline.episode_max_duration - config.timeline.warning_time);
  }
  return config;
}

std::string_view to_string(EventKind kind)
{
  switch (kind) {
    case EventKind::kMarkingGap: return "MARKING_GAP";
    case EventKind::kWarning: return "WARNING";
    case EventKind::kTor: return "TOR";
    case EventKind::kTakeOver: return "TAKE_OVER";
    case EventKind::kHazardEast: return "HAZARD_EAST";
    case EventKind::kHazardWest: return "HAZARD_WEST";
    case EventKind::kMrmStart: return "MRM_START";
    case EventKind::kMrmStopped: return "MRM_STOPPED";
    case EventKind::kEpisodeEnd: return "EPISODE_END";
  }
  return "EPISODE_END";
}

std::optional<EventKind> parse_event_kind(std::string_view text)
{
  for (auto k : {EventKind::kMarkingGap, EventKind::kWarning, EventKind::kTor, EventKind::kTakeOver,
                 EventKind::kHazardEast, EventKind::kHazardWest, EventKind::kMrmStart, EventKind::kMrmStopped,
                 EventKind::kEpisodeEnd}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

bool is_hazard(EventKind kind) { return kind == EventKind::kHazardEast || kind == EventKind::kHazardWest; }

std::optional<Event> EpisodeTrace::first(EventKind kind) const
{
  auto it = std::find_if(events.begin(), events.end(), [kind](const Event & e) { return e.kind == kind; });
  if (it == events.end()) return std::nullopt;
  return *it;
}

std::optional<Event> EpisodeTrace::first_hazard() const
{
  auto it = std::find_if(events.begin(), events.end(), [](const Event & e) { return is_hazard(e.kind); });
  if (it == events.end()) return std::nullopt;
  return *it;
}

VehicleState step(
  const VehicleState & state, double swa_command, double accel_command, double dt, const SimConfig & config)
{
  if (!finite(state) || !std::isfinite(swa_command) || !std::isfinite(accel_command) || !std::isfinite(dt)) {
    throw Error(ErrorCode::kEpisodeInvalid, "non-finite input to vehicle step");
  }
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kEpisodeInvalid, "dt must be > 0");
  }
  const double road_wheel = deg2rad(swa_command / config.steering_ratio);
  VehicleState next = state;
  next.heading = state.heading + (state.speed / config.wheelbase) * std::tan(road_wheel) * dt;
  next.speed = std::max(0.0, state.speed + accel_command * dt);
  // Position advances along the midpoint heading and speed (second order).
  const double heading_mid = 0.5 * (state.heading + next.heading);
  const double speed_mid = 0.5 * (state.speed + next.speed);
  next.y = state.y + speed_mid * std::sin(heading_mid) * dt;
  next.s = state.s + speed_mid * std::cos(heading_mid) * dt;
  if (!finite(next) || std::abs(next.heading) >= std::numbers::pi / 2.0) {
    throw Error(ErrorCode::kEpisodeInvalid, "vehicle heading left (-pi/2, pi/2)");
  }
  return next;
}

Command ads_controller(
  const VehicleState & state, const RoadSpec &, double target_lane_center, AdsMode mode, const SimConfig & config)
{
  const double road_wheel = -config.kp * (state.y - target_lane_center) -
                            config.kd * state.speed * std::sin(state.heading) - config.kh * state.heading;
  Command cmd;
  cmd.swa = std::clamp(config.steering_ratio * rad2deg(road_wheel), -kMaxControllerSwa, kMaxControllerSwa);
  cmd.accel = mode == AdsMode::kReducedFunctionalityMrm ? -config.mrm_decel : 0.0;
  return cmd;
}

double lane_change_target(double t, const ScenarioTimeline & timeline, const RoadSpec & road)
{
  const double u = (t - timeline.lane_change_start) / kLaneChangeDuration;
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return road.lane_width;
  // 10u^3 - 15u^4 + 6u^5: zero velocity and acceleration at both ends
  const double blend = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
  return road.lane_width * blend;
}

double ideal_swa(const VehicleState & state, const RoadSpec & road, const SimConfig & config)
{
  return ads_controller(state, road, road.left_lane_center(), AdsMode::kDriverControl, config).swa;
}

Hazard detect_hazard(const VehicleState & state, const RoadSpec & road, double vehicle_width)
{
  const double half = vehicle_width / 2.0;
  if (state.y + half > road.lane_width + road.lane_width / 2.0) return Hazard::kWest;
  if (state.y - half < road.lane_width / 2.0) return Hazard::kEast;
  return Hazard::kNone;
}

Episode::Episode(const SimConfig & config) : config_(resolve(config)), state_(config_.initial_state) {}

double Episode::time() const { return static_cast<double>(step_index_) * config_.dt; }

double Episode::ideal() const { return ideal_swa(state_, config_.road, config_); }

double Episode::target_lane() const
{
  if (mode_ == AdsMode::kReducedFunctionalityMrm || mode_ == AdsMode::kStopped) {
    return mrm_target_;
  }
  return lane_change_target(time(), config_.timeline, config_.road);
}

void Episode::emit(double t, EventKind kind) { trace_.events.push_back({t, kind}); }

void Episode::transition(AdsMode next)
{
  if (!is_legal_transition(mode_, next)) {
    throw Error(ErrorCode::kEpisodeInvalid,
                "illegal mode transition " + std::string(to_string(mode_)) + " -> " + std::string(to_string(next)));
  }
  mode_ = next;
}

std::span<const Event> Episode::advance(const driver::DriverAction & action)
{
  if (finished_) {
    throw Error(ErrorCode::kEpisodeInvalid, "episode already finished");
  }
  step_events_begin_ = trace_.events.size();
  const double t = time();
  const auto & road = config_.road;
  const auto & tl = config_.timeline;

  // ADS-side events
  if (!gap_entered_ && state_.s >= *road.marking_gap_start && state_.s < *road.marking_gap_end) {
    gap_entered_ = true;
    emit(t, EventKind::kMarkingGap);
    if (mode_ == AdsMode::kAutomated) {
      transition(AdsMode::kWarningIssued);
      warning_t_ = t;
      emit(t, EventKind::kWarning);
    }
  }
  if (mode_ == AdsMode::kWarningIssued && t >= tl.tor_time - kTimeEps && t > *warning_t_) {
    transition(AdsMode::kTorIssued);
    tor_t_ = t;
    emit(t, EventKind::kTor);
  }
  if (mode_ == AdsMode::kTorIssued && t >= *tor_t_ + config_.mrm_grace - kTimeEps) {
    transition(AdsMode::kReducedFunctionalityMrm);
    mrm_start_t_ = t;
    mrm_target_ = lane_change_target(t, tl, road);
    emit(t, EventKind::kMrmStart);
  }
  if (mode_ == AdsMode::kReducedFunctionalityMrm && state_.speed <= 0.0) {
    transition(AdsMode::kStopped);
    emit(t, EventKind::kMrmStopped);
  }

  // Driver input. A take-over is accepted strictly after the TOR step;
  // earlier requests are latched.
  const bool driver_had_control = mode_ == AdsMode::kDriverControl;
  if (action.kind == driver::ActionKind::kTakeOver && !driver_had_control && !pending_take_over_) {
    pending_take_over_ = true;
    pending_swa_ = action.swa;
  } else if (action.kind == driver::ActionKind::kSteer && pending_take_over_ && action.swa) {
    pending_swa_ = action.swa;
  }
  const bool can_take_over = tor_t_ && t > *tor_t_ + kTimeEps &&
                             (mode_ == AdsMode::kTorIssued || mode_ == AdsMode::kReducedFunctionalityMrm);
  if (pending_take_over_ && can_take_over) {
    transition(AdsMode::kDriverControl);
    emit(t, EventKind::kTakeOver);
    pending_take_over_ = false;
    driver_swa_ = pending_swa_.value_or(state_.swa);
  } else if (driver_had_control && action.swa) {
    driver_swa_ = *action.swa;
  }

  // Hazard monitoring in the left-lane context
  if (!hazard_armed_ && t >= tl.lane_change_start - kTimeEps) {
    const bool inside_left_lane = detect_hazard(state_, road, config_.vehicle_width) == Hazard::kNone;
    hazard_armed_ = inside_left_lane || t >= tl.lane_change_start + kLaneChangeDuration - kTimeEps;
  }
  if (hazard_armed_ && !hazard_seen_) {
    const auto hazard = detect_hazard(state_, road, config_.vehicle_width);
    if (hazard != Hazard::kNone) {
      hazard_seen_ = true;
      emit(t, hazard == Hazard::kWest ? EventKind::kHazardWest : EventKind::kHazardEast);
    }
  }

  Sample sample{t, state_, mode_, std::nullopt};
  if (mode_ == AdsMode::kDriverControl) {
    sample.driver_swa = driver_swa_;
  }
  trace_.samples.push_back(sample);

  if (mode_ == AdsMode::kStopped || t >= tl.episode_max_duration - kTimeEps) {
    emit(t, EventKind::kEpisodeEnd);
    finished_ = true;
    return {trace_.events.begin() + static_cast<std::ptrdiff_t>(step_events_begin_), trace_.events.end()};
  }

  Command cmd;
  if (mode_ == AdsMode::kDriverControl) {
    cmd = {driver_swa_, 0.0};
  } else if (ads_controls(mode_)) {
    cmd = ads_controller(state_, road, target_lane(), mode_, config_);
  }
  state_ = step(state_, cmd.swa, cmd.accel, config_.dt, config_);
  state_.swa = cmd.swa;
  ++step_index_;
  return {trace_.events.begin() + static_cast<std::ptrdiff_t>(step_events_begin_), trace_.events.end()};
}

EpisodeTrace run_episode(const SimConfig & config, const driver::DriverSpec & driver, std::uint64_t seed)
{
  Episode episode(config);
  auto instance = driver::instantiate(driver, seed);
  while (!episode.finished()) {
    const auto action = instance.act(episode.time(), episode.tor_time(), episode.ideal());
    episode.advance(action);
  }
  return episode.trace();
}

std::vector<driver::TimedAction> driver_inputs(const EpisodeTrace & trace)
{
  std::vector<driver::TimedAction> out;
  std::optional<double> last;
  for (const auto & sample : trace.samples) {
    if (!sample.driver_swa) {
      continue;
    }
    if (!last) {
      out.push_back({sample.t, driver::DriverAction::take_over(sample.driver_swa)});
    } else if (*sample.driver_swa != *last) {
      out.push_back({sample.t, driver::DriverAction::steer(*sample.driver_swa)});
    }
    last = sample.driver_swa;
  }
  return out;
}

}  // namespace sotif::scenario
