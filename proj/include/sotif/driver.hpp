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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

// Stand-ins for the human driver in batch runs.
namespace sotif::driver
{

/// Hardware-realistic steering wheel range, degrees.
inline constexpr double kMaxSwa = 540.0;

enum class Family { kFixed, kUniform, kLognormal };

/// Scalar distribution. Parameter meaning depends on the family:
/// fixed(a), uniform(a, b), lognormal(mu = a, sigma = b).
struct Distribution
{
  Family family{Family::kFixed};
  double a{0.0};
  double b{0.0};

  static Distribution fixed(double value) { return {Family::kFixed, value, value}; }
  static Distribution uniform(double lo, double hi) { return {Family::kUniform, lo, hi}; }
  static Distribution lognormal(double mu, double sigma) { return {Family::kLognormal, mu, sigma}; }

  double sample(std::uint64_t seed, std::uint64_t stream) const;
  /// Smallest value in the support.
  double support_min() const;

  bool operator==(const Distribution &) const = default;
};

enum class ActionKind { kNone, kTakeOver, kSteer };

std::string_view to_string(ActionKind kind);
std::optional<ActionKind> parse_action_kind(std::string_view text);

/// A TAKE_OVER may carry the steering input given in the same step.
struct DriverAction
{
  ActionKind kind{ActionKind::kNone};
  std::optional<double> swa;

  static DriverAction none() { return {}; }
  static DriverAction take_over(std::optional<double> swa = std::nullopt) { return {ActionKind::kTakeOver, swa}; }
  static DriverAction steer(double swa) { return {ActionKind::kSteer, swa}; }

  bool operator==(const DriverAction &) const = default;
};

struct TimedAction
{
  double t{0.0};
  DriverAction action;

  bool operator==(const TimedAction &) const = default;
};

enum class Variant { kNonResponder, kParametric, kScripted };

std::string_view to_string(Variant variant);

struct DriverSpec
{
  Variant variant{Variant::kNonResponder};
  // PARAMETRIC
  Distribution delay{Distribution::lognormal(0.6, 0.35)};
  Distribution steer_scale{Distribution::fixed(1.0)};
  double steer_hold{1.0};
  // SCRIPTED
  std::vector<TimedAction> script;

  static DriverSpec non_responder() { return {}; }
  static DriverSpec parametric(Distribution delay, Distribution steer_scale, double steer_hold = 1.0);
  static DriverSpec scripted(std::vector<TimedAction> script);

  bool operator==(const DriverSpec &) const = default;
};

/// Throws INVALID_SPEC.
void validate(const DriverSpec & spec);

/// A driver with its random parameters drawn. One per episode.
class DriverInstance
{
public:
  DriverInstance(DriverSpec spec, double delay, double steer_scale);

  Variant variant() const { return spec_.variant; }
  double delay() const { return delay_; }
  double steer_scale() const { return steer_scale_; }

  /// Called once per simulation step with non-decreasing t. tor_time is
  /// the TOR event time once issued, ideal the current ideal steering.
  DriverAction act(double t, std::optional<double> tor_time, double ideal);

private:
  DriverAction act_parametric(double t, std::optional<double> tor_time, double ideal);
  DriverAction act_scripted(double t);

  DriverSpec spec_;
  double delay_;
  double steer_scale_;
  std::optional<double> last_t_;
  std::optional<double> take_over_t_;
  std::size_t cursor_{0};
};

/// Draws delay and steer scale from counter-based streams keyed by seed.
DriverInstance instantiate(const DriverSpec & spec, std::uint64_t seed);

/// SCRIPTED spec replaying a recorded session. Throws MALFORMED_LOG.
DriverSpec scripted_from_session(std::span<const TimedAction> session_log);

// JSON: specs use {"variant": ..., "delay": {"family": ...}, ...};
// session logs are JSON lines {"t":..,"kind":"..","swa":..}.
void to_json(nlohmann::json & j, const Distribution & d);
void from_json(const nlohmann::json & j, Distribution & d);
void to_json(nlohmann::json & j, const DriverSpec & spec);
void from_json(const nlohmann::json & j, DriverSpec & spec);
void to_json(nlohmann::json & j, const TimedAction & action);
void from_json(const nlohmann::json & j, TimedAction & action);

std::string write_session_log(std::span<const TimedAction> log);
/// Throws MALFORMED_LOG on unparsable lines.
std::vector<TimedAction> parse_session_log(std::string_view text);

}  // namespace sotif::driver
