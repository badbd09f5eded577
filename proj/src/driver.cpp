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

#include "sotif/driver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sotif/error.hpp"
#include "sotif/rng.hpp"

namespace sotif::driver
{
namespace
{

constexpr double kTimeEps = 1e-9;
constexpr std::uint64_t kDelayStream = 1;
constexpr std::uint64_t kScaleStream = 2;

bool finite(double v) { return std::isfinite(v); }

std::string_view to_string(Family family)
{
  switch (family) {
    case Family::kFixed: return "fixed";
    case Family::kUniform: return "uniform";
    case Family::kLognormal: return "lognormal";
  }
  return "fixed";
}

void validate_distribution(const Distribution & d, std::string_view name, std::vector<std::string> & errors)
{
  if (!finite(d.a) || !finite(d.b)) {
    errors.push_back(std::string(name) + ": parameters must be finite");
    return;
  }
  if (d.family == Family::kUniform && d.a > d.b) {
    errors.push_back(std::string(name) + ": uniform requires a <= b");
  }
  if (d.family == Family::kLognormal && d.b < 0.0) {
    errors.push_back(std::string(name) + ": lognormal requires sigma >= 0");
  }
}

void validate_action(const TimedAction & a, std::vector<std::string> & errors)
{
  if (!finite(a.t) || a.t < 0.0) {
    errors.push_back("action time must be finite and >= 0");
  }
  if (a.action.kind == ActionKind::kNone) {
    errors.push_back("action kind NONE is not allowed in a script");
  }
  if (a.action.kind == ActionKind::kSteer && !a.action.swa) {
    errors.push_back("STEER action requires swa");
  }
  if (a.action.swa && (!finite(*a.action.swa) || std::abs(*a.action.swa) > kMaxSwa)) {
    errors.push_back("swa must be finite with |swa| <= 540");
  }
}

std::vector<std::string> script_errors(std::span<const TimedAction> script)
{
  std::vector<std::string> errors;
  int take_overs = 0;
  for (std::size_t i = 0; i < script.size(); ++i) {
    validate_action(script[i], errors);
    if (i > 0 && !(script[i].t > script[i - 1].t)) {
      errors.push_back("action times must be strictly increasing");
    }
    if (script[i].action.kind == ActionKind::kTakeOver) {
      ++take_overs;
    }
  }
  if (take_overs > 1) {
    errors.push_back("at most one TAKE_OVER action is allowed");
  }
  return errors;
}

std::string join(const std::vector<std::string> & parts)
{
  std::string out;
  for (const auto & p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

double clamp_swa(double swa) { return std::clamp(swa, -kMaxSwa, kMaxSwa); }

}  // namespace

double Distribution::sample(std::uint64_t seed, std::uint64_t stream) const
{
  switch (family) {
    case Family::kFixed:
      return a;
    case Family::kUniform:
      return a + (b - a) * rng::uniform(seed, stream, 0);
    case Family::kLognormal:
      return std::exp(a + b * rng::standard_normal(seed, stream, 0));
  }
  return a;
}

double Distribution::support_min() const
{
  switch (family) {
    case Family::kFixed:
    case Family::kUniform:
      return a;
    case Family::kLognormal:
      return b == 0.0 ? std::exp(a) : 0.0;
  }
  return a;
}

std::string_view to_string(ActionKind kind)
{
  switch (kind) {
    case ActionKind::kNone: return "NONE";
    case ActionKind::kTakeOver: return "TAKE_OVER";
    case ActionKind::kSteer: return "STEER";
  }
  return "NONE";
}

std::optional<ActionKind> parse_action_kind(std::string_view text)
{
  if (text == "NONE") return ActionKind::kNone;
  if (text == "TAKE_OVER") return ActionKind::kTakeOver;
  if (text == "STEER") return ActionKind::kSteer;
  return std::nullopt;
}

std::string_view to_string(Variant variant)
{
  switch (variant) {
    case Variant::kNonResponder: return "NON_RESPONDER";
    case Variant::kParametric: return "PARAMETRIC";
    case Variant::kScripted: return "SCRIPTED";
  }
  return "NON_RESPONDER";
}

DriverSpec DriverSpec::parametric(Distribution delay, Distribution steer_scale, double steer_hold)
{
  DriverSpec spec;
  spec.variant = Variant::kParametric;
  spec.delay = delay;
  spec.steer_scale = steer_scale;
  spec.steer_hold = steer_hold;
  return spec;
}

DriverSpec DriverSpec::scripted(std::vector<TimedAction> script)
{
  DriverSpec spec;
  spec.variant = Variant::kScripted;
  spec.script = std::move(script);
  return spec;
}

void validate(const DriverSpec & spec)
{
  std::vector<std::string> errors;
  if (spec.variant == Variant::kParametric) {
    validate_distribution(spec.delay, "delay", errors);
    validate_distribution(spec.steer_scale, "steer_scale", errors);
    if (spec.delay.support_min() < 0.0) {
      errors.push_back("delay: support must be >= 0");
    }
    if (!(spec.steer_scale.support_min() > 0.0) && spec.steer_scale.family != Family::kLognormal) {
      errors.push_back("steer_scale: support must be > 0");
    }
    if (!finite(spec.steer_hold) || spec.steer_hold < 0.0) {
      errors.push_back("steer_hold must be finite and >= 0");
    }
  }
  if (spec.variant == Variant::kScripted) {
    auto e = script_errors(spec.script);
    errors.insert(errors.end(), e.begin(), e.end());
  }
  if (!errors.empty()) {
    throw Error(ErrorCode::kInvalidSpec, join(errors));
  }
}

DriverInstance::DriverInstance(DriverSpec spec, double delay, double steer_scale)
: spec_(std::move(spec)), delay_(delay), steer_scale_(steer_scale)
{
}

DriverAction DriverInstance::act(double t, std::optional<double> tor_time, double ideal)
{
  if (last_t_ && t < *last_t_) {
    throw Error(ErrorCode::kOrdering, "driver queried at t=" + std::to_string(t) + " after t=" +
                                        std::to_string(*last_t_));
  }
  last_t_ = t;
  switch (spec_.variant) {
    case Variant::kNonResponder:
      return DriverAction::none();
    case Variant::kParametric:
      return act_parametric(t, tor_time, ideal);
    case Variant::kScripted:
      return act_scripted(t);
  }
  return DriverAction::none();
}

DriverAction DriverInstance::act_parametric(double t, std::optional<double> tor_time, double ideal)
{
  if (!take_over_t_) {
    if (!tor_time || t < *tor_time + delay_ - kTimeEps) {
      return DriverAction::none();
    }
    take_over_t_ = t;
    return DriverAction::take_over(clamp_swa(steer_scale_ * ideal));
  }
  if (t < *take_over_t_ + spec_.steer_hold - kTimeEps) {
    return DriverAction::steer(clamp_swa(steer_scale_ * ideal));
  }
  return DriverAction::steer(clamp_swa(ideal));
}

DriverAction DriverInstance::act_scripted(double t)
{
  DriverAction out;
  while (cursor_ < spec_.script.size() && spec_.script[cursor_].t <= t + kTimeEps) {
    const auto & next = spec_.script[cursor_].action;
    if (next.kind == ActionKind::kTakeOver) {
      out.kind = ActionKind::kTakeOver;
    } else if (out.kind == ActionKind::kNone) {
      out.kind = ActionKind::kSteer;
    }
    if (next.swa) {
      out.swa = next.swa;
    }
    ++cursor_;
  }
  return out;
}

DriverInstance instantiate(const DriverSpec & spec, std::uint64_t seed)
{
  validate(spec);
  if (spec.variant != Variant::kParametric) {
    return DriverInstance(spec, 0.0, 1.0);
  }
  return DriverInstance(spec, spec.delay.sample(seed, kDelayStream), spec.steer_scale.sample(seed, kScaleStream));
}

DriverSpec scripted_from_session(std::span<const TimedAction> session_log)
{
  auto errors = script_errors(session_log);
  if (!errors.empty()) {
    throw Error(ErrorCode::kMalformedLog, join(errors));
  }
  return DriverSpec::scripted({session_log.begin(), session_log.end()});
}

void to_json(nlohmann::json & j, const Distribution & d)
{
  j = nlohmann::json{{"family", to_string(d.family)}};
  switch (d.family) {
    case Family::kFixed:
      j["value"] = d.a;
      break;
    case Family::kUniform:
      j["a"] = d.a;
      j["b"] = d.b;
      break;
    case Family::kLognormal:
      j["mu"] = d.a;
      j["sigma"] = d.b;
      break;
  }
}

void from_json(const nlohmann::json & j, Distribution & d)
{
  if (j.is_number()) {
    d = Distribution::fixed(j.get<double>());
    return;
  }
  const auto family = j.at("family").get<std::string>();
  if (family == "fixed") {
    d = Distribution::fixed(j.at("value").get<double>());
  } else if (family == "uniform") {
    d = Distribution::uniform(j.at("a").get<double>(), j.at("b").get<double>());
  } else if (family == "lognormal") {
    d = Distribution::lognormal(j.at("mu").get<double>(), j.at("sigma").get<double>());
  } else {
    throw Error(ErrorCode::kInvalidSpec, "unknown distribution family '" + family + "'");
  }
}

void to_json(nlohmann::json & j, const TimedAction & action)
{
  j = nlohmann::json{{"t", action.t}, {"kind", to_string(action.action.kind)}};
  if (action.action.swa) {
    j["swa"] = *action.action.swa;
  }
}

void from_json(const nlohmann::json & j, TimedAction & action)
{
  action.t = j.at("t").get<double>();
  const auto kind = parse_action_kind(j.at("kind").get<std::string>());
  if (!kind) {
    throw Error(ErrorCode::kMalformedLog, "unknown action kind " + j.at("kind").dump());
  }
  action.action.kind = *kind;
  action.action.swa.reset();
  if (j.contains("swa") && !j.at("swa").is_null()) {
    action.action.swa = j.at("swa").get<double>();
  }
}

void to_json(nlohmann::json & j, const DriverSpec & spec)
{
  j = nlohmann::json{{"variant", to_string(spec.variant)}};
  if (spec.variant == Variant::kParametric) {
    j["delay"] = spec.delay;
    j["steer_scale"] = spec.steer_scale;
    j["steer_hold"] = spec.steer_hold;
  } else if (spec.variant == Variant::kScripted) {
    j["script"] = spec.script;
  }
}

void from_json(const nlohmann::json & j, DriverSpec & spec)
{
  const auto variant = j.at("variant").get<std::string>();
  spec = DriverSpec{};
  if (variant == "NON_RESPONDER") {
    spec.variant = Variant::kNonResponder;
  } else if (variant == "PARAMETRIC") {
    spec.variant = Variant::kParametric;
    if (j.contains("delay")) spec.delay = j.at("delay").get<Distribution>();
    if (j.contains("steer_scale")) spec.steer_scale = j.at("steer_scale").get<Distribution>();
    if (j.contains("steer_hold")) spec.steer_hold = j.at("steer_hold").get<double>();
  } else if (variant == "SCRIPTED") {
    spec.variant = Variant::kScripted;
    if (j.contains("script")) spec.script = j.at("script").get<std::vector<TimedAction>>();
  } else {
    throw Error(ErrorCode::kInvalidSpec, "unknown driver variant '" + variant + "'");
  }
}

std::string write_session_log(std::span<const TimedAction> log)
{
  std::string out;
  for (const auto & a : log) {
    out += nlohmann::json(a).dump();
    out += '\n';
  }
  return out;
}

std::vector<TimedAction> parse_session_log(std::string_view text)
{
  std::vector<TimedAction> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<TimedAction>());
    } catch (const nlohmann::json::exception & e) {
      throw Error(ErrorCode::kMalformedLog, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace sotif::driver
