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

#include "sotif/misuse.hpp"

#include <algorithm>
#include <cmath>

#include "sotif/error.hpp"
#include "sotif/rng.hpp"

namespace sotif::misuse
{
namespace
{

constexpr double kTimeEps = 1e-9;
constexpr std::uint64_t kDelayNoiseStream = 11;
constexpr std::uint64_t kSwaNoiseStream = 12;

void require_complete(const scenario::EpisodeTrace & trace)
{
  if (!trace.complete() || trace.samples.empty()) {
    throw Error(ErrorCode::kIncompleteTrace, "trace has no EPISODE_END event");
  }
}

// Signed deviation measured in the ideal's steering direction.
SteerClass classify_deviation(double deviation, double ideal, double rel_tol, double abs_floor)
{
  const double band = steering_band(ideal, rel_tol, abs_floor);
  // An ideal inside the absolute floor has no meaningful direction; the
  // plain signed comparison applies then.
  const bool reversed = ideal < 0.0 && std::abs(ideal) >= abs_floor;
  const double along = reversed ? -deviation : deviation;
  if (along > band) return SteerClass::kOversteer;
  if (along < -band) return SteerClass::kUndersteer;
  return SteerClass::kOk;
}

// Driver steering in [t_to, t_to + window): the wheel angle at the
// take-over step and the signed command of largest magnitude.
struct WindowPeak
{
  const scenario::Sample * at_to{nullptr};
  const scenario::Sample * at_peak{nullptr};
  std::optional<double> applied;
};

WindowPeak scan_window(const scenario::EpisodeTrace & trace, double t_to, double window)
{
  WindowPeak peak;
  double largest = -1.0;
  for (const auto & s : trace.samples) {
    if (s.t < t_to - kTimeEps) continue;
    if (s.t >= t_to + window - kTimeEps) break;
    if (!peak.at_to) peak.at_to = &s;
    if (s.driver_swa && std::abs(*s.driver_swa) > largest) {
      largest = std::abs(*s.driver_swa);
      peak.applied = *s.driver_swa;
      peak.at_peak = &s;
    }
  }
  if (!peak.at_peak) peak.at_peak = peak.at_to;
  if (!peak.at_to) {
    throw Error(ErrorCode::kIncompleteTrace, "no sample at the take-over instant");
  }
  return peak;
}

}  // namespace

std::string_view to_string(SteerClass c)
{
  switch (c) {
    case SteerClass::kOk: return "OK";
    case SteerClass::kOversteer: return "OVERSTEER";
    case SteerClass::kUndersteer: return "UNDERSTEER";
  }
  return "OK";
}

std::string_view to_string(Controllability c)
{
  switch (c) {
    case Controllability::kProvided: return "PROVIDED";
    case Controllability::kNotProvided: return "NOT_PROVIDED";
    case Controllability::kNotApplicable: return "NOT_APPLICABLE";
  }
  return "NOT_APPLICABLE";
}

std::optional<SteerClass> parse_steer_class(std::string_view text)
{
  for (auto c : {SteerClass::kOk, SteerClass::kOversteer, SteerClass::kUndersteer}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::optional<Controllability> parse_controllability(std::string_view text)
{
  for (auto c : {Controllability::kProvided, Controllability::kNotProvided, Controllability::kNotApplicable}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::optional<SteeringObservation> observe_steering(
  const scenario::EpisodeTrace & trace, const scenario::SimConfig & config, double window)
{
  const auto take_over = trace.first(scenario::EventKind::kTakeOver);
  if (!take_over) return std::nullopt;

  const auto peak = scan_window(trace, take_over->t, window);
  SteeringObservation obs;
  obs.take_over_t = take_over->t;
  obs.swa_at_to = peak.at_to->state.swa;
  obs.ideal_at_to = scenario::ideal_swa(peak.at_to->state, config.road, config);
  obs.ideal_at_peak = scenario::ideal_swa(peak.at_peak->state, config.road, config);
  obs.applied = peak.applied.value_or(obs.swa_at_to);
  return obs;
}

TestCaseRecord derive_record(
  const scenario::EpisodeTrace & trace, double tor_time, int tc_index, const ClassifierConfig & config)
{
  require_complete(trace);
  TestCaseRecord r;
  r.tc = tc_index;
  if (const auto take_over = trace.first(scenario::EventKind::kTakeOver)) {
    r.to = 1;
    r.to_t2 = take_over->t;
    r.delta_t2 = r.to_t2 - tor_time;
    r.del_to = classify_takeover(r.delta_t2, config.takeover_threshold);
    const auto peak = scan_window(trace, r.to_t2, config.swa_window);
    r.swa = peak.applied ? std::abs(*peak.applied - peak.at_to->state.swa) : 0.0;
  }
  if (const auto hazard = trace.first_hazard()) {
    r.h = 1;
    r.h_t3 = hazard->t;
    if (r.to == 1) r.delta_t3 = r.h_t3 - r.to_t2;
  }
  return r;
}

int classify_takeover(double delta_t2, double threshold) { return delta_t2 >= threshold - kTimeEps ? 1 : 0; }

double steering_band(double ideal, double rel_tol, double abs_floor)
{
  return std::max(rel_tol * std::abs(ideal), abs_floor);
}

SteerClass classify_steering(double applied_swa, double ideal, double rel_tol, double abs_floor)
{
  return classify_deviation(applied_swa - ideal, ideal, rel_tol, abs_floor);
}

MisuseLabels label_misuse(const TestCaseRecord & record, SteerClass steer_class, bool to_occurred)
{
  MisuseLabels l;
  l.del_to = to_occurred ? record.del_to : 0;
  l.steer_class = to_occurred ? steer_class : SteerClass::kOk;
  l.mj = l.steer_class != SteerClass::kOk ? 1 : 0;
  l.fr = (l.del_to == 1 || !to_occurred) ? 1 : 0;
  l.fm = (l.mj == 1 || l.fr == 1) ? 1 : 0;
  if (!to_occurred) {
    l.controllability = Controllability::kNotApplicable;
  } else {
    l.controllability = record.h == 0 ? Controllability::kProvided : Controllability::kNotProvided;
  }
  return l;
}

DetectorOutput detect_fm_online(
  const scenario::EpisodeTrace & trace, double tor_time, double ideal, std::uint64_t noise_seed,
  const DetectorConfig & detector, const ClassifierConfig & classifier)
{
  require_complete(trace);
  DetectorOutput out;
  const auto take_over = trace.first(scenario::EventKind::kTakeOver);
  if (!take_over) {
    // never taken over: always flagged, delay reported as the episode length
    out.fm_flagged = 1;
    out.measured_delay = trace.samples.back().t;
    return out;
  }
  const double true_delay = take_over->t - tor_time;

  const auto peak = scan_window(trace, take_over->t, classifier.swa_window);
  const double applied = peak.applied.value_or(peak.at_to->state.swa);
  const double true_dev = applied - ideal;

  out.measured_delay = true_delay + detector.sigma_t * rng::standard_normal(noise_seed, kDelayNoiseStream, 0);
  out.measured_swa_dev = true_dev + detector.sigma_swa * rng::standard_normal(noise_seed, kSwaNoiseStream, 0);
  const bool delayed = classify_takeover(out.measured_delay, classifier.takeover_threshold) == 1;
  const bool misjudged = classify_deviation(out.measured_swa_dev, ideal, classifier.rel_tol,
                                            classifier.abs_floor) != SteerClass::kOk;
  out.fm_flagged = (delayed || misjudged) ? 1 : 0;
  return out;
}

EpisodeAssessment assess(
  const scenario::EpisodeTrace & trace, const scenario::SimConfig & config, int tc_index,
  std::uint64_t detector_seed, const ClassifierConfig & classifier, const DetectorConfig & detector)
{
  EpisodeAssessment a;
  const double tor_time = config.timeline.tor_time;
  a.record = derive_record(trace, tor_time, tc_index, classifier);
  a.steering = observe_steering(trace, config, classifier.swa_window);
  const auto steer_class = a.steering ? classify_steering(a.steering->applied, a.steering->ideal_at_peak,
                                                          classifier.rel_tol, classifier.abs_floor)
                                      : SteerClass::kOk;
  a.labels = label_misuse(a.record, steer_class, a.record.to == 1);
  a.detector = detect_fm_online(trace, tor_time, a.steering ? a.steering->ideal_at_peak : 0.0, detector_seed,
                                detector, classifier);
  return a;
}

void to_json(nlohmann::json & j, const TestCaseRecord & r)
{
  j = nlohmann::json{{"TC", r.tc},         {"TO", r.to}, {"TO_t2", r.to_t2}, {"delta_T2", r.delta_t2},
                     {"DelTO", r.del_to}, {"SWA", r.swa}, {"H", r.h},       {"H_t3", r.h_t3},
                     {"delta_T3", r.delta_t3}};
}

void from_json(const nlohmann::json & j, TestCaseRecord & r)
{
  r.tc = j.at("TC").get<int>();
  r.to = j.at("TO").get<int>();
  r.to_t2 = j.at("TO_t2").get<double>();
  r.delta_t2 = j.at("delta_T2").get<double>();
  r.del_to = j.at("DelTO").get<int>();
  r.swa = j.at("SWA").get<double>();
  r.h = j.at("H").get<int>();
  r.h_t3 = j.at("H_t3").get<double>();
  r.delta_t3 = j.at("delta_T3").get<double>();
}

void to_json(nlohmann::json & j, const MisuseLabels & l)
{
  j = nlohmann::json{{"del_to", l.del_to},
                     {"steer_class", to_string(l.steer_class)},
                     {"mj", l.mj},
                     {"fr", l.fr},
                     {"fm", l.fm},
                     {"controllability", to_string(l.controllability)}};
}

void from_json(const nlohmann::json & j, MisuseLabels & l)
{
  l.del_to = j.at("del_to").get<int>();
  const auto steer = parse_steer_class(j.at("steer_class").get<std::string>());
  const auto ctrl = parse_controllability(j.at("controllability").get<std::string>());
  if (!steer || !ctrl) {
    throw Error(ErrorCode::kParseError, "unknown steer_class or controllability value");
  }
  l.steer_class = *steer;
  l.controllability = *ctrl;
  l.mj = j.at("mj").get<int>();
  l.fr = j.at("fr").get<int>();
  l.fm = j.at("fm").get<int>();
}

void to_json(nlohmann::json & j, const DetectorOutput & d)
{
  j = nlohmann::json{
    {"fm_flagged", d.fm_flagged}, {"measured_delay", d.measured_delay}, {"measured_swa_dev", d.measured_swa_dev}};
}

void from_json(const nlohmann::json & j, DetectorOutput & d)
{
  d.fm_flagged = j.at("fm_flagged").get<int>();
  d.measured_delay = j.at("measured_delay").get<double>();
  d.measured_swa_dev = j.at("measured_swa_dev").get<double>();
}

}  // namespace sotif::misuse
