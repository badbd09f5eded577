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
#include <string_view>

#include <nlohmann/json.hpp>

#include "sotif/scenario.hpp"

// Test-case records, ground-truth misuse labels and the online detector.
namespace sotif::misuse
{

/// Take-over delay at or beyond which a take-over counts as delayed.
inline constexpr double kTakeOverThreshold = 1.77;

/// One row of the test-case series table.
struct TestCaseRecord
{
  int tc{0};
  int to{0};
  double to_t2{0.0};
  double delta_t2{0.0};
  int del_to{0};
  double swa{0.0};
  int h{0};
  double h_t3{0.0};
  double delta_t3{0.0};

  bool operator==(const TestCaseRecord &) const = default;
};

enum class SteerClass { kOk, kOversteer, kUndersteer };
enum class Controllability { kProvided, kNotProvided, kNotApplicable };

std::string_view to_string(SteerClass c);
std::string_view to_string(Controllability c);
std::optional<SteerClass> parse_steer_class(std::string_view text);
std::optional<Controllability> parse_controllability(std::string_view text);

struct MisuseLabels
{
  int del_to{0};
  SteerClass steer_class{SteerClass::kOk};
  int mj{0};  // misjudgment: over- or understeer
  int fr{0};  // false recognition: delayed or absent take-over
  int fm{0};
  Controllability controllability{Controllability::kNotApplicable};

  bool operator==(const MisuseLabels &) const = default;
};

struct DetectorOutput
{
  int fm_flagged{0};
  double measured_delay{0.0};
  double measured_swa_dev{0.0};

  bool operator==(const DetectorOutput &) const = default;
};

struct ClassifierConfig
{
  double takeover_threshold{kTakeOverThreshold};
  double rel_tol{0.10};
  double abs_floor{1.0};
  double swa_window{1.0};  // s after take-over

  bool operator==(const ClassifierConfig &) const = default;
};

struct DetectorConfig
{
  double sigma_t{0.05};
  double sigma_swa{0.5};

  bool operator==(const DetectorConfig &) const = default;
};

/// Driver steering in the window after take-over. The applied input is
/// judged against the ideal at the instant it was given.
struct SteeringObservation
{
  double take_over_t{0.0};
  double applied{0.0};      // signed driver command of largest magnitude in the window
  double swa_at_to{0.0};    // wheel angle at the take-over step
  double ideal_at_to{0.0};
  double ideal_at_peak{0.0};
};

/// Throws INCOMPLETE_TRACE when the trace lacks EPISODE_END.
TestCaseRecord derive_record(
  const scenario::EpisodeTrace & trace, double tor_time, int tc_index, const ClassifierConfig & config = {});

int classify_takeover(double delta_t2, double threshold = kTakeOverThreshold);

SteerClass classify_steering(double applied_swa, double ideal, double rel_tol = 0.10, double abs_floor = 1.0);

/// Tolerance band used by classify_steering.
double steering_band(double ideal, double rel_tol = 0.10, double abs_floor = 1.0);

/// Absent when no take-over occurred.
std::optional<SteeringObservation> observe_steering(
  const scenario::EpisodeTrace & trace, const scenario::SimConfig & config, double window = 1.0);

MisuseLabels label_misuse(const TestCaseRecord & record, SteerClass steer_class, bool to_occurred);

/// Noisy re-measurement of delay and steering deviation, thresholded like
/// the ground truth. `ideal` is the reference the applied input is judged
/// against. Noise draws are keyed by noise_seed only.
DetectorOutput detect_fm_online(
  const scenario::EpisodeTrace & trace, double tor_time, double ideal, std::uint64_t noise_seed,
  const DetectorConfig & detector = {}, const ClassifierConfig & classifier = {});

/// Full per-episode evaluation: record, steering class, labels and detector.
struct EpisodeAssessment
{
  TestCaseRecord record;
  MisuseLabels labels;
  DetectorOutput detector;
  std::optional<SteeringObservation> steering;
};

EpisodeAssessment assess(
  const scenario::EpisodeTrace & trace, const scenario::SimConfig & config, int tc_index,
  std::uint64_t detector_seed, const ClassifierConfig & classifier = {}, const DetectorConfig & detector = {});

void to_json(nlohmann::json & j, const TestCaseRecord & r);
void from_json(const nlohmann::json & j, TestCaseRecord & r);
void to_json(nlohmann::json & j, const MisuseLabels & l);
void from_json(const nlohmann::json & j, MisuseLabels & l);
void to_json(nlohmann::json & j, const DetectorOutput & d);
void from_json(const nlohmann::json & j, DetectorOutput & d);

}  // namespace sotif::misuse
