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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sotif/driver.hpp"
#include "sotif/misuse.hpp"
#include "sotif/scenario.hpp"

namespace sotif::testmgr
{

inline constexpr int kQuestions = 10;

enum class Answer { kYes, kNo, kNotApplicable };

std::string_view to_string(Answer a);
std::optional<Answer> parse_answer(std::string_view text);

/// Answers to the ten checklist questions, 1-based.
struct ChecklistResult
{
  std::array<Answer, kQuestions> answers{};
  std::array<std::string, kQuestions> evidence;

  Answer answer(int question) const { return answers.at(static_cast<std::size_t>(question - 1)); }

  bool operator==(const ChecklistResult &) const = default;
};

enum class Requirement { kYes, kNo, kAny };

std::string_view to_string(Requirement r);

struct Criterion
{
  int question{1};
  Requirement required{Requirement::kAny};

  bool operator==(const Criterion &) const = default;
};

/// An N/A answer satisfies only "any".
bool satisfies(Answer answer, Requirement required);

struct TestCaseConfig
{
  int tc{0};
  scenario::SimConfig sim;  // defaults with this case's overrides applied
  driver::DriverSpec driver;
  std::uint64_t seed{0};
  std::uint64_t detector_seed{0};
};

struct SeriesConfig
{
  std::string name;
  scenario::SimConfig defaults;
  misuse::ClassifierConfig classifier;
  misuse::DetectorConfig detector;
  std::vector<Criterion> pass_criteria;
  std::vector<TestCaseConfig> cases;
};

/// Parses a series document. Throws PARSE_ERROR for malformed JSON and
/// VALIDATION_ERROR listing every problem found.
SeriesConfig parse_series(const std::string & text);
SeriesConfig load_series(const std::string & path);

ChecklistResult evaluate_checklist(
  const scenario::EpisodeTrace & trace, const misuse::TestCaseRecord & record, const misuse::MisuseLabels & labels,
  const scenario::SimConfig & config);

struct VerdictResult
{
  bool pass{true};
  std::vector<bool> cases;
};

VerdictResult series_verdict(const std::vector<ChecklistResult> & results, const std::vector<Criterion> & criteria);

enum class CaseStatus { kCompleted, kFailed };

struct CaseResult
{
  int tc{0};
  CaseStatus status{CaseStatus::kCompleted};
  std::string error;  // set when FAILED
  misuse::TestCaseRecord record;
  misuse::MisuseLabels labels;
  misuse::DetectorOutput detector;
  ChecklistResult checklist;
  bool pass{false};

  bool operator==(const CaseResult &) const = default;
};

struct Summary
{
  std::size_t n_cases{0};
  std::size_t n_failed{0};
  std::size_t n_pass{0};
  std::size_t n_take_over{0};
  std::size_t n_delayed{0};
  std::size_t n_hazard{0};
  std::size_t n_mj{0};
  std::size_t n_fr{0};
  std::size_t n_fm{0};
  std::size_t n_flagged{0};
  std::size_t n_controllable{0};

  bool operator==(const Summary &) const = default;
};

struct TestReport
{
  std::string name;
  std::vector<Criterion> criteria;
  std::vector<CaseResult> cases;  // ordered by tc
  bool pass{false};
  Summary summary;

  bool operator==(const TestReport &) const = default;
};

/// Runs one case end to end. Never throws; errors become a FAILED result.
CaseResult run_case(const SeriesConfig & series, const TestCaseConfig & tc);

/// Runs every case on up to `jobs` worker threads. The report does not
/// depend on jobs.
TestReport run_series(const SeriesConfig & series, unsigned jobs = 1);

/// Recomputes verdicts and summary from the case results.
void finalize(TestReport & report);

enum class Format { kCsv, kJson, kMarkdown };

std::optional<Format> parse_format(std::string_view text);

std::string render_report(const TestReport & report, Format format);

TestReport report_from_json(const nlohmann::json & j);

/// Records CSV with the fixed column set; FAILED cases have no record and
/// are left out.
std::string render_records_csv(const std::vector<misuse::TestCaseRecord> & records);
std::vector<misuse::TestCaseRecord> parse_records_csv(std::string_view text);

/// One JSON object per case: TC, status, labels, detector, checklist.
std::string render_results_jsonl(const TestReport & report);
nlohmann::json case_json(const CaseResult & c);

void to_json(nlohmann::json & j, const ChecklistResult & c);
void from_json(const nlohmann::json & j, ChecklistResult & c);

}  // namespace sotif::testmgr
