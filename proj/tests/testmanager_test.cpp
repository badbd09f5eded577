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

#include <gtest/gtest.h>

#include <string>

#include "sotif/config_io.hpp"
#include "sotif/error.hpp"
#include "sotif/testmanager.hpp"

namespace tmg = sotif::testmgr;
namespace sc = sotif::scenario;
namespace ms = sotif::misuse;
namespace drv = sotif::driver;
using sotif::Error;
using sotif::ErrorCode;

namespace
{

std::pair<ErrorCode, std::string> error_of(auto && fn)
{
  try {
    fn();
  } catch (const Error & e) {
    return {e.code(), e.what()};
  }
  ADD_FAILURE() << "no error thrown";
  return {ErrorCode::kParseError, ""};
}

const std::string kMinimal = R"({
  "name": "minimal",
  "cases": [{"tc": 1, "seed": 7, "detector_seed": 8, "driver": {"variant": "NON_RESPONDER"}}]
})";

tmg::SeriesConfig takeover_series() { return tmg::load_series(std::string(SOTIF_SOURCE_DIR) + "/configs/takeover_series.json"); }

struct Episode
{
  sc::EpisodeTrace trace;
  ms::EpisodeAssessment a;
};

Episode simulate(const drv::DriverSpec & spec)
{
  const auto cfg = sc::resolve({});
  Episode e;
  e.trace = sc::run_episode(cfg, spec, 0);
  e.a = ms::assess(e.trace, cfg, 1, 0);
  return e;
}

tmg::ChecklistResult checklist_for(const drv::DriverSpec & spec)
{
  const auto e = simulate(spec);
  return tmg::evaluate_checklist(e.trace, e.a.record, e.a.labels, sc::resolve({}));
}

tmg::ChecklistResult with_answer(int q, tmg::Answer a)
{
  tmg::ChecklistResult c;
  c.answers.fill(tmg::Answer::kYes);
  c.answers[static_cast<std::size_t>(q - 1)] = a;
  return c;
}

}  // namespace

TEST(LoadSeries, MinimalAppliesDefaults)
{
  const auto s = tmg::parse_series(kMinimal);
  EXPECT_EQ(s.name, "minimal");
  ASSERT_EQ(s.cases.size(), 1u);
  EXPECT_EQ(s.cases[0].sim, sc::SimConfig{});
  EXPECT_EQ(s.cases[0].seed, 7u);
  EXPECT_EQ(s.cases[0].detector_seed, 8u);
  EXPECT_TRUE(s.pass_criteria.empty());
  EXPECT_EQ(s.classifier, ms::ClassifierConfig{});
}

TEST(LoadSeries, OverridesMergeOverDefaults)
{
  const auto s = tmg::parse_series(R"({
    "name": "o", "defaults": {"dt": 0.005, "timeline": {"tor_time": 8.5}},
    "cases": [
      {"tc": 2, "seed": 1, "detector_seed": 1, "driver": {"variant": "NON_RESPONDER"},
       "sim": {"initial_state": {"speed": 20.0}}},
      {"tc": 1, "seed": 1, "detector_seed": 1, "driver": {"variant": "NON_RESPONDER"}}]})");
  ASSERT_EQ(s.cases.size(), 2u);
  EXPECT_EQ(s.cases[0].tc, 1);
  EXPECT_DOUBLE_EQ(s.cases[1].sim.dt, 0.005);
  EXPECT_DOUBLE_EQ(s.cases[1].sim.timeline.tor_time, 8.5);
  EXPECT_DOUBLE_EQ(s.cases[1].sim.timeline.warning_time, 6.04);
  EXPECT_DOUBLE_EQ(s.cases[1].sim.initial_state.speed, 20.0);
  EXPECT_DOUBLE_EQ(s.cases[0].sim.initial_state.speed, 27.78);
}

TEST(LoadSeries, DuplicateTcIndex)
{
  const auto [code, msg] = error_of([] {
    tmg::parse_series(R"({"name": "d", "cases": [
      {"tc": 1, "seed": 1, "detector_seed": 1, "driver": {"variant": "NON_RESPONDER"}},
      {"tc": 1, "seed": 2, "detector_seed": 2, "driver": {"variant": "NON_RESPONDER"}}]})");
  });
  EXPECT_EQ(code, ErrorCode::kValidationError);
  EXPECT_NE(msg.find("duplicate"), std::string::npos);
}

TEST(LoadSeries, TimelineOrderingNamed)
{
  const auto [code, msg] = error_of([] {
    tmg::parse_series(R"({"name": "t", "cases": [
      {"tc": 1, "seed": 1, "detector_seed": 1, "driver": {"variant": "NON_RESPONDER"},
       "sim": {"timeline": {"warning_time": 9.0}}}]})");
  });
  EXPECT_EQ(code, ErrorCode::kValidationError);
  EXPECT_NE(msg.find("cases[0].sim.timeline"), std::string::npos);
  EXPECT_NE(msg.find("warning_time < tor_time"), std::string::npos);
}

TEST(LoadSeries, ErrorsAreAggregated)
{
  const auto [code, msg] = error_of([] {
    tmg::parse_series(R"({"name": "a", "colour": "red", "pass_criteria": {"Q11": "YES", "Q2": "maybe"},
      "cases": [{"tc": 1, "detector_seed": 1, "driver": {"variant": "PARAMETRIC", "delay": -1.0}},
                {"tc": 2, "seed": -3, "detector_seed": 1}]})");
  });
  EXPECT_EQ(code, ErrorCode::kValidationError);
  for (const char * needle : {"colour: unknown field", "Q11", "Q2", "cases[0].seed: required", "cases[0].driver",
                              "cases[1].seed", "cases[1].driver: required"}) {
    EXPECT_NE(msg.find(needle), std::string::npos) << needle << " in " << msg;
  }
}

TEST(LoadSeries, EmptyCasesAndBadJson)
{
  EXPECT_EQ(error_of([] { tmg::parse_series(R"({"name": "e", "cases": []})"); }).first, ErrorCode::kValidationError);
  EXPECT_EQ(error_of([] { tmg::parse_series("{\"name\": "); }).first, ErrorCode::kParseError);
  EXPECT_EQ(error_of([] { tmg::load_series("/nonexistent/series.json"); }).first, ErrorCode::kParseError);
}

TEST(Checklist, NonResponder)
{
  const auto c = checklist_for(drv::DriverSpec::non_responder());
  EXPECT_EQ(c.answer(1), tmg::Answer::kYes);
  EXPECT_EQ(c.answer(2), tmg::Answer::kYes);
  EXPECT_EQ(c.answer(3), tmg::Answer::kYes);
  EXPECT_EQ(c.answer(4), tmg::Answer::kYes);
  EXPECT_EQ(c.answer(5), tmg::Answer::kNo);
  EXPECT_EQ(c.answer(6), tmg::Answer::kYes);
  EXPECT_EQ(c.answer(7), tmg::Answer::kNotApplicable);
  EXPECT_EQ(c.answer(8), tmg::Answer::kNotApplicable);
  EXPECT_EQ(c.answer(9), tmg::Answer::kNo);
  EXPECT_EQ(c.answer(10), tmg::Answer::kNotApplicable);
  EXPECT_NE(c.evidence[5].find("MRM_START at 12.96 s"), std::string::npos);
}

TEST(Checklist, DelayedTakeOverWithoutHazard)
{
  const auto c = checklist_for(drv::DriverSpec::parametric(drv::Distribution::fixed(2.27), drv::Distribution::fixed(1.0)));
  EXPECT_EQ(c.answer(5), tmg::Answer::kYes);
  EXPECT_EQ(c.answer(6), tmg::Answer::kNotApplicable);
  EXPECT_EQ(c.answer(7), tmg::Answer::kNo);
  EXPECT_EQ(c.answer(9), tmg::Answer::kNo);
  EXPECT_EQ(c.answer(10), tmg::Answer::kYes);
}

TEST(Checklist, TimelyOversteerWithHazard)
{
  const auto c = checklist_for(drv::DriverSpec::scripted(
    {{9.12, drv::DriverAction::take_over(32.1657)}, {10.12, drv::DriverAction::steer(0.0)}}));
  EXPECT_EQ(c.answer(7), tmg::Answer::kYes);
  EXPECT_EQ(c.answer(8), tmg::Answer::kYes);
  EXPECT_EQ(c.answer(9), tmg::Answer::kYes);
  EXPECT_EQ(c.answer(10), tmg::Answer::kNo);
}

TEST(Checklist, MismatchedInputs)
{
  const auto e = simulate(drv::DriverSpec::parametric(drv::Distribution::fixed(1.0), drv::Distribution::fixed(1.0)));
  auto record = e.a.record;
  record.to_t2 += 0.5;
  EXPECT_EQ(error_of([&] { tmg::evaluate_checklist(e.trace, record, e.a.labels, sc::resolve({})); }).first,
            ErrorCode::kMismatchedInputs);
  record = e.a.record;
  record.h = 1;
  EXPECT_EQ(error_of([&] { tmg::evaluate_checklist(e.trace, record, e.a.labels, sc::resolve({})); }).first,
            ErrorCode::kMismatchedInputs);
}

TEST(Checklist, AlwaysTenDefinedAnswers)
{
  const auto spec =
    drv::DriverSpec::parametric(drv::Distribution::lognormal(0.6, 0.35), drv::Distribution::uniform(0.2, 3.0));
  const auto cfg = sc::resolve({});
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto trace = sc::run_episode(cfg, spec, seed);
    const auto a = ms::assess(trace, cfg, 1, seed);
    const auto c = tmg::evaluate_checklist(trace, a.record, a.labels, cfg);
    for (int q = 1; q <= tmg::kQuestions; ++q) {
      EXPECT_FALSE(c.evidence[static_cast<std::size_t>(q - 1)].empty()) << q;
    }
    // a driver who took over makes Q6 N/A, and Q7/Q8/Q10 applicable
    EXPECT_EQ(c.answer(6), tmg::Answer::kNotApplicable);
    EXPECT_NE(c.answer(7), tmg::Answer::kNotApplicable);
    EXPECT_NE(c.answer(10), tmg::Answer::kNotApplicable);
  }
}

TEST(Verdict, EmptyCriteriaPassEverything)
{
  const auto v = tmg::series_verdict({with_answer(9, tmg::Answer::kYes), with_answer(9, tmg::Answer::kNo)}, {});
  EXPECT_TRUE(v.pass);
  EXPECT_EQ(v.cases, (std::vector<bool>{true, true}));
}

TEST(Verdict, HazardCaseFails)
{
  const auto v = tmg::series_verdict(
    {with_answer(9, tmg::Answer::kNo), with_answer(9, tmg::Answer::kYes), with_answer(9, tmg::Answer::kNo)},
    {{9, tmg::Requirement::kNo}});
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.cases, (std::vector<bool>{true, false, true}));
}

TEST(Verdict, NotApplicableMatchesOnlyAny)
{
  const auto na = with_answer(10, tmg::Answer::kNotApplicable);
  EXPECT_FALSE(tmg::series_verdict({na}, {{10, tmg::Requirement::kYes}}).pass);
  EXPECT_FALSE(tmg::series_verdict({na}, {{10, tmg::Requirement::kNo}}).pass);
  EXPECT_TRUE(tmg::series_verdict({na}, {{10, tmg::Requirement::kAny}}).pass);
}

TEST(Verdict, ControllabilitySplit)
{
  std::vector<tmg::ChecklistResult> results;
  for (int i = 0; i < 50; ++i) results.push_back(with_answer(10, i < 22 ? tmg::Answer::kYes : tmg::Answer::kNo));
  const auto v = tmg::series_verdict(results, {{10, tmg::Requirement::kYes}});
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(std::count(v.cases.begin(), v.cases.end(), true), 22);
  EXPECT_EQ(std::count(v.cases.begin(), v.cases.end(), false), 28);
}

TEST(RunSeries, TakeOverColumnsMatchReferenceRows)
{
  const auto report = tmg::run_series(takeover_series(), 2);
  ASSERT_EQ(report.cases.size(), 5u);
  const double to_t2[] = {10.23, 10.73, 11.08, 9.12, 11.35};
  const double delta[] = {2.27, 2.77, 3.12, 1.16, 3.39};
  const int del_to[] = {1, 1, 1, 0, 1};
  const int h[] = {0, 0, 1, 1, 1};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto & r = report.cases[i].record;
    EXPECT_EQ(r.tc, static_cast<int>(i + 1));
    EXPECT_NEAR(r.to_t2, to_t2[i], 0.005);
    EXPECT_NEAR(r.delta_t2, delta[i], 0.005);
    EXPECT_EQ(r.del_to, del_to[i]);
    EXPECT_EQ(r.h, h[i]);
  }
  EXPECT_TRUE(report.pass);
}

TEST(RunSeries, FailedCaseIsIsolated)
{
  auto s = takeover_series();
  s.cases[2].driver = drv::DriverSpec::scripted({{9.0, drv::DriverAction::take_over(540.0)}});
  const auto report = tmg::run_series(s, 3);
  ASSERT_EQ(report.cases.size(), 5u);
  EXPECT_EQ(report.cases[2].status, tmg::CaseStatus::kFailed);
  EXPECT_NE(report.cases[2].error.find("EPISODE_INVALID"), std::string::npos);
  EXPECT_FALSE(report.cases[2].pass);
  EXPECT_FALSE(report.pass);
  EXPECT_EQ(report.summary.n_failed, 1u);
  for (std::size_t i : {0u, 1u, 3u, 4u}) EXPECT_EQ(report.cases[i].status, tmg::CaseStatus::kCompleted);
  // the records file leaves the failed case out
  const auto csv = tmg::render_report(report, tmg::Format::kCsv);
  EXPECT_EQ(tmg::parse_records_csv(csv).size(), 4u);
}

TEST(RunSeries, IndependentOfJobsAndRepeatable)
{
  const auto s = takeover_series();
  const auto a = tmg::render_report(tmg::run_series(s, 1), tmg::Format::kJson);
  const auto b = tmg::render_report(tmg::run_series(s, 8), tmg::Format::kJson);
  const auto c = tmg::render_report(tmg::run_series(s, 1), tmg::Format::kJson);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Render, CsvLayout)
{
  const auto csv = tmg::render_report(tmg::run_series(takeover_series()), tmg::Format::kCsv);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "TC,TO,TO_t2,delta_T2,DelTO,SWA,H,H_t3,delta_T3");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_NE(csv.find("\n1,1,10.2300,2.2700,1,"), std::string::npos);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST(Render, CsvRoundTripIsByteStable)
{
  const auto csv = tmg::render_report(tmg::run_series(takeover_series()), tmg::Format::kCsv);
  EXPECT_EQ(tmg::render_records_csv(tmg::parse_records_csv(csv)), csv);
  const std::vector<ms::TestCaseRecord> odd{{7, 0, 0.0, 0.0, 0, 0.0, 1, 12.34567, 0.0},
                                            {8, 1, 9.99999, 2.0399, 1, 0.00004, 0, 0.0, 0.0}};
  const auto once = tmg::render_records_csv(odd);
  EXPECT_EQ(tmg::render_records_csv(tmg::parse_records_csv(once)), once);
}

TEST(Render, CsvParseErrors)
{
  EXPECT_EQ(error_of([] { tmg::parse_records_csv("TC,TO\n1,1\n"); }).first, ErrorCode::kParseError);
  EXPECT_EQ(error_of([] { tmg::parse_records_csv(""); }).first, ErrorCode::kParseError);
  EXPECT_EQ(
    error_of([] { tmg::parse_records_csv("TC,TO,TO_t2,delta_T2,DelTO,SWA,H,H_t3,delta_T3\n1,2,0,0,0,0,0,0,0\n"); })
      .first,
    ErrorCode::kParseError);
  EXPECT_EQ(
    error_of([] { tmg::parse_records_csv("TC,TO,TO_t2,delta_T2,DelTO,SWA,H,H_t3,delta_T3\n1,1,x,0,0,0,0,0,0\n"); })
      .first,
    ErrorCode::kParseError);
}

TEST(Render, JsonRoundTrip)
{
  auto s = takeover_series();
  s.cases[1].driver = drv::DriverSpec::scripted({{9.0, drv::DriverAction::take_over(540.0)}});
  const auto report = tmg::run_series(s);
  const auto text = tmg::render_report(report, tmg::Format::kJson);
  const auto back = tmg::report_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back, report);
  EXPECT_EQ(tmg::render_report(back, tmg::Format::kJson), text);

  tmg::TestReport empty;
  empty.name = "empty";
  EXPECT_EQ(tmg::report_from_json(nlohmann::json::parse(tmg::render_report(empty, tmg::Format::kJson))), empty);
}

TEST(Render, MarkdownSections)
{
  const auto md = tmg::render_report(tmg::run_series(takeover_series()), tmg::Format::kMarkdown);
  const auto summary = md.find("## Summary");
  const auto verdict = md.find("## Verdict");
  const auto table = md.find("## Records");
  ASSERT_NE(summary, std::string::npos);
  EXPECT_LT(summary, verdict);
  EXPECT_LT(verdict, table);
  EXPECT_NE(md.find("Series verdict: **PASS**"), std::string::npos);
  for (int tc = 1; tc <= 5; ++tc) EXPECT_NE(md.find("\n| " + std::to_string(tc) + " | 1 |"), std::string::npos);
}

TEST(SimConfigJson, RoundTripAndStrictness)
{
  sc::SimConfig c;
  c.dt = 0.02;
  c.road.marking_gap_start = 100.0;
  c.road.marking_gap_end = 900.0;
  std::vector<std::string> errors;
  EXPECT_EQ(sotif::config::read_sim_config(sotif::config::to_json(c), errors), c);
  EXPECT_TRUE(errors.empty());
  EXPECT_EQ(sotif::config::load_sim_config("{}"), sc::SimConfig{});
  const auto [code, msg] = error_of([] { sotif::config::load_sim_config(R"({"dt": "fast", "speed": 3})"); });
  EXPECT_EQ(code, ErrorCode::kValidationError);
  EXPECT_NE(msg.find("dt: expected a number"), std::string::npos);
  EXPECT_NE(msg.find("speed: unknown field"), std::string::npos);
}
