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

#include "sotif/testmanager.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

#include "sotif/config_io.hpp"
#include "sotif/error.hpp"
#include "sotif/format.hpp"

namespace sotif::testmgr
{
namespace
{

constexpr double kMatchEps = 1e-6;
constexpr const char * kCsvHeader = "TC,TO,TO_t2,delta_T2,DelTO,SWA,H,H_t3,delta_T3";

std::string qkey(int q) { return "Q" + std::to_string(q); }

std::string join(const std::vector<std::string> & parts, const char * sep = "; ")
{
  std::string out;
  for (const auto & p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

std::string at_time(std::string_view what, double t) { return std::string(what) + " at " + fixed(t, 2) + " s"; }

std::optional<Requirement> parse_requirement(std::string_view text)
{
  if (text == "YES") return Requirement::kYes;
  if (text == "NO") return Requirement::kNo;
  if (text == "any" || text == "ANY") return Requirement::kAny;
  return std::nullopt;
}

std::optional<int> parse_question(std::string_view key)
{
  if (key.size() < 2 || key[0] != 'Q') return std::nullopt;
  int q = 0;
  const auto [ptr, ec] = std::from_chars(key.data() + 1, key.data() + key.size(), q);
  if (ec != std::errc{} || ptr != key.data() + key.size() || q < 1 || q > kQuestions) return std::nullopt;
  return q;
}

std::optional<std::uint64_t> read_seed(const nlohmann::json & c, const char * key, const std::string & path,
                                       std::vector<std::string> & errors)
{
  if (!c.contains(key)) {
    errors.push_back(path + "." + key + ": required");
    return std::nullopt;
  }
  const auto & v = c.at(key);
  if (!v.is_number_unsigned()) {
    errors.push_back(path + "." + key + ": expected a non-negative integer");
    return std::nullopt;
  }
  return v.get<std::uint64_t>();
}

ChecklistResult failed_checklist()
{
  ChecklistResult c;
  c.answers.fill(Answer::kNotApplicable);
  c.evidence.fill("case failed");
  return c;
}

std::string checklist_code(const ChecklistResult & c)
{
  std::string out;
  for (auto a : c.answers) out += a == Answer::kYes ? 'Y' : a == Answer::kNo ? 'N' : '-';
  return out;
}

std::string criteria_text(const std::vector<Criterion> & criteria)
{
  if (criteria.empty()) return "none";
  std::vector<std::string> parts;
  for (const auto & c : criteria) parts.push_back(qkey(c.question) + " = " + std::string(to_string(c.required)));
  return join(parts, ", ");
}

double parse_double(std::string_view field, std::size_t line)
{
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
  }
  return v;
}

int parse_int(std::string_view field, std::size_t line)
{
  int v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": bad integer '" + std::string(field) + "'");
  }
  return v;
}

int parse_flag(std::string_view field, std::size_t line)
{
  const int v = parse_int(field, line);
  if (v != 0 && v != 1) {
    throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": flag must be 0 or 1");
  }
  return v;
}

}  // namespace

std::string_view to_string(Answer a)
{
  switch (a) {
    case Answer::kYes: return "YES";
    case Answer::kNo: return "NO";
    case Answer::kNotApplicable: return "N/A";
  }
  return "N/A";
}

std::optional<Answer> parse_answer(std::string_view text)
{
  if (text == "YES") return Answer::kYes;
  if (text == "NO") return Answer::kNo;
  if (text == "N/A") return Answer::kNotApplicable;
  return std::nullopt;
}

std::string_view to_string(Requirement r)
{
  switch (r) {
    case Requirement::kYes: return "YES";
    case Requirement::kNo: return "NO";
    case Requirement::kAny: return "any";
  }
  return "any";
}

bool satisfies(Answer answer, Requirement required)
{
  switch (required) {
    case Requirement::kAny: return true;
    case Requirement::kYes: return answer == Answer::kYes;
    case Requirement::kNo: return answer == Answer::kNo;
  }
  return false;
}

SeriesConfig parse_series(const std::string & text)
{
  const auto doc = config::parse_json(text, "series config");
  std::vector<std::string> errors;
  SeriesConfig series;
  if (!doc.is_object()) {
    throw Error(ErrorCode::kValidationError, "series config: expected an object");
  }
  static const std::set<std::string> known{"name", "defaults", "classifier", "detector", "pass_criteria", "cases"};
  for (const auto & [key, value] : doc.items()) {
    if (!known.contains(key)) errors.push_back(key + ": unknown field");
  }

  if (doc.contains("name") && doc["name"].is_string()) {
    series.name = doc["name"].get<std::string>();
  } else {
    errors.emplace_back("name: required string");
  }

  const auto base = config::to_json(scenario::SimConfig{});
  const auto defaults_json = config::merged(base, doc.value("defaults", nlohmann::json::object()));
  {
    std::vector<std::string> default_errors;
    series.defaults = config::read_sim_config(defaults_json, default_errors, "defaults");
    errors.insert(errors.end(), default_errors.begin(), default_errors.end());
  }
  if (doc.contains("classifier")) series.classifier = config::read_classifier(doc["classifier"], errors);
  if (doc.contains("detector")) series.detector = config::read_detector(doc["detector"], errors);

  if (doc.contains("pass_criteria")) {
    const auto & pc = doc["pass_criteria"];
    if (!pc.is_object()) {
      errors.emplace_back("pass_criteria: expected an object of question id to answer");
    } else {
      for (const auto & [key, value] : pc.items()) {
        const auto q = parse_question(key);
        const auto req = value.is_string() ? parse_requirement(value.get<std::string>()) : std::nullopt;
        if (!q) errors.push_back("pass_criteria." + key + ": question ids are Q1..Q10");
        if (!req) errors.push_back("pass_criteria." + key + ": required answer must be YES, NO or any");
        if (q && req) series.pass_criteria.push_back({*q, *req});
      }
      std::sort(series.pass_criteria.begin(), series.pass_criteria.end(),
                [](const Criterion & a, const Criterion & b) { return a.question < b.question; });
    }
  }

  const auto cases_it = doc.find("cases");
  if (cases_it == doc.end() || !cases_it->is_array() || cases_it->empty()) {
    errors.emplace_back("cases: required non-empty array");
  } else {
    std::set<int> seen;
    for (std::size_t i = 0; i < cases_it->size(); ++i) {
      const auto & c = (*cases_it)[i];
      const std::string path = "cases[" + std::to_string(i) + "]";
      if (!c.is_object()) {
        errors.push_back(path + ": expected an object");
        continue;
      }
      for (const auto & [key, value] : c.items()) {
        if (key != "tc" && key != "seed" && key != "detector_seed" && key != "driver" && key != "sim") {
          errors.push_back(path + "." + key + ": unknown field");
        }
      }
      TestCaseConfig tc;
      if (c.contains("tc") && c["tc"].is_number_integer()) {
        tc.tc = c["tc"].get<int>();
        if (!seen.insert(tc.tc).second) errors.push_back(path + ".tc: duplicate tc index " + std::to_string(tc.tc));
      } else {
        errors.push_back(path + ".tc: required integer");
      }
      const auto seed = read_seed(c, "seed", path, errors);
      const auto detector_seed = read_seed(c, "detector_seed", path, errors);
      tc.seed = seed.value_or(0);
      tc.detector_seed = detector_seed.value_or(0);
      if (!c.contains("driver")) {
        errors.push_back(path + ".driver: required");
      } else {
        try {
          tc.driver = c["driver"].get<driver::DriverSpec>();
          driver::validate(tc.driver);
        } catch (const Error & e) {
          errors.push_back(path + ".driver: " + e.what());
        } catch (const nlohmann::json::exception & e) {
          errors.push_back(path + ".driver: " + e.what());
        }
      }
      if (c.contains("sim")) {
        tc.sim = config::read_sim_config(config::merged(defaults_json, c["sim"]), errors, path + ".sim");
      } else {
        tc.sim = series.defaults;
      }
      series.cases.push_back(std::move(tc));
    }
  }

  if (!errors.empty()) {
    throw Error(ErrorCode::kValidationError, join(errors));
  }
  std::stable_sort(series.cases.begin(), series.cases.end(),
                   [](const TestCaseConfig & a, const TestCaseConfig & b) { return a.tc < b.tc; });
  return series;
}

SeriesConfig load_series(const std::string & path) { return parse_series(config::read_file(path)); }

ChecklistResult evaluate_checklist(
  const scenario::EpisodeTrace & trace, const misuse::TestCaseRecord & record, const misuse::MisuseLabels & labels,
  const scenario::SimConfig & config)
{
  using scenario::EventKind;
  const auto take_over = trace.first(EventKind::kTakeOver);
  const auto hazard = trace.first_hazard();
  if ((record.to == 1) != take_over.has_value() ||
      (take_over && std::abs(take_over->t - record.to_t2) > kMatchEps)) {
    throw Error(ErrorCode::kMismatchedInputs, "record take-over disagrees with the trace");
  }
  if ((record.h == 1) != hazard.has_value() || (hazard && std::abs(hazard->t - record.h_t3) > kMatchEps)) {
    throw Error(ErrorCode::kMismatchedInputs, "record hazard disagrees with the trace");
  }
  if (labels.del_to != record.del_to) {
    throw Error(ErrorCode::kMismatchedInputs, "labels and record disagree on DelTO");
  }
  if (trace.samples.empty()) {
    throw Error(ErrorCode::kMismatchedInputs, "trace has no samples");
  }

  ChecklistResult c;
  const auto set = [&c](int q, bool yes, std::string evidence) {
    c.answers[static_cast<std::size_t>(q - 1)] = yes ? Answer::kYes : Answer::kNo;
    c.evidence[static_cast<std::size_t>(q - 1)] = std::move(evidence);
  };
  const auto not_applicable = [&c](int q, std::string evidence) {
    c.answers[static_cast<std::size_t>(q - 1)] = Answer::kNotApplicable;
    c.evidence[static_cast<std::size_t>(q - 1)] = std::move(evidence);
  };
  const auto & tl = config.timeline;
  const double tol = config.dt + 1e-9;

  const auto & first = trace.samples.front();
  set(1, first.mode == scenario::AdsMode::kAutomated && !first.driver_swa,
      "mode at t=" + fixed(first.t, 2) + " s: " + std::string(scenario::to_string(first.mode)));

  const auto gap = trace.first(EventKind::kMarkingGap);
  const double lc_end = tl.lane_change_start + scenario::kLaneChangeDuration;
  if (gap) {
    set(2, gap->t >= tl.lane_change_start - 1e-9 && gap->t <= lc_end + 1e-9,
        at_time("MARKING_GAP", gap->t) + "; lane change " + fixed(tl.lane_change_start, 2) + "-" + fixed(lc_end, 2) +
          " s");
  } else {
    set(2, false, "no MARKING_GAP event");
  }

  const auto timed = [&](int q, EventKind kind, double expected) {
    const auto e = trace.first(kind);
    if (!e) {
      set(q, false, "no " + std::string(scenario::to_string(kind)) + " event");
      return;
    }
    set(q, std::abs(e->t - expected) <= tol,
        at_time(scenario::to_string(kind), e->t) + ", expected " + fixed(expected, 2) + " s");
  };
  timed(3, EventKind::kWarning, tl.warning_time);
  timed(4, EventKind::kTor, tl.tor_time);

  set(5, record.to == 1, take_over ? at_time("TAKE_OVER", take_over->t) : "no TAKE_OVER");

  if (record.to == 1) {
    not_applicable(6, "driver took over");
  } else if (const auto mrm = trace.first(EventKind::kMrmStart)) {
    set(6, true, at_time("MRM_START", mrm->t));
  } else {
    set(6, false, "no MRM_START");
  }

  if (record.to == 1) {
    set(7, record.del_to == 0, "delta_T2 = " + fixed(record.delta_t2, 2) + " s");
    set(8, labels.steer_class != misuse::SteerClass::kOk,
        "steer class " + std::string(misuse::to_string(labels.steer_class)) + ", SWA = " + fixed(record.swa, 2));
  } else {
    not_applicable(7, "no take-over");
    not_applicable(8, "no take-over");
  }

  set(9, record.h == 1, hazard ? at_time(scenario::to_string(hazard->kind), hazard->t) : "no hazard");

  if (labels.controllability == misuse::Controllability::kNotApplicable) {
    not_applicable(10, "no take-over");
  } else {
    set(10, labels.controllability == misuse::Controllability::kProvided,
        "controllability " + std::string(misuse::to_string(labels.controllability)));
  }
  return c;
}

VerdictResult series_verdict(const std::vector<ChecklistResult> & results, const std::vector<Criterion> & criteria)
{
  VerdictResult v;
  for (const auto & r : results) {
    const bool ok = std::all_of(criteria.begin(), criteria.end(),
                                [&r](const Criterion & c) { return satisfies(r.answer(c.question), c.required); });
    v.cases.push_back(ok);
    v.pass = v.pass && ok;
  }
  return v;
}

CaseResult run_case(const SeriesConfig & series, const TestCaseConfig & tc)
{
  CaseResult out;
  out.tc = tc.tc;
  try {
    const auto trace = scenario::run_episode(tc.sim, tc.driver, tc.seed);
    const auto resolved = scenario::resolve(tc.sim);
    const auto a = misuse::assess(trace, resolved, tc.tc, tc.detector_seed, series.classifier, series.detector);
    out.record = a.record;
    out.labels = a.labels;
    out.detector = a.detector;
    out.checklist = evaluate_checklist(trace, a.record, a.labels, resolved);
  } catch (const std::exception & e) {
    out = CaseResult{};
    out.tc = tc.tc;
    out.status = CaseStatus::kFailed;
    out.error = e.what();
    out.checklist = failed_checklist();
  }
  return out;
}

void finalize(TestReport & report)
{
  std::vector<ChecklistResult> checklists;
  for (const auto & c : report.cases) checklists.push_back(c.checklist);
  const auto verdict = series_verdict(checklists, report.criteria);
  Summary s;
  s.n_cases = report.cases.size();
  report.pass = true;
  for (std::size_t i = 0; i < report.cases.size(); ++i) {
    auto & c = report.cases[i];
    c.pass = c.status == CaseStatus::kCompleted && verdict.cases[i];
    report.pass = report.pass && c.pass;
    if (c.status == CaseStatus::kFailed) {
      ++s.n_failed;
      continue;
    }
    s.n_pass += c.pass;
    s.n_take_over += c.record.to == 1;
    s.n_delayed += c.record.del_to == 1;
    s.n_hazard += c.record.h == 1;
    s.n_mj += c.labels.mj == 1;
    s.n_fr += c.labels.fr == 1;
    s.n_fm += c.labels.fm == 1;
    s.n_flagged += c.detector.fm_flagged == 1;
    s.n_controllable += c.labels.controllability == misuse::Controllability::kProvided;
  }
  report.summary = s;
}

TestReport run_series(const SeriesConfig & series, unsigned jobs)
{
  TestReport report;
  report.name = series.name;
  report.criteria = series.pass_criteria;
  report.cases.resize(series.cases.size());

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < series.cases.size(); i = next++) {
      report.cases[i] = run_case(series, series.cases[i]);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(series.cases.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
  }
  std::stable_sort(report.cases.begin(), report.cases.end(),
                   [](const CaseResult & a, const CaseResult & b) { return a.tc < b.tc; });
  finalize(report);
  return report;
}

std::optional<Format> parse_format(std::string_view text)
{
  if (text == "csv") return Format::kCsv;
  if (text == "json") return Format::kJson;
  if (text == "md") return Format::kMarkdown;
  return std::nullopt;
}

std::string render_records_csv(const std::vector<misuse::TestCaseRecord> & records)
{
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto & r : records) {
    out += std::to_string(r.tc) + "," + std::to_string(r.to) + "," + fixed(r.to_t2, 4) + "," + fixed(r.delta_t2, 4) +
           "," + std::to_string(r.del_to) + "," + fixed(r.swa, 4) + "," + std::to_string(r.h) + "," +
           fixed(r.h_t3, 4) + "," + fixed(r.delta_t3, 4) + "\n";
  }
  return out;
}

std::vector<misuse::TestCaseRecord> parse_records_csv(std::string_view text)
{
  std::vector<misuse::TestCaseRecord> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCsvHeader) {
        throw Error(ErrorCode::kParseError, "records header must be " + std::string(kCsvHeader));
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        f.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (f.size() != 9) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": expected 9 fields");
    }
    misuse::TestCaseRecord r;
    r.tc = parse_int(f[0], line_no);
    r.to = parse_flag(f[1], line_no);
    r.to_t2 = parse_double(f[2], line_no);
    r.delta_t2 = parse_double(f[3], line_no);
    r.del_to = parse_flag(f[4], line_no);
    r.swa = parse_double(f[5], line_no);
    r.h = parse_flag(f[6], line_no);
    r.h_t3 = parse_double(f[7], line_no);
    r.delta_t3 = parse_double(f[8], line_no);
    out.push_back(r);
  }
  if (!header_seen) {
    throw Error(ErrorCode::kParseError, "records file is empty");
  }
  return out;
}

void to_json(nlohmann::json & j, const ChecklistResult & c)
{
  j = nlohmann::json{{"answers", nlohmann::json::object()}, {"evidence", nlohmann::json::object()}};
  for (int q = 1; q <= kQuestions; ++q) {
    j["answers"][qkey(q)] = to_string(c.answers[static_cast<std::size_t>(q - 1)]);
    j["evidence"][qkey(q)] = c.evidence[static_cast<std::size_t>(q - 1)];
  }
}

void from_json(const nlohmann::json & j, ChecklistResult & c)
{
  for (int q = 1; q <= kQuestions; ++q) {
    const auto a = parse_answer(j.at("answers").at(qkey(q)).get<std::string>());
    if (!a) throw Error(ErrorCode::kParseError, "checklist " + qkey(q) + ": bad answer");
    c.answers[static_cast<std::size_t>(q - 1)] = *a;
    c.evidence[static_cast<std::size_t>(q - 1)] = j.at("evidence").at(qkey(q)).get<std::string>();
  }
}

nlohmann::json case_json(const CaseResult & c)
{
  nlohmann::json j{{"TC", c.tc},
                   {"status", c.status == CaseStatus::kCompleted ? "COMPLETED" : "FAILED"},
                   {"verdict", c.pass ? "PASS" : "FAIL"}};
  if (c.status == CaseStatus::kFailed) j["error"] = c.error;
  j["record"] = c.record;
  j["labels"] = c.labels;
  j["detector"] = c.detector;
  j["checklist"] = c.checklist;
  return j;
}

std::string render_results_jsonl(const TestReport & report)
{
  std::string out;
  for (const auto & c : report.cases) out += case_json(c).dump() + "\n";
  return out;
}

namespace
{

nlohmann::json summary_json(const Summary & s)
{
  return nlohmann::json{{"n_cases", s.n_cases},     {"n_failed", s.n_failed},   {"n_pass", s.n_pass},
                        {"n_take_over", s.n_take_over}, {"n_delayed", s.n_delayed}, {"n_hazard", s.n_hazard},
                        {"n_mj", s.n_mj},           {"n_fr", s.n_fr},           {"n_fm", s.n_fm},
                        {"n_flagged", s.n_flagged}, {"n_controllable", s.n_controllable}};
}

Summary summary_from_json(const nlohmann::json & j)
{
  Summary s;
  s.n_cases = j.at("n_cases").get<std::size_t>();
  s.n_failed = j.at("n_failed").get<std::size_t>();
  s.n_pass = j.at("n_pass").get<std::size_t>();
  s.n_take_over = j.at("n_take_over").get<std::size_t>();
  s.n_delayed = j.at("n_delayed").get<std::size_t>();
  s.n_hazard = j.at("n_hazard").get<std::size_t>();
  s.n_mj = j.at("n_mj").get<std::size_t>();
  s.n_fr = j.at("n_fr").get<std::size_t>();
  s.n_fm = j.at("n_fm").get<std::size_t>();
  s.n_flagged = j.at("n_flagged").get<std::size_t>();
  s.n_controllable = j.at("n_controllable").get<std::size_t>();
  return s;
}

std::string render_markdown(const TestReport & r)
{
  const auto & s = r.summary;
  std::ostringstream md;
  md << "# Test report: " << r.name << "\n\n";
  md << "## Summary\n\n";
  md << "| cases | failed | passed | take-over | delayed | hazard | MJ | FR | FM | flagged | controllable |\n";
  md << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  md << "| " << s.n_cases << " | " << s.n_failed << " | " << s.n_pass << " | " << s.n_take_over << " | "
     << s.n_delayed << " | " << s.n_hazard << " | " << s.n_mj << " | " << s.n_fr << " | " << s.n_fm << " | "
     << s.n_flagged << " | " << s.n_controllable << " |\n\n";
  md << "## Verdict\n\n";
  md << "Series verdict: **" << (r.pass ? "PASS" : "FAIL") << "** (" << s.n_pass << "/" << s.n_cases
     << " cases passed; criteria: " << criteria_text(r.criteria) << ")\n\n";
  md << "## Records\n\n";
  md << "| TC | TO | TO_t2 | delta_T2 | DelTO | SWA | H | H_t3 | delta_T3 | steer | Q1-Q10 | verdict |\n";
  md << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto & c : r.cases) {
    if (c.status == CaseStatus::kFailed) {
      md << "| " << c.tc << " | FAILED | | | | | | | | | | FAIL: " << c.error << " |\n";
      continue;
    }
    const auto & x = c.record;
    md << "| " << x.tc << " | " << x.to << " | " << fixed(x.to_t2, 4) << " | " << fixed(x.delta_t2, 4) << " | "
       << x.del_to << " | " << fixed(x.swa, 4) << " | " << x.h << " | " << fixed(x.h_t3, 4) << " | "
       << fixed(x.delta_t3, 4) << " | " << misuse::to_string(c.labels.steer_class) << " | "
       << checklist_code(c.checklist) << " | " << (c.pass ? "PASS" : "FAIL") << " |\n";
  }
  md << "\nQ1-Q10: Y = YES, N = NO, - = N/A.\n";
  return md.str();
}

}  // namespace

std::string render_report(const TestReport & report, Format format)
{
  switch (format) {
    case Format::kCsv: {
      std::vector<misuse::TestCaseRecord> records;
      for (const auto & c : report.cases) {
        if (c.status == CaseStatus::kCompleted) records.push_back(c.record);
      }
      return render_records_csv(records);
    }
    case Format::kJson: {
      nlohmann::json j{{"name", report.name}, {"verdict", report.pass ? "PASS" : "FAIL"}};
      j["criteria"] = nlohmann::json::object();
      for (const auto & c : report.criteria) j["criteria"][qkey(c.question)] = to_string(c.required);
      j["summary"] = summary_json(report.summary);
      j["cases"] = nlohmann::json::array();
      for (const auto & c : report.cases) j["cases"].push_back(case_json(c));
      return j.dump(2) + "\n";
    }
    case Format::kMarkdown:
      return render_markdown(report);
  }
  return {};
}

TestReport report_from_json(const nlohmann::json & j)
{
  try {
    TestReport r;
    r.name = j.at("name").get<std::string>();
    r.pass = j.at("verdict").get<std::string>() == "PASS";
    for (const auto & [key, value] : j.at("criteria").items()) {
      const auto q = parse_question(key);
      const auto req = parse_requirement(value.get<std::string>());
      if (!q || !req) throw Error(ErrorCode::kParseError, "bad criterion " + key);
      r.criteria.push_back({*q, *req});
    }
    std::sort(r.criteria.begin(), r.criteria.end(),
              [](const Criterion & a, const Criterion & b) { return a.question < b.question; });
    r.summary = summary_from_json(j.at("summary"));
    for (const auto & cj : j.at("cases")) {
      CaseResult c;
      c.tc = cj.at("TC").get<int>();
      c.status = cj.at("status").get<std::string>() == "FAILED" ? CaseStatus::kFailed : CaseStatus::kCompleted;
      c.pass = cj.at("verdict").get<std::string>() == "PASS";
      if (c.status == CaseStatus::kFailed) c.error = cj.at("error").get<std::string>();
      c.record = cj.at("record").get<misuse::TestCaseRecord>();
      c.labels = cj.at("labels").get<misuse::MisuseLabels>();
      c.detector = cj.at("detector").get<misuse::DetectorOutput>();
      c.checklist = cj.at("checklist").get<ChecklistResult>();
      r.cases.push_back(std::move(c));
    }
    return r;
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::kParseError, std::string("report: ") + e.what());
  }
}

}  // namespace sotif::testmgr
