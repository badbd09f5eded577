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

#include "sotif/session.hpp"

#include <cmath>
#include <fstream>

#include "sotif/config_io.hpp"
#include "sotif/error.hpp"

namespace sotif::session
{
namespace
{

std::string frame(const nlohmann::json & j) { return j.dump() + "\n"; }

Outbound violation(std::string_view message)
{
  Outbound out;
  out.frames.push_back(error_frame(message));
  out.close = true;
  return out;
}

void append_file(const std::filesystem::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out << text;
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
}

}  // namespace

std::string error_frame(std::string_view message)
{
  return frame({{"type", "ERROR"}, {"message", std::string(message)}});
}

std::string busy_frame() { return frame({{"type", "BUSY"}}); }

SessionCore::SessionCore(SessionOptions options, int tc_index) : options_(std::move(options)), tc_(tc_index) {}

Outbound SessionCore::receive(std::string_view text)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &) {
    return violation("frame is not valid JSON");
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    return violation("frame needs a string 'type'");
  }
  const auto type = j["type"].get<std::string>();
  if (type == "START") return start(j);
  if (type == "CONTROL") return control(j);
  if (type == "ABORT") {
    phase_ = Phase::kDone;
    return {{}, true};
  }
  return violation("unknown frame type '" + type + "'");
}

Outbound SessionCore::start(const nlohmann::json & j)
{
  if (phase_ != Phase::kIdle) {
    return violation("START after the session started");
  }
  if (j.contains("seed") && !j["seed"].is_number_unsigned()) {
    return violation("seed must be a non-negative integer");
  }
  seed_ = j.value("seed", std::uint64_t{0});
  const auto overrides = j.value("overrides", nlohmann::json::object());
  std::vector<std::string> errors;
  const auto cfg = config::read_sim_config(config::merged(config::to_json(options_.defaults), overrides), errors,
                                           "overrides");
  if (!errors.empty()) {
    std::string msg;
    for (const auto & e : errors) msg += (msg.empty() ? "" : "; ") + e;
    return violation(msg);
  }
  config_ = scenario::resolve(cfg);
  episode_.emplace(config_);
  steps_per_tick_ = std::max(1, static_cast<int>(std::lround(kTickPeriod / config_.dt)));
  broadcast_every_ = std::max(1L, std::lround(kBroadcastPeriod / config_.dt));
  phase_ = Phase::kRunning;
  Outbound out;
  out.frames.push_back(frame(state_frame()));
  return out;
}

Outbound SessionCore::control(const nlohmann::json & j)
{
  if (phase_ != Phase::kRunning) {
    return violation("CONTROL outside a running session");
  }
  const auto kind = j.contains("kind") && j["kind"].is_string()
                      ? driver::parse_action_kind(j["kind"].get<std::string>())
                      : std::nullopt;
  if (!kind || *kind == driver::ActionKind::kNone) {
    return violation("CONTROL kind must be TAKE_OVER or STEER");
  }
  std::optional<double> swa;
  if (j.contains("swa") && !j["swa"].is_null()) {
    if (!j["swa"].is_number()) return violation("swa must be a number");
    swa = j["swa"].get<double>();
    if (!std::isfinite(*swa) || std::abs(*swa) > driver::kMaxSwa) {
      return violation("swa must be finite with |swa| <= 540");
    }
  }
  if (*kind == driver::ActionKind::kSteer && !swa) {
    return violation("STEER needs swa");
  }
  // Frames between ticks merge like simultaneous scripted actions.
  if (*kind == driver::ActionKind::kTakeOver) {
    pending_.kind = driver::ActionKind::kTakeOver;
  } else if (pending_.kind == driver::ActionKind::kNone) {
    pending_.kind = driver::ActionKind::kSteer;
  }
  if (swa) pending_.swa = swa;
  return {};
}

driver::DriverAction SessionCore::next_action()
{
  auto action = std::exchange(pending_, driver::DriverAction::none());
  if (action.kind == driver::ActionKind::kTakeOver) {
    if (!take_over_logged_) {
      take_over_logged_ = true;
    } else if (episode_->mode() == scenario::AdsMode::kDriverControl && action.swa) {
      // a repeated take-over only carries a new wheel angle
      action.kind = driver::ActionKind::kSteer;
    } else {
      action = driver::DriverAction::none();
    }
  }
  return action;
}

nlohmann::json SessionCore::state_frame() const
{
  const auto & s = episode_->state();
  return {{"type", "STATE"},
          {"t", episode_->time()},
          {"y", s.y},
          {"heading", s.heading},
          {"speed", s.speed},
          {"mode", scenario::to_string(episode_->mode())},
          {"target_lane", episode_->target_lane()}};
}

Outbound SessionCore::tick()
{
  Outbound out;
  if (phase_ != Phase::kRunning) return out;
  try {
    for (int k = 0; k < steps_per_tick_ && !episode_->finished(); ++k) {
      const auto action = k == 0 ? next_action() : driver::DriverAction::none();
      if (action.kind != driver::ActionKind::kNone) log_.push_back({episode_->time(), action});
      for (const auto & e : episode_->advance(action)) {
        out.frames.push_back(frame({{"type", "EVENT"}, {"t", e.t}, {"kind", scenario::to_string(e.kind)}}));
      }
      ++steps_;
      if (steps_ % broadcast_every_ == 0 || episode_->finished()) out.frames.push_back(frame(state_frame()));
    }
  } catch (const std::exception & e) {
    auto done = finish(e.what());
    out.frames.insert(out.frames.end(), done.frames.begin(), done.frames.end());
    out.close = true;
    return out;
  }
  if (episode_->finished()) {
    auto done = finish(std::nullopt);
    out.frames.insert(out.frames.end(), done.frames.begin(), done.frames.end());
    out.close = true;
  }
  return out;
}

Outbound SessionCore::finish(std::optional<std::string> error)
{
  phase_ = Phase::kDone;
  SessionResult r;
  r.tc = tc_;
  r.seed = seed_;
  r.config = config_;
  r.log = log_;
  r.result.tc = tc_;
  if (!error) {
    try {
      const auto & trace = episode_->trace();
      const auto a = misuse::assess(trace, config_, tc_, seed_, options_.classifier, options_.detector);
      r.result.record = a.record;
      r.result.labels = a.labels;
      r.result.detector = a.detector;
      r.result.checklist = testmgr::evaluate_checklist(trace, a.record, a.labels, config_);
      r.result.pass = true;
    } catch (const std::exception & e) {
      error = e.what();
    }
  }
  if (error) {
    r.result = testmgr::CaseResult{};
    r.result.tc = tc_;
    r.result.status = testmgr::CaseStatus::kFailed;
    r.result.error = *error;
    r.result.checklist.answers.fill(testmgr::Answer::kNotApplicable);
    r.result.checklist.evidence.fill("case failed");
  }
  nlohmann::json j{{"type", "RESULT"},
                   {"status", error ? "FAILED" : "COMPLETED"},
                   {"record", r.result.record},
                   {"labels", r.result.labels},
                   {"checklist", r.result.checklist},
                   {"session_log", r.log}};
  if (error) j["error"] = *error;
  result_ = std::move(r);
  Outbound out;
  out.frames.push_back(frame(j));
  out.close = true;
  return out;
}

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir))
{
  std::filesystem::create_directories(dir_ / "sessions");
  const auto results = dir_ / "results.jsonl";
  std::ifstream in(results);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    next_tc_ = std::max(next_tc_, nlohmann::json::parse(line).at("TC").get<int>() + 1);
  }
}

void SessionStore::append(const SessionResult & r)
{
  const auto records = dir_ / "records.csv";
  if (r.result.status == testmgr::CaseStatus::kCompleted) {
    const auto csv = testmgr::render_records_csv({r.result.record});
    const bool fresh = !std::filesystem::exists(records) || std::filesystem::file_size(records) == 0;
    append_file(records, fresh ? csv : csv.substr(csv.find('\n') + 1));
  }
  append_file(dir_ / "results.jsonl", testmgr::case_json(r.result).dump() + "\n");
  const auto stem = dir_ / "sessions" / ("session-" + std::to_string(r.tc));
  std::ofstream(stem.string() + ".jsonl", std::ios::binary) << driver::write_session_log(r.log);
  std::ofstream(stem.string() + ".config.json", std::ios::binary) << config::to_json(r.config).dump(2) << "\n";
  next_tc_ = std::max(next_tc_, r.tc + 1);
}

}  // namespace sotif::session
