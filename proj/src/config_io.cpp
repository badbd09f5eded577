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

#include "sotif/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sotif/error.hpp"

namespace sotif::config
{
namespace
{

std::string join_path(const std::string & path, const std::string & key)
{
  return path.empty() ? key : path + "." + key;
}

// Pulls typed fields out of one JSON object and remembers which keys were
// consumed so leftovers can be reported.
class FieldReader
{
public:
  FieldReader(const nlohmann::json & j, std::string path, std::vector<std::string> & errors)
  : j_(j), path_(std::move(path)), errors_(errors)
  {
    if (!j_.is_object()) {
      errors_.push_back((path_.empty() ? "document" : path_) + ": expected an object");
      ok_ = false;
    }
  }

  void number(const char * key, double & out)
  {
    const auto * v = find(key);
    if (!v) return;
    if (!v->is_number()) {
      fail(key, "expected a number");
      return;
    }
    out = v->get<double>();
  }

  void integer(const char * key, int & out)
  {
    const auto * v = find(key);
    if (!v) return;
    if (!v->is_number_integer()) {
      fail(key, "expected an integer");
      return;
    }
    out = v->get<int>();
  }

  void optional_number(const char * key, std::optional<double> & out)
  {
    const auto * v = find(key);
    if (!v) return;
    if (v->is_null()) {
      out.reset();
    } else if (v->is_number()) {
      out = v->get<double>();
    } else {
      fail(key, "expected a number or null");
    }
  }

  const nlohmann::json * object(const char * key)
  {
    const auto * v = find(key);
    if (v && !v->is_object()) {
      fail(key, "expected an object");
      return nullptr;
    }
    return v;
  }

  std::string path(const char * key) const { return join_path(path_, key); }

  void finish()
  {
    if (!ok_) return;
    for (const auto & [key, value] : j_.items()) {
      if (!seen_.contains(key)) errors_.push_back(join_path(path_, key) + ": unknown field");
    }
  }

private:
  const nlohmann::json * find(const char * key)
  {
    if (!ok_) return nullptr;
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void fail(const char * key, const char * message) { errors_.push_back(join_path(path_, key) + ": " + message); }

  const nlohmann::json & j_;
  std::string path_;
  std::vector<std::string> & errors_;
  std::set<std::string> seen_;
  bool ok_{true};
};

std::string join(const std::vector<std::string> & parts)
{
  std::string out;
  for (const auto & p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const scenario::SimConfig & c)
{
  const auto opt = [](const std::optional<double> & v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return nlohmann::json{
    {"dt", c.dt},
    {"wheelbase", c.wheelbase},
    {"steering_ratio", c.steering_ratio},
    {"mrm_grace", c.mrm_grace},
    {"mrm_decel", c.mrm_decel},
    {"kp", c.kp},
    {"kd", c.kd},
    {"kh", c.kh},
    {"vehicle_width", c.vehicle_width},
    {"road",
     {{"lane_width", c.road.lane_width},
      {"lane_count", c.road.lane_count},
      {"marking_gap_start", opt(c.road.marking_gap_start)},
      {"marking_gap_end", opt(c.road.marking_gap_end)}}},
    {"timeline",
     {{"lane_change_start", c.timeline.lane_change_start},
      {"warning_time", c.timeline.warning_time},
      {"tor_time", c.timeline.tor_time},
      {"episode_max_duration", c.timeline.episode_max_duration}}},
    {"initial_state",
     {{"s", c.initial_state.s},
      {"y", c.initial_state.y},
      {"heading", c.initial_state.heading},
      {"speed", c.initial_state.speed},
      {"swa", c.initial_state.swa}}},
  };
}

nlohmann::json to_json(const misuse::ClassifierConfig & c)
{
  return nlohmann::json{{"takeover_threshold", c.takeover_threshold},
                        {"rel_tol", c.rel_tol},
                        {"abs_floor", c.abs_floor},
                        {"swa_window", c.swa_window}};
}

nlohmann::json to_json(const misuse::DetectorConfig & c)
{
  return nlohmann::json{{"sigma_t", c.sigma_t}, {"sigma_swa", c.sigma_swa}};
}

scenario::SimConfig read_sim_config(const nlohmann::json & j, std::vector<std::string> & errors,
                                    const std::string & path)
{
  scenario::SimConfig c;
  const auto before = errors.size();
  FieldReader r(j, path, errors);
  r.number("dt", c.dt);
  r.number("wheelbase", c.wheelbase);
  r.number("steering_ratio", c.steering_ratio);
  r.number("mrm_grace", c.mrm_grace);
  r.number("mrm_decel", c.mrm_decel);
  r.number("kp", c.kp);
  r.number("kd", c.kd);
  r.number("kh", c.kh);
  r.number("vehicle_width", c.vehicle_width);
  if (const auto * road = r.object("road")) {
    FieldReader rr(*road, r.path("road"), errors);
    rr.number("lane_width", c.road.lane_width);
    rr.integer("lane_count", c.road.lane_count);
    rr.optional_number("marking_gap_start", c.road.marking_gap_start);
    rr.optional_number("marking_gap_end", c.road.marking_gap_end);
    rr.finish();
  }
  if (const auto * tl = r.object("timeline")) {
    FieldReader tr(*tl, r.path("timeline"), errors);
    tr.number("lane_change_start", c.timeline.lane_change_start);
    tr.number("warning_time", c.timeline.warning_time);
    tr.number("tor_time", c.timeline.tor_time);
    tr.number("episode_max_duration", c.timeline.episode_max_duration);
    tr.finish();
  }
  if (const auto * init = r.object("initial_state")) {
    FieldReader ir(*init, r.path("initial_state"), errors);
    ir.number("s", c.initial_state.s);
    ir.number("y", c.initial_state.y);
    ir.number("heading", c.initial_state.heading);
    ir.number("speed", c.initial_state.speed);
    ir.number("swa", c.initial_state.swa);
    ir.finish();
  }
  r.finish();
  if (errors.size() == before) {
    for (const auto & e : scenario::validation_errors(c)) {
      errors.push_back(path.empty() ? e : path + "." + e);
    }
  }
  return c;
}

misuse::ClassifierConfig read_classifier(const nlohmann::json & j, std::vector<std::string> & errors,
                                         const std::string & path)
{
  misuse::ClassifierConfig c;
  FieldReader r(j, path, errors);
  r.number("takeover_threshold", c.takeover_threshold);
  r.number("rel_tol", c.rel_tol);
  r.number("abs_floor", c.abs_floor);
  r.number("swa_window", c.swa_window);
  r.finish();
  if (!(c.takeover_threshold > 0.0)) errors.push_back(path + ".takeover_threshold: must be > 0");
  if (!(c.rel_tol >= 0.0)) errors.push_back(path + ".rel_tol: must be >= 0");
  if (!(c.abs_floor >= 0.0)) errors.push_back(path + ".abs_floor: must be >= 0");
  if (!(c.swa_window > 0.0)) errors.push_back(path + ".swa_window: must be > 0");
  return c;
}

misuse::DetectorConfig read_detector(const nlohmann::json & j, std::vector<std::string> & errors,
                                     const std::string & path)
{
  misuse::DetectorConfig c;
  FieldReader r(j, path, errors);
  r.number("sigma_t", c.sigma_t);
  r.number("sigma_swa", c.sigma_swa);
  r.finish();
  if (!(c.sigma_t >= 0.0)) errors.push_back(path + ".sigma_t: must be >= 0");
  if (!(c.sigma_swa >= 0.0)) errors.push_back(path + ".sigma_swa: must be >= 0");
  return c;
}

nlohmann::json merged(const nlohmann::json & base, const nlohmann::json & patch)
{
  auto out = base;
  // merge_patch deletes keys patched with null; marking-gap fields use
  // null as a value, so restore their presence afterwards.
  out.merge_patch(patch);
  if (out.contains("road") && out["road"].is_object()) {
    for (const char * key : {"marking_gap_start", "marking_gap_end"}) {
      if (!out["road"].contains(key)) out["road"][key] = nullptr;
    }
  }
  return out;
}

nlohmann::json parse_json(const std::string & text, const std::string & what)
{
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error & e) {
    throw Error(ErrorCode::kParseError, what + ": " + e.what());
  }
}

std::string read_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kParseError, "cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

scenario::SimConfig load_sim_config(const std::string & text)
{
  const auto j = parse_json(text, "sim config");
  std::vector<std::string> errors;
  const auto config = read_sim_config(merged(to_json(scenario::SimConfig{}), j), errors);
  if (!errors.empty()) {
    throw Error(ErrorCode::kValidationError, join(errors));
  }
  return config;
}

}  // namespace sotif::config
