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

#include "sotif/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "sotif/error.hpp"

namespace sotif::scenario
{
namespace
{

constexpr std::string_view kHeader = "t,s,y,heading,speed,swa,mode,driver_swa";

void append_fixed(std::string & out, double value)
{
  char buf[64];
  // avoid "-0.000000"
  if (value > -5e-7 && value < 5e-7) value = 0.0;
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  out += buf;
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view field, std::size_t line_no)
{
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kParseError, "trace line " + std::to_string(line_no) + ": bad number '" +
                                          std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::string write_trace_csv(const EpisodeTrace & trace)
{
  std::string out(kHeader);
  out += '\n';
  for (const auto & s : trace.samples) {
    for (double v : {s.t, s.state.s, s.state.y, s.state.heading, s.state.speed, s.state.swa}) {
      append_fixed(out, v);
      out += ',';
    }
    out += to_string(s.mode);
    out += ',';
    if (s.driver_swa) append_fixed(out, *s.driver_swa);
    out += '\n';
  }
  return out;
}

std::string write_events_jsonl(const EpisodeTrace & trace)
{
  std::string out;
  for (const auto & e : trace.events) {
    out += nlohmann::json{{"t", e.t}, {"kind", to_string(e.kind)}}.dump();
    out += '\n';
  }
  return out;
}

EpisodeTrace parse_trace(std::string_view trace_csv, std::string_view events_jsonl)
{
  EpisodeTrace trace;
  std::istringstream csv{std::string(trace_csv)};
  std::string line;
  if (!std::getline(csv, line) || line != kHeader) {
    throw Error(ErrorCode::kParseError, "trace CSV header mismatch");
  }
  std::size_t line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) {
      throw Error(ErrorCode::kParseError, "trace line " + std::to_string(line_no) + ": expected 8 fields");
    }
    Sample s;
    s.t = to_double(f[0], line_no);
    s.state = {to_double(f[1], line_no), to_double(f[2], line_no), to_double(f[3], line_no),
               to_double(f[4], line_no), to_double(f[5], line_no)};
    const auto mode = parse_ads_mode(f[6]);
    if (!mode) {
      throw Error(ErrorCode::kParseError, "trace line " + std::to_string(line_no) + ": unknown mode");
    }
    s.mode = *mode;
    if (!f[7].empty()) s.driver_swa = to_double(f[7], line_no);
    trace.samples.push_back(s);
  }

  std::istringstream events{std::string(events_jsonl)};
  line_no = 0;
  while (std::getline(events, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto kind = parse_event_kind(j.at("kind").get<std::string>());
      if (!kind) throw Error(ErrorCode::kParseError, "unknown event kind");
      trace.events.push_back({j.at("t").get<double>(), *kind});
    } catch (const nlohmann::json::exception & e) {
      throw Error(ErrorCode::kParseError, "events line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace sotif::scenario
