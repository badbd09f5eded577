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

#include "sotif/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "sotif/config_io.hpp"
#include "sotif/error.hpp"
#include "sotif/metrics.hpp"
#include "sotif/server.hpp"
#include "sotif/testmanager.hpp"
#include "sotif/trace_io.hpp"

namespace sotif::cli
{
namespace
{

namespace fs = std::filesystem;

struct IoError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Exit code for a library error raised while reading inputs or running.
int exit_code(const Error & e)
{
  switch (e.code()) {
    case ErrorCode::kEpisodeInvalid:
    case ErrorCode::kOrdering:
    case ErrorCode::kIncompleteTrace:
    case ErrorCode::kMismatchedInputs:
      return kEpisodeError;
    default:
      return kInvalidInput;
  }
}

void write_file(const fs::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

void make_dir(const fs::path & dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

template <typename Fn>
int guarded(const char * name, Fn && fn)
{
  try {
    return fn();
  } catch (const IoError & e) {
    std::cerr << name << ": " << e.what() << "\n";
    return kIoError;
  } catch (const Error & e) {
    std::cerr << name << ": " << e.what() << "\n";
    return exit_code(e);
  } catch (const nlohmann::json::exception & e) {
    std::cerr << name << ": " << e.what() << "\n";
    return kInvalidInput;
  } catch (const fs::filesystem_error & e) {
    std::cerr << name << ": " << e.what() << "\n";
    return kIoError;
  }
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs
{
  std::string config;
  std::string driver;
  std::string session_log;
  std::uint64_t seed{0};
  std::optional<std::uint64_t> detector_seed;
  int tc{1};
  std::string out;
};

int simulate(const SimulateArgs & a)
{
  // Read and validate everything before producing any output.
  const auto cfg = scenario::resolve(a.config.empty() ? scenario::SimConfig{}
                                                      : config::load_sim_config(config::read_file(a.config)));
  driver::DriverSpec spec;
  if (!a.session_log.empty()) {
    spec = driver::scripted_from_session(driver::parse_session_log(config::read_file(a.session_log)));
  } else if (!a.driver.empty()) {
    try {
      spec = config::parse_json(config::read_file(a.driver), "driver").get<driver::DriverSpec>();
    } catch (const nlohmann::json::exception & e) {
      throw Error(ErrorCode::kInvalidSpec, e.what());
    }
  }
  driver::validate(spec);

  const auto trace = scenario::run_episode(cfg, spec, a.seed);
  const auto assessment = misuse::assess(trace, cfg, a.tc, a.detector_seed.value_or(a.seed));
  testmgr::CaseResult result;
  result.tc = a.tc;
  result.record = assessment.record;
  result.labels = assessment.labels;
  result.detector = assessment.detector;
  result.checklist = testmgr::evaluate_checklist(trace, assessment.record, assessment.labels, cfg);
  result.pass = true;

  const fs::path out(a.out);
  make_dir(out);
  write_file(out / "trace.csv", scenario::write_trace_csv(trace));
  write_file(out / "events.jsonl", scenario::write_events_jsonl(trace));
  write_file(out / "record.csv", testmgr::render_records_csv({assessment.record}));
  write_file(out / "labels.json", testmgr::case_json(result).dump() + "\n");
  return kOk;
}

// ---- run-series -----------------------------------------------------------

int run_series(const std::string & series_path, const std::string & out_dir, unsigned jobs)
{
  const auto series = testmgr::load_series(series_path);
  const auto report = testmgr::run_series(series, jobs);
  const fs::path out(out_dir);
  make_dir(out);
  write_file(out / "records.csv", testmgr::render_report(report, testmgr::Format::kCsv));
  write_file(out / "results.jsonl", testmgr::render_results_jsonl(report));
  write_file(out / "report.json", testmgr::render_report(report, testmgr::Format::kJson));
  write_file(out / "report.md", testmgr::render_report(report, testmgr::Format::kMarkdown));
  std::cout << "series " << report.name << ": " << (report.pass ? "PASS" : "FAIL") << " (" << report.summary.n_pass
            << "/" << report.summary.n_cases << " cases passed, " << report.summary.n_failed << " failed)\n";
  return report.pass ? kOk : kSeriesFailed;
}

// ---- evaluate -------------------------------------------------------------

struct LabelLine
{
  misuse::MisuseLabels labels;
  std::optional<misuse::DetectorOutput> detector;
};

std::map<int, LabelLine> read_label_lines(const std::string & text)
{
  std::map<int, LabelLine> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "labels line " + std::to_string(line_no);
    const auto j = config::parse_json(line, where);
    if (!j.is_object() || !j.contains("TC") || !j.contains("labels")) {
      if (j.is_object() && j.value("status", "") == "FAILED") continue;
      throw Error(ErrorCode::kValidationError, where + ": needs TC and labels");
    }
    if (j.value("status", "") == "FAILED") continue;
    LabelLine l;
    l.labels = j.at("labels").get<misuse::MisuseLabels>();
    if (j.contains("detector")) l.detector = j.at("detector").get<misuse::DetectorOutput>();
    const int tc = j.at("TC").get<int>();
    if (!out.emplace(tc, l).second) {
      throw Error(ErrorCode::kValidationError, where + ": duplicate TC " + std::to_string(tc));
    }
  }
  return out;
}

int evaluate(const std::string & records_path, const std::string & labels_path, const std::string & counts_path,
             const std::string & out_dir)
{
  metrics::ProbabilityReport report;
  if (!counts_path.empty()) {
    if (!records_path.empty() || !labels_path.empty()) {
      throw Error(ErrorCode::kValidationError, "--counts excludes --records and --labels");
    }
    const auto counts = config::parse_json(config::read_file(counts_path), "counts").get<metrics::JointCounts>();
    report = metrics::make_report(counts);
  } else {
    if (records_path.empty() || labels_path.empty()) {
      throw Error(ErrorCode::kValidationError, "need --records and --labels, or --counts");
    }
    const auto records = testmgr::parse_records_csv(config::read_file(records_path));
    const auto labels = read_label_lines(config::read_file(labels_path));
    if (records.empty()) {
      throw Error(ErrorCode::kEmptyInput, "records file has no rows");
    }
    std::vector<metrics::LabeledRecord> cases;
    std::vector<misuse::DetectorOutput> detector;
    bool all_detected = true;
    std::set<int> used;
    for (const auto & r : records) {
      const auto it = labels.find(r.tc);
      if (it == labels.end()) {
        throw Error(ErrorCode::kValidationError, "no labels for TC " + std::to_string(r.tc));
      }
      if (!used.insert(r.tc).second) {
        throw Error(ErrorCode::kValidationError, "duplicate record for TC " + std::to_string(r.tc));
      }
      cases.push_back({r, it->second.labels});
      all_detected = all_detected && it->second.detector.has_value();
      if (it->second.detector) detector.push_back(*it->second.detector);
    }
    if (used.size() != labels.size()) {
      throw Error(ErrorCode::kValidationError, "labels file has entries without records");
    }
    if (!all_detected) detector.clear();
    report = metrics::make_report(cases, detector);
  }
  const fs::path out(out_dir);
  make_dir(out);
  write_file(out / "probability.json", metrics::to_json(report).dump(2) + "\n");
  write_file(out / "probability.md", metrics::to_markdown(report));
  return kOk;
}

// ---- report ---------------------------------------------------------------

int report(const std::string & in, const std::string & format, const std::string & out)
{
  const auto fmt = testmgr::parse_format(format);
  if (!fmt) throw Error(ErrorCode::kValidationError, "format must be csv, json or md");
  const auto rep = testmgr::report_from_json(config::parse_json(config::read_file(in), "report"));
  const auto text = testmgr::render_report(rep, *fmt);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return kOk;
}

// ---- serve ----------------------------------------------------------------

int serve(server::ServerOptions options, const std::string & config_path)
{
  if (!config_path.empty()) options.session.defaults = config::load_sim_config(config::read_file(config_path));
  if (!(options.realtime_factor > 0.0)) {
    throw Error(ErrorCode::kValidationError, "--realtime-factor must be > 0");
  }
  options.handle_signals = true;
  std::unique_ptr<server::Server> srv;
  try {
    make_dir(options.out_dir);
    srv = std::make_unique<server::Server>(options);
  } catch (const Error &) {
    throw;
  } catch (const std::runtime_error & e) {
    throw IoError(std::string("cannot listen: ") + e.what());
  }
  std::cout << "listening on http://" << options.host << ":" << srv->port() << "/ (session endpoint /session)"
            << std::endl;
  srv->run();
  return kOk;
}

}  // namespace

int run(int argc, char ** argv)
{
  CLI::App app{"Take-over misuse test harness: scenario simulation, test series, metrics and live sessions"};
  app.set_version_flag("--version", std::string("sotif-fm ") + SOTIF_VERSION);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto * simulate_cmd = app.add_subcommand("simulate", "Run one episode and write its trace, record and labels");
  simulate_cmd->add_option("--config", sim.config, "Simulator config JSON (partial; defaults fill the rest)")
    ->check(CLI::ExistingFile);
  auto * driver_opt =
    simulate_cmd->add_option("--driver", sim.driver, "Driver spec JSON (default: non-responder)")->check(CLI::ExistingFile);
  simulate_cmd->add_option("--session-log", sim.session_log, "Replay a recorded session log (JSON lines)")
    ->check(CLI::ExistingFile)
    ->excludes(driver_opt);
  simulate_cmd->add_option("--seed", sim.seed, "Driver seed")->capture_default_str();
  simulate_cmd->add_option("--detector-seed", sim.detector_seed, "Detector noise seed (default: --seed)");
  simulate_cmd->add_option("--tc", sim.tc, "Test case index written into the record")->capture_default_str();
  simulate_cmd->add_option("--out", sim.out, "Output directory")->required();

  std::string series_path;
  std::string series_out;
  unsigned jobs = 1;
  auto * series_cmd = app.add_subcommand("run-series", "Run a test-case series and write its report");
  series_cmd->add_option("--series", series_path, "Series config JSON")->required()->check(CLI::ExistingFile);
  series_cmd->add_option("--out", series_out, "Output directory")->required();
  series_cmd->add_option("--jobs", jobs, "Worker threads")->capture_default_str()->check(CLI::Range(1u, 256u));

  std::string records_path;
  std::string labels_path;
  std::string counts_path;
  std::string eval_out;
  auto * eval_cmd = app.add_subcommand("evaluate", "Compute probability metrics from records and labels");
  eval_cmd->add_option("--records", records_path, "Records CSV")->check(CLI::ExistingFile);
  eval_cmd->add_option("--labels", labels_path, "Labels JSON lines (results.jsonl)")->check(CLI::ExistingFile);
  eval_cmd->add_option("--counts", counts_path, "Joint-count fixture JSON instead of records")
    ->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_out, "Output directory")->required();

  std::string report_in;
  std::string report_format = "md";
  std::string report_out;
  auto * report_cmd = app.add_subcommand("report", "Re-render a saved report.json");
  report_cmd->add_option("--in", report_in, "report.json from run-series")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--format", report_format, "csv, json or md")->capture_default_str();
  report_cmd->add_option("--out", report_out, "Output file (default: stdout)");

  server::ServerOptions srv;
  srv.web_root = SOTIF_WEB_ROOT;
  std::string serve_config;
  std::string web_root = SOTIF_WEB_ROOT;
  std::string serve_out;
  auto * serve_cmd = app.add_subcommand("serve", "Serve the driver console and the /session protocol");
  serve_cmd->add_option("--port", srv.port, "TCP port (0 picks one)")->capture_default_str();
  serve_cmd->add_option("--host", srv.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--config", serve_config, "Default simulator config JSON")->check(CLI::ExistingFile);
  serve_cmd->add_option("--out", serve_out, "Directory collecting session records")->required();
  serve_cmd->add_option("--web", web_root, "Static files served at /")->capture_default_str();
  serve_cmd->add_option("--realtime-factor", srv.realtime_factor, "Simulation speed relative to wall clock")
    ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidInput;
  }

  if (*simulate_cmd) return guarded("simulate", [&] { return simulate(sim); });
  if (*series_cmd) return guarded("run-series", [&] { return run_series(series_path, series_out, jobs); });
  if (*eval_cmd) {
    return guarded("evaluate", [&] { return evaluate(records_path, labels_path, counts_path, eval_out); });
  }
  if (*report_cmd) return guarded("report", [&] { return report(report_in, report_format, report_out); });
  if (*serve_cmd) {
    srv.web_root = web_root;
    srv.out_dir = serve_out;
    return guarded("serve", [&] { return serve(srv, serve_config); });
  }
  return kInvalidInput;
}

}  // namespace sotif::cli
