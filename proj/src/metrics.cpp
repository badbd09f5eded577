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

#include "sotif/metrics.hpp"

#include <algorithm>

#include "sotif/error.hpp"
#include "sotif/format.hpp"

namespace sotif::metrics
{
namespace
{

bool timely(const misuse::TestCaseRecord & r, double threshold)
{
  return r.to == 1 && misuse::classify_takeover(r.delta_t2, threshold) == 0;
}

bool delayed(const misuse::TestCaseRecord & r, double threshold)
{
  return r.to == 1 && misuse::classify_takeover(r.delta_t2, threshold) == 1;
}

Ratio ratio(std::size_t numerator, std::size_t denominator)
{
  Ratio r;
  if (denominator == 0) return r;
  r.valid = true;
  r.value = static_cast<double>(numerator) / static_cast<double>(denominator);
  r.not_a_probability = r.value > 1.0;
  return r;
}

TreeNode node(std::string label, std::size_t count, std::size_t parent_count, std::size_t mj)
{
  TreeNode n;
  n.label = std::move(label);
  n.count = count;
  n.fraction = parent_count == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(parent_count);
  n.mj = mj;
  return n;
}

template <typename Pred>
std::pair<std::size_t, std::size_t> count_with_mj(std::span<const LabeledRecord> cases, Pred pred)
{
  std::size_t n = 0;
  std::size_t mj = 0;
  for (const auto & c : cases) {
    if (!pred(c)) continue;
    ++n;
    mj += c.labels.mj == 1 ? 1 : 0;
  }
  return {n, mj};
}

nlohmann::json ratio_json(const Ratio & r)
{
  nlohmann::json j{{"valid", r.valid}, {"not_a_probability", r.not_a_probability}};
  j["value"] = r.valid ? nlohmann::json(r.value) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json tree_json(const TreeNode & n)
{
  nlohmann::json j{{"label", n.label}, {"count", n.count}, {"fraction", n.fraction}, {"mj", n.mj}};
  j["children"] = nlohmann::json::array();
  for (const auto & c : n.children) j["children"].push_back(tree_json(c));
  return j;
}

void tree_markdown(const TreeNode & n, int depth, std::string & out)
{
  out += std::string(static_cast<std::size_t>(depth) * 2, ' ') + "- " + n.label + ": " + std::to_string(n.count) +
         " (" + fixed(n.fraction, 2) + " of parent, MJ " + std::to_string(n.mj) + ")\n";
  for (const auto & c : n.children) tree_markdown(c, depth + 1, out);
}

std::string ratio_cell(const Ratio & r)
{
  if (!r.valid) return "n/a | invalid (zero denominator)";
  return fixed(r.value, 2) + " | " + (r.not_a_probability ? "NOT_A_PROBABILITY" : "ok");
}

}  // namespace

std::vector<std::string> consistency_violations(const JointCounts & c)
{
  std::vector<std::string> out;
  const auto check = [&out, &c](std::size_t v, const char * name) {
    if (v > c.n_total) out.push_back(std::string(name) + " exceeds n_total");
  };
  check(c.n_to_le_h, "n_to_le_h");
  check(c.n_mj_to_le_h, "n_mj_to_le_h");
  check(c.n_to_gt_h, "n_to_gt_h");
  check(c.n_mj_to_gt_h, "n_mj_to_gt_h");
  check(c.n_fr_to_gt_h, "n_fr_to_gt_h");
  if (c.n_mj_to_le_h > c.n_to_le_h) out.emplace_back("n_mj_to_le_h > n_to_le_h");
  if (c.n_mj_to_gt_h > c.n_to_gt_h) out.emplace_back("n_mj_to_gt_h > n_to_gt_h");
  if (c.n_fr_to_gt_h > c.n_to_gt_h) out.emplace_back("n_fr_to_gt_h > n_to_gt_h");
  return out;
}

std::vector<double> percentages(const JointCounts & c)
{
  std::vector<double> out;
  for (auto v : {c.n_to_le_h, c.n_mj_to_le_h, c.n_to_gt_h, c.n_mj_to_gt_h, c.n_fr_to_gt_h}) {
    out.push_back(c.n_total == 0 ? 0.0 : 100.0 * static_cast<double>(v) / static_cast<double>(c.n_total));
  }
  return out;
}

JointCounts joint_counts(std::span<const LabeledRecord> cases, double threshold)
{
  if (cases.empty()) {
    throw Error(ErrorCode::kEmptyInput, "joint_counts needs at least one record");
  }
  JointCounts c;
  c.n_total = cases.size();
  for (const auto & [r, l] : cases) {
    if (r.h != 1) continue;
    if (timely(r, threshold)) {
      ++c.n_to_le_h;
      if (l.mj == 1) ++c.n_mj_to_le_h;
    } else if (delayed(r, threshold)) {
      ++c.n_to_gt_h;
      if (l.mj == 1) ++c.n_mj_to_gt_h;
      if (l.fr == 1) ++c.n_fr_to_gt_h;
    }
  }
  return c;
}

CpaTriple cpa_as_written(const JointCounts & c)
{
  return {ratio(c.n_to_le_h, c.n_mj_to_le_h), ratio(c.n_to_gt_h, c.n_mj_to_gt_h), ratio(c.n_to_gt_h, c.n_fr_to_gt_h)};
}

CpaTriple cpa_standard(const JointCounts & c)
{
  return {ratio(c.n_mj_to_le_h, c.n_to_le_h), ratio(c.n_mj_to_gt_h, c.n_to_gt_h), ratio(c.n_fr_to_gt_h, c.n_to_gt_h)};
}

ContingencyCounts contingency(
  std::span<const misuse::MisuseLabels> labels, std::span<const misuse::DetectorOutput> detector)
{
  if (labels.size() != detector.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(labels.size()) + " labels vs " +
                                              std::to_string(detector.size()) + " detector outputs");
  }
  ContingencyCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i].fm == 1;
    const bool flagged = detector[i].fm_flagged == 1;
    if (truth && flagged) ++c.tp;
    else if (!truth && flagged) ++c.fp;
    else if (truth && !flagged) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double fmem(const ContingencyCounts & c)
{
  if (c.total() == 0) {
    throw Error(ErrorCode::kEmptyContingency, "FMEM of an empty contingency table");
  }
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

EventTree build_event_tree(std::span<const LabeledRecord> cases, double threshold)
{
  if (cases.empty()) {
    throw Error(ErrorCode::kEmptyInput, "event tree needs at least one record");
  }
  EventTree tree;
  for (const auto & c : cases) {
    if (c.record.to != 1) ++tree.n_no_takeover;
  }
  const auto [n_root, mj_root] = count_with_mj(cases, [](const LabeledRecord & c) { return c.record.to == 1; });
  tree.root = node("MJ", n_root, n_root, mj_root);
  tree.root.fraction = 1.0;

  struct Branch
  {
    const char * label;
    bool is_delayed;
  };
  for (const auto branch : {Branch{"TO <= 1.77 s", false}, Branch{"TO > 1.77 s", true}}) {
    const auto in_branch = [threshold, branch](const LabeledRecord & c) {
      return branch.is_delayed ? delayed(c.record, threshold) : timely(c.record, threshold);
    };
    const auto [n_to, mj_to] = count_with_mj(cases, in_branch);
    auto to_node = node(branch.label, n_to, n_root, mj_to);
    for (const int h : {1, 0}) {
      const auto in_cell = [&](const LabeledRecord & c) { return in_branch(c) && c.record.h == h; };
      const auto [n_h, mj_h] = count_with_mj(cases, in_cell);
      auto h_node = node(h == 1 ? "H" : "No H", n_h, n_to, mj_h);
      for (const int fr : {1, 0}) {
        const auto [n_fr, mj_fr] =
          count_with_mj(cases, [&](const LabeledRecord & c) { return in_cell(c) && c.labels.fr == fr; });
        h_node.children.push_back(node(fr == 1 ? "FR" : "No FR", n_fr, n_h, mj_fr));
      }
      to_node.children.push_back(std::move(h_node));
    }
    tree.root.children.push_back(std::move(to_node));
  }
  return tree;
}

ControllabilityRate controllability_rate(std::span<const misuse::MisuseLabels> labels)
{
  ControllabilityRate rate;
  std::size_t provided = 0;
  for (const auto & l : labels) {
    if (l.controllability == misuse::Controllability::kNotApplicable) continue;
    ++rate.n_applicable;
    if (l.controllability == misuse::Controllability::kProvided) ++provided;
  }
  if (rate.n_applicable == 0) return rate;
  rate.valid = true;
  rate.provided = static_cast<double>(provided) / static_cast<double>(rate.n_applicable);
  rate.not_provided = static_cast<double>(rate.n_applicable - provided) / static_cast<double>(rate.n_applicable);
  return rate;
}

ProbabilityReport make_report(const JointCounts & counts)
{
  ProbabilityReport r;
  r.joint = counts;
  r.joint_percent = percentages(counts);
  r.consistency = consistency_violations(counts);
  r.cpa_as_written = cpa_as_written(counts);
  r.cpa_standard = cpa_standard(counts);
  return r;
}

ProbabilityReport make_report(
  std::span<const LabeledRecord> cases, std::span<const misuse::DetectorOutput> detector, double threshold)
{
  auto r = make_report(joint_counts(cases, threshold));
  std::vector<misuse::MisuseLabels> labels;
  labels.reserve(cases.size());
  for (const auto & c : cases) labels.push_back(c.labels);
  if (!detector.empty()) {
    r.contingency = contingency(labels, detector);
    r.fmem = fmem(*r.contingency);
  }
  r.controllability = controllability_rate(labels);
  r.tree = build_event_tree(cases, threshold);
  return r;
}

void to_json(nlohmann::json & j, const JointCounts & c)
{
  j = nlohmann::json{{"n_total", c.n_total},         {"n_to_le_h", c.n_to_le_h},
                     {"n_mj_to_le_h", c.n_mj_to_le_h}, {"n_to_gt_h", c.n_to_gt_h},
                     {"n_mj_to_gt_h", c.n_mj_to_gt_h}, {"n_fr_to_gt_h", c.n_fr_to_gt_h}};
}

void from_json(const nlohmann::json & j, JointCounts & c)
{
  c.n_total = j.at("n_total").get<std::size_t>();
  c.n_to_le_h = j.at("n_to_le_h").get<std::size_t>();
  c.n_mj_to_le_h = j.at("n_mj_to_le_h").get<std::size_t>();
  c.n_to_gt_h = j.at("n_to_gt_h").get<std::size_t>();
  c.n_mj_to_gt_h = j.at("n_mj_to_gt_h").get<std::size_t>();
  c.n_fr_to_gt_h = j.at("n_fr_to_gt_h").get<std::size_t>();
}

nlohmann::json to_json(const ProbabilityReport & r)
{
  nlohmann::json j;
  j["joint"] = r.joint;
  j["joint_percent"] = r.joint_percent;
  j["consistency_violations"] = r.consistency;
  j["cpa_as_written"] = nlohmann::json::array();
  j["cpa_standard"] = nlohmann::json::array();
  for (std::size_t i = 0; i < 3; ++i) {
    j["cpa_as_written"].push_back(ratio_json(r.cpa_as_written[i]));
    j["cpa_standard"].push_back(ratio_json(r.cpa_standard[i]));
  }
  if (r.contingency) {
    j["contingency"] = {{"tp", r.contingency->tp}, {"fp", r.contingency->fp}, {"tn", r.contingency->tn},
                        {"fn", r.contingency->fn}};
  }
  if (r.fmem) j["fmem"] = *r.fmem;
  if (r.controllability) {
    const auto & c = *r.controllability;
    j["controllability"] = {
      {"provided", c.provided}, {"not_provided", c.not_provided}, {"n_applicable", c.n_applicable},
      {"valid", c.valid}};
  }
  if (r.tree) {
    j["event_tree"] = {{"root", tree_json(r.tree->root)}, {"n_no_takeover", r.tree->n_no_takeover}};
  }
  return j;
}

std::string to_markdown(const ProbabilityReport & r)
{
  static const char * kRows[] = {
    "P(TO <= 1.77 s & H)", "P(MJ & TO <= 1.77 s & H)", "P(TO > 1.77 s & H)", "P(MJ & TO > 1.77 s & H)",
    "P(FR & TO > 1.77 s & H)"};
  const std::size_t counts[] = {r.joint.n_to_le_h, r.joint.n_mj_to_le_h, r.joint.n_to_gt_h, r.joint.n_mj_to_gt_h,
                                r.joint.n_fr_to_gt_h};
  std::string out = "# Probability analysis\n\n";
  out += "## Joint events (n = " + std::to_string(r.joint.n_total) + ")\n\n";
  out += "| Event | Count | Percentage |\n|---|---|---|\n";
  for (std::size_t i = 0; i < 5; ++i) {
    out += std::string("| ") + kRows[i] + " | " + std::to_string(counts[i]) + " | " + fixed(r.joint_percent[i], 2) +
           "% |\n";
  }
  if (!r.consistency.empty()) {
    out += "\nCount consistency warnings:\n\n";
    for (const auto & v : r.consistency) out += "- " + v + "\n";
  }

  static const char * kCpa[] = {"MJ given TO <= 1.77 s, H", "MJ given TO > 1.77 s, H", "FR given TO > 1.77 s, H"};
  out += "\n## Conditional analysis\n\n";
  out += "| Measure | Likelihood ratio (as written) | Flag | Conditional probability | Flag |\n";
  out += "|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < 3; ++i) {
    out += std::string("| ") + kCpa[i] + " | " + ratio_cell(r.cpa_as_written[i]) + " | " +
           ratio_cell(r.cpa_standard[i]) + " |\n";
  }

  if (r.contingency && r.fmem) {
    const auto & c = *r.contingency;
    out += "\n## FMEM\n\n";
    out += "| TP | FP | TN | FN | FMEM |\n|---|---|---|---|---|\n";
    out += "| " + std::to_string(c.tp) + " | " + std::to_string(c.fp) + " | " + std::to_string(c.tn) + " | " +
           std::to_string(c.fn) + " | " + fixed(*r.fmem, 2) + " |\n";
  }
  if (r.controllability) {
    const auto & c = *r.controllability;
    out += "\n## Controllability\n\n";
    if (c.valid) {
      out += "Provided: " + fixed(c.provided, 2) + ", not provided: " + fixed(c.not_provided, 2) + " (n = " +
             std::to_string(c.n_applicable) + " take-over episodes)\n";
    } else {
      out += "No take-over episodes; rates invalid.\n";
    }
  }
  if (r.tree) {
    out += "\n## Event tree\n\n";
    tree_markdown(r.tree->root, 0, out);
    out += "\nEpisodes without take-over: " + std::to_string(r.tree->n_no_takeover) + "\n";
  }
  out += "\n---\n";
  out += "TP/FP/TN/FN cross-tabulate the detector flag against ground-truth foreseeable misuse "
         "(delayed or absent take-over, over- or understeer).\n";
  return out;
}

}  // namespace sotif::metrics
