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
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sotif/misuse.hpp"

// Evaluation measures over labeled test-case records.
namespace sotif::metrics
{

struct LabeledRecord
{
  misuse::TestCaseRecord record;
  misuse::MisuseLabels labels;

  bool operator==(const LabeledRecord &) const = default;
};

/// Joint event counts. "Timely" means a take-over with delta_t2 below the
/// threshold, "delayed" a take-over at or beyond it.
struct JointCounts
{
  std::size_t n_total{0};
  std::size_t n_to_le_h{0};     // timely & H
  std::size_t n_mj_to_le_h{0};  // MJ & timely & H
  std::size_t n_to_gt_h{0};     // delayed & H
  std::size_t n_mj_to_gt_h{0};  // MJ & delayed & H
  std::size_t n_fr_to_gt_h{0};  // FR & delayed & H

  bool operator==(const JointCounts &) const = default;
};

/// Subset relations the counts should satisfy. Violations are reported.
std::vector<std::string> consistency_violations(const JointCounts & counts);

/// 100 * count / n_total for the five joint counts, in field order.
std::vector<double> percentages(const JointCounts & counts);

/// Throws EMPTY_INPUT.
JointCounts joint_counts(std::span<const LabeledRecord> cases, double threshold = misuse::kTakeOverThreshold);

struct Ratio
{
  double value{0.0};
  bool valid{false};
  bool not_a_probability{false};  // value > 1

  bool operator==(const Ratio &) const = default;
};

/// Three ratios: MJ | timely & H, MJ | delayed & H, FR | delayed & H.
using CpaTriple = std::array<Ratio, 3>;

/// Ratios in the as-written arrangement: the joint
/// count of the condition over the joint count with the event.
CpaTriple cpa_as_written(const JointCounts & counts);

/// Standard conditional probabilities P(event | condition).
CpaTriple cpa_standard(const JointCounts & counts);

struct ContingencyCounts
{
  std::size_t tp{0};
  std::size_t fp{0};
  std::size_t tn{0};
  std::size_t fn{0};

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ContingencyCounts &) const = default;
};

/// Ground truth fm against detector fm_flagged. Throws LENGTH_MISMATCH.
ContingencyCounts contingency(
  std::span<const misuse::MisuseLabels> labels, std::span<const misuse::DetectorOutput> detector);

/// (TP + TN) / total. Throws EMPTY_CONTINGENCY.
double fmem(const ContingencyCounts & counts);

struct TreeNode
{
  std::string label;
  std::size_t count{0};
  double fraction{0.0};  // of parent; 1 at the root
  std::size_t mj{0};     // misjudged episodes within the node
  std::vector<TreeNode> children;

  bool operator==(const TreeNode &) const = default;
};

/// MJ root -> timely / delayed take-over -> H / no H -> FR / no FR.
/// Episodes without take-over are counted beside the tree.
struct EventTree
{
  TreeNode root;
  std::size_t n_no_takeover{0};

  bool operator==(const EventTree &) const = default;
};

/// Throws EMPTY_INPUT.
EventTree build_event_tree(std::span<const LabeledRecord> cases, double threshold = misuse::kTakeOverThreshold);

struct ControllabilityRate
{
  double provided{0.0};
  double not_provided{0.0};
  std::size_t n_applicable{0};
  bool valid{false};

  bool operator==(const ControllabilityRate &) const = default;
};

ControllabilityRate controllability_rate(std::span<const misuse::MisuseLabels> labels);

struct ProbabilityReport
{
  JointCounts joint;
  std::vector<double> joint_percent;
  std::vector<std::string> consistency;
  CpaTriple cpa_as_written{};
  CpaTriple cpa_standard{};
  std::optional<ContingencyCounts> contingency;
  std::optional<double> fmem;
  std::optional<ControllabilityRate> controllability;
  std::optional<EventTree> tree;
};

/// Report from counts alone (fixtures that only carry the joint counts).
ProbabilityReport make_report(const JointCounts & counts);

/// Full report from labeled records with optional detector outputs.
ProbabilityReport make_report(
  std::span<const LabeledRecord> cases, std::span<const misuse::DetectorOutput> detector,
  double threshold = misuse::kTakeOverThreshold);

/// Full precision.
nlohmann::json to_json(const ProbabilityReport & report);
/// 2-decimal tables with validity flags.
std::string to_markdown(const ProbabilityReport & report);

void to_json(nlohmann::json & j, const JointCounts & c);
void from_json(const nlohmann::json & j, JointCounts & c);

}  // namespace sotif::metrics
