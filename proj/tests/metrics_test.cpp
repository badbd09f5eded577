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

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sotif/error.hpp"
#include "sotif/metrics.hpp"

namespace mt = sotif::metrics;
namespace ms = sotif::misuse;
namespace st = sotif::testing;
using sotif::Error;
using sotif::ErrorCode;

namespace
{

ErrorCode code_of(auto && fn)
{
  try {
    fn();
  } catch (const Error & e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kParseError;
}

struct Campaign
{
  std::vector<st::Facts> facts;
  std::vector<mt::LabeledRecord> cases;
  std::vector<ms::MisuseLabels> labels;
  std::vector<ms::DetectorOutput> detector;
};

Campaign make_campaign(std::mt19937_64 & gen, std::size_t n)
{
  Campaign c;
  c.facts = st::random_facts(gen, n);
  for (std::size_t i = 0; i < n; ++i) {
    c.cases.push_back(st::to_labeled(c.facts[i], static_cast<int>(i + 1)));
    c.labels.push_back(c.cases.back().labels);
    c.detector.push_back(st::to_detector(c.facts[i]));
  }
  return c;
}

const mt::JointCounts kReference{50, 10, 6, 2, 8, 2};

ms::MisuseLabels fm_label(int fm)
{
  ms::MisuseLabels l;
  l.fm = fm;
  return l;
}

ms::DetectorOutput flag(int f)
{
  ms::DetectorOutput d;
  d.fm_flagged = f;
  return d;
}

}  // namespace

TEST(JointCounts, MatchBruteForce)
{
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = make_campaign(gen, 20);
    const auto got = mt::joint_counts(c.cases);
    const auto want = st::oracle_joint(c.facts);
    EXPECT_EQ(got.n_total, want[0]);
    EXPECT_EQ(got.n_to_le_h, want[1]);
    EXPECT_EQ(got.n_mj_to_le_h, want[2]);
    EXPECT_EQ(got.n_to_gt_h, want[3]);
    EXPECT_EQ(got.n_mj_to_gt_h, want[4]);
    EXPECT_EQ(got.n_fr_to_gt_h, want[5]);
    EXPECT_TRUE(mt::consistency_violations(got).empty());
  }
}

TEST(JointCounts, HazardFreeCampaign)
{
  std::vector<mt::LabeledRecord> cases;
  for (int i = 0; i < 10; ++i) cases.push_back(st::to_labeled({true, 2.0, false, 1, false}, i));
  const auto c = mt::joint_counts(cases);
  EXPECT_EQ(c, (mt::JointCounts{10, 0, 0, 0, 0, 0}));
  for (const auto & r : mt::cpa_as_written(c)) EXPECT_FALSE(r.valid);
  for (const auto & r : mt::cpa_standard(c)) EXPECT_FALSE(r.valid);
}

TEST(JointCounts, EmptyInput)
{
  EXPECT_EQ(code_of([] { mt::joint_counts({}); }), ErrorCode::kEmptyInput);
}

TEST(JointCounts, PermutationInvariant)
{
  std::mt19937_64 gen(2);
  auto c = make_campaign(gen, 40);
  const auto before = mt::make_report(c.cases, c.detector);
  std::vector<std::size_t> order(c.cases.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), gen);
  std::vector<mt::LabeledRecord> cases;
  std::vector<ms::DetectorOutput> det;
  for (auto i : order) {
    cases.push_back(c.cases[i]);
    det.push_back(c.detector[i]);
  }
  const auto after = mt::make_report(cases, det);
  EXPECT_EQ(mt::to_json(before), mt::to_json(after));
}

TEST(Cpa, ReferenceCountsAsWritten)
{
  const auto pct = mt::percentages(kReference);
  ASSERT_EQ(pct.size(), 5u);
  EXPECT_DOUBLE_EQ(pct[0], 20.0);
  EXPECT_DOUBLE_EQ(pct[1], 12.0);
  EXPECT_DOUBLE_EQ(pct[2], 4.0);
  EXPECT_DOUBLE_EQ(pct[3], 16.0);
  EXPECT_DOUBLE_EQ(pct[4], 4.0);
  const auto cpa = mt::cpa_as_written(kReference);
  EXPECT_NEAR(cpa[0].value, 1.67, 0.005);
  EXPECT_NEAR(cpa[1].value, 0.25, 0.005);
  EXPECT_NEAR(cpa[2].value, 1.00, 0.005);
  EXPECT_TRUE(cpa[0].not_a_probability);
  EXPECT_FALSE(cpa[1].not_a_probability);
  EXPECT_FALSE(cpa[2].not_a_probability);
  EXPECT_FALSE(mt::consistency_violations(kReference).empty());
}

TEST(Cpa, StandardIsConditionalProbability)
{
  const auto cpa = mt::cpa_standard(kReference);
  EXPECT_DOUBLE_EQ(cpa[0].value, 0.6);
  EXPECT_DOUBLE_EQ(cpa[1].value, 4.0);
  EXPECT_TRUE(cpa[1].not_a_probability);
  EXPECT_DOUBLE_EQ(cpa[2].value, 1.0);
  const auto zero = mt::cpa_standard({10, 0, 0, 0, 0, 0});
  EXPECT_FALSE(zero[0].valid);
  EXPECT_FALSE(zero[1].valid);
}

TEST(Cpa, ReciprocalPairs)
{
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> d(0, 12);
  for (int i = 0; i < 1000; ++i) {
    const mt::JointCounts c{50, d(gen), d(gen), d(gen), d(gen), d(gen)};
    const auto w = mt::cpa_as_written(c);
    const auto s = mt::cpa_standard(c);
    for (std::size_t k = 0; k < 3; ++k) {
      if (w[k].valid && s[k].valid) {
        EXPECT_NEAR(w[k].value * s[k].value, 1.0, 1e-12);
      }
      if (s[k].valid && !s[k].not_a_probability) {
        EXPECT_GE(s[k].value, 0.0);
        EXPECT_LE(s[k].value, 1.0);
      }
    }
  }
}

TEST(Contingency, MatchBruteForce)
{
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = make_campaign(gen, 25);
    const auto got = mt::contingency(c.labels, c.detector);
    const auto want = st::oracle_contingency(c.facts);
    EXPECT_EQ(got.tp, want[0]);
    EXPECT_EQ(got.fp, want[1]);
    EXPECT_EQ(got.tn, want[2]);
    EXPECT_EQ(got.fn, want[3]);
    EXPECT_EQ(got.total(), c.facts.size());
  }
}

TEST(Contingency, HandBuilt)
{
  const std::vector<ms::MisuseLabels> labels{fm_label(1), fm_label(1), fm_label(0),
                                             fm_label(0), fm_label(1), fm_label(0)};
  const std::vector<ms::DetectorOutput> det{flag(1), flag(0), flag(0), flag(1), flag(0), flag(0)};
  const auto c = mt::contingency(labels, det);
  EXPECT_EQ(c, (mt::ContingencyCounts{1, 1, 2, 2}));
  const std::vector<ms::DetectorOutput> same{flag(1), flag(1), flag(0), flag(0), flag(1), flag(0)};
  const auto perfect = mt::contingency(labels, same);
  EXPECT_EQ(perfect.fp, 0u);
  EXPECT_EQ(perfect.fn, 0u);
  EXPECT_EQ(code_of([&] { mt::contingency(labels, std::span(det).first(5)); }), ErrorCode::kLengthMismatch);
}

TEST(Fmem, Examples)
{
  EXPECT_DOUBLE_EQ(mt::fmem({12, 20, 10, 8}), 0.44);
  EXPECT_DOUBLE_EQ(mt::fmem({20, 0, 30, 0}), 1.0);
  EXPECT_DOUBLE_EQ(mt::fmem({0, 25, 0, 25}), 0.0);
  EXPECT_DOUBLE_EQ(mt::fmem({20, 8, 12, 10}), 0.64);
  EXPECT_EQ(code_of([] { mt::fmem({}); }), ErrorCode::kEmptyContingency);
}

TEST(Fmem, BoundedAndScaleInvariant)
{
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::size_t> d(0, 30);
  for (int i = 0; i < 1000; ++i) {
    const mt::ContingencyCounts c{d(gen), d(gen), d(gen), d(gen) + 1};
    const double f = mt::fmem(c);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    EXPECT_NEAR(mt::fmem({3 * c.tp, 3 * c.fp, 3 * c.tn, 3 * c.fn}), f, 1e-12);
  }
}

TEST(EventTree, OneEpisodePerCell)
{
  std::vector<mt::LabeledRecord> cases{st::to_labeled({true, 1.0, true, 1, false}, 1),
                                       st::to_labeled({true, 1.0, false, 0, false}, 2),
                                       st::to_labeled({true, 2.5, true, 0, false}, 3),
                                       st::to_labeled({true, 2.5, false, 2, false}, 4)};
  const auto tree = mt::build_event_tree(cases);
  EXPECT_EQ(tree.root.count, 4u);
  EXPECT_EQ(tree.root.mj, 2u);
  EXPECT_EQ(tree.n_no_takeover, 0u);
  ASSERT_EQ(tree.root.children.size(), 2u);
  for (const auto & to : tree.root.children) {
    EXPECT_EQ(to.count, 2u);
    EXPECT_DOUBLE_EQ(to.fraction, 0.5);
    for (const auto & h : to.children) {
      EXPECT_EQ(h.count, 1u);
      EXPECT_DOUBLE_EQ(h.fraction, 0.5);
    }
  }
  // timely branch: no FR; delayed branch: all FR
  EXPECT_EQ(tree.root.children[0].children[0].children[0].count, 0u);
  EXPECT_EQ(tree.root.children[1].children[0].children[0].count, 1u);
}

TEST(EventTree, SinglePath)
{
  std::vector<mt::LabeledRecord> cases{st::to_labeled({true, 2.0, true, 1, false}, 1)};
  const auto tree = mt::build_event_tree(cases);
  const auto & leaf = tree.root.children[1].children[0].children[0];
  EXPECT_EQ(leaf.label, "FR");
  EXPECT_EQ(leaf.count, 1u);
  EXPECT_DOUBLE_EQ(leaf.fraction, 1.0);
  EXPECT_EQ(tree.root.children[0].count, 0u);
  EXPECT_DOUBLE_EQ(tree.root.children[0].fraction, 0.0);
}

TEST(EventTree, ConservationAndOracleCells)
{
  std::mt19937_64 gen(6);
  std::uniform_int_distribution<std::size_t> size(1, 60);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = make_campaign(gen, size(gen));
    const auto tree = mt::build_event_tree(c.cases);
    std::size_t take_overs = 0;
    for (const auto & f : c.facts) take_overs += f.took_over;
    EXPECT_EQ(tree.root.count, take_overs);
    EXPECT_EQ(tree.root.count + tree.n_no_takeover, c.facts.size());
    std::size_t to_sum = 0;
    for (int dl = 0; dl < 2; ++dl) {
      const auto & to = tree.root.children[static_cast<std::size_t>(dl)];
      to_sum += to.count;
      std::size_t h_sum = 0;
      for (int hi = 0; hi < 2; ++hi) {
        const auto & h = to.children[static_cast<std::size_t>(hi)];
        EXPECT_EQ(h.count, st::oracle_cell(c.facts, dl, 1 - hi, -1));
        h_sum += h.count;
        EXPECT_EQ(h.children[0].count + h.children[1].count, h.count);
        EXPECT_EQ(h.children[0].count, st::oracle_cell(c.facts, dl, 1 - hi, 1));
        EXPECT_LE(h.mj, h.count);
      }
      EXPECT_EQ(h_sum, to.count);
    }
    EXPECT_EQ(to_sum, tree.root.count);
  }
}

TEST(Controllability, Examples)
{
  std::vector<ms::MisuseLabels> labels;
  for (int i = 0; i < 50; ++i) {
    ms::MisuseLabels l;
    l.controllability = i < 22 ? ms::Controllability::kProvided : ms::Controllability::kNotProvided;
    labels.push_back(l);
  }
  auto rate = mt::controllability_rate(labels);
  EXPECT_TRUE(rate.valid);
  EXPECT_DOUBLE_EQ(rate.provided, 0.44);
  EXPECT_DOUBLE_EQ(rate.not_provided, 0.56);
  EXPECT_EQ(rate.n_applicable, 50u);

  std::vector<ms::MisuseLabels> na(5);
  EXPECT_FALSE(mt::controllability_rate(na).valid);

  std::vector<ms::MisuseLabels> mixed(6);
  for (int i = 0; i < 3; ++i) mixed[static_cast<std::size_t>(i)].controllability = ms::Controllability::kProvided;
  mixed[3].controllability = ms::Controllability::kNotProvided;
  rate = mt::controllability_rate(mixed);
  EXPECT_DOUBLE_EQ(rate.provided, 0.75);
  EXPECT_EQ(rate.n_applicable, 4u);
}

TEST(Report, JsonAndMarkdown)
{
  const auto r = mt::make_report(kReference);
  const auto j = mt::to_json(r);
  EXPECT_EQ(j.at("joint").get<mt::JointCounts>(), kReference);
  const auto md = mt::to_markdown(r);
  EXPECT_NE(md.find("1.67"), std::string::npos);
  EXPECT_NE(md.find("NOT_A_PROBABILITY"), std::string::npos);
  EXPECT_NE(md.find("4.00"), std::string::npos);
}

TEST(Report, NestedCountsAreRealizable)
{
  const mt::JointCounts nested{50, 10, 6, 8, 2, 8};
  const auto cases = st::realize_joint_counts(nested);
  ASSERT_TRUE(cases.has_value());
  EXPECT_EQ(mt::joint_counts(*cases), nested);
  EXPECT_FALSE(st::realize_joint_counts(kReference).has_value());
}
