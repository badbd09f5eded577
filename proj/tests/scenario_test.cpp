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

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "sotif/error.hpp"
#include "sotif/scenario.hpp"

namespace sc = sotif::scenario;
namespace drv = sotif::driver;
using sotif::Error;
using sotif::ErrorCode;

namespace
{

double event_time(const sc::EpisodeTrace & trace, sc::EventKind kind)
{
  const auto e = trace.first(kind);
  EXPECT_TRUE(e.has_value()) << sc::to_string(kind);
  return e ? e->t : -1.0;
}

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

}  // namespace

TEST(Step, StraightAtConstantSpeed)
{
  const sc::SimConfig cfg;
  const sc::VehicleState s0;
  const auto s1 = sc::step(s0, 0.0, 0.0, 0.01, cfg);
  EXPECT_DOUBLE_EQ(s1.y, 0.0);
  EXPECT_DOUBLE_EQ(s1.heading, 0.0);
  EXPECT_NEAR(s1.s, 0.2778, 1e-12);
  EXPECT_DOUBLE_EQ(s1.speed, 27.78);
}

TEST(Step, StoppedVehicleIsFixedPoint)
{
  const sc::SimConfig cfg;
  sc::VehicleState s0;
  s0.speed = 0.0;
  s0.y = 1.2;
  s0.heading = 0.05;
  const auto s1 = sc::step(s0, 45.0, -2.0, 0.01, cfg);
  EXPECT_DOUBLE_EQ(s1.speed, 0.0);
  EXPECT_DOUBLE_EQ(s1.y, s0.y);
  EXPECT_DOUBLE_EQ(s1.heading, s0.heading);
  EXPECT_DOUBLE_EQ(s1.s, s0.s);
}

TEST(Step, HeadingRateMatchesBicycleFormula)
{
  const sc::SimConfig cfg;
  const sc::VehicleState s0;
  const auto s1 = sc::step(s0, 30.0, 0.0, 0.01, cfg);
  const double expected = 27.78 / 2.7 * std::tan(2.0 * std::numbers::pi / 180.0) * 0.01;
  EXPECT_NEAR(s1.heading, expected, 1e-15);
}

TEST(Step, ConvergesToFineRk4)
{
  const sc::SimConfig cfg;
  for (double swa : {-20.0, 5.0, 10.0}) {
    sc::VehicleState s;
    for (int i = 0; i < 200; ++i) s = sc::step(s, swa, 0.0, 0.01, cfg);
    const auto ref = sotif::testing::rk4_bicycle(27.78, swa, 15.0, 2.7, 2.0, 20000);
    EXPECT_NEAR(s.y, ref.y, 1e-3) << swa;
    EXPECT_NEAR(s.heading, ref.heading, 1e-9) << swa;
  }
}

TEST(Step, RejectsNonFiniteAndHeadingOverflow)
{
  const sc::SimConfig cfg;
  sc::VehicleState s;
  EXPECT_EQ(code_of([&] { sc::step(s, std::nan(""), 0.0, 0.01, cfg); }), ErrorCode::kEpisodeInvalid);
  EXPECT_EQ(code_of([&] { sc::step(s, 0.0, 0.0, 0.0, cfg); }), ErrorCode::kEpisodeInvalid);
  s.heading = 1.5707;
  EXPECT_EQ(code_of([&] { sc::step(s, 540.0, 0.0, 0.01, cfg); }), ErrorCode::kEpisodeInvalid);
}

TEST(Controller, CenteredIsZeroAndMrmDecelerates)
{
  const sc::SimConfig cfg;
  sc::VehicleState s;
  s.y = 3.5;
  auto cmd = sc::ads_controller(s, cfg.road, 3.5, sc::AdsMode::kAutomated, cfg);
  EXPECT_DOUBLE_EQ(cmd.swa, 0.0);
  EXPECT_DOUBLE_EQ(cmd.accel, 0.0);
  cmd = sc::ads_controller(s, cfg.road, 3.5, sc::AdsMode::kReducedFunctionalityMrm, cfg);
  EXPECT_DOUBLE_EQ(cmd.accel, -2.0);
}

TEST(Controller, OffsetFormula)
{
  const sc::SimConfig cfg;
  sc::VehicleState s;
  s.y = 4.0;
  s.heading = 0.01;
  const double rw = -0.1 * 0.5 - 0.05 * 27.78 * std::sin(0.01) - 1.0 * 0.01;
  const auto cmd = sc::ads_controller(s, cfg.road, 3.5, sc::AdsMode::kAutomated, cfg);
  EXPECT_NEAR(cmd.swa, 15.0 * rw * 180.0 / std::numbers::pi, 1e-12);
  s.y = 100.0;
  EXPECT_DOUBLE_EQ(sc::ads_controller(s, cfg.road, 3.5, sc::AdsMode::kAutomated, cfg).swa, -90.0);
}

TEST(LaneChange, QuinticProfile)
{
  const sc::SimConfig cfg;
  EXPECT_DOUBLE_EQ(sc::lane_change_target(0.0, cfg.timeline, cfg.road), 0.0);
  EXPECT_DOUBLE_EQ(sc::lane_change_target(4.0, cfg.timeline, cfg.road), 0.0);
  EXPECT_NEAR(sc::lane_change_target(6.0, cfg.timeline, cfg.road), 1.75, 1e-9);
  EXPECT_DOUBLE_EQ(sc::lane_change_target(8.0, cfg.timeline, cfg.road), 3.5);
  EXPECT_DOUBLE_EQ(sc::lane_change_target(20.0, cfg.timeline, cfg.road), 3.5);
  double prev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double y = sc::lane_change_target(i * 0.01, cfg.timeline, cfg.road);
    EXPECT_GE(y, prev);
    prev = y;
  }
}

TEST(Ideal, ZeroOnCenterlineAndSignedTowardIt)
{
  const sc::SimConfig cfg;
  sc::VehicleState s;
  s.y = 3.5;
  EXPECT_DOUBLE_EQ(sc::ideal_swa(s, cfg.road, cfg), 0.0);
  s.y = 3.0;
  EXPECT_GT(sc::ideal_swa(s, cfg.road, cfg), 0.0);
  EXPECT_DOUBLE_EQ(sc::ideal_swa(s, cfg.road, cfg),
                   sc::ads_controller(s, cfg.road, 3.5, sc::AdsMode::kAutomated, cfg).swa);
  s.y = 4.0;
  EXPECT_LT(sc::ideal_swa(s, cfg.road, cfg), 0.0);
}

TEST(Hazard, BoundaryArithmetic)
{
  const sc::RoadSpec road;
  sc::VehicleState s;
  s.y = 3.5;
  EXPECT_EQ(sc::detect_hazard(s, road), sc::Hazard::kNone);
  s.y = 4.35;
  EXPECT_EQ(sc::detect_hazard(s, road), sc::Hazard::kNone);
  s.y = 4.36;
  EXPECT_EQ(sc::detect_hazard(s, road), sc::Hazard::kWest);
  s.y = 2.65;
  EXPECT_EQ(sc::detect_hazard(s, road), sc::Hazard::kNone);
  s.y = 2.64;
  EXPECT_EQ(sc::detect_hazard(s, road), sc::Hazard::kEast);
}

TEST(Modes, TransitionTable)
{
  using M = sc::AdsMode;
  EXPECT_TRUE(sc::is_legal_transition(M::kAutomated, M::kWarningIssued));
  EXPECT_TRUE(sc::is_legal_transition(M::kWarningIssued, M::kTorIssued));
  EXPECT_TRUE(sc::is_legal_transition(M::kTorIssued, M::kDriverControl));
  EXPECT_TRUE(sc::is_legal_transition(M::kTorIssued, M::kReducedFunctionalityMrm));
  EXPECT_TRUE(sc::is_legal_transition(M::kReducedFunctionalityMrm, M::kStopped));
  EXPECT_FALSE(sc::is_legal_transition(M::kAutomated, M::kTorIssued));
  EXPECT_FALSE(sc::is_legal_transition(M::kDriverControl, M::kAutomated));
  EXPECT_FALSE(sc::is_legal_transition(M::kStopped, M::kAutomated));
  for (auto m : {M::kAutomated, M::kWarningIssued, M::kTorIssued, M::kDriverControl, M::kReducedFunctionalityMrm,
                 M::kStopped}) {
    EXPECT_EQ(sc::parse_ads_mode(sc::to_string(m)), m);
  }
}

TEST(Config, TimelineOrderingEnforced)
{
  sc::SimConfig cfg;
  EXPECT_TRUE(sc::validation_errors(cfg).empty());
  cfg.timeline.tor_time = 6.0;
  EXPECT_EQ(code_of([&] { sc::validate(cfg); }), ErrorCode::kConfigInvalid);
  EXPECT_EQ(code_of([&] { sc::Episode e(cfg); }), ErrorCode::kConfigInvalid);
  cfg = {};
  cfg.dt = -1.0;
  cfg.timeline.episode_max_duration = 5.0;
  EXPECT_GE(sc::validation_errors(cfg).size(), 2u);
}

TEST(Episode, NonResponderTimeline)
{
  const auto trace = sc::run_episode({}, drv::DriverSpec::non_responder(), 0);
  EXPECT_NEAR(event_time(trace, sc::EventKind::kWarning), 6.04, 1e-9);
  EXPECT_NEAR(event_time(trace, sc::EventKind::kMarkingGap), 6.04, 1e-9);
  EXPECT_NEAR(event_time(trace, sc::EventKind::kTor), 7.96, 1e-9);
  EXPECT_NEAR(event_time(trace, sc::EventKind::kMrmStart), 12.96, 1e-9);
  // full stop at 27.78 / 2 s after MRM start, detected on the next step
  EXPECT_NEAR(event_time(trace, sc::EventKind::kMrmStopped), 12.96 + 13.89, 0.02);
  EXPECT_FALSE(trace.first_hazard().has_value());
  EXPECT_FALSE(trace.has(sc::EventKind::kTakeOver));
  EXPECT_TRUE(trace.complete());
  EXPECT_EQ(trace.samples.back().mode, sc::AdsMode::kStopped);
  EXPECT_DOUBLE_EQ(trace.samples.back().state.speed, 0.0);
}

TEST(Episode, UniformSampleSpacingAndLegalModes)
{
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto spec = drv::DriverSpec::parametric(drv::Distribution::lognormal(0.6, 0.35),
                                                  drv::Distribution::uniform(0.3, 3.0));
    const auto trace = sc::run_episode({}, spec, seed);
    ASSERT_TRUE(trace.complete());
    for (std::size_t i = 1; i < trace.samples.size(); ++i) {
      EXPECT_NEAR(trace.samples[i].t - trace.samples[i - 1].t, 0.01, 1e-9);
      EXPECT_TRUE(sc::is_legal_transition(trace.samples[i - 1].mode, trace.samples[i].mode));
    }
    for (std::size_t i = 1; i < trace.events.size(); ++i) {
      EXPECT_LE(trace.events[i - 1].t, trace.events[i].t);
    }
    EXPECT_EQ(trace.events.back().kind, sc::EventKind::kEpisodeEnd);
    EXPECT_LE(event_time(trace, sc::EventKind::kWarning), event_time(trace, sc::EventKind::kTor));
    if (const auto to = trace.first(sc::EventKind::kTakeOver)) {
      EXPECT_GT(to->t, event_time(trace, sc::EventKind::kTor));
      EXPECT_FALSE(trace.has(sc::EventKind::kMrmStart));
    }
  }
}

TEST(Episode, Deterministic)
{
  const auto spec =
    drv::DriverSpec::parametric(drv::Distribution::lognormal(0.6, 0.35), drv::Distribution::uniform(0.5, 2.0));
  EXPECT_EQ(sc::run_episode({}, spec, 42), sc::run_episode({}, spec, 42));
  EXPECT_NE(sc::run_episode({}, spec, 42), sc::run_episode({}, spec, 43));
}

TEST(Episode, MrmSafetyForNonResponders)
{
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto trace = sc::run_episode({}, drv::DriverSpec::non_responder(), seed);
    EXPECT_FALSE(trace.first_hazard().has_value()) << seed;
    EXPECT_TRUE(trace.has(sc::EventKind::kMrmStopped));
  }
}

TEST(Episode, IdealTakeOverAvoidsHazard)
{
  const auto spec = drv::DriverSpec::parametric(drv::Distribution::fixed(1.16), drv::Distribution::fixed(1.0));
  const auto trace = sc::run_episode({}, spec, 0);
  EXPECT_NEAR(event_time(trace, sc::EventKind::kTakeOver), 9.12, 1e-9);
  EXPECT_FALSE(trace.first_hazard().has_value());
}

TEST(Episode, ExcessSteerCausesWestHazard)
{
  const auto spec = drv::DriverSpec::scripted({{11.08, drv::DriverAction::take_over(15.0)},
                                               {12.08, drv::DriverAction::steer(0.0)}});
  const auto trace = sc::run_episode({}, spec, 0);
  EXPECT_NEAR(event_time(trace, sc::EventKind::kTakeOver), 11.08, 1e-9);
  const auto h = trace.first_hazard();
  ASSERT_TRUE(h.has_value());
  EXPECT_EQ(h->kind, sc::EventKind::kHazardWest);
  EXPECT_GT(h->t, 11.08);
}

TEST(Episode, RecordedInputsReplayBitIdentically)
{
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto spec =
      drv::DriverSpec::parametric(drv::Distribution::uniform(0.5, 3.0), drv::Distribution::uniform(0.3, 3.0));
    const auto original = sc::run_episode({}, spec, seed);
    const auto log = sc::driver_inputs(original);
    ASSERT_FALSE(log.empty());
    const auto text = drv::write_session_log(log);
    const auto replay = sc::run_episode({}, drv::scripted_from_session(drv::parse_session_log(text)), 999);
    EXPECT_EQ(original, replay) << seed;
  }
}

TEST(Episode, HalvingDtBarelyMovesTheTrajectory)
{
  const auto spec = drv::DriverSpec::scripted({{9.12, drv::DriverAction::take_over(10.0)},
                                               {10.12, drv::DriverAction::steer(-5.0)},
                                               {11.0, drv::DriverAction::steer(0.0)}});
  sc::SimConfig coarse;
  sc::SimConfig fine;
  fine.dt = 0.005;
  const auto a = sc::run_episode(coarse, spec, 0);
  const auto b = sc::run_episode(fine, spec, 0);
  // compare at t = 12.0 s
  const auto & sa = a.samples.at(1200);
  const auto & sb = b.samples.at(2400);
  ASSERT_NEAR(sa.t, sb.t, 1e-9);
  EXPECT_NEAR(sa.state.y, sb.state.y, 1e-3);
}

TEST(Episode, AdvanceAfterFinishIsRejected)
{
  sc::Episode e({});
  while (!e.finished()) e.advance(drv::DriverAction::none());
  EXPECT_EQ(code_of([&] { e.advance(drv::DriverAction::none()); }), ErrorCode::kEpisodeInvalid);
}
