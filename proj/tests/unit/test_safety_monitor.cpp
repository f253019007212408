// Copyright 2026 The T34 Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "t34/safety_monitor.hpp"

namespace t34 {
namespace {

using B = BehaviourState;
using I = InputButton;

HardwareState healthy() {
  HardwareState hw;
  hw.battery_level = Percentage(99);
  hw.actuator_position = Percentage(100);
  hw.barrel_diameter = Decimal::parse("20.1");
  return hw;
}

std::vector<std::string> ids(const std::vector<Violation>& vs) {
  std::vector<std::string> out;
  for (const auto& v : vs) out.push_back(v.requirement);
  return out;
}

ControllerState confirmed_state() {
  auto s = new_controller(healthy(), "v");
  s.store = load_presets(default_presets()).store;
  s.supported_syringe_count = s.store.last_index();
  s.current = B::SYRINGE_CONFIRMED;
  s.previous = B::SYRINGE_VERIFIED;
  s.selected = default_presets()[0];
  s.syringe_confirmed = true;
  return s;
}

// Records a trace by driving the machine.
struct Recorder {
  Machine m;
  ControllerState s = m.new_controller(healthy(), "v");
  UIState ui;
  Trace trace;

  void step(const Event& e) {
    const auto r = m.dispatch(s, e);
    ui = apply_action(ui, r.action);
    trace.steps.push_back({e, s.current, r.state, ui, r.action.alert, {}});
    s = r.state;
  }
  void drop_alert(TimerId id) {
    std::erase_if(trace.steps, [&](const TraceStep& st) {
      auto* t = st.event.as<TimerExpired>();
      return t && t->id == id && st.alert;
    });
  }
};

// ------------------------------------------------------------ catalogue

TEST(Requirements, HazardClasses) {
  EXPECT_EQ(kRequirements.size(), 13u);
  EXPECT_EQ(hazard_class("1.1.2"), "Delivery Quantity");
  EXPECT_EQ(hazard_class("1.2.5"), "Critical Performance");
  EXPECT_EQ(hazard_class("1.4.1"), "Syringe Data Integrity");
  EXPECT_EQ(hazard_class("2.1.2"), "Alert");
  EXPECT_EQ(hazard_class("3.1.1"), "Voltage");
  for (const auto& r : kRequirements) EXPECT_FALSE(hazard_class(r.id).empty());
}

// ------------------------------------------------------------ state

TEST(CheckState, CleanStateHasNoViolations) {
  EXPECT_TRUE(check_state(confirmed_state(), {}).empty());
  EXPECT_TRUE(check_state(new_controller(healthy(), "v"), {}).empty());
}

TEST(CheckState, DetectsEachPredicate) {
  auto s = confirmed_state();
  s.hardware.max_rate = 6;
  EXPECT_EQ(ids(check_state(s, {})), std::vector<std::string>{"1.2.5"});

  s = confirmed_state();
  s.supported_syringe_count = 5;
  EXPECT_EQ(ids(check_state(s, {})), std::vector<std::string>{"1.4.2"});

  s = confirmed_state();
  s.syringe_confirmed = false;
  EXPECT_EQ(ids(check_state(s, {})), std::vector<std::string>{"1.1.2"});

  s = confirmed_state();
  s.selected->fill_volume = ml("121");
  EXPECT_EQ(ids(check_state(s, {})), std::vector<std::string>{"1.2.5"});

  UIState ui;
  ui.emphasis = 4;
  EXPECT_EQ(ids(check_state(confirmed_state(), ui)), std::vector<std::string>{"2.1.1"});
}

// ------------------------------------------------------------ transition

TEST(CheckTransition, ChainingAndOrder) {
  const auto before = confirmed_state();
  auto after = before;
  after.current = B::INFUSION_STARTED;
  after.previous = B::SYRINGE_CONFIRMED;
  EXPECT_TRUE(check_transition(before, after, Event::press(I::YES_START), {}).empty());

  after.previous = B::IDLE;
  EXPECT_EQ(ids(check_transition(before, after, Event::press(I::YES_START), {})),
            std::vector<std::string>{"1.4.2"});

  auto unconfirmed = before;
  unconfirmed.syringe_confirmed = false;
  after = unconfirmed;
  after.current = B::INFUSION_STARTED;
  after.previous = unconfirmed.current;
  EXPECT_EQ(ids(check_transition(unconfirmed, after, Event::press(I::YES_START), {})),
            std::vector<std::string>{"1.1.2"});
}

TEST(CheckTransition, CommitNeedsReview) {
  auto before = confirmed_state();
  before.current = B::SYRINGE_LOADED;
  before.selected.reset();
  before.syringe_confirmed = false;
  auto after = before;
  after.selected = default_presets()[0];
  EXPECT_EQ(ids(check_transition(before, after, Event::press(I::YES_START), {})),
            std::vector<std::string>{"1.4.1"});
  before.current = B::SYRINGE_VERIFIED;
  after.current = B::SYRINGE_CONFIRMED;
  after.previous = B::SYRINGE_VERIFIED;
  EXPECT_TRUE(check_transition(before, after, Event::press(I::YES_START), {}).empty());
}

TEST(CheckTransition, AlertsMustBeVisible) {
  const auto s = confirmed_state();
  UIAction a;
  a.alert = true;
  a.line1 = "Alarm";
  EXPECT_EQ(ids(check_transition(s, s, Event::press(I::EMPTY), a)),
            std::vector<std::string>{"3.2.1"});
  a.light = Light::RED;
  EXPECT_TRUE(check_transition(s, s, Event::press(I::EMPTY), a).empty());
}

TEST(CheckTransition, TimeoutMustPause) {
  auto before = confirmed_state();
  before.armed.insert(TimerId::CONFIRM_TIMEOUT);
  auto after = before;
  after.armed.erase(TimerId::CONFIRM_TIMEOUT);
  EXPECT_EQ(ids(check_transition(before, after, Event::timer(TimerId::CONFIRM_TIMEOUT), {})),
            std::vector<std::string>{"2.1.2"});
  // an expiry that was not armed is stale and ignored
  before.armed.erase(TimerId::CONFIRM_TIMEOUT);
  EXPECT_TRUE(check_transition(before, after, Event::timer(TimerId::CONFIRM_TIMEOUT), {}).empty());
}

TEST(CheckTransition, SelfTestAndSeating) {
  auto before = new_controller(healthy(), "v");
  before.hardware.lcd_fault = true;
  auto after = before;
  after.current = B::IDLE;
  EXPECT_EQ(ids(check_transition(before, after, Event::press(I::ON_OFF), {})),
            std::vector<std::string>{"3.1.1"});

  before = new_controller(healthy(), "v");
  before.current = B::ACTUATOR_ON;
  after = before;
  after.current = B::SYRINGE_LOADED;
  after.previous = B::ACTUATOR_ON;
  after.hardware.sensors = {true, false, true};
  EXPECT_EQ(ids(check_transition(before, after, Event::press(I::EMPTY), {})),
            std::vector<std::string>{"1.2.2"});
}

TEST(CheckTransition, LockedKeypad) {
  auto before = confirmed_state();
  before.current = B::SYRINGE_LOADED;
  before.keypad_lock = true;
  auto after = before;
  after.current = B::SYRINGE_VERIFIED;
  after.previous = B::SYRINGE_LOADED;
  EXPECT_EQ(ids(check_transition(before, after, Event::press(I::YES_START), {})),
            std::vector<std::string>{"2.3.1"});
}

// ------------------------------------------------------------ trace

Recorder started() {
  Recorder r;
  r.step(Event::press(I::ON_OFF, PressKind::SINGLE, 0));
  r.step(Event::timer(TimerId::BOOT, 2));
  r.step(Event::timer(TimerId::PRELOAD, 6));
  r.step(Event::sensor(SensorId::CLAMP, 1, 7));
  r.step(Event::sensor(SensorId::PLUNGER, 1, 7));
  r.step(Event::sensor(SensorId::FLANGE, 1, 7));
  r.step(Event::press(I::YES_START, PressKind::SINGLE, 8));
  r.step(Event::press(I::YES_START, PressKind::SINGLE, 9));
  r.step(Event::press(I::YES_START, PressKind::SINGLE, 10));
  EXPECT_EQ(r.s.current, B::INFUSION_STARTED);
  return r;
}

TEST(CheckTrace, EmptyTraceIsClean) { EXPECT_TRUE(check_trace({}).empty()); }

TEST(CheckTrace, UnorderedTraceRejected) {
  Trace t;
  t.steps.push_back({Event::press(I::ON_OFF, PressKind::SINGLE, 5), B::OFF, {}, {}, false, {}});
  t.steps.push_back({Event::press(I::ON_OFF, PressKind::SINGLE, 4), B::OFF, {}, {}, false, {}});
  EXPECT_THROW(check_trace(t), precondition_error);
}

TEST(CheckTrace, SixMinutePauseWithReminder) {
  auto r = started();
  r.step(Event::press(I::NO_STOP, PressKind::SINGLE, 20));
  r.step(Event::timer(TimerId::PAUSE_ALERT, 380));
  r.trace.end = 380;
  EXPECT_TRUE(check_trace(r.trace).empty()) << format_report(check_trace(r.trace));

  r.drop_alert(TimerId::PAUSE_ALERT);
  EXPECT_EQ(ids(check_trace(r.trace)), std::vector<std::string>{"1.2.4"});
}

TEST(CheckTrace, ShortPauseNeedsNoReminder) {
  auto r = started();
  r.step(Event::press(I::NO_STOP, PressKind::SINGLE, 20));
  r.trace.end = 379;
  EXPECT_TRUE(check_trace(r.trace).empty());
}

TEST(CheckTrace, RemindersStopAfterAnHour) {
  auto r = started();
  r.step(Event::press(I::NO_STOP, PressKind::SINGLE, 20));
  for (std::int64_t t = 380; t <= 20 + 3600; t += 60) r.step(Event::timer(TimerId::PAUSE_ALERT, t));
  r.trace.end = 20 + 7200;
  EXPECT_TRUE(check_trace(r.trace).empty());
  EXPECT_EQ(r.trace.steps.size(), 10u + 55u);
}

TEST(CheckTrace, ConfirmationTimeout) {
  Recorder r;
  r.step(Event::press(I::ON_OFF, PressKind::SINGLE, 0));
  r.step(Event::timer(TimerId::BOOT, 2));
  r.step(Event::timer(TimerId::PRELOAD, 6));
  r.step(Event::sensor(SensorId::CLAMP, 1, 7));
  r.step(Event::sensor(SensorId::PLUNGER, 1, 7));
  r.step(Event::sensor(SensorId::FLANGE, 1, 7));
  r.step(Event::press(I::YES_START, PressKind::SINGLE, 8));
  r.step(Event::press(I::YES_START, PressKind::SINGLE, 9));
  r.step(Event::timer(TimerId::CONFIRM_TIMEOUT, 129));
  r.trace.end = 200;
  EXPECT_EQ(r.s.current, B::PUMP_PAUSED);
  EXPECT_TRUE(check_trace(r.trace).empty()) << format_report(check_trace(r.trace));

  // without the pause the device sat in confirmation past two minutes
  r.trace.steps.pop_back();
  const auto vs = check_trace(r.trace);
  EXPECT_EQ(ids(vs), std::vector<std::string>{"2.1.2"});
  EXPECT_NE(vs[0].detail.find("2 min"), std::string::npos);
}

TEST(CheckTrace, InputWaitPerScreen) {
  Recorder r;
  r.step(Event::press(I::ON_OFF, PressKind::SINGLE, 0));
  r.step(Event::timer(TimerId::BOOT, 2));
  r.step(Event::timer(TimerId::PRELOAD, 6));
  r.step(Event::sensor(SensorId::CLAMP, 1, 7));
  r.step(Event::sensor(SensorId::PLUNGER, 1, 7));
  r.step(Event::sensor(SensorId::FLANGE, 1, 7));
  r.step(Event::press(I::YES_START, PressKind::SINGLE, 50));  // new screen restarts the wait
  r.trace.end = 109;
  EXPECT_TRUE(check_trace(r.trace).empty());
  r.trace.end = 110;
  EXPECT_EQ(ids(check_trace(r.trace)), std::vector<std::string>{"2.1.2"});
  r.step(Event::timer(TimerId::INPUT_WAIT, 110));
  EXPECT_TRUE(check_trace(r.trace).empty());
}

TEST(CheckTrace, KeyHeld) {
  Recorder r;
  r.step(Event::press(I::ON_OFF, PressKind::SINGLE, 0));
  r.step(Event::sensor(SensorId::KEY, 1, 1));
  r.step(Event::timer(TimerId::KEY_HELD, 181));
  r.trace.end = 200;
  EXPECT_TRUE(check_trace(r.trace).empty());
  r.drop_alert(TimerId::KEY_HELD);
  EXPECT_EQ(ids(check_trace(r.trace)), std::vector<std::string>{"2.3.3"});
}

TEST(CheckTrace, EvennessWithinTolerance) {
  auto r = started();
  // 17 ml over a day: after one hour 0.70833 ml
  r.step(Event::press(I::EMPTY, PressKind::SINGLE, 10 + 3600));
  r.trace.steps.back().delivered = Volume::parse("0.70833");
  r.trace.end = 10 + 3600;
  EXPECT_TRUE(check_trace(r.trace).empty());
  r.trace.steps.back().delivered = Volume::parse("0.9");
  EXPECT_TRUE(check_trace(r.trace).empty());  // 4 % of 17 ml gives a 0.68 ml band
  r.trace.steps.back().delivered = Volume::parse("1.38833");
  EXPECT_TRUE(check_trace(r.trace).empty());
  r.trace.steps.back().delivered = Volume::parse("1.38834");
  EXPECT_EQ(ids(check_trace(r.trace)), std::vector<std::string>{"1.1.4"});
}

TEST(Report, ListsWitness) {
  Violation v = violation("2.1.2", "late");
  v.witness = {Event::press(I::ON_OFF)};
  const std::string rep = format_report({v});
  EXPECT_EQ(rep, "violations: 1\n- requirement 2.1.2 [Alert]: late\n  witness (1 events):\n    " +
                     to_string(Event::press(I::ON_OFF)) + "\n");
  EXPECT_EQ(format_report({}), "violations: 0\n");
}

}  // namespace
}  // namespace t34
