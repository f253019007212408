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

// Behavioural state machine of the syringe driver.
//
// Every transition is a row of the table built by `make_transition_table`:
// a trigger (key press, autonomous evaluation, or timer), a conjunction of
// named guards, and an effect producing the UI action. `Machine::dispatch`
// turns events into triggers and applies exactly one enabled row, or
// nothing at all.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "t34/bounded_string.hpp"
#include "t34/contracts.hpp"
#include "t34/display.hpp"
#include "t34/events.hpp"
#include "t34/hardware.hpp"
#include "t34/syringe_db.hpp"

namespace t34 {

inline constexpr std::string_view kPumpId = "Syringe Pump";
inline constexpr std::string_view kDefaultPumpVersion = "FGDFG858GE";

struct ControllerState {
  BehaviourState previous = BehaviourState::OFF;
  BehaviourState current = BehaviourState::OFF;
  HardwareState hardware;
  bool keypad_lock = false;
  FixedString<12> pump_id{kPumpId};
  FixedString<10> pump_version;
  std::size_t supported_syringe_count = 0;

  SyringeStore store;
  /// Profiles matching the seated syringe, awaiting review.
  std::vector<SyringeProfile> candidates;
  std::size_t candidate_index = 0;
  /// Committed profile; set only after review and confirmation.
  std::optional<SyringeProfile> selected;
  bool syringe_confirmed = false;
  TimerSet armed;
  std::optional<std::int64_t> interrupted_since;

  bool operator==(const ControllerState&) const = default;
};

/// Builds the power-on state. `pump_version` is padded to 10 characters.
inline ControllerState new_controller(HardwareState hardware, std::string_view pump_version,
                                      int low_battery_threshold = kDefaultLowBatteryThreshold) {
  ControllerState s;
  hardware.is_battery_low = hardware.battery_level.value() < low_battery_threshold;
  s.hardware = hardware;
  s.pump_version = FixedString<10>(pump_version);
  return s;
}

// ---------------------------------------------------------------------------
// Power-on self test

struct PostReport {
  bool sensors_ok = true;
  bool battery_ok = true;
  bool lcd_ok = true;
  bool led_ok = true;

  bool passed() const { return sensors_ok && battery_ok && lcd_ok && led_ok; }
  /// Name of the first failing item, for the alert screen.
  std::string failure() const {
    if (!battery_ok) return "Charge Battery";
    if (!lcd_ok) return "LCD Fault";
    if (!led_ok) return "LED Fault";
    if (!sensors_ok) return "Sensor Fault";
    return "";
  }
  /// Fail-safe alert raised when the self test does not pass.
  UIAction alert() const {
    if (passed()) return {};
    return UIAction::alert_screen("POST Failed", failure(), "Device Stopped");
  }
};

inline PostReport power_on_self_test(const HardwareState& hw) {
  PostReport r;
  r.sensors_ok = !hw.sensor_fault;
  r.battery_ok = !hw.is_battery_low;
  r.lcd_ok = !hw.lcd_fault;
  r.led_ok = !hw.led_fault;
  return r;
}

// ---------------------------------------------------------------------------
// Transition labels

struct Trigger {
  enum class Kind : std::uint8_t { Key, Empty, Timer };
  Kind kind = Kind::Empty;
  InputButton button = InputButton::EMPTY;
  PressKind press = PressKind::SINGLE;
  TimerId timer = TimerId::BOOT;

  static Trigger key(InputButton b, PressKind k = PressKind::SINGLE) {
    return {Kind::Key, b, k, TimerId::BOOT};
  }
  static Trigger empty() { return {}; }
  static Trigger on_timer(TimerId id) { return {Kind::Timer, InputButton::EMPTY, PressKind::SINGLE, id}; }

  bool operator==(const Trigger&) const = default;
};

inline std::string to_string(const Trigger& t) {
  switch (t.kind) {
    case Trigger::Kind::Key:
      return std::string(t.press == PressKind::LONG ? "LONG " : "") + std::string(to_string(t.button));
    case Trigger::Kind::Empty: return "EMPTY";
    case Trigger::Kind::Timer: return "TIMEOUT(" + std::string(to_string(t.timer)) + ")";
  }
  return "EMPTY";
}

enum class Guard : std::uint8_t {
  POST_OK,
  POST_FAILED,
  BATTERY_LOW,
  BATTERY_OK,
  POSITION_FULL,
  POSITION_NOT_FULL,
  POSITION_EMPTY,
  POSITION_NOT_EMPTY,
  CLAMP_DOWN,
  PREVIOUS_IDLE,
  PRELOAD_ELAPSED,
  HAS_CANDIDATE,
  MULTIPLE_CANDIDATES,
  SYRINGE_CONFIRMED,
};

inline std::string_view to_string(Guard g) {
  static constexpr std::array<std::string_view, 14> names{
      "POST_OK",         "POST_FAILED",     "BATTERY_LOW",   "BATTERY_OK",
      "POSITION_FULL",   "POSITION_NOT_FULL", "POSITION_EMPTY", "POSITION_NOT_EMPTY",
      "CLAMP_DOWN",      "PREVIOUS_IDLE",   "PRELOAD_ELAPSED", "HAS_CANDIDATE",
      "MULTIPLE_CANDIDATES", "SYRINGE_CONFIRMED"};
  return names[static_cast<std::size_t>(g)];
}

/// `previous` is the caller-supplied previous state, as in update_control.
inline bool holds(Guard g, const ControllerState& s, BehaviourState previous) {
  const auto& hw = s.hardware;
  const int pos = hw.actuator_position.value();
  switch (g) {
    case Guard::POST_OK: return power_on_self_test(hw).passed();
    case Guard::POST_FAILED: return !power_on_self_test(hw).passed();
    case Guard::BATTERY_LOW: return hw.is_battery_low;
    case Guard::BATTERY_OK: return !hw.is_battery_low;
    case Guard::POSITION_FULL: return pos == 100;
    case Guard::POSITION_NOT_FULL: return pos != 100;
    case Guard::POSITION_EMPTY: return pos == 0;
    case Guard::POSITION_NOT_EMPTY: return pos != 0;
    case Guard::CLAMP_DOWN: return hw.sensors.seated();
    case Guard::PREVIOUS_IDLE: return previous == BehaviourState::IDLE;
    case Guard::PRELOAD_ELAPSED: return !s.armed.contains(TimerId::PRELOAD);
    case Guard::HAS_CANDIDATE: return !s.candidates.empty();
    case Guard::MULTIPLE_CANDIDATES: return s.candidates.size() > 1;
    case Guard::SYRINGE_CONFIRMED: return s.syringe_confirmed && s.selected.has_value();
  }
  return false;
}

/// Seeded model defects used to show the checker catches them.
enum class Mutation : std::uint8_t {
  DROP_TIMEOUT_GUARD,    // the confirmation timeout arc never fires
  DROP_DUPLICATE_CHECK,  // presets are stored without the duplicate search
  DROP_RATE_CAP,         // presets are stored without the 5 ml/h rate contract
  DROP_POST_GATE,        // power-on ignores the self test
  DROP_CLAMP_GUARD,      // syringe detection ignores the seating sensors
};
inline constexpr std::array<Mutation, 5> kAllMutations{
    Mutation::DROP_TIMEOUT_GUARD, Mutation::DROP_DUPLICATE_CHECK, Mutation::DROP_RATE_CAP,
    Mutation::DROP_POST_GATE, Mutation::DROP_CLAMP_GUARD};

inline std::string_view to_string(Mutation m) {
  switch (m) {
    case Mutation::DROP_TIMEOUT_GUARD: return "drop-timeout-guard";
    case Mutation::DROP_DUPLICATE_CHECK: return "drop-duplicate-check";
    case Mutation::DROP_RATE_CAP: return "drop-rate-cap";
    case Mutation::DROP_POST_GATE: return "drop-post-gate";
    case Mutation::DROP_CLAMP_GUARD: return "drop-clamp-guard";
  }
  return "";
}

inline std::optional<Mutation> parse_mutation(std::string_view s) {
  for (auto m : kAllMutations) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

struct MachineConfig {
  int low_battery_threshold = kDefaultLowBatteryThreshold;
  Volume priming = ml(kDefaultPriming);
  Decimal diameter_tolerance = Decimal::parse(kDefaultDiameterTolerance);
  std::vector<SyringeProfile> presets = default_presets();
  std::set<Mutation> mutations;

  bool mutated(Mutation m) const { return mutations.count(m) > 0; }
};

enum class TimerOp : std::uint8_t { ARM, CANCEL };

struct TimerCommand {
  TimerOp op = TimerOp::ARM;
  TimerId id = TimerId::BOOT;
  std::int64_t delay = 0;  // seconds, for ARM
  bool operator==(const TimerCommand&) const = default;
};

inline constexpr std::int64_t kBootSeconds = 2;
inline constexpr std::int64_t kPreloadSeconds = 4;
inline constexpr std::int64_t kConfirmTimeoutSeconds = 120;
inline constexpr std::int64_t kInputWaitSeconds = 60;
inline constexpr std::int64_t kActuatorStopSeconds = 1;
inline constexpr std::int64_t kInterruptionGraceSeconds = 300;
inline constexpr std::int64_t kPauseAlertPeriodSeconds = 60;
inline constexpr std::int64_t kPauseAlertHorizonSeconds = 3600;
inline constexpr std::int64_t kKeyHeldSeconds = 180;
inline constexpr std::int64_t kLockWindowSeconds = 5;

/// Mutable context handed to a transition effect.
struct EffectContext {
  const MachineConfig& config;
  const Event& event;
  std::vector<std::string>& log;
  std::vector<TimerCommand>& timers;

  void arm(ControllerState& s, TimerId id, std::int64_t delay) {
    s.armed.insert(id);
    timers.push_back({TimerOp::ARM, id, delay});
  }
  void cancel(ControllerState& s, TimerId id) {
    if (!s.armed.contains(id)) return;
    s.armed.erase(id);
    timers.push_back({TimerOp::CANCEL, id, 0});
  }
};

using Effect = UIAction (*)(ControllerState&, EffectContext&);

struct Arc {
  BehaviourState from;
  BehaviourState to;
  Trigger trigger;
  std::vector<Guard> guards;
  Effect effect;
  std::string actions;  // human-readable action summary for the exported table
  bool alert = false;

  bool self_loop() const { return from == to; }
};

/// States in which each timer may stay armed; leaving the scope cancels it.
inline bool timer_in_scope(TimerId id, BehaviourState s) {
  using B = BehaviourState;
  switch (id) {
    case TimerId::BOOT: return s == B::IDLE;
    case TimerId::PRELOAD: return s == B::PRELOADING;
    case TimerId::CONFIRM_TIMEOUT: return s == B::SYRINGE_CONFIRMED;
    case TimerId::INPUT_WAIT: return s == B::SYRINGE_LOADED || s == B::SYRINGE_VERIFIED;
    case TimerId::ACTUATOR_STOP: return s == B::ACTUATOR_ON;
    case TimerId::PAUSE_ALERT:
      return s == B::ACTUATOR_ON || s == B::SYRINGE_LOADED || s == B::SYRINGE_VERIFIED ||
             s == B::SYRINGE_CONFIRMED || s == B::PUMP_PAUSED || s == B::PUMP_INFO;
    case TimerId::KEY_HELD:
    case TimerId::LOCK_WINDOW: return s != B::OFF;
  }
  return false;
}

/// Plunger drawing shown while waiting for a syringe.
inline constexpr std::string_view kPlungerArt = "--([[[[[[[|===|";

namespace effects {

inline std::string rate_line(const SyringeProfile& p) {
  return "Rate " + format_quantity(rate(p).per_hour_display(), "ml/h");
}

inline UIAction actuator_screen(const ControllerState& s) {
  if (s.hardware.actuator_position.value() == 100) {
    return UIAction::screen(std::string(kPlungerArt), "Load Syringe", "", Light::RED, 2);
  }
  return UIAction::screen("Retract Plunger", "", "Press BACK", Light::GREEN, 1);
}

inline UIAction power_on(ControllerState& s, EffectContext& ctx) {
  LoadOptions opts;
  opts.reject_duplicates = !ctx.config.mutated(Mutation::DROP_DUPLICATE_CHECK);
  opts.enforce_rate_limit = !ctx.config.mutated(Mutation::DROP_RATE_CAP);
  auto loaded = load_presets(ctx.config.presets, opts);
  s.store = loaded.store;
  s.supported_syringe_count = s.store.last_index();
  for (auto& line : loaded.log) ctx.log.push_back(std::move(line));
  ctx.arm(s, TimerId::BOOT, kBootSeconds);
  return UIAction::screen("Syringe Pump", "Self Test OK", "Please Wait", Light::GREEN, 1);
}

inline UIAction post_failed(ControllerState& s, EffectContext& ctx) {
  const auto report = power_on_self_test(s.hardware);
  ctx.log.push_back("POST failed: " + report.failure());
  return report.alert();
}

inline UIAction start_preloading(ControllerState& s, EffectContext& ctx) {
  ctx.arm(s, TimerId::PRELOAD, kPreloadSeconds);
  return UIAction::screen("Preloading", "", "NO to cancel", Light::GREEN, 1);
}

inline UIAction cancel_preloading(ControllerState& s, EffectContext&) {
  return info_screen_action(s.hardware);
}

inline UIAction actuator_ready(ControllerState& s, EffectContext&) { return actuator_screen(s); }

inline UIAction retract_plunger(ControllerState& s, EffectContext&) {
  const int next = std::min(100, s.hardware.actuator_position.value() + 1);
  s.hardware.actuator_position = Percentage(next);
  if (next == 100) return actuator_screen(s);
  return {};
}

inline UIAction syringe_detected(ControllerState& s, EffectContext& ctx) {
  s.candidates = match_profiles(s.store, s.hardware.barrel_diameter, s.hardware.sensors,
                                ctx.config.diameter_tolerance);
  s.candidate_index = 0;
  s.selected.reset();
  s.syringe_confirmed = false;
  ctx.arm(s, TimerId::INPUT_WAIT, kInputWaitSeconds);
  if (s.candidates.empty()) {
    return UIAction::screen("Syringe Loaded", "Unknown Syringe", "Remove Syringe", Light::RED, 2);
  }
  return UIAction::screen("Syringe Loaded", s.candidates.front().brand,
                          s.candidates.size() > 1 ? "UP/DOWN, YES" : "Press YES", Light::GREEN, 2);
}

inline UIAction candidate_step(ControllerState& s, std::size_t delta) {
  const std::size_t n = s.candidates.size();
  s.candidate_index = (s.candidate_index + delta) % n;
  UIAction a;
  a.line2 = s.candidates[s.candidate_index].brand;
  return a;
}
inline UIAction candidate_up(ControllerState& s, EffectContext&) {
  return candidate_step(s, s.candidates.size() - 1);
}
inline UIAction candidate_down(ControllerState& s, EffectContext&) { return candidate_step(s, 1); }

inline UIAction review_profile(ControllerState& s, EffectContext& ctx) {
  ctx.arm(s, TimerId::INPUT_WAIT, kInputWaitSeconds);
  return UIAction::screen(rate_line(s.candidates[s.candidate_index]), "Confirm,", "Press YES",
                          Light::GREEN, 3);
}

inline UIAction commit_profile(ControllerState& s, EffectContext& ctx) {
  s.selected = s.candidates[s.candidate_index];
  s.syringe_confirmed = true;
  ctx.arm(s, TimerId::CONFIRM_TIMEOUT, kConfirmTimeoutSeconds);
  return UIAction::screen("Start Infusion?", "", "Press YES", Light::GREEN, 1);
}

inline UIAction start_infusion(ControllerState& s, EffectContext&) {
  s.interrupted_since.reset();
  return UIAction::screen("Pump Delivering", s.selected ? rate_line(*s.selected) : "", "",
                          Light::GREEN, 1);
}

inline UIAction confirm_timed_out(ControllerState&, EffectContext&) {
  return UIAction::alert_screen("Pump Paused", "too Long", "Press START", 1);
}

inline UIAction interrupt_infusion(ControllerState& s, EffectContext& ctx) {
  s.interrupted_since = ctx.event.t;
  ctx.arm(s, TimerId::PAUSE_ALERT, kInterruptionGraceSeconds + kPauseAlertPeriodSeconds);
  return UIAction::screen("Pump Stopped", "", "YES to resume", Light::RED, 1);
}

inline UIAction syringe_run_out(ControllerState& s, EffectContext& ctx) {
  ctx.arm(s, TimerId::ACTUATOR_STOP, kActuatorStopSeconds);
  return UIAction::screen("End of Syringe", "", "", Light::GREEN, 1);
}

inline UIAction delivery_done(ControllerState& s, EffectContext&) {
  s.interrupted_since.reset();
  return UIAction::alert_screen("Delivery Done", "", "Press ON/OFF", 1);
}

inline UIAction resume(ControllerState& s, EffectContext&) {
  s.interrupted_since.reset();
  return UIAction::screen("Resume", "Successfully", "", Light::GREEN, 1);
}

inline UIAction power_off(ControllerState& s, EffectContext&) {
  s.keypad_lock = false;
  s.store = SyringeStore{};
  s.supported_syringe_count = 0;
  s.candidates.clear();
  s.candidate_index = 0;
  s.selected.reset();
  s.syringe_confirmed = false;
  s.interrupted_since.reset();
  return UIAction::screen("", "", "", Light::OFF, 0);
}

inline UIAction show_info(ControllerState& s, EffectContext&) {
  return info_screen_action(s.hardware);
}

inline UIAction show_info_low_battery(ControllerState& s, EffectContext&) {
  auto info = info_screen_action(s.hardware);
  return UIAction::alert_screen(*info.line1, *info.line3, "Charge Battery", 3);
}

inline UIAction leave_info(ControllerState& s, EffectContext&) { return actuator_screen(s); }

inline UIAction charge_battery(ControllerState&, EffectContext&) {
  UIAction a;
  a.line3 = "Charge Battery";
  a.light = Light::RED;
  a.emphasis = 3;
  a.alert = true;
  return a;
}

inline UIAction pause_alert(ControllerState& s, EffectContext& ctx) {
  const std::int64_t since = s.interrupted_since.value_or(ctx.event.t);
  const std::int64_t elapsed = ctx.event.t - since;
  if (elapsed + kPauseAlertPeriodSeconds <= kPauseAlertHorizonSeconds) {
    ctx.arm(s, TimerId::PAUSE_ALERT, kPauseAlertPeriodSeconds);
  }
  const std::int64_t minutes = std::max<std::int64_t>(elapsed / 60, 0);
  return UIAction::alert_screen("Infusion Halted", "Paused " + std::to_string(minutes) + " min",
                                "YES to resume", 1);
}

inline UIAction key_held(ControllerState&, EffectContext&) {
  return UIAction::alert_screen("Key Held 3 min", "", "Release Key", 1);
}

inline UIAction input_wait(ControllerState&, EffectContext&) {
  return UIAction::alert_screen("No Input 1 min", "", "Press YES", 1);
}

}  // namespace effects

/// The full transition table, with any mutations applied.
inline std::vector<Arc> make_transition_table(const std::set<Mutation>& mutations = {}) {
  using B = BehaviourState;
  using G = Guard;
  using I = InputButton;
  using T = Trigger;
  const bool drop_post = mutations.count(Mutation::DROP_POST_GATE) > 0;
  const bool drop_clamp = mutations.count(Mutation::DROP_CLAMP_GUARD) > 0;
  const bool drop_timeout = mutations.count(Mutation::DROP_TIMEOUT_GUARD) > 0;

  auto clamp = [&](std::vector<Guard> g) {
    if (drop_clamp) std::erase(g, G::CLAMP_DOWN);
    return g;
  };

  std::vector<Arc> t;
  // s0 -> s1, power-on behind the self test
  t.push_back({B::OFF, B::IDLE, T::key(I::ON_OFF),
               drop_post ? std::vector<Guard>{} : std::vector<Guard>{G::POST_OK},
               effects::power_on, "load presets; arm BOOT; \"Syringe Pump\"/\"Self Test OK\"; GREEN"});
  if (!drop_post) {
    t.push_back({B::OFF, B::OFF, T::key(I::ON_OFF), {G::POST_FAILED}, effects::post_failed,
                 "\"POST Failed\"/<failed item>; RED", true});
  }
  // s1 -> s2
  t.push_back({B::IDLE, B::PRELOADING, T::on_timer(TimerId::BOOT), {}, effects::start_preloading,
               "arm PRELOAD; \"Preloading\"/\"NO to cancel\"; GREEN"});
  t.push_back({B::IDLE, B::PRELOADING, T::key(I::ON_OFF), {}, effects::start_preloading,
               "arm PRELOAD; \"Preloading\"/\"NO to cancel\"; GREEN"});
  // s2 -> s1, cancelled inside the window
  t.push_back({B::PRELOADING, B::IDLE, T::key(I::NO_STOP), {G::PREVIOUS_IDLE},
               effects::cancel_preloading, "info screen \"Max. Rate\"/\"Occl.\"/\"Battery\"; GREEN"});
  // s2 -> s3
  t.push_back({B::PRELOADING, B::ACTUATOR_ON, T::empty(),
               {G::PREVIOUS_IDLE, G::PRELOAD_ELAPSED, G::POSITION_FULL}, effects::actuator_ready,
               "plunger art/\"Load Syringe\"; RED"});
  t.push_back({B::PRELOADING, B::ACTUATOR_ON, T::empty(),
               {G::PREVIOUS_IDLE, G::PRELOAD_ELAPSED, G::POSITION_NOT_FULL}, effects::actuator_ready,
               "\"Retract Plunger\"/\"Press BACK\"; GREEN"});
  // s3 self-loop, plunger retraction
  t.push_back({B::ACTUATOR_ON, B::ACTUATOR_ON, T::key(I::BACK),
               {G::POSITION_NOT_FULL, G::POSITION_NOT_EMPTY}, effects::retract_plunger,
               "plunger pos + 1; at 100 \"Load Syringe\"; RED"});
  // s3 -> s4, syringe seated
  t.push_back({B::ACTUATOR_ON, B::SYRINGE_LOADED, T::empty(),
               clamp({G::CLAMP_DOWN, G::POSITION_NOT_EMPTY}), effects::syringe_detected,
               "match profiles; arm INPUT_WAIT; \"Syringe Loaded\"/<brand>"});
  t.push_back({B::ACTUATOR_ON, B::SYRINGE_LOADED, T::key(I::YES_START),
               clamp({G::CLAMP_DOWN, G::POSITION_NOT_EMPTY}), effects::syringe_detected,
               "match profiles; arm INPUT_WAIT; \"Syringe Loaded\"/<brand>"});
  // s3 -> s9
  t.push_back({B::ACTUATOR_ON, B::INFUSION_STOPPED, T::empty(), {G::POSITION_EMPTY},
               effects::delivery_done, "\"Delivery Done\"/\"Press ON/OFF\"; RED", true});
  // s3 <-> s10
  t.push_back({B::ACTUATOR_ON, B::PUMP_INFO, T::key(I::INFO, PressKind::LONG), {G::BATTERY_OK},
               effects::show_info, "info screen; GREEN"});
  t.push_back({B::ACTUATOR_ON, B::PUMP_INFO, T::key(I::INFO, PressKind::LONG), {G::BATTERY_LOW},
               effects::show_info_low_battery, "info screen/\"Charge Battery\"; RED", true});
  t.push_back({B::PUMP_INFO, B::ACTUATOR_ON, T::key(I::INFO), {}, effects::leave_info,
               "restore actuator screen"});
  t.push_back({B::PUMP_INFO, B::PUMP_INFO, T::empty(), {G::BATTERY_LOW}, effects::charge_battery,
               "\"Charge Battery\"; RED", true});
  // s4
  t.push_back({B::SYRINGE_LOADED, B::SYRINGE_LOADED, T::key(I::UP), {G::MULTIPLE_CANDIDATES},
               effects::candidate_up, "previous candidate brand"});
  t.push_back({B::SYRINGE_LOADED, B::SYRINGE_LOADED, T::key(I::DOWN), {G::MULTIPLE_CANDIDATES},
               effects::candidate_down, "next candidate brand"});
  t.push_back({B::SYRINGE_LOADED, B::SYRINGE_VERIFIED, T::key(I::YES_START), {G::HAS_CANDIDATE},
               effects::review_profile, "arm INPUT_WAIT; \"Rate <r>ml/h\"/\"Confirm,\"/\"Press YES\""});
  // s5 -> s6, the reviewed profile is committed here
  t.push_back({B::SYRINGE_VERIFIED, B::SYRINGE_CONFIRMED, T::key(I::YES_START), {G::HAS_CANDIDATE},
               effects::commit_profile, "commit profile; arm CONFIRM_TIMEOUT; \"Start Infusion?\""});
  // s6
  t.push_back({B::SYRINGE_CONFIRMED, B::INFUSION_STARTED, T::key(I::YES_START), {G::SYRINGE_CONFIRMED},
               effects::start_infusion, "\"Pump Delivering\"/\"Rate <r>ml/h\"; GREEN"});
  if (!drop_timeout) {
    t.push_back({B::SYRINGE_CONFIRMED, B::PUMP_PAUSED, T::on_timer(TimerId::CONFIRM_TIMEOUT), {},
                 effects::confirm_timed_out, "\"Pump Paused\"/\"too Long\"; RED", true});
  }
  // s8 -> s7
  t.push_back({B::PUMP_PAUSED, B::INFUSION_STARTED, T::key(I::YES_START), {G::SYRINGE_CONFIRMED},
               effects::start_infusion, "\"Pump Delivering\"/\"Rate <r>ml/h\"; GREEN"});
  // s7 -> s3
  t.push_back({B::INFUSION_STARTED, B::ACTUATOR_ON, T::key(I::NO_STOP), {},
               effects::interrupt_infusion, "arm PAUSE_ALERT; \"Pump Stopped\"/\"YES to resume\"; RED"});
  t.push_back({B::INFUSION_STARTED, B::ACTUATOR_ON, T::empty(), {G::POSITION_EMPTY},
               effects::syringe_run_out, "arm ACTUATOR_STOP; \"End of Syringe\""});
  // s9
  t.push_back({B::INFUSION_STOPPED, B::INFUSION_STARTED, T::key(I::YES_START),
               {G::SYRINGE_CONFIRMED, G::POSITION_NOT_EMPTY}, effects::resume,
               "\"Resume\"/\"Successfully\"; GREEN"});
  t.push_back({B::INFUSION_STOPPED, B::OFF, T::key(I::ON_OFF), {}, effects::power_off,
               "blank screen; light OFF"});

  // Timer alert self-loops.
  for (auto s : {B::SYRINGE_LOADED, B::SYRINGE_VERIFIED}) {
    t.push_back({s, s, T::on_timer(TimerId::INPUT_WAIT), {}, effects::input_wait,
                 "\"No Input 1 min\"/\"Press YES\"; RED", true});
  }
  for (auto s : kAllStates) {
    if (timer_in_scope(TimerId::PAUSE_ALERT, s)) {
      t.push_back({s, s, T::on_timer(TimerId::PAUSE_ALERT), {}, effects::pause_alert,
                   "re-arm PAUSE_ALERT up to 1 h; \"Infusion Halted\"; RED", true});
    }
  }
  for (auto s : kAllStates) {
    if (timer_in_scope(TimerId::KEY_HELD, s)) {
      t.push_back({s, s, T::on_timer(TimerId::KEY_HELD), {}, effects::key_held,
                   "\"Key Held 3 min\"/\"Release Key\"; RED", true});
    }
  }
  return t;
}

/// Result of one controller step.
struct StepResult {
  ControllerState state;
  UIAction action;
  std::vector<std::string> log;
  std::vector<TimerCommand> timers;
  std::optional<std::size_t> arc;  // index into the table of the fired row
};

class Machine {
 public:
  explicit Machine(MachineConfig config = {})
      : config_(std::move(config)), table_(make_transition_table(config_.mutations)) {}

  const MachineConfig& config() const { return config_; }
  const std::vector<Arc>& table() const { return table_; }

  ControllerState new_controller(HardwareState hw, std::string_view version) const {
    return t34::new_controller(hw, version, config_.low_battery_threshold);
  }

  /// Rows enabled for `trigger` in `s`, given the caller's previous state.
  std::vector<std::size_t> enabled_arcs(const ControllerState& s, BehaviourState previous,
                                        const Trigger& trigger) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < table_.size(); ++i) {
      const Arc& a = table_[i];
      if (a.from != s.current || !(a.trigger == trigger)) continue;
      if (std::all_of(a.guards.begin(), a.guards.end(),
                      [&](Guard g) { return holds(g, s, previous); })) {
        out.push_back(i);
      }
    }
    return out;
  }

  /// Fires the single enabled row for `trigger`, or returns `s` unchanged.
  StepResult fire(const ControllerState& s, BehaviourState previous, const Trigger& trigger,
                  const Event& event) const {
    StepResult r{s, {}, {}, {}, std::nullopt};
    const auto enabled = enabled_arcs(s, previous, trigger);
    T34_ENSURES_MSG(enabled.size() <= 1, "nondeterministic transition in " +
                                             std::string(to_string(s.current)) + " on " + to_string(trigger));
    if (enabled.empty()) return r;
    const Arc& arc = table_[enabled.front()];
    r.arc = enabled.front();
    r.state.previous = s.current;
    r.state.current = arc.to;
    EffectContext ctx{config_, event, r.log, r.timers};
    for (std::size_t i = 0; i < kTimerCount; ++i) {
      const auto id = static_cast<TimerId>(i);
      if (!timer_in_scope(id, arc.to)) ctx.cancel(r.state, id);
    }
    r.action = arc.effect(r.state, ctx);
    if (arc.alert) r.action.alert = true;
    r.log.push_back("PREVIOUS STATE is:" + std::string(to_string(r.state.previous)));
    T34_ENSURES(r.state.previous == s.current);
    return r;
  }

  /// Single-press key or EMPTY evaluation against the given previous state.
  StepResult update_control(const ControllerState& s, BehaviourState previous,
                            InputButton button) const {
    const Trigger trig = button == InputButton::EMPTY ? Trigger::empty() : Trigger::key(button);
    return fire(s, previous, trig, Event::press(button));
  }

  /// Translates an event into a step. Always logs at least one line.
  StepResult dispatch(const ControllerState& s, const Event& e) const {
    if (auto* b = e.as<ButtonPress>()) return on_button(s, *b, e);
    if (auto* t = e.as<TimerExpired>()) return on_timer(s, t->id, e);
    if (auto* c = e.as<SensorChanged>()) return on_sensor(s, *c, e);
    return on_power_cycle(s, e);
  }

  /// Machine-readable table, one arc per line, fixed field order.
  std::string export_table() const {
    std::ostringstream out;
    for (const Arc& a : table_) {
      out << "from=" << to_string(a.from) << " to=" << to_string(a.to)
          << " trigger=" << to_string(a.trigger) << " guards=[";
      for (std::size_t i = 0; i < a.guards.size(); ++i) {
        out << (i ? "," : "") << to_string(a.guards[i]);
      }
      out << "] alert=" << (a.alert ? "true" : "false") << " actions=" << a.actions << "\n";
    }
    return out.str();
  }

 private:
  StepResult identity(const ControllerState& s, std::string line) const {
    StepResult r{s, {}, {}, {}, std::nullopt};
    r.log.push_back(std::move(line));
    return r;
  }

  StepResult on_button(const ControllerState& s, const ButtonPress& b, const Event& e) const {
    const std::string click =
        b.kind == PressKind::SINGLE ? "Log Event: Left Click" : "Log Event: Double Click";
    if (b.button == InputButton::EMPTY) {
      auto r = fire(s, s.previous, Trigger::empty(), e);
      r.log.insert(r.log.begin(), "Log Event: Empty");
      return r;
    }
    if (b.kind == PressKind::LONG && b.button != InputButton::INFO) {
      return identity(s, click + " (long press ignored)");
    }
    ControllerState next = s;
    std::vector<std::string> pre_log{click};
    std::vector<TimerCommand> pre_timers;
    if (s.current != BehaviourState::OFF) {
      if (b.button == InputButton::YES_START && s.armed.contains(TimerId::LOCK_WINDOW)) {
        StepResult r{s, {}, {click}, {}, std::nullopt};
        r.state.keypad_lock = !s.keypad_lock;
        r.state.armed.erase(TimerId::LOCK_WINDOW);
        r.timers.push_back({TimerOp::CANCEL, TimerId::LOCK_WINDOW, 0});
        r.log.emplace_back(r.state.keypad_lock ? "Keypad Locked" : "Keypad Unlocked");
        r.action.line3 = r.state.keypad_lock ? "Keypad Locked" : "Keypad Unlocked";
        return r;
      }
      if (s.keypad_lock && b.button != InputButton::INFO) {
        return identity(s, click + " (keypad locked)");
      }
      if (b.button == InputButton::INFO && b.kind == PressKind::LONG &&
          !s.armed.contains(TimerId::LOCK_WINDOW)) {
        next.armed.insert(TimerId::LOCK_WINDOW);
        pre_timers.push_back({TimerOp::ARM, TimerId::LOCK_WINDOW, kLockWindowSeconds});
      }
    }
    auto r = fire(next, next.previous, Trigger::key(b.button, b.kind), e);
    r.log.insert(r.log.begin(), pre_log.begin(), pre_log.end());
    r.timers.insert(r.timers.begin(), pre_timers.begin(), pre_timers.end());
    return r;
  }

  StepResult on_timer(const ControllerState& s, TimerId id, const Event& e) const {
    const std::string line = "Log Event: Timer " + std::string(to_string(id));
    if (!s.armed.contains(id)) return identity(s, line + " (not armed)");
    ControllerState next = s;
    next.armed.erase(id);
    if (id == TimerId::LOCK_WINDOW) {
      StepResult r{next, {}, {line}, {}, std::nullopt};
      return r;
    }
    const bool autonomous = id == TimerId::PRELOAD || id == TimerId::ACTUATOR_STOP;
    auto r = fire(next, next.previous, autonomous ? Trigger::empty() : Trigger::on_timer(id), e);
    r.log.insert(r.log.begin(), line);
    return r;
  }

  StepResult on_sensor(const ControllerState& s, const SensorChanged& c, const Event& e) const {
    const std::string line = "Log Event: Sensor " + std::string(to_string(c.sensor)) + "=" +
                             (c.sensor == SensorId::DIAMETER ? Decimal::from_raw(c.value).to_string()
                                                             : std::to_string(c.value));
    ControllerState next = s;
    HardwareState& hw = next.hardware;
    std::vector<TimerCommand> timers;
    switch (c.sensor) {
      case SensorId::CLAMP: hw.sensors.clamp = c.value != 0; break;
      case SensorId::PLUNGER: hw.sensors.plunger = c.value != 0; break;
      case SensorId::FLANGE: hw.sensors.flange = c.value != 0; break;
      case SensorId::BATTERY:
        hw.battery_level = Percentage(static_cast<int>(c.value));
        hw.is_battery_low = hw.battery_level.value() < config_.low_battery_threshold;
        break;
      case SensorId::POSITION: hw.actuator_position = Percentage(static_cast<int>(c.value)); break;
      case SensorId::DIAMETER: hw.barrel_diameter = Decimal::from_raw(c.value); break;
      case SensorId::KEY:
        hw.key_stuck = c.value != 0;
        if (s.current != BehaviourState::OFF) {
          if (hw.key_stuck) {
            next.armed.insert(TimerId::KEY_HELD);
            timers.push_back({TimerOp::ARM, TimerId::KEY_HELD, kKeyHeldSeconds});
          } else if (next.armed.contains(TimerId::KEY_HELD)) {
            next.armed.erase(TimerId::KEY_HELD);
            timers.push_back({TimerOp::CANCEL, TimerId::KEY_HELD, 0});
          }
        }
        break;
      case SensorId::LCD_FAULT: hw.lcd_fault = c.value != 0; break;
      case SensorId::LED_FAULT: hw.led_fault = c.value != 0; break;
      case SensorId::SENSOR_FAULT: hw.sensor_fault = c.value != 0; break;
    }
    if (next.hardware == s.hardware) return identity(s, line + " (unchanged)");
    auto r = fire(next, next.previous, Trigger::empty(), e);
    r.log.insert(r.log.begin(), line);
    r.timers.insert(r.timers.begin(), timers.begin(), timers.end());
    return r;
  }

  StepResult on_power_cycle(const ControllerState& s, const Event&) const {
    ControllerState next = new_controller(s.hardware, s.pump_version.trimmed());
    next.previous = s.current;
    next.current = BehaviourState::OFF;
    StepResult r{next, UIAction::screen("", "", "", Light::OFF, 0), {"Log Event: Power Cycle"}, {},
                 std::nullopt};
    for (std::size_t i = 0; i < kTimerCount; ++i) {
      const auto id = static_cast<TimerId>(i);
      if (s.armed.contains(id)) r.timers.push_back({TimerOp::CANCEL, id, 0});
    }
    r.log.push_back("PREVIOUS STATE is:" + std::string(to_string(next.previous)));
    return r;
  }

  MachineConfig config_;
  std::vector<Arc> table_;
};

}  // namespace t34
