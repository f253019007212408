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

// Vocabulary of the controller: behaviour states, keys, timers, sensors and
// events, plus their stable text forms used in logs, traces and scenarios.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "t34/contracts.hpp"
#include "t34/fixed_point.hpp"

namespace t34 {

enum class BehaviourState : std::uint8_t {
  OFF,                // s0
  IDLE,               // s1
  PRELOADING,         // s2
  ACTUATOR_ON,        // s3
  SYRINGE_LOADED,     // s4
  SYRINGE_VERIFIED,   // s5
  SYRINGE_CONFIRMED,  // s6
  INFUSION_STARTED,   // s7
  PUMP_PAUSED,        // s8
  INFUSION_STOPPED,   // s9
  PUMP_INFO,          // s10
};
inline constexpr std::size_t kBehaviourStateCount = 11;

enum class InputButton : std::uint8_t { INFO, UP, DOWN, YES_START, NO_STOP, FF, BACK, ON_OFF, EMPTY };
inline constexpr std::size_t kInputButtonCount = 9;

enum class PressKind : std::uint8_t { SINGLE, LONG };

enum class TimerId : std::uint8_t {
  BOOT,             // power-on self test settling, 2 s
  PRELOAD,          // cancellable preloading window, 4 s
  CONFIRM_TIMEOUT,  // start confirmation, 2 min
  INPUT_WAIT,       // no input in a prompt state, 1 min
  ACTUATOR_STOP,    // actuator run-out settle, 1 s
  PAUSE_ALERT,      // interrupted infusion, first at 6 min then every minute
  KEY_HELD,         // key held down, 3 min
  LOCK_WINDOW,      // keypad lock gesture window, 5 s
};
inline constexpr std::size_t kTimerCount = 8;

enum class SensorId : std::uint8_t {
  CLAMP,
  PLUNGER,
  FLANGE,
  BATTERY,       // percent
  POSITION,      // actuator travel remaining, percent
  DIAMETER,      // hundredths of a mm
  KEY,           // 1 while a key is held down
  LCD_FAULT,
  LED_FAULT,
  SENSOR_FAULT,
};
inline constexpr std::size_t kSensorCount = 10;

namespace detail {

inline constexpr std::array<std::string_view, kBehaviourStateCount> kStateNames{
    "OFF",           "IDLE",           "PRELOADING",  "ACTUATOR_ON",
    "SYRINGE_LOADED", "SYRINGE_VERIFIED", "SYRINGE_CONFIRMED", "INFUSION_STARTED",
    "PUMP_PAUSED",   "INFUSION_STOPPED", "PUMP_INFO"};
inline constexpr std::array<std::string_view, kInputButtonCount> kButtonNames{
    "INFO", "UP", "DOWN", "YES_START", "NO_STOP", "FF", "BACK", "ON_OFF", "EMPTY"};
inline constexpr std::array<std::string_view, kTimerCount> kTimerNames{
    "BOOT",          "PRELOAD",     "CONFIRM_TIMEOUT", "INPUT_WAIT",
    "ACTUATOR_STOP", "PAUSE_ALERT", "KEY_HELD",        "LOCK_WINDOW"};
inline constexpr std::array<std::string_view, kSensorCount> kSensorNames{
    "CLAMP", "PLUNGER", "FLANGE", "BATTERY", "POSITION", "DIAMETER", "KEY",
    "LCD_FAULT", "LED_FAULT", "SENSOR_FAULT"};

template <class Enum, std::size_t N>
std::optional<Enum> parse_enum(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

}  // namespace detail

inline std::string_view to_string(BehaviourState s) { return detail::kStateNames[static_cast<std::size_t>(s)]; }
inline std::string_view to_string(InputButton b) { return detail::kButtonNames[static_cast<std::size_t>(b)]; }
inline std::string_view to_string(TimerId t) { return detail::kTimerNames[static_cast<std::size_t>(t)]; }
inline std::string_view to_string(SensorId s) { return detail::kSensorNames[static_cast<std::size_t>(s)]; }
inline std::string_view to_string(PressKind k) { return k == PressKind::SINGLE ? "SINGLE" : "LONG"; }

inline std::optional<BehaviourState> parse_state(std::string_view s) {
  return detail::parse_enum<BehaviourState>(detail::kStateNames, s);
}
inline std::optional<InputButton> parse_button(std::string_view s) {
  return detail::parse_enum<InputButton>(detail::kButtonNames, s);
}
inline std::optional<TimerId> parse_timer(std::string_view s) {
  return detail::parse_enum<TimerId>(detail::kTimerNames, s);
}
inline std::optional<SensorId> parse_sensor(std::string_view s) {
  return detail::parse_enum<SensorId>(detail::kSensorNames, s);
}

inline constexpr std::array<BehaviourState, kBehaviourStateCount> kAllStates{
    BehaviourState::OFF,              BehaviourState::IDLE,
    BehaviourState::PRELOADING,       BehaviourState::ACTUATOR_ON,
    BehaviourState::SYRINGE_LOADED,   BehaviourState::SYRINGE_VERIFIED,
    BehaviourState::SYRINGE_CONFIRMED, BehaviourState::INFUSION_STARTED,
    BehaviourState::PUMP_PAUSED,      BehaviourState::INFUSION_STOPPED,
    BehaviourState::PUMP_INFO};

/// Set of armed timers.
class TimerSet {
 public:
  constexpr bool contains(TimerId id) const { return bits_ & bit(id); }
  constexpr void insert(TimerId id) { bits_ |= bit(id); }
  constexpr void erase(TimerId id) { bits_ &= static_cast<std::uint8_t>(~bit(id)); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  static constexpr TimerSet from_bits(std::uint8_t b) {
    TimerSet s;
    s.bits_ = b;
    return s;
  }
  constexpr bool operator==(const TimerSet&) const = default;

 private:
  static constexpr std::uint8_t bit(TimerId id) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(id));
  }
  std::uint8_t bits_ = 0;
};

struct ButtonPress {
  InputButton button = InputButton::EMPTY;
  PressKind kind = PressKind::SINGLE;
  bool operator==(const ButtonPress&) const = default;
};
struct TimerExpired {
  TimerId id = TimerId::BOOT;
  bool operator==(const TimerExpired&) const = default;
};
struct SensorChanged {
  SensorId sensor = SensorId::CLAMP;
  std::int64_t value = 0;
  bool operator==(const SensorChanged&) const = default;
};
struct PowerCycle {
  bool operator==(const PowerCycle&) const = default;
};

/// Input to the controller, stamped with the virtual-clock second at which
/// it is dispatched.
struct Event {
  std::variant<ButtonPress, TimerExpired, SensorChanged, PowerCycle> kind;
  std::int64_t t = 0;

  bool operator==(const Event&) const = default;

  static Event press(InputButton b, PressKind k = PressKind::SINGLE, std::int64_t t = 0) {
    return {ButtonPress{b, k}, t};
  }
  static Event timer(TimerId id, std::int64_t t = 0) { return {TimerExpired{id}, t}; }
  static Event sensor(SensorId s, std::int64_t v, std::int64_t t = 0) {
    return {SensorChanged{s, v}, t};
  }
  static Event power_cycle(std::int64_t t = 0) { return {PowerCycle{}, t}; }

  template <class K>
  const K* as() const {
    return std::get_if<K>(&kind);
  }
};

/// "press YES_START", "long INFO", "timer PRELOAD", "sensor CLAMP 1",
/// "sensor DIAMETER 20.1", "power-cycle".
inline std::string to_string(const Event& e) {
  if (auto* b = e.as<ButtonPress>()) {
    return std::string(b->kind == PressKind::SINGLE ? "press " : "long ") +
           std::string(to_string(b->button));
  }
  if (auto* t = e.as<TimerExpired>()) return "timer " + std::string(to_string(t->id));
  if (auto* s = e.as<SensorChanged>()) {
    const std::string v = s->sensor == SensorId::DIAMETER
                              ? Decimal::from_raw(s->value).to_string()
                              : std::to_string(s->value);
    return "sensor " + std::string(to_string(s->sensor)) + " " + v;
  }
  return "power-cycle";
}

class event_parse_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inverse of to_string(Event); the timestamp is supplied separately.
inline Event parse_event(std::string_view text, std::int64_t t = 0) {
  auto fail = [&](const std::string& why) -> Event {
    throw event_parse_error("bad event '" + std::string(text) + "': " + why);
  };
  auto next_word = [](std::string_view& s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    const auto end = s.find(' ');
    std::string_view w = s.substr(0, end);
    s.remove_prefix(end == std::string_view::npos ? s.size() : end);
    return w;
  };
  std::string_view rest = text;
  const std::string_view verb = next_word(rest);
  if (verb == "power-cycle") {
    if (!next_word(rest).empty()) return fail("trailing text");
    return Event::power_cycle(t);
  }
  const std::string_view name = next_word(rest);
  if (verb == "press" || verb == "long") {
    auto b = parse_button(name);
    if (!b) return fail("unknown button");
    if (!next_word(rest).empty()) return fail("trailing text");
    return Event::press(*b, verb == "press" ? PressKind::SINGLE : PressKind::LONG, t);
  }
  if (verb == "timer") {
    auto id = parse_timer(name);
    if (!id) return fail("unknown timer");
    if (!next_word(rest).empty()) return fail("trailing text");
    return Event::timer(*id, t);
  }
  if (verb == "sensor") {
    auto s = parse_sensor(name);
    if (!s) return fail("unknown sensor");
    const std::string_view value = next_word(rest);
    if (value.empty()) return fail("missing value");
    if (!next_word(rest).empty()) return fail("trailing text");
    try {
      if (*s == SensorId::DIAMETER) return Event::sensor(*s, Decimal::parse(value).raw(), t);
      const auto v = Fixed<1>::parse(value);
      return Event::sensor(*s, v.raw(), t);
    } catch (const precondition_error&) {
      return fail("bad value");
    }
  }
  return fail("unknown verb");
}

}  // namespace t34
