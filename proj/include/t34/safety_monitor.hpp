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

// Safety requirements as predicates over states, transitions and traces.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "t34/contracts.hpp"
#include "t34/controller.hpp"
#include "t34/display.hpp"
#include "t34/events.hpp"
#include "t34/syringe_db.hpp"

namespace t34 {

enum class Scope : std::uint8_t { STATE, TRANSITION, TRACE };

struct Requirement {
  std::string_view id;
  Scope scope;
  std::string_view description;
};

inline constexpr std::array<Requirement, 13> kRequirements{{
    {"1.1.2", Scope::TRANSITION, "syringe type cannot change after confirmation"},
    {"1.1.4", Scope::TRACE, "delivery is spread evenly over 24 hours"},
    {"1.2.2", Scope::TRANSITION, "infusion setup requires a seated syringe"},
    {"1.2.4", Scope::TRACE, "interruption over 5 min alerts every minute up to 1 h"},
    {"1.2.5", Scope::STATE, "no flow rate above the 5 ml/h device maximum"},
    {"1.4.1", Scope::TRANSITION, "a profile is committed only after user review"},
    {"1.4.2", Scope::STATE, "syringe data initialised, distinct and consistent"},
    {"2.1.1", Scope::STATE, "display lines concise: at most 15 characters"},
    {"2.1.2", Scope::TRACE, "missing input and confirmation timeouts raise alerts"},
    {"2.3.1", Scope::TRANSITION, "a locked keypad ignores operating keys"},
    {"2.3.3", Scope::TRACE, "a key held down for 3 min raises an alert"},
    {"3.1.1", Scope::TRANSITION, "power-on proceeds only after a passing self test"},
    {"3.2.1", Scope::TRANSITION, "alerts are visible: red light and text"},
}};

inline std::string_view hazard_class(std::string_view id) {
  if (id == "1.2.5") return "Critical Performance";
  if (id == "1.4.1" || id == "1.2.2") return "Syringe Data Integrity";
  if (id == "1.4.2") return "Syringe Data Availability";
  if (id.starts_with("1.1.") || id.starts_with("1.2.") || id.starts_with("1.3.")) {
    return "Delivery Quantity";
  }
  if (id.starts_with("2.") || id.starts_with("3.2.")) return "Alert";
  if (id == "3.1.1") return "Voltage";
  return "Critical Performance";
}

struct Violation {
  std::string requirement;
  std::string hazard;
  std::string detail;
  std::vector<Event> witness;  // filled in by the model checker

  bool operator==(const Violation&) const = default;
};

inline Violation violation(std::string_view id, std::string detail) {
  return {std::string(id), std::string(hazard_class(id)), std::move(detail), {}};
}

inline bool infusing_or_committed(BehaviourState s) {
  return s == BehaviourState::SYRINGE_CONFIRMED || s == BehaviourState::INFUSION_STARTED ||
         s == BehaviourState::PUMP_PAUSED;
}

// ---------------------------------------------------------------------------
// State predicates

inline std::vector<Violation> check_state(const ControllerState& s, const UIState& ui) {
  std::vector<Violation> out;
  const auto& hw = s.hardware;

  if (hw.max_rate != kDeviceMaxRate) {
    out.push_back(violation("1.2.5", "device max rate " + std::to_string(hw.max_rate) + "ml/h"));
  }
  for (const auto& p : s.store.entries()) {
    if (!FlowRate{p.fill_volume}.within_device_limit()) {
      out.push_back(violation("1.2.5", "stored profile " + p.brand + " " +
                                           p.fill_volume.to_string() + "ml exceeds 5ml/h"));
    }
  }
  if (s.selected && !FlowRate{s.selected->fill_volume}.within_device_limit()) {
    out.push_back(violation("1.2.5", "selected profile exceeds 5ml/h"));
  }

  const auto entries = s.store.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      if (entries[i].brand == entries[j].brand && entries[i].fill_volume == entries[j].fill_volume) {
        out.push_back(violation("1.4.2", "duplicate profile " + entries[i].brand + " in slots " +
                                             std::to_string(i + 1) + "," + std::to_string(j + 1)));
      }
    }
  }
  if (s.supported_syringe_count != s.store.last_index()) {
    out.push_back(violation("1.4.2", "supported count disagrees with store"));
  }

  for (int i = 1; i <= 3; ++i) {
    if (ui.line(i).size() > kLineWidth) {
      out.push_back(violation("2.1.1", "line" + std::to_string(i) + " over 15 characters"));
    }
  }
  if (ui.emphasis < 0 || ui.emphasis > 3) out.push_back(violation("2.1.1", "bad emphasis index"));

  if (infusing_or_committed(s.current) && !(s.syringe_confirmed && s.selected)) {
    out.push_back(violation("1.1.2", std::string(to_string(s.current)) +
                                         " without a confirmed syringe"));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transition predicates

namespace detail {

inline bool is_press(const Event& e, InputButton b) {
  auto* p = e.as<ButtonPress>();
  return p && p->button == b && p->kind == PressKind::SINGLE;
}

inline bool is_timer(const Event& e, TimerId id) {
  auto* t = e.as<TimerExpired>();
  return t && t->id == id;
}

inline bool alert_visible(const UIAction& a) {
  auto nonblank = [](const std::optional<std::string>& l) { return l && !l->empty(); };
  return a.light == Light::RED && (nonblank(a.line1) || nonblank(a.line2) || nonblank(a.line3));
}

}  // namespace detail

inline std::vector<Violation> check_transition(const ControllerState& before,
                                               const ControllerState& after, const Event& e,
                                               const UIAction& action) {
  using B = BehaviourState;
  std::vector<Violation> out;

  if (after.current != before.current && after.previous != before.current) {
    out.push_back(violation("1.4.2", "previous state not chained to " +
                                         std::string(to_string(before.current))));
  }

  // Selection may only be replaced by a fresh detection, never silently.
  if (before.syringe_confirmed && before.selected && after.selected &&
      *after.selected != *before.selected) {
    out.push_back(violation("1.1.2", "confirmed syringe changed"));
  }
  if (after.current == B::INFUSION_STARTED && before.current != B::INFUSION_STARTED &&
      !after.syringe_confirmed) {
    out.push_back(violation("1.1.2", "infusion started without confirmation"));
  }

  if (after.selected && after.selected != before.selected &&
      !(before.current == B::SYRINGE_VERIFIED && detail::is_press(e, InputButton::YES_START))) {
    out.push_back(violation("1.4.1", "profile committed without review"));
  }

  if (action.alert && !detail::alert_visible(action)) {
    out.push_back(violation("3.2.1", "alert without red light and text"));
  }

  auto fired = [&](TimerId id) { return detail::is_timer(e, id) && before.armed.contains(id); };
  if (fired(TimerId::CONFIRM_TIMEOUT) && before.current == B::SYRINGE_CONFIRMED &&
      !(after.current == B::PUMP_PAUSED && action.alert)) {
    out.push_back(violation("2.1.2", "confirmation timeout did not pause with an alert"));
  }
  if (fired(TimerId::INPUT_WAIT) && timer_in_scope(TimerId::INPUT_WAIT, before.current) &&
      !action.alert) {
    out.push_back(violation("2.1.2", "input wait expired without a warning"));
  }
  if (fired(TimerId::PAUSE_ALERT) && timer_in_scope(TimerId::PAUSE_ALERT, before.current) &&
      !action.alert) {
    out.push_back(violation("1.2.4", "interruption reminder without an alert"));
  }
  if (fired(TimerId::KEY_HELD) && before.current != B::OFF && !action.alert) {
    out.push_back(violation("2.3.3", "held key without an alert"));
  }

  if (before.current == B::OFF && after.current != B::OFF &&
      !power_on_self_test(before.hardware).passed()) {
    out.push_back(violation("3.1.1", "left OFF with failing self test: " +
                                         power_on_self_test(before.hardware).failure()));
  }

  if (before.current == B::ACTUATOR_ON && after.current == B::SYRINGE_LOADED &&
      !after.hardware.sensors.seated()) {
    out.push_back(violation("1.2.2", "syringe accepted while not seated"));
  }

  if (before.keypad_lock && after.keypad_lock) {
    auto* p = e.as<ButtonPress>();
    if (p && p->button != InputButton::INFO && p->button != InputButton::EMPTY &&
        after.current != before.current) {
      out.push_back(violation("2.3.1", "locked keypad accepted " +
                                           std::string(to_string(p->button))));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace predicates

struct TraceStep {
  Event event;
  BehaviourState from = BehaviourState::OFF;
  ControllerState state;  // after the step
  UIState ui;             // after the step
  bool alert = false;
  Volume delivered;  // cumulative, ml
};

struct Trace {
  std::vector<TraceStep> steps;
  std::int64_t end = 0;  // the trace is observed up to this second
};

namespace detail {

/// Maximal run of consecutive steps satisfying a predicate on the state.
struct Segment {
  std::size_t first;      // step that entered
  std::int64_t start;     // its time
  std::int64_t leave;     // time of the step that left, or trace end
  bool open;              // still inside at trace end
};

template <class Pred>
std::vector<Segment> segments(const Trace& tr, Pred inside, bool split_on_state_change) {
  std::vector<Segment> out;
  std::optional<Segment> cur;
  for (std::size_t i = 0; i < tr.steps.size(); ++i) {
    const auto& st = tr.steps[i];
    const bool in = inside(st);
    const bool changed = split_on_state_change && cur && st.state.current != tr.steps[cur->first].state.current;
    if (cur && (!in || changed)) {
      cur->leave = st.event.t;
      out.push_back(*cur);
      cur.reset();
    }
    if (in && !cur) cur = Segment{i, st.event.t, 0, false};
  }
  if (cur) {
    cur->leave = tr.end;
    cur->open = true;
    out.push_back(*cur);
  }
  return out;
}

inline bool alert_in(const Trace& tr, TimerId id, std::int64_t lo, std::int64_t hi) {
  return std::any_of(tr.steps.begin(), tr.steps.end(), [&](const TraceStep& s) {
    return s.alert && is_timer(s.event, id) && s.event.t > lo && s.event.t <= hi;
  });
}

}  // namespace detail

/// Checks the timed requirements. Pre: steps are in chronological order.
inline std::vector<Violation> check_trace(const Trace& tr) {
  using B = BehaviourState;
  for (std::size_t i = 1; i < tr.steps.size(); ++i) {
    T34_EXPECTS_MSG(tr.steps[i - 1].event.t <= tr.steps[i].event.t, "trace out of order");
  }
  std::vector<Violation> out;
  if (tr.steps.empty()) return out;
  const std::int64_t end = std::max(tr.end, tr.steps.back().event.t);
  Trace t = tr;
  t.end = end;

  // Interruption: from leaving INFUSION_STARTED until infusion resumes or stops.
  {
    std::optional<std::int64_t> since;
    auto close = [&](std::int64_t leave) {
      const std::int64_t horizon = std::min(leave, *since + kPauseAlertHorizonSeconds);
      for (std::int64_t d = *since + kInterruptionGraceSeconds + kPauseAlertPeriodSeconds;
           d <= horizon; d += kPauseAlertPeriodSeconds) {
        if (!detail::alert_in(t, TimerId::PAUSE_ALERT, d - kPauseAlertPeriodSeconds, d)) {
          out.push_back(violation("1.2.4", "no alert for interruption at +" +
                                               std::to_string(d - *since) + "s"));
        }
      }
      since.reset();
    };
    for (const auto& st : t.steps) {
      const B now = st.state.current;
      if (since && (now == B::INFUSION_STARTED || now == B::OFF || now == B::INFUSION_STOPPED)) {
        close(st.event.t);
      }
      if (!since && st.from == B::INFUSION_STARTED && now != B::INFUSION_STARTED &&
          now != B::OFF && now != B::INFUSION_STOPPED) {
        since = st.event.t;
      }
    }
    if (since) close(end);
  }

  // Input wait and confirmation timeout.
  auto waiting = [](const TraceStep& s) {
    return s.state.current == B::SYRINGE_LOADED || s.state.current == B::SYRINGE_VERIFIED;
  };
  for (const auto& seg : detail::segments(t, waiting, true)) {
    const std::int64_t d = seg.start + kInputWaitSeconds;
    if (seg.leave >= d && !detail::alert_in(t, TimerId::INPUT_WAIT, seg.start, d)) {
      out.push_back(violation("2.1.2", "no input warning after 1 min at t=" +
                                           std::to_string(seg.start)));
    }
  }
  auto confirming = [](const TraceStep& s) { return s.state.current == B::SYRINGE_CONFIRMED; };
  for (const auto& seg : detail::segments(t, confirming, false)) {
    const std::int64_t d = seg.start + kConfirmTimeoutSeconds;
    if (seg.leave >= d && !detail::alert_in(t, TimerId::CONFIRM_TIMEOUT, seg.start, d)) {
      out.push_back(violation("2.1.2", "no confirmation timeout alert after 2 min at t=" +
                                           std::to_string(seg.start)));
    }
  }

  // Held key.
  auto held = [](const TraceStep& s) {
    return s.state.hardware.key_stuck && s.state.current != B::OFF;
  };
  for (const auto& seg : detail::segments(t, held, false)) {
    const std::int64_t d = seg.start + kKeyHeldSeconds;
    if (seg.leave >= d && !detail::alert_in(t, TimerId::KEY_HELD, seg.start, d)) {
      out.push_back(violation("2.3.3", "no alert for key held 3 min at t=" +
                                           std::to_string(seg.start)));
    }
  }

  // Evenness: cumulative delivery tracks fill * infusing_time / 24 h.
  {
    std::int64_t infusing = 0;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      const auto& st = t.steps[i];
      if (i > 0 && t.steps[i - 1].state.current == B::INFUSION_STARTED) {
        infusing += st.event.t - t.steps[i - 1].event.t;
      }
      // a newly committed syringe starts from zero
      if (i > 0 && st.state.selected != t.steps[i - 1].state.selected) infusing = 0;
      const auto& sel = st.state.selected;
      if (!sel) continue;
      const Volume expected = sel->fill_volume.scaled(infusing, kInfusionHours * 3600);
      const Volume diff = expected > st.delivered ? expected - st.delivered : st.delivered - expected;
      if (diff > tolerance(sel->nominal_capacity, sel->fill_volume)) {
        out.push_back(violation("1.1.4", "delivered " + st.delivered.to_string() + "ml, expected " +
                                             expected.to_string() + "ml at t=" +
                                             std::to_string(st.event.t)));
        break;
      }
    }
  }
  return out;
}

/// Plain-text violation report, one block per violation.
inline std::string format_report(const std::vector<Violation>& vs) {
  std::ostringstream out;
  out << "violations: " << vs.size() << "\n";
  for (const auto& v : vs) {
    out << "- requirement " << v.requirement << " [" << v.hazard << "]: " << v.detail << "\n";
    if (!v.witness.empty()) {
      out << "  witness (" << v.witness.size() << " events):\n";
      for (const auto& e : v.witness) out << "    " << to_string(e) << "\n";
    }
  }
  return out.str();
}

}  // namespace t34
