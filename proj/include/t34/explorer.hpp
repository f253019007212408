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

// Breadth-first explicit-state exploration.
//
// `explore` is generic over a model providing:
//   Node, Key, Label                      value types
//   Node initial() const
//   Key key(const Node&) const            visited-set identity
//   std::vector<Violation> check(const Node&) const
//   void expand(const Node&, F&& f) const  calls f(Label, Node, violations)
// Parents are kept so every finding carries a shortest label path.

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "t34/safety_monitor.hpp"

namespace t34 {

template <class Label>
struct Finding {
  Violation violation;
  std::vector<Label> witness;
};

template <class Model>
struct ExploreResult {
  std::size_t explored = 0;
  std::size_t transitions = 0;
  std::size_t depth = 0;  // deepest level expanded
  std::vector<Finding<typename Model::Label>> findings;
  std::vector<typename Model::Key> visited;  // in discovery order
};

template <class Model>
ExploreResult<Model> explore(const Model& model, std::optional<std::size_t> max_depth = std::nullopt) {
  using Key = typename Model::Key;
  using Label = typename Model::Label;
  using Node = typename Model::Node;

  struct Entry {
    std::optional<std::size_t> parent;
    Label via{};
    std::size_t depth = 0;
  };

  ExploreResult<Model> out;
  std::vector<Entry> entries;
  std::unordered_map<Key, std::size_t> index;
  std::deque<std::pair<std::size_t, Node>> frontier;
  std::set<std::string> reported;  // one finding per requirement and detail

  auto path_to = [&](std::size_t id) {
    std::vector<Label> path;
    for (std::optional<std::size_t> at = id; at && entries[*at].parent; at = entries[*at].parent) {
      path.push_back(entries[*at].via);
    }
    return std::vector<Label>(path.rbegin(), path.rend());
  };
  auto report = [&](const std::vector<Violation>& vs, std::vector<Label> witness) {
    for (const auto& v : vs) {
      if (!reported.insert(v.requirement + "\n" + v.detail).second) continue;
      out.findings.push_back({v, witness});
    }
  };

  Node init = model.initial();
  const Key k0 = model.key(init);
  entries.push_back({std::nullopt, Label{}, 0});
  index.emplace(k0, 0);
  out.visited.push_back(k0);
  report(model.check(init), {});
  frontier.emplace_back(0, std::move(init));

  while (!frontier.empty()) {
    auto [id, node] = std::move(frontier.front());
    frontier.pop_front();
    const std::size_t depth = entries[id].depth;
    if (max_depth && depth >= *max_depth) continue;
    out.depth = std::max(out.depth, depth + 1);
    model.expand(node, [&](const Label& label, Node next, const std::vector<Violation>& step_vs) {
      ++out.transitions;
      if (!step_vs.empty()) {
        auto w = path_to(id);
        w.push_back(label);
        report(step_vs, std::move(w));
      }
      const Key k = model.key(next);
      if (index.count(k)) return;
      const std::size_t nid = entries.size();
      entries.push_back({id, label, depth + 1});
      index.emplace(k, nid);
      out.visited.push_back(k);
      const auto state_vs = model.check(next);
      if (!state_vs.empty()) report(state_vs, path_to(nid));
      frontier.emplace_back(nid, std::move(next));
    });
  }
  out.explored = entries.size();
  return out;
}

// ---------------------------------------------------------------------------
// Pump model

/// Finite abstraction of a controller state. Every guard in the transition
/// table reads only these fields, so the abstraction is exact.
struct AbstractState {
  BehaviourState current = BehaviourState::OFF;
  bool previous_idle = false;
  bool battery_low = false;
  std::uint8_t position = 2;  // 0: empty, 1: partly retracted, 2: full
  SensorTriple sensors;
  bool keypad_lock = false;
  TimerSet armed;
  bool confirmed = false;
  bool key_stuck = false;

  static constexpr int kBits = 22;

  std::uint32_t encode() const {
    std::uint32_t v = static_cast<std::uint32_t>(current);
    v = v << 1 | previous_idle;
    v = v << 1 | battery_low;
    v = v << 2 | position;
    v = v << 1 | sensors.clamp;
    v = v << 1 | sensors.plunger;
    v = v << 1 | sensors.flange;
    v = v << 1 | keypad_lock;
    v = v << 8 | armed.bits();
    v = v << 1 | confirmed;
    v = v << 1 | key_stuck;
    return v;
  }
  static AbstractState decode(std::uint32_t v) {
    AbstractState a;
    a.key_stuck = v & 1u;
    a.confirmed = v >> 1 & 1u;
    a.armed = TimerSet::from_bits(static_cast<std::uint8_t>(v >> 2 & 0xFFu));
    a.keypad_lock = v >> 10 & 1u;
    a.sensors.flange = v >> 11 & 1u;
    a.sensors.plunger = v >> 12 & 1u;
    a.sensors.clamp = v >> 13 & 1u;
    a.position = static_cast<std::uint8_t>(v >> 14 & 3u);
    a.battery_low = v >> 16 & 1u;
    a.previous_idle = v >> 17 & 1u;
    a.current = static_cast<BehaviourState>(v >> 18);
    return a;
  }
  bool operator==(const AbstractState&) const = default;
};

inline std::uint8_t position_bucket(int pos) { return pos == 0 ? 0 : pos == 100 ? 2 : 1; }

inline AbstractState abstract(const ControllerState& s) {
  AbstractState a;
  a.current = s.current;
  a.previous_idle = s.previous == BehaviourState::IDLE;
  a.battery_low = s.hardware.is_battery_low;
  a.position = position_bucket(s.hardware.actuator_position.value());
  a.sensors = s.hardware.sensors;
  a.keypad_lock = s.keypad_lock;
  a.armed = s.armed;
  a.confirmed = s.syringe_confirmed;
  a.key_stuck = s.hardware.key_stuck;
  return a;
}

inline constexpr int kModelBatteryOk = 99;
inline constexpr int kModelBatteryLow = 10;
inline constexpr int kModelPositionMid = 99;

/// Preset seed for model checking: the stock presets plus one profile whose
/// rate exceeds the device maximum and must be rejected at load time.
inline std::vector<SyringeProfile> model_check_presets() {
  auto presets = default_presets();
  presets.push_back({"Corrupt Preset", ml("150"), ml("121"), Decimal::parse("35")});
  return presets;
}

inline HardwareState model_initial_hardware() {
  HardwareState hw;
  hw.battery_level = Percentage(kModelBatteryOk);
  hw.actuator_position = Percentage(100);
  hw.barrel_diameter = Decimal::parse("20.1");
  return hw;
}

/// Events offered in a state, in fixed enumeration order.
inline std::vector<Event> model_alphabet(const ControllerState& s) {
  std::vector<Event> out;
  for (auto b : {InputButton::INFO, InputButton::UP, InputButton::DOWN, InputButton::YES_START,
                 InputButton::NO_STOP, InputButton::FF, InputButton::BACK, InputButton::ON_OFF,
                 InputButton::EMPTY}) {
    out.push_back(Event::press(b));
  }
  out.push_back(Event::press(InputButton::INFO, PressKind::LONG));
  for (std::size_t i = 0; i < kTimerCount; ++i) {
    const auto id = static_cast<TimerId>(i);
    if (s.armed.contains(id)) out.push_back(Event::timer(id));
  }
  const auto& hw = s.hardware;
  out.push_back(Event::sensor(SensorId::CLAMP, !hw.sensors.clamp));
  out.push_back(Event::sensor(SensorId::PLUNGER, !hw.sensors.plunger));
  out.push_back(Event::sensor(SensorId::FLANGE, !hw.sensors.flange));
  out.push_back(Event::sensor(SensorId::BATTERY, hw.is_battery_low ? kModelBatteryOk : kModelBatteryLow));
  const auto bucket = position_bucket(hw.actuator_position.value());
  for (int pos : {0, kModelPositionMid, 100}) {
    if (position_bucket(pos) != bucket) out.push_back(Event::sensor(SensorId::POSITION, pos));
  }
  out.push_back(Event::sensor(SensorId::KEY, !hw.key_stuck));
  out.push_back(Event::power_cycle());
  return out;
}

struct PumpNode {
  ControllerState state;
  UIState ui;
};

/// One monitored controller step. Display and contract failures become
/// violations instead of escaping.
struct MonitoredStep {
  PumpNode next;
  UIAction action;
  std::vector<Violation> violations;
};

inline MonitoredStep monitored_step(const Machine& m, const PumpNode& node, const Event& e) {
  MonitoredStep r{node, {}, {}};
  StepResult step;
  try {
    step = m.dispatch(node.state, e);
  } catch (const std::logic_error& ex) {
    r.violations.push_back(violation("contract", std::string(to_string(e)) + ": " + ex.what()));
    return r;
  }
  r.next.state = step.state;
  r.action = step.action;
  try {
    r.next.ui = apply_action(node.ui, step.action);
  } catch (const display_error& ex) {
    r.violations.push_back(violation("2.1.1", ex.what()));
  }
  for (auto& v : check_transition(node.state, step.state, e, step.action)) {
    r.violations.push_back(std::move(v));
  }
  return r;
}

class PumpModel {
 public:
  using Node = PumpNode;
  using Key = std::uint32_t;
  using Label = Event;

  explicit PumpModel(MachineConfig config) : machine_(std::move(config)) {}

  static MachineConfig default_config(std::set<Mutation> mutations = {}) {
    MachineConfig c;
    c.presets = model_check_presets();
    c.mutations = std::move(mutations);
    return c;
  }

  const Machine& machine() const { return machine_; }

  Node initial() const {
    return {machine_.new_controller(model_initial_hardware(), kDefaultPumpVersion), UIState{}};
  }
  Key key(const Node& n) const { return abstract(n.state).encode(); }
  std::vector<Violation> check(const Node& n) const { return check_state(n.state, n.ui); }

  template <class F>
  void expand(const Node& n, F&& f) const {
    for (const Event& e : model_alphabet(n.state)) {
      auto step = monitored_step(machine_, n, e);
      f(e, std::move(step.next), step.violations);
    }
  }

 private:
  Machine machine_;
};

struct ModelCheckResult {
  std::size_t explored = 0;
  std::size_t transitions = 0;
  std::set<BehaviourState> states_visited;
  std::vector<Violation> violations;  // each with its witness
};

inline ModelCheckResult model_check(const MachineConfig& config,
                                    std::optional<std::size_t> max_depth = std::nullopt) {
  PumpModel model(config);
  auto r = explore(model, max_depth);
  ModelCheckResult out;
  out.explored = r.explored;
  out.transitions = r.transitions;
  for (auto k : r.visited) {
    out.states_visited.insert(AbstractState::decode(k).current);
  }
  for (auto& f : r.findings) {
    f.violation.witness = f.witness;
    out.violations.push_back(std::move(f.violation));
  }
  return out;
}

/// Replays a witness from the model's initial state; returns every violation
/// raised along the way, in order.
inline std::vector<Violation> replay_witness(const MachineConfig& config,
                                             const std::vector<Event>& witness) {
  PumpModel model(config);
  PumpNode node = model.initial();
  std::vector<Violation> out;
  for (auto& v : model.check(node)) out.push_back(std::move(v));
  for (const auto& e : witness) {
    auto step = monitored_step(model.machine(), node, e);
    for (auto& v : step.violations) out.push_back(std::move(v));
    node = std::move(step.next);
    for (auto& v : model.check(node)) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace t34
