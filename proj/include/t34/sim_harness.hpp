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

// Deterministic discrete-event simulation around the controller: seeded
// randomness, a virtual clock, scripted scenarios, delivery accounting, the
// timestamped diagnostic log and JSONL traces.

#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "t34/controller.hpp"
#include "t34/safety_monitor.hpp"

namespace t34 {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Randomness

/// SplitMix64; reproducible from the reference vectors in the tests.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  constexpr std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Uniform draw in [0, 100]; rejects the biased tail of the 64-bit range.
inline Percentage seeded_percentage(SplitMix64& rng) {
  constexpr std::uint64_t n = 101;
  constexpr std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                  std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng.next();
  while (x >= limit) x = rng.next();
  return Percentage(static_cast<int>(x % n));
}

// ---------------------------------------------------------------------------
// Virtual clock

class VirtualClock {
 public:
  std::int64_t now() const { return now_; }
  const std::map<TimerId, std::int64_t>& pending() const { return pending_; }

  void arm(TimerId id, std::int64_t delay) {
    T34_EXPECTS(delay >= 0);
    pending_[id] = now_ + delay;
  }
  void cancel(TimerId id) { pending_.erase(id); }

  std::optional<std::int64_t> next_deadline() const {
    std::optional<std::int64_t> best;
    for (const auto& [id, d] : pending_) {
      if (!best || d < *best) best = d;
    }
    return best;
  }

  /// Removes and returns the earliest timer due at or before `until`,
  /// ties broken by timer id. The clock moves to its deadline.
  std::optional<TimerId> pop_due(std::int64_t until) {
    std::optional<std::pair<std::int64_t, TimerId>> best;
    for (const auto& [id, d] : pending_) {
      if (d <= until && (!best || d < best->first)) best = {d, id};
    }
    if (!best) return std::nullopt;
    pending_.erase(best->second);
    now_ = std::max(now_, best->first);
    return best->second;
  }

  /// Moves time forward by dt, returning the expiries in firing order.
  std::vector<Event> advance(std::int64_t dt) {
    T34_EXPECTS_MSG(dt >= 0, "time never decreases");
    const std::int64_t target = now_ + dt;
    std::vector<Event> fired;
    while (auto id = pop_due(target)) fired.push_back(Event::timer(*id, now_));
    now_ = target;
    return fired;
  }

  void set_now(std::int64_t t) {
    T34_EXPECTS_MSG(t >= now_, "time never decreases");
    now_ = t;
  }

 private:
  std::int64_t now_ = 0;
  std::map<TimerId, std::int64_t> pending_;
};

// ---------------------------------------------------------------------------
// Diagnostic log

/// Wall-clock anchor of virtual time zero, at centisecond precision.
struct LogEpoch {
  std::chrono::sys_days day{std::chrono::year{2022} / 9 / 26};
  std::int64_t centis = (3 * 3600 + 27 * 60) * 100;  // since midnight

  static LogEpoch parse(std::string_view text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, cs = 0;
    char tail = 0;
    const std::string str(text);
    const int n = std::sscanf(str.c_str(), "%4d-%2d-%2d %2d:%2d:%2d.%2d%c", &y, &mo, &d, &h, &mi,
                              &s, &cs, &tail);
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month(mo),
                                          std::chrono::day(d)};
    if (n != 7 || !ymd.ok() || h > 23 || mi > 59 || s > 59 || str.size() != 22) {
      throw std::invalid_argument("bad log epoch '" + str + "', want YYYY-MM-DD HH:MM:SS.cc");
    }
    return {std::chrono::sys_days{ymd}, ((h * 60LL + mi) * 60 + s) * 100 + cs};
  }
};

inline std::string format_timestamp(const LogEpoch& epoch, std::int64_t seconds) {
  using namespace std::chrono;
  const std::int64_t total = epoch.centis + seconds * 100;
  const std::int64_t per_day = 24LL * 3600 * 100;
  const std::int64_t days_off = total >= 0 ? total / per_day : -((-total + per_day - 1) / per_day);
  const std::int64_t in_day = total - days_off * per_day;
  const year_month_day ymd{epoch.day + days{days_off}};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02lld:%02lld:%02lld.%02lld",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<long long>(in_day / 360000),
                static_cast<long long>(in_day / 6000 % 60), static_cast<long long>(in_day / 100 % 60),
                static_cast<long long>(in_day % 100));
  return buf;
}

struct LogEntry {
  std::int64_t t = 0;  // virtual seconds
  std::string message;
};

inline std::string render(const LogEpoch& epoch, const LogEntry& e) {
  return format_timestamp(epoch, e.t) + " : " + e.message;
}

inline void append_log(std::vector<LogEntry>& log, std::int64_t t, std::string message) {
  log.push_back({t, std::move(message)});
}

// ---------------------------------------------------------------------------
// Scenarios

class scenario_error : public std::runtime_error {
 public:
  scenario_error(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ScriptItem {
  std::int64_t at = 0;
  Event event;
};

struct Scenario {
  std::uint64_t seed = 0;
  LogEpoch epoch;
  std::string version{kDefaultPumpVersion};
  HardwareState hardware;
  MachineConfig config;
  std::vector<ScriptItem> script;
  std::int64_t until = 0;  // run the clock at least this far
  json source;             // as read, echoed into trace headers
};

namespace detail {

inline int line_at(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Line of the n-th occurrence of `needle` at or after `from`; 0 if absent.
inline int line_of_nth(std::string_view text, std::string_view needle, std::size_t n,
                       std::size_t from = 0) {
  std::size_t pos = from;
  for (std::size_t i = 0;; ++i) {
    pos = text.find(needle, pos);
    if (pos == std::string_view::npos) return 0;
    if (i == n) return line_at(text, pos);
    pos += needle.size();
  }
}

inline std::string number_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw std::invalid_argument("expected a number");
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw scenario_error(e.what(), detail::line_at(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  auto key_line = [&](std::string_view key) {
    return detail::line_of_nth(text, "\"" + std::string(key) + "\"", 0);
  };
  if (!j.is_object()) throw scenario_error("scenario must be an object", 1);

  Scenario sc;
  sc.source = j;
  std::string field;
  try {
    field = "seed";
    sc.seed = j.value("seed", std::uint64_t{0});
    field = "epoch";
    if (j.contains("epoch")) sc.epoch = LogEpoch::parse(j.at("epoch").get<std::string>());
    field = "version";
    sc.version = j.value("version", sc.version);
    FixedString<10> check{sc.version};
    (void)check;
    field = "until";
    sc.until = j.value("until", std::int64_t{0});
    field = "low_battery_threshold";
    sc.config.low_battery_threshold = j.value("low_battery_threshold", kDefaultLowBatteryThreshold);
    field = "priming";
    if (j.contains("priming")) sc.config.priming = Volume::parse(detail::number_text(j["priming"]));
    field = "diameter_tolerance";
    if (j.contains("diameter_tolerance")) {
      sc.config.diameter_tolerance = Decimal::parse(detail::number_text(j["diameter_tolerance"]));
    }
    field = "presets";
    if (j.contains("presets")) {
      std::string csv;
      for (const auto& line : j.at("presets")) csv += line.get<std::string>() + "\n";
      sc.config.presets = parse_presets(csv);
    }
    field = "mutations";
    for (const auto& m : j.value("mutations", json::array())) {
      auto mut = parse_mutation(m.get<std::string>());
      if (!mut) throw std::invalid_argument("unknown mutation " + m.dump());
      sc.config.mutations.insert(*mut);
    }

    // Values the scenario leaves open are drawn from the seed.
    SplitMix64 rng(sc.seed);
    field = "hardware";
    const json hw = j.value("hardware", json::object());
    auto& h = sc.hardware;
    h.battery_level = hw.contains("battery") ? Percentage(hw["battery"].get<int>()) : seeded_percentage(rng);
    h.actuator_position = Percentage(hw.value("position", 100));
    h.barrel_diameter = Decimal::parse(hw.contains("diameter") ? detail::number_text(hw["diameter"]) : "20.1");
    h.sensors.clamp = hw.value("clamp", false);
    h.sensors.plunger = hw.value("plunger", false);
    h.sensors.flange = hw.value("flange", false);
    h.occlusion = hw.value("occlusion", kDefaultOcclusionMmHg);
    h.key_stuck = hw.value("key_stuck", false);
    h.lcd_fault = hw.value("lcd_fault", false);
    h.led_fault = hw.value("led_fault", false);
    h.sensor_fault = hw.value("sensor_fault", false);
  } catch (const scenario_error&) {
    throw;
  } catch (const std::exception& e) {
    throw scenario_error(field + ": " + e.what(), key_line(field));
  }

  const std::size_t script_pos = text.find("\"script\"");
  const json script = j.value("script", json::array());
  if (!script.is_array()) throw scenario_error("script must be an array", key_line("script"));
  std::int64_t last = 0;
  for (std::size_t i = 0; i < script.size(); ++i) {
    const int line = detail::line_of_nth(text, "\"event\"", i, script_pos == std::string_view::npos ? 0 : script_pos);
    try {
      const auto& item = script[i];
      const std::int64_t at = item.at("at").get<std::int64_t>();
      if (at < last) throw std::invalid_argument("offsets must be non-decreasing");
      last = at;
      sc.script.push_back({at, parse_event(item.at("event").get<std::string>(), at)});
    } catch (const std::exception& e) {
      throw scenario_error("script[" + std::to_string(i) + "]: " + e.what(), line);
    }
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

// ---------------------------------------------------------------------------
// Simulation

struct StepRecord {
  TraceStep step;
  std::vector<LogEntry> log;
  std::vector<Violation> violations;  // from the runtime monitor
};

/// JSON message for one step: t, event, prev, curr, line1..3, light, emphasis.
inline json to_json(const TraceStep& s) {
  return {{"t", s.event.t},
          {"event", to_string(s.event)},
          {"prev", to_string(s.state.previous)},
          {"curr", to_string(s.state.current)},
          {"line1", s.ui.line1.str()},
          {"line2", s.ui.line2.str()},
          {"line3", s.ui.line3.str()},
          {"light", to_string(s.ui.light)},
          {"emphasis", s.ui.emphasis}};
}

class Simulation {
 public:
  using Observer = std::function<void(const StepRecord&)>;

  Simulation(MachineConfig config, HardwareState hardware, std::string_view version)
      : machine_(std::move(config)), state_(machine_.new_controller(hardware, version)) {}

  explicit Simulation(const Scenario& sc) : Simulation(sc.config, sc.hardware, sc.version) {}

  const Machine& machine() const { return machine_; }
  const ControllerState& state() const { return state_; }
  const UIState& ui() const { return ui_; }
  std::int64_t now() const { return clock_.now(); }
  const VirtualClock& clock() const { return clock_; }
  Volume delivered() const { return delivered_; }
  const std::vector<StepRecord>& records() const { return records_; }

  void set_observer(Observer f) { observer_ = std::move(f); }

  /// Dispatches `e` at the current instant.
  const StepRecord& inject(Event e) {
    e.t = clock_.now();
    const ControllerState before = state_;
    StepRecord rec;
    StepResult step;
    try {
      step = machine_.dispatch(state_, e);
    } catch (const std::logic_error& ex) {
      rec.violations.push_back(violation("contract", ex.what()));
      step = StepResult{state_, {}, {std::string("Contract breach: ") + ex.what()}, {}, std::nullopt};
    }
    try {
      ui_ = apply_action(ui_, step.action);
    } catch (const display_error& ex) {
      rec.violations.push_back(violation("2.1.1", ex.what()));
    }
    state_ = step.state;
    for (const auto& c : step.timers) {
      if (c.op == TimerOp::ARM) {
        clock_.arm(c.id, c.delay);
      } else {
        clock_.cancel(c.id);
      }
    }
    if (state_.selected != tracked_) {
      tracked_ = state_.selected;
      infusing_seconds_ = 0;
      delivered_ = Volume{};
    }
    for (auto& line : step.log) rec.log.push_back({e.t, std::move(line)});
    for (auto& v : check_transition(before, state_, e, step.action)) rec.violations.push_back(std::move(v));
    for (auto& v : check_state(state_, ui_)) rec.violations.push_back(std::move(v));
    rec.step = TraceStep{e, before.current, state_, ui_, step.action.alert, delivered_};
    records_.push_back(std::move(rec));
    if (observer_) observer_(records_.back());
    return records_.back();
  }

  /// Runs the clock to `target`, firing timers and delivering in between.
  void advance_to(std::int64_t target) {
    T34_EXPECTS_MSG(target >= clock_.now(), "time never decreases");
    while (clock_.now() < target) {
      const std::int64_t t = clock_.now() + 1;
      const bool infusing = state_.current == BehaviourState::INFUSION_STARTED && state_.selected;
      clock_.set_now(t);
      if (infusing) deliver_one_second();
      while (auto id = clock_.pop_due(t)) inject(Event::timer(*id));
      if (infusing) update_position();
    }
  }

  /// Fires timers already due at the current instant (armed with zero delay).
  void settle() {
    while (auto id = clock_.pop_due(clock_.now())) inject(Event::timer(*id));
  }

  Trace trace() const {
    Trace tr;
    for (const auto& r : records_) tr.steps.push_back(r.step);
    tr.end = clock_.now();
    return tr;
  }

 private:
  void deliver_one_second() {
    const SyringeProfile& p = *state_.selected;
    ++infusing_seconds_;
    delivered_ = std::min(p.fill_volume.scaled(infusing_seconds_, kInfusionHours * 3600), p.fill_volume);
  }

  void update_position() {
    if (!tracked_) return;
    const SyringeProfile& p = *tracked_;
    const Volume priming = machine_.config().priming;
    const auto left = remaining_volume(p, true, delivered_, priming);
    int pos = 0;
    if (!left.complete) {
      const Volume effective = p.fill_volume - priming;
      const std::int64_t num = left.remaining.raw() * 100;
      pos = static_cast<int>(std::clamp<std::int64_t>((num + effective.raw() - 1) / effective.raw(), 1, 100));
    }
    if (pos != state_.hardware.actuator_position.value()) {
      inject(Event::sensor(SensorId::POSITION, pos));
    }
  }

  Machine machine_;
  ControllerState state_;
  UIState ui_;
  VirtualClock clock_;
  std::vector<StepRecord> records_;
  Observer observer_;

  std::optional<SyringeProfile> tracked_;
  std::int64_t infusing_seconds_ = 0;
  Volume delivered_;
};

struct RunResult {
  Trace trace;
  std::vector<LogEntry> log;
  std::vector<Violation> violations;
  std::vector<json> records;  // trace file body
};

inline RunResult run_scenario(const Scenario& sc) {
  Simulation sim(sc);
  for (const auto& item : sc.script) {
    sim.advance_to(item.at);
    sim.inject(item.event);
    sim.settle();
  }
  sim.advance_to(std::max(sc.until, sim.now()));

  RunResult out;
  out.trace = sim.trace();
  for (const auto& r : sim.records()) {
    for (const auto& l : r.log) out.log.push_back(l);
    for (const auto& v : r.violations) out.violations.push_back(v);
    out.records.push_back(to_json(r.step));
  }
  for (auto& v : check_trace(out.trace)) out.violations.push_back(std::move(v));
  return out;
}

inline std::string render_log(const LogEpoch& epoch, const std::vector<LogEntry>& log) {
  std::string out;
  for (const auto& e : log) out += render(epoch, e) + "\n";
  return out;
}

/// JSONL: a header naming the scenario, then one record per step.
inline std::string render_trace(const Scenario& sc, const RunResult& r) {
  std::string out = json{{"scenario", sc.source}}.dump() + "\n";
  for (const auto& rec : r.records) out += rec.dump() + "\n";
  return out;
}

struct ReplayResult {
  bool match = false;
  std::size_t records = 0;
  std::string mismatch;  // first difference, if any
};

/// Re-runs the scenario in a trace header and compares every record.
inline ReplayResult replay_trace(std::string_view trace_text) {
  std::istringstream in{std::string(trace_text)};
  std::string line;
  if (!std::getline(in, line)) throw scenario_error("empty trace", 1);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw scenario_error(e.what(), 1);
  }
  if (!header.contains("scenario")) throw scenario_error("trace header lacks a scenario", 1);
  const Scenario sc = parse_scenario(header["scenario"].dump());
  const auto rerun = run_scenario(sc);

  ReplayResult out;
  std::size_t i = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw scenario_error(e.what(), line_no);
    }
    if (i >= rerun.records.size() || rerun.records[i] != rec) {
      out.mismatch = "line " + std::to_string(line_no) + ": recorded " + rec.dump() + ", replayed " +
                     (i < rerun.records.size() ? rerun.records[i].dump() : "nothing");
      out.records = i;
      return out;
    }
    ++i;
  }
  out.records = i;
  if (i != rerun.records.size()) {
    out.mismatch = "replay produced " + std::to_string(rerun.records.size()) + " records, trace has " +
                   std::to_string(i);
    return out;
  }
  out.match = true;
  return out;
}

}  // namespace t34
