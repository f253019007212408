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

// Event API bridging one simulated pump to remote operator consoles.
//
// Routes:
//   GET  /snapshot   controller state, UI state, clock
//   POST /event      one input event; replies with the resulting steps
//   POST /advance    {"seconds": n}; runs the virtual clock
//   GET  /stream     chunked NDJSON: a snapshot line, then one line per step
//
// Handlers only enqueue. A single worker drains the queue in arrival order
// and is the only code that touches the simulation.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "t34/sim_harness.hpp"

namespace t34 {

class request_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Accepts {"event": "press ON_OFF"}, {"button": "INFO", "kind": "LONG"},
/// {"sensor": "CLAMP", "value": 1}, {"diameter": "20.1"} or {"power_cycle": true}.
inline Event parse_client_event(const json& body) {
  if (!body.is_object()) throw request_error("event body must be a JSON object");
  try {
    Event e;
    if (body.contains("event")) {
      e = parse_event(body.at("event").get<std::string>());
    } else if (body.contains("button")) {
      auto b = parse_button(body.at("button").get<std::string>());
      if (!b) throw request_error("unknown button " + body.at("button").dump());
      const std::string kind = body.value("kind", std::string("SINGLE"));
      if (kind != "SINGLE" && kind != "LONG") throw request_error("kind must be SINGLE or LONG");
      e = Event::press(*b, kind == "LONG" ? PressKind::LONG : PressKind::SINGLE);
    } else if (body.contains("sensor")) {
      auto s = parse_sensor(body.at("sensor").get<std::string>());
      if (!s || *s == SensorId::DIAMETER) throw request_error("unknown sensor " + body.at("sensor").dump());
      const json& v = body.at("value");
      e = Event::sensor(*s, v.is_boolean() ? static_cast<std::int64_t>(v.get<bool>()) : v.get<std::int64_t>());
    } else if (body.contains("diameter")) {
      const json& d = body.at("diameter");
      e = Event::sensor(SensorId::DIAMETER, Decimal::parse(d.is_string() ? d.get<std::string>() : d.dump()).raw());
    } else if (body.value("power_cycle", false)) {
      e = Event::power_cycle();
    } else {
      throw request_error("no event, button, sensor, diameter or power_cycle field");
    }
    if (e.as<TimerExpired>()) throw request_error("timer events come from the clock");
    if (auto* c = e.as<SensorChanged>()) {
      if ((c->sensor == SensorId::BATTERY || c->sensor == SensorId::POSITION) &&
          (c->value < 0 || c->value > 100)) {
        throw request_error("percentage out of range");
      }
    }
    return e;
  } catch (const request_error&) {
    throw;
  } catch (const std::exception& ex) {
    throw request_error(ex.what());
  }
}

inline json to_json(const UIState& ui) {
  return {{"line1", ui.line1.str()},
          {"line2", ui.line2.str()},
          {"line3", ui.line3.str()},
          {"light", to_string(ui.light)},
          {"emphasis", ui.emphasis}};
}

inline json to_json(const ControllerState& s) {
  const auto& hw = s.hardware;
  json timers = json::array();
  for (std::size_t i = 0; i < kTimerCount; ++i) {
    if (s.armed.contains(static_cast<TimerId>(i))) timers.push_back(to_string(static_cast<TimerId>(i)));
  }
  json candidates = json::array();
  for (const auto& c : s.candidates) candidates.push_back(c.brand);
  return {{"previous", to_string(s.previous)},
          {"current", to_string(s.current)},
          {"keypad_lock", s.keypad_lock},
          {"pump_id", s.pump_id.str()},
          {"pump_version", s.pump_version.str()},
          {"supported_syringe_count", s.supported_syringe_count},
          {"candidates", candidates},
          {"selected", s.selected ? json(s.selected->brand) : json(nullptr)},
          {"syringe_confirmed", s.syringe_confirmed},
          {"timers", timers},
          {"hardware",
           {{"is_battery_low", hw.is_battery_low},
            {"battery_level", hw.battery_level.value()},
            {"clamp", hw.sensors.clamp},
            {"plunger", hw.sensors.plunger},
            {"flange", hw.sensors.flange},
            {"actuator_position", hw.actuator_position.value()},
            {"occlusion", hw.occlusion},
            {"max_rate", hw.max_rate},
            {"barrel_diameter", hw.barrel_diameter.to_string()},
            {"key_stuck", hw.key_stuck}}}};
}

class Session {
 public:
  struct Options {
    MachineConfig config;
    HardwareState hardware;
    std::string version{kDefaultPumpVersion};
    LogEpoch epoch;
    bool paced = false;
  };

  explicit Session(Options opts)
      : opts_(std::move(opts)), sim_(opts_.config, opts_.hardware, opts_.version) {
    sim_.set_observer([this](const StepRecord& r) { on_step(r); });
    worker_ = std::thread([this] { run(); });
    if (opts_.paced) {
      ticker_ = std::thread([this] {
        std::unique_lock lk(tick_mu_);
        while (!tick_cv_.wait_for(lk, std::chrono::seconds(1), [this] { return stopping_.load(); })) {
          enqueue(Command{std::int64_t{1}, {}});
        }
      });
    }
  }

  ~Session() { stop(); }
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void stop() {
    if (stopping_.exchange(true)) return;
    tick_cv_.notify_all();
    {
      std::lock_guard lk(queue_mu_);
      queue_cv_.notify_all();
    }
    if (ticker_.joinable()) ticker_.join();
    if (worker_.joinable()) worker_.join();
    std::lock_guard lk(subs_mu_);
    for (auto& s : subs_) s->close();
  }

  json snapshot() const {
    std::lock_guard lk(sim_mu_);
    return snapshot_locked();
  }

  /// Queues `e` behind earlier requests and waits for its steps.
  json submit(const Event& e) { return wait(enqueue(Command{e, {}})); }

  json advance(std::int64_t seconds) {
    if (seconds < 0) throw request_error("seconds must be non-negative");
    return wait(enqueue(Command{seconds, {}}));
  }

  /// Push-channel endpoint for one client.
  class Subscriber {
   public:
    void push(std::string line) {
      std::lock_guard lk(mu_);
      lines_.push_back(std::move(line));
      cv_.notify_all();
    }
    /// Next line, or nullopt on timeout or close.
    std::optional<std::string> pop(std::chrono::milliseconds timeout) {
      std::unique_lock lk(mu_);
      cv_.wait_for(lk, timeout, [this] { return closed_ || !lines_.empty(); });
      if (lines_.empty()) return std::nullopt;
      std::string l = std::move(lines_.front());
      lines_.pop_front();
      return l;
    }
    void close() {
      std::lock_guard lk(mu_);
      closed_ = true;
      cv_.notify_all();
    }
    bool closed() const {
      std::lock_guard lk(mu_);
      return closed_;
    }

   private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::string> lines_;
    bool closed_ = false;
  };

  /// Registers a client; its first line is the current snapshot.
  std::shared_ptr<Subscriber> subscribe() {
    auto sub = std::make_shared<Subscriber>();
    std::lock_guard lk(sim_mu_);  // no step can slip between snapshot and registration
    sub->push(json{{"snapshot", snapshot_locked()}}.dump());
    std::lock_guard lk2(subs_mu_);
    if (stopping_) sub->close();
    subs_.insert(sub);
    return sub;
  }

  void unsubscribe(const std::shared_ptr<Subscriber>& sub) {
    std::lock_guard lk(subs_mu_);
    subs_.erase(sub);
  }

  std::size_t clients() const {
    std::lock_guard lk(subs_mu_);
    return subs_.size();
  }

  bool stopping() const { return stopping_; }

 private:
  struct Command {
    std::variant<Event, std::int64_t> what;
    std::shared_ptr<std::promise<json>> done;
  };

  std::future<json> enqueue(Command c) {
    c.done = std::make_shared<std::promise<json>>();
    auto fut = c.done->get_future();
    std::lock_guard lk(queue_mu_);
    if (stopping_) {
      c.done->set_exception(std::make_exception_ptr(std::runtime_error("session stopped")));
      return fut;
    }
    queue_.push_back(std::move(c));
    queue_cv_.notify_one();
    return fut;
  }

  static json wait(std::future<json> f) { return f.get(); }

  void run() {
    for (;;) {
      Command c;
      {
        std::unique_lock lk(queue_mu_);
        queue_cv_.wait(lk, [this] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) break;
        c = std::move(queue_.front());
        queue_.pop_front();
      }
      try {
        std::lock_guard lk(sim_mu_);
        batch_ = json::array();
        if (auto* e = std::get_if<Event>(&c.what)) {
          sim_.inject(*e);
          sim_.settle();
        } else {
          sim_.advance_to(sim_.now() + std::get<std::int64_t>(c.what));
        }
        c.done->set_value(json{{"t", sim_.now()}, {"steps", std::move(batch_)}});
      } catch (...) {
        c.done->set_exception(std::current_exception());
      }
    }
    // fail anything queued behind the stop
    std::lock_guard lk(queue_mu_);
    for (auto& c : queue_) {
      c.done->set_exception(std::make_exception_ptr(std::runtime_error("session stopped")));
    }
    queue_.clear();
  }

  void on_step(const StepRecord& r) {
    json msg = to_json(r.step);
    json log = json::array();
    for (const auto& l : r.log) log.push_back(render(opts_.epoch, l));
    msg["log"] = log;
    batch_.push_back(msg);
    const std::string line = msg.dump();
    std::lock_guard lk(subs_mu_);
    for (auto& s : subs_) s->push(line);
  }

  json snapshot_locked() const {
    return {{"t", sim_.now()},
            {"mode", opts_.paced ? "paced" : "step"},
            {"clients", clients()},
            {"delivered", sim_.delivered().to_string()},
            {"state", to_json(sim_.state())},
            {"ui", to_json(sim_.ui())}};
  }

  Options opts_;
  mutable std::mutex sim_mu_;
  Simulation sim_;
  json batch_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Command> queue_;

  mutable std::mutex subs_mu_;
  std::set<std::shared_ptr<Subscriber>> subs_;

  std::mutex tick_mu_;
  std::condition_variable tick_cv_;
  std::atomic<bool> stopping_{false};
  std::thread worker_;
  std::thread ticker_;
};

inline void mount(httplib::Server& server, Session& session) {
  auto reply = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  auto guarded = [reply](auto&& body) {
    return [reply, body](const httplib::Request& req, httplib::Response& res) {
      try {
        body(req, res);
      } catch (const request_error& e) {
        reply(res, 400, {{"error", e.what()}});
      } catch (const json::exception& e) {
        reply(res, 400, {{"error", e.what()}});
      } catch (const std::exception& e) {
        reply(res, 503, {{"error", e.what()}});
      }
    };
  };
  auto parse_body = [](const httplib::Request& req) {
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw request_error(e.what());
    }
  };

  server.Get("/snapshot", guarded([&session, reply](const httplib::Request&, httplib::Response& res) {
               reply(res, 200, session.snapshot());
             }));
  server.Post("/event", guarded([&session, reply, parse_body](const httplib::Request& req,
                                                              httplib::Response& res) {
                reply(res, 200, session.submit(parse_client_event(parse_body(req))));
              }));
  server.Post("/advance", guarded([&session, reply, parse_body](const httplib::Request& req,
                                                                httplib::Response& res) {
                const json body = parse_body(req);
                if (!body.is_object() || !body.contains("seconds") || !body["seconds"].is_number_integer()) {
                  throw request_error("want {\"seconds\": <non-negative integer>}");
                }
                reply(res, 200, session.advance(body["seconds"].get<std::int64_t>()));
              }));
  server.Get("/stream", [&session](const httplib::Request&, httplib::Response& res) {
    auto sub = session.subscribe();
    res.set_chunked_content_provider(
        "application/x-ndjson",
        [&session, sub](std::size_t, httplib::DataSink& sink) {
          while (!session.stopping() && !sub->closed()) {
            if (!sink.is_writable()) return false;
            if (auto line = sub->pop(std::chrono::milliseconds(200))) {
              *line += "\n";
              return sink.write(line->data(), line->size());
            }
          }
          sink.done();
          return true;
        },
        [&session, sub](bool) { session.unsubscribe(sub); });
  });
}

}  // namespace t34
