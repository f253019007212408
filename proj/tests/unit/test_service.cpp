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

#include <atomic>
#include <chrono>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "t34/service.hpp"

namespace t34 {
namespace {

using namespace std::chrono_literals;

HardwareState healthy() {
  HardwareState hw;
  hw.battery_level = Percentage(99);
  hw.actuator_position = Percentage(100);
  hw.barrel_diameter = Decimal::parse("20.1");
  return hw;
}

Session::Options options(bool paced = false) {
  Session::Options o;
  o.hardware = healthy();
  o.paced = paced;
  return o;
}

// ------------------------------------------------------------ requests

TEST(ParseClientEvent, AcceptedForms) {
  using I = InputButton;
  EXPECT_EQ(parse_client_event({{"event", "press ON_OFF"}}), Event::press(I::ON_OFF));
  EXPECT_EQ(parse_client_event({{"button", "INFO"}, {"kind", "LONG"}}), Event::press(I::INFO, PressKind::LONG));
  EXPECT_EQ(parse_client_event({{"button", "UP"}}), Event::press(I::UP));
  EXPECT_EQ(parse_client_event({{"sensor", "CLAMP"}, {"value", true}}), Event::sensor(SensorId::CLAMP, 1));
  EXPECT_EQ(parse_client_event({{"sensor", "BATTERY"}, {"value", 12}}), Event::sensor(SensorId::BATTERY, 12));
  EXPECT_EQ(parse_client_event({{"diameter", "20.1"}}),
            Event::sensor(SensorId::DIAMETER, Decimal::parse("20.1").raw()));
  EXPECT_EQ(parse_client_event({{"power_cycle", true}}), Event::power_cycle());
}

TEST(ParseClientEvent, Rejections) {
  for (const json& bad : {json::array(), json{{"button", "WHISTLE"}}, json{{"button", "UP"}, {"kind", "DOUBLE"}},
                          json{{"event", "timer BOOT"}}, json{{"sensor", "BATTERY"}, {"value", 101}},
                          json{{"sensor", "POSITION"}, {"value", -1}}, json{{"sensor", "DIAMETER"}, {"value", 2}},
                          json{{"sensor", "CLAMP"}}, json{{"diameter", "wide"}}, json::object(),
                          json{{"power_cycle", false}}, json{{"event", 3}}}) {
    EXPECT_THROW(parse_client_event(bad), request_error) << bad.dump();
  }
}

// ------------------------------------------------------------ session

TEST(Session, SnapshotBeforeAnyEvent) {
  Session s(options());
  const json snap = s.snapshot();
  EXPECT_EQ(snap["t"], 0);
  EXPECT_EQ(snap["mode"], "step");
  EXPECT_EQ(snap["state"]["current"], "OFF");
  EXPECT_EQ(snap["ui"], json::parse(R"({"line1":"","line2":"","line3":"","light":"OFF","emphasis":0})"));
}

TEST(Session, SubmitAdvanceAndSubscribe) {
  Session s(options());
  auto sub = s.subscribe();
  EXPECT_EQ(s.clients(), 1u);
  const json first = json::parse(*sub->pop(1s));
  EXPECT_EQ(first["snapshot"]["state"]["current"], "OFF");

  const json r = s.submit(Event::press(InputButton::ON_OFF));
  ASSERT_EQ(r["steps"].size(), 1u);
  EXPECT_EQ(r["steps"][0]["curr"], "IDLE");
  EXPECT_EQ(r["steps"][0]["log"][0], "2022-09-26 03:27:00.00 : Log Event: Left Click");
  EXPECT_EQ(json::parse(*sub->pop(1s)), r["steps"][0]);

  const json a = s.advance(6);
  EXPECT_EQ(a["t"], 6);
  ASSERT_EQ(a["steps"].size(), 2u);
  EXPECT_EQ(a["steps"][1]["curr"], "ACTUATOR_ON");
  EXPECT_THROW(s.advance(-1), request_error);

  s.unsubscribe(sub);
  EXPECT_EQ(s.clients(), 0u);
  s.stop();
  EXPECT_THROW(s.submit(Event::press(InputButton::UP)), std::runtime_error);
}

TEST(Session, PacedClockTicks) {
  Session s(options(true));
  s.submit(Event::press(InputButton::ON_OFF));
  const auto deadline = std::chrono::steady_clock::now() + 5s;
  while (s.snapshot()["state"]["current"] != "PRELOADING" && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(50ms);
  }
  EXPECT_EQ(s.snapshot()["state"]["current"], "PRELOADING");
  EXPECT_EQ(s.snapshot()["mode"], "paced");
}

// ------------------------------------------------------------ HTTP

struct Server {
  Session session{options()};
  httplib::Server http;
  std::thread thread;
  int port = 0;

  Server() {
    mount(http, session);
    port = http.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { http.listen_after_bind(); });
    http.wait_until_ready();
  }
  ~Server() {
    session.stop();
    http.stop();
    thread.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

// Collects stream lines until `want` have arrived.
struct StreamReader {
  std::vector<json> lines;
  std::thread thread;
  std::mutex mu;
  std::atomic<bool> ready{false};

  StreamReader(const Server& srv, std::size_t want) {
    thread = std::thread([this, &srv, want] {
      auto c = srv.client();
      std::string buf;
      c.Get("/stream", [&](const char* data, std::size_t n) {
        buf.append(data, n);
        for (auto nl = buf.find('\n'); nl != std::string::npos; nl = buf.find('\n')) {
          std::lock_guard lk(mu);
          lines.push_back(json::parse(buf.substr(0, nl)));
          buf.erase(0, nl + 1);
          ready = true;
        }
        std::lock_guard lk(mu);
        return lines.size() < want;
      });
    });
    while (!ready) std::this_thread::sleep_for(5ms);
  }
  void join() { thread.join(); }
};

TEST(Http, SnapshotAndEvent) {
  Server srv;
  auto c = srv.client();
  auto snap = c.Get("/snapshot");
  ASSERT_TRUE(snap);
  EXPECT_EQ(snap->status, 200);
  EXPECT_EQ(json::parse(snap->body)["ui"]["light"], "OFF");

  StreamReader reader(srv, 2);
  auto r = c.Post("/event", R"({"button": "ON_OFF"})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const json body = json::parse(r->body);
  EXPECT_EQ(body["steps"][0]["curr"], "IDLE");
  reader.join();
  ASSERT_EQ(reader.lines.size(), 2u);
  EXPECT_EQ(reader.lines[0]["snapshot"]["state"]["current"], "OFF");
  EXPECT_EQ(reader.lines[1], body["steps"][0]);

  auto adv = c.Post("/advance", R"({"seconds": 2})", "application/json");
  ASSERT_TRUE(adv);
  EXPECT_EQ(json::parse(adv->body)["steps"][0]["curr"], "PRELOADING");
}

TEST(Http, BadRequests) {
  Server srv;
  auto c = srv.client();
  for (const char* body : {"not json", R"({"button": "WHISTLE"})", R"({"event": "timer BOOT"})", "[]"}) {
    auto r = c.Post("/event", body, "application/json");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 400) << body;
    EXPECT_TRUE(json::parse(r->body).contains("error"));
  }
  for (const char* body : {R"({"seconds": -3})", R"({"seconds": "2"})", "{}"}) {
    auto r = c.Post("/advance", body, "application/json");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 400) << body;
  }
  EXPECT_EQ(json::parse(c.Get("/snapshot")->body)["t"], 0);
}

// Two clients race; every subscriber sees the same single history, and each
// client's own requests appear in the order it sent them.
TEST(Http, ConcurrentClientsShareOneHistory) {
  Server srv;
  constexpr int per_client = 20;
  StreamReader r1(srv, 1 + 2 * per_client);
  StreamReader r2(srv, 1 + 2 * per_client);

  std::vector<json> answers[2];
  auto send = [&](int who, const char* button) {
    auto c = srv.client();
    for (int i = 0; i < per_client; ++i) {
      auto r = c.Post("/event", json{{"button", button}}.dump(), "application/json");
      ASSERT_TRUE(r);
      ASSERT_EQ(r->status, 200);
      answers[who].push_back(json::parse(r->body)["steps"][0]);
    }
  };
  std::thread a(send, 0, "UP");
  std::thread b(send, 1, "DOWN");
  a.join();
  b.join();
  r1.join();
  r2.join();

  ASSERT_EQ(r1.lines.size(), 1u + 2 * per_client);
  EXPECT_EQ(r1.lines[0]["snapshot"]["state"], r2.lines[0]["snapshot"]["state"]);
  EXPECT_EQ(std::vector<json>(r1.lines.begin() + 1, r1.lines.end()),
            std::vector<json>(r2.lines.begin() + 1, r2.lines.end()));
  std::size_t next[2] = {0, 0};
  for (std::size_t i = 1; i < r1.lines.size(); ++i) {
    const int who = r1.lines[i]["event"] == "press UP" ? 0 : 1;
    ASSERT_LT(next[who], answers[who].size());
    EXPECT_EQ(r1.lines[i], answers[who][next[who]++]);
  }
  EXPECT_EQ(next[0] + next[1], 2u * per_client);
}

}  // namespace
}  // namespace t34
