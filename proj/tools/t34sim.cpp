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

// t34sim: scenario runs, model checking, trace replay and the event service.
//
// Exit status: 0 clean, 1 violations or replay mismatch, 2 usage or I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "t34/service.hpp"
#include "t34/t34.hpp"

namespace {

constexpr int kClean = 0;
constexpr int kViolations = 1;
constexpr int kUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

t34::Scenario load(const std::string& path) {
  auto sc = t34::parse_scenario(read_file(path));
  if (const char* env = std::getenv("T34_LOG_EPOCH")) sc.epoch = t34::LogEpoch::parse(env);
  return sc;
}

int cmd_run(const std::string& path, const std::string& out_dir) {
  const auto sc = load(path);
  const auto r = t34::run_scenario(sc);
  const std::string report = t34::format_report(r.violations);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_file(dir / "trace.jsonl", t34::render_trace(sc, r));
    write_file(dir / "log.txt", t34::render_log(sc.epoch, r.log));
    write_file(dir / "report.txt", report);
  } else {
    std::cout << t34::render_log(sc.epoch, r.log);
  }
  const auto& last = r.trace.steps;
  std::cout << "steps: " << last.size() << ", final state: "
            << (last.empty() ? std::string_view("OFF") : t34::to_string(last.back().state.current)) << "\n"
            << report;
  return r.violations.empty() ? kClean : kViolations;
}

int cmd_check(std::optional<std::size_t> depth, const std::vector<std::string>& mutations) {
  std::set<t34::Mutation> muts;
  for (const auto& name : mutations) {
    auto m = t34::parse_mutation(name);
    if (!m) {
      std::cerr << "unknown mutation '" << name << "'; known:";
      for (auto k : t34::kAllMutations) std::cerr << " " << t34::to_string(k);
      std::cerr << "\n";
      return kUsage;
    }
    muts.insert(*m);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = t34::model_check(t34::PumpModel::default_config(muts), depth);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "explored: " << r.explored << "\ntransitions: " << r.transitions
            << "\nbehaviour states: " << r.states_visited.size() << "/" << t34::kBehaviourStateCount;
  for (auto s : r.states_visited) std::cout << " " << t34::to_string(s);
  std::cout << "\nelapsed: " << secs << "s\n" << t34::format_report(r.violations);
  return r.violations.empty() ? kClean : kViolations;
}

int cmd_replay(const std::string& path) {
  const auto r = t34::replay_trace(read_file(path));
  if (r.match) {
    std::cout << "replay matches: " << r.records << " records\n";
    return kClean;
  }
  std::cout << "replay differs after " << r.records << " records\n" << r.mismatch << "\n";
  return kViolations;
}

int cmd_serve(const std::string& host, int port, bool paced, const std::string& scenario) {
  t34::Session::Options opts;
  if (!scenario.empty()) {
    const auto sc = load(scenario);
    opts.config = sc.config;
    opts.hardware = sc.hardware;
    opts.version = sc.version;
    opts.epoch = sc.epoch;
  } else {
    opts.hardware = t34::model_initial_hardware();
    if (const char* env = std::getenv("T34_LOG_EPOCH")) opts.epoch = t34::LogEpoch::parse(env);
  }
  opts.paced = paced;
  t34::Session session(std::move(opts));
  httplib::Server server;
  t34::mount(server, session);
  std::cout << "serving on http://" << host << ":" << port << (paced ? " (paced)" : "") << std::endl;
  if (!server.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return kUsage;
  }
  return kClean;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"T34 syringe driver simulator and verifier"};
  app.require_subcommand(1);

  std::string scenario, out_dir, trace, host = "127.0.0.1", serve_scenario;
  std::optional<std::size_t> depth;
  std::vector<std::string> mutations;
  int port = 8034;
  bool paced = false;

  auto* run = app.add_subcommand("run", "run a scenario; writes trace, log and report");
  run->add_option("scenario", scenario, "scenario JSON file")->required();
  run->add_option("-o,--out", out_dir, "output directory");

  auto* check = app.add_subcommand("check", "exhaustively model-check the controller");
  check->add_option("--max-depth", depth, "limit exploration depth");
  check->add_option("--mutate", mutations, "seed a model defect (repeatable)");

  auto* serve = app.add_subcommand("serve", "serve the event API for one pump session");
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "bind address");
  serve->add_flag("--paced", paced, "advance the virtual clock 1 s per real second");
  serve->add_option("--scenario", serve_scenario, "take hardware and presets from a scenario");

  auto* replay = app.add_subcommand("replay", "re-run a trace's scenario and compare");
  replay->add_option("trace", trace, "trace JSONL file")->required();

  auto* table = app.add_subcommand("table", "print the transition table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run) return cmd_run(scenario, out_dir);
    if (*check) return cmd_check(depth, mutations);
    if (*replay) return cmd_replay(trace);
    if (*serve) return cmd_serve(host, port, paced, serve_scenario);
    if (*table) {
      std::cout << t34::Machine().export_table();
      return kClean;
    }
  } catch (const std::exception& e) {
    std::cerr << "t34sim: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
