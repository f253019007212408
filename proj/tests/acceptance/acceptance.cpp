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

// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "t34/t34.hpp"

namespace {

using namespace t34;
using Outcome = std::optional<std::string>;  // failure reason, if any

std::string source(const std::string& rel) { return std::string(T34_SOURCE_DIR) + "/" + rel; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------

Outcome model_check_exhaustive() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = model_check(PumpModel::default_config());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::map<std::string, std::size_t> fixture;
  {
    std::istringstream in(slurp(source("tests/fixtures/abstract_reachable.txt")));
    std::string name;
    std::size_t n;
    while (in >> name >> n) fixture[name] = n;
  }
  std::ostringstream why;
  if (secs >= 10) why << "took " << secs << " s; ";
  if (r.states_visited.size() != kBehaviourStateCount) {
    why << "visited " << r.states_visited.size() << " of 11 states; ";
  }
  if (!r.violations.empty()) why << r.violations.size() << " violations; ";
  if (r.explored != fixture["total"]) {
    why << "explored " << r.explored << ", enumeration says " << fixture["total"] << "; ";
  }
  if (why.str().empty()) return std::nullopt;
  return why.str();
}

Outcome mutation_sensitivity() {
  std::ostringstream why;
  for (Mutation m : kAllMutations) {
    const auto cfg = PumpModel::default_config({m});
    const auto r = model_check(cfg);
    if (r.violations.empty()) {
      why << to_string(m) << ": no violation; ";
      continue;
    }
    bool any = false;
    for (const auto& v : r.violations) {
      if (v.witness.size() > 20) continue;
      const auto replayed = replay_witness(cfg, v.witness);
      if (!replayed.empty() && replayed.back().requirement == v.requirement &&
          replayed.back().detail == v.detail) {
        any = true;
        break;
      }
    }
    if (!any) why << to_string(m) << ": no short witness replays; ";
  }
  if (why.str().empty()) return std::nullopt;
  return why.str();
}

Outcome rate_fidelity() {
  std::ostringstream why;
  const SyringeProfile p{"Any", ml("20"), ml("15.36"), Decimal::parse("20")};
  if (rate(p).per_hour() != ml("0.64")) why << "15.36 ml gives " << rate(p).per_hour().to_string() << "; ";
  if (format_quantity(rate(p).per_hour_display(), "ml/h") != "0.64ml/h") why << "display differs; ";
  for (const auto& s : load_presets(model_check_presets()).store.entries()) {
    const auto r = rate(s).per_hour();
    if (!(r > Volume{} && r <= Volume::whole(5))) why << s.brand << " rate " << r.to_string() << "; ";
  }
  if (why.str().empty()) return std::nullopt;
  return why.str();
}

Outcome store_contracts() {
  std::vector<SyringeProfile> universe;
  for (const char* b : {"A", "B", "C"}) {
    for (const char* f : {"5", "10", "15"}) universe.push_back({b, ml("20"), ml(f), Decimal::parse("20")});
  }
  // the oracle: a plain list of distinct (brand, fill) keys in arrival order
  using Key = std::pair<std::string, std::string>;
  std::size_t mismatches = 0;
  std::function<void(const SyringeStore&, const std::vector<Key>&, int)> walk =
      [&](const SyringeStore& store, const std::vector<Key>& oracle, int depth) {
        std::vector<Key> got;
        for (const auto& e : store.entries()) got.push_back({e.brand, e.fill_volume.to_string()});
        if (got != oracle) ++mismatches;
        if (depth == 5) return;
        for (const auto& u : universe) {
          const Key k{u.brand, u.fill_volume.to_string()};
          auto o = oracle;
          if (std::find(o.begin(), o.end(), k) == o.end()) o.push_back(k);
          walk(add(store, u).first, o, depth + 1);
        }
      };
  walk(SyringeStore{}, {}, 0);

  std::ostringstream why;
  if (mismatches) why << mismatches << " sequences disagree with the oracle; ";

  SyringeStore full;
  for (int i = 1; i <= 15; ++i) full = add(full, {"S", ml("20"), ml(std::to_string(i)), Decimal::parse("20")}).first;
  try {
    add(full, {"S", ml("20"), ml("16"), Decimal::parse("20")});
    why << "16th distinct add accepted; ";
  } catch (const precondition_error&) {
  }

  SyringeStore one = add(SyringeStore{}, universe[0]).first;
  const auto [again, outcome] = add(one, universe[0]);
  if (outcome != AddOutcome::DuplicateIgnored || !(again == one)) why << "duplicate add changed the store; ";
  const auto loaded = load_presets({universe[0], universe[0]});
  if (std::count(loaded.log.begin(), loaded.log.end(), "Error: Duplicate Syringe Preset") != 1) {
    why << "duplicate not logged; ";
  }
  if (why.str().empty()) return std::nullopt;
  return why.str();
}

Outcome formatting() {
  std::size_t failures = 0;
  for (std::int64_t raw = 0; raw <= 99'999; ++raw) {
    const std::string s = format_quantity(Decimal::from_raw(raw), "ml");
    const std::string num = s.substr(0, s.size() - 2);
    const auto dot = num.find('.');
    const bool trailing_zero = dot != std::string::npos && num.back() == '0';
    const bool naked_point = num.front() == '.';
    const bool needs_zero = raw < 100 && raw > 0 && !num.starts_with("0.");
    const bool whole_with_point = raw % 100 == 0 && dot != std::string::npos;
    if (trailing_zero || naked_point || needs_zero || whole_with_point) ++failures;
  }
  if (failures == 0) return std::nullopt;
  return std::to_string(failures) + " grid values break a principle";
}

struct TimerCase {
  std::string scenario;
  TimerId timer;
  std::string requirement;
};

Outcome timer_requirements() {
  const std::vector<TimerCase> cases{{"confirm_timeout", TimerId::CONFIRM_TIMEOUT, "2.1.2"},
                                     {"interruption", TimerId::PAUSE_ALERT, "1.2.4"},
                                     {"input_wait", TimerId::INPUT_WAIT, "2.1.2"},
                                     {"key_held", TimerId::KEY_HELD, "2.3.3"}};
  std::ostringstream why;
  for (const auto& c : cases) {
    const auto r = run_scenario(load_scenario(source("scenarios/" + c.scenario + ".json")));
    if (!r.violations.empty() || !check_trace(r.trace).empty()) {
      why << c.scenario << " has violations; ";
      continue;
    }
    // drop one alert raised by the timer under test
    Trace cut = r.trace;
    auto it = std::find_if(cut.steps.begin(), cut.steps.end(), [&](const TraceStep& s) {
      auto* t = s.event.as<TimerExpired>();
      return s.alert && t && t->id == c.timer;
    });
    if (it == cut.steps.end()) {
      why << c.scenario << " raised no alert; ";
      continue;
    }
    cut.steps.erase(it);
    const auto vs = check_trace(cut);
    if (vs.size() != 1 || vs[0].requirement != c.requirement) {
      why << c.scenario << " without its alert gives " << vs.size() << " violations; ";
    }
  }
  if (why.str().empty()) return std::nullopt;
  return why.str();
}

Outcome golden_log() {
  const std::string golden = slurp(source("tests/golden/happy_path.log"));
  const auto sc = load_scenario(source("scenarios/happy_path.json"));
  const std::string first = render_log(sc.epoch, run_scenario(sc).log);
  const std::string second = render_log(sc.epoch, run_scenario(sc).log);
  std::ostringstream why;
  if (first != golden) why << "first run differs from golden; ";
  if (second != first) why << "second run differs from first; ";
  if (first.find(" : PREVIOUS STATE is:IDLE\n") == std::string::npos) why << "no PREVIOUS STATE is:IDLE; ";
  const std::regex line(R"(\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2}\.\d{2} : .*)");
  std::istringstream in(first);
  for (std::string l; std::getline(in, l);) {
    if (!std::regex_match(l, line)) {
      why << "bad line '" << l << "'; ";
      break;
    }
  }
  if (why.str().empty()) return std::nullopt;
  return why.str();
}

Outcome tolerance_math() {
  std::ostringstream why;
  // 5 % of 2; 1.5 % of 3 plus 2 % of 1; 4 % of 12
  if (tolerance(ml("3"), ml("2")) != ml("0.1")) why << "3/2 ml; ";
  if (tolerance(ml("3"), ml("1")) != ml("0.065")) why << "3/1 ml; ";
  if (tolerance(ml("20"), ml("12")) != ml("0.48")) why << "20/12 ml; ";
  if (why.str().empty()) return std::nullopt;
  return why.str();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"model-check exhaustiveness", model_check_exhaustive},
      {"mutation sensitivity", mutation_sensitivity},
      {"rate fidelity", rate_fidelity},
      {"syringe store contracts", store_contracts},
      {"formatting", formatting},
      {"timer requirements", timer_requirements},
      {"golden log", golden_log},
      {"tolerance math", tolerance_math},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = std::string("threw: ") + e.what();
    }
    if (o) {
      ++failed;
      std::cout << "FAIL " << name << ": " << *o << "\n";
    } else {
      std::cout << "PASS " << name << "\n";
    }
  }
  return failed ? 1 : 0;
}
