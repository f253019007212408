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

// Syringe profile store and delivery arithmetic.
//
// The store is a fixed 15-slot list; duplicates are identified by
// (brand, fill volume) and ignored with a log line rather than raised.
// All volume math is fixed-point (see fixed_point.hpp).

#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "t34/contracts.hpp"
#include "t34/fixed_point.hpp"

namespace t34 {

inline constexpr std::size_t kStoreCapacity = 15;
inline constexpr std::string_view kDuplicateLog = "Error: Duplicate Syringe Preset";
inline constexpr std::string_view kInvalidLog = "Error: Invalid Syringe Preset";
inline constexpr std::string_view kStoreFullLog = "Error: Syringe Store Full";

/// Upper bound on any profile's delivery rate, ml/h.
inline constexpr std::int64_t kMaxRateMlPerHour = 5;
inline constexpr std::int64_t kInfusionHours = 24;

struct SyringeProfile {
  std::string brand;
  Volume nominal_capacity;
  Volume fill_volume;
  Decimal barrel_diameter;  // mm

  bool operator==(const SyringeProfile&) const = default;
};

/// Largest volume that may be loaded in a syringe of the given nominal size.
/// Only the 30 ml size has a documented cap below nominal.
inline Volume usable_maximum(Volume nominal) {
  if (nominal == ml("30")) return ml("22");
  return nominal;
}

/// Throws precondition_error unless the profile is physically meaningful.
inline void validate_profile(const SyringeProfile& p) {
  T34_EXPECTS_MSG(!p.brand.empty(), "brand");
  T34_EXPECTS_MSG(p.nominal_capacity > Volume{}, p.brand);
  T34_EXPECTS_MSG(p.fill_volume > Volume{}, p.brand);
  T34_EXPECTS_MSG(p.barrel_diameter > Decimal{}, p.brand);
  T34_EXPECTS_MSG(p.fill_volume <= usable_maximum(p.nominal_capacity),
                  p.brand + " fill " + p.fill_volume.to_string() + "ml exceeds usable maximum");
}

/// Flow rate carried as volume per 24 h, so rate * 24 reproduces the fill
/// volume exactly.
struct FlowRate {
  Volume per_day;

  Volume per_hour() const { return Volume::from_raw(per_day.raw() / kInfusionHours); }
  bool per_hour_is_exact() const { return per_day.raw() % kInfusionHours == 0; }
  /// Two-decimal display value.
  Decimal per_hour_display() const {
    // round(per_day / 24) at hundredths, half away from zero
    const std::int64_t den = kInfusionHours * (Volume::scale / Decimal::scale);
    return Decimal::from_raw((per_day.raw() + den / 2) / den);
  }
  bool within_device_limit() const {
    return per_day > Volume{} && per_day <= Volume::whole(kMaxRateMlPerHour * kInfusionHours);
  }

  auto operator<=>(const FlowRate&) const = default;
};

/// Fill volume spread evenly over 24 hours.
inline FlowRate rate(const SyringeProfile& p) {
  T34_EXPECTS_MSG(p.fill_volume > Volume{}, "fill volume must be positive");
  FlowRate r{p.fill_volume};
  T34_ENSURES_MSG(r.within_device_limit(),
                  "rate " + r.per_hour_display().to_string() + "ml/h exceeds 5ml/h");
  return r;
}

class SyringeStore;
inline SyringeStore insert(SyringeStore store, const SyringeProfile& profile);

class SyringeStore {
 public:
  std::size_t last_index() const { return last_index_; }
  bool full() const { return last_index_ == kStoreCapacity; }
  /// 1-based, as slots are numbered on the device.
  const SyringeProfile& slot(std::size_t index) const {
    T34_EXPECTS(index >= 1 && index <= last_index_);
    return slots_[index - 1];
  }
  std::vector<SyringeProfile> entries() const {
    return {slots_.begin(), slots_.begin() + static_cast<std::ptrdiff_t>(last_index_)};
  }

  bool operator==(const SyringeStore&) const = default;

 private:
  friend SyringeStore insert(SyringeStore, const SyringeProfile&);
  std::array<SyringeProfile, kStoreCapacity> slots_{};
  std::size_t last_index_ = 0;
};

/// Number of stored entries with the candidate's (brand, fill volume).
inline std::size_t search(const SyringeStore& store, const SyringeProfile& candidate) {
  std::size_t count = 0;
  for (std::size_t i = 1; i <= store.last_index(); ++i) {
    const auto& item = store.slot(i);
    if (item.brand == candidate.brand && item.fill_volume == candidate.fill_volume) ++count;
  }
  return count;
}

/// Unconditional append into the next slot.
inline SyringeStore insert(SyringeStore store, const SyringeProfile& profile) {
  T34_EXPECTS_MSG(store.last_index_ < kStoreCapacity, "Last_Index < 15");
  store.last_index_ += 1;
  store.slots_[store.last_index_ - 1] = profile;
  T34_ENSURES(store.slot(store.last_index_) == profile);
  return store;
}

enum class AddOutcome { Inserted, DuplicateIgnored };

/// Appends the profile unless an equal (brand, fill volume) entry exists.
inline std::pair<SyringeStore, AddOutcome> add(SyringeStore store, const SyringeProfile& profile) {
  T34_EXPECTS_MSG(store.last_index() < kStoreCapacity, "Last_Index < 15");
  if (search(store, profile) > 0) return {std::move(store), AddOutcome::DuplicateIgnored};
  const auto before = store.last_index();
  store = insert(std::move(store), profile);
  T34_ENSURES(store.last_index() == before + 1);
  return {std::move(store), AddOutcome::Inserted};
}

/// Dosing tolerance for a graduated syringe.
///
/// nominal < 5 ml:  expelled >= nominal/2 -> 5 % of expelled
///                  otherwise             -> 1.5 % of nominal + 2 % of expelled
/// nominal >= 5 ml: expelled >= nominal/2 -> 4 % of expelled
///                  otherwise             -> 1.5 % of nominal + 1 % of expelled
inline Volume tolerance(Volume nominal, Volume expelled) {
  T34_EXPECTS(nominal > Volume{});
  T34_EXPECTS(expelled >= Volume{} && expelled <= nominal);
  const bool small = nominal < Volume::whole(5);
  const bool upper_half = expelled.raw() * 2 >= nominal.raw();
  // percentages in tenths of a percent
  if (upper_half) return expelled.scaled(small ? 50 : 40, 1000);
  return nominal.scaled(15, 1000) + expelled.scaled(small ? 20 : 10, 1000);
}

inline constexpr std::string_view kDefaultPriming = "0.5";

struct RemainingVolume {
  Volume remaining;
  bool complete = false;

  bool operator==(const RemainingVolume&) const = default;
};

/// Volume left to deliver after priming and `delivered` ml.
inline RemainingVolume remaining_volume(const SyringeProfile& p, bool primed, Volume delivered,
                                        Volume priming = ml(kDefaultPriming)) {
  T34_EXPECTS(delivered >= Volume{} && delivered <= p.fill_volume);
  Volume left = p.fill_volume - delivered;
  if (primed) left -= priming;
  if (left < Volume{}) left = Volume{};
  const bool done = left <= tolerance(p.nominal_capacity, p.fill_volume);
  return {left, done};
}

struct SensorTriple {
  bool clamp = false;
  bool plunger = false;
  bool flange = false;

  bool seated() const { return clamp && plunger && flange; }
  bool operator==(const SensorTriple&) const = default;
};

inline constexpr std::string_view kDefaultDiameterTolerance = "0.5";

/// Stored profiles whose barrel diameter is within `tol` mm of the reading.
/// Empty unless the syringe is fully seated. Never commits a selection.
inline std::vector<SyringeProfile> match_profiles(const SyringeStore& store, Decimal diameter,
                                                  SensorTriple sensors,
                                                  Decimal tol = Decimal::parse(kDefaultDiameterTolerance)) {
  std::vector<SyringeProfile> out;
  if (!sensors.seated()) return out;
  for (const auto& p : store.entries()) {
    const Decimal diff = p.barrel_diameter > diameter ? p.barrel_diameter - diameter
                                                      : diameter - p.barrel_diameter;
    if (diff <= tol) out.push_back(p);
  }
  return out;
}

struct LoadOptions {
  bool reject_duplicates = true;
  bool enforce_rate_limit = true;
};

struct LoadResult {
  SyringeStore store;
  std::vector<std::string> log;
};

/// Validates and stores power-on presets in order. Bad entries are logged
/// and skipped; nothing here throws for data problems.
inline LoadResult load_presets(const std::vector<SyringeProfile>& presets, LoadOptions opts = {}) {
  LoadResult r;
  for (const auto& p : presets) {
    r.log.push_back(p.brand);
    if (r.store.full()) {
      r.log.emplace_back(kStoreFullLog);
      continue;
    }
    bool valid = true;
    try {
      validate_profile(p);
      if (opts.enforce_rate_limit) (void)rate(p);
    } catch (const std::logic_error&) {
      valid = false;
    }
    if (!valid) {
      r.log.emplace_back(kInvalidLog);
      continue;
    }
    if (opts.reject_duplicates) {
      auto [next, outcome] = add(r.store, p);
      if (outcome == AddOutcome::DuplicateIgnored) r.log.emplace_back(kDuplicateLog);
      r.store = std::move(next);
    } else {
      r.store = insert(r.store, p);
    }
  }
  return r;
}

class seed_error : public std::runtime_error {
 public:
  seed_error(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads a preset file: one `brand, nominal_ml, fill_ml, diameter_mm` record
/// per line. Blank lines and `#` comments are skipped.
inline std::vector<SyringeProfile> parse_presets(std::istream& in) {
  std::vector<SyringeProfile> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (fields.size() != 4) throw seed_error(lineno, "expected 4 comma-separated fields");
    try {
      out.push_back({fields[0], Volume::parse(fields[1]), Volume::parse(fields[2]),
                     Decimal::parse(fields[3])});
    } catch (const precondition_error& e) {
      throw seed_error(lineno, e.what());
    }
  }
  return out;
}

inline std::vector<SyringeProfile> parse_presets(const std::string& text) {
  std::istringstream in(text);
  return parse_presets(in);
}

/// Presets loaded when no file is given: the two supported brands, with the
/// BRAUN entry listed twice as in the device's factory list.
inline std::vector<SyringeProfile> default_presets() {
  return {
      {"BRAUN Omnifix", ml("20"), ml("17"), Decimal::parse("20.1")},
      {"BRAUN Omnifix", ml("20"), ml("17"), Decimal::parse("20.1")},
      {"Teruno", ml("10"), ml("8"), Decimal::parse("14.5")},
  };
}

}  // namespace t34
