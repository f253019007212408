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

#pragma once

#include <cstdint>
#include <string>

#include "t34/contracts.hpp"
#include "t34/syringe_db.hpp"

namespace t34 {

/// Integer percentage in [0, 100], checked at construction.
class Percentage {
 public:
  constexpr Percentage() = default;
  explicit Percentage(int v) : value_(v) {
    T34_EXPECTS_MSG(v >= 0 && v <= 100, "percentage " + std::to_string(v) + " out of range");
  }
  constexpr int value() const { return value_; }
  constexpr auto operator<=>(const Percentage&) const = default;

 private:
  int value_ = 0;
};

inline constexpr int kDefaultLowBatteryThreshold = 15;
inline constexpr int kDefaultOcclusionMmHg = 720;
inline constexpr int kDeviceMaxRate = 5;

/// Hardware snapshot handed to the controller.
struct HardwareState {
  bool is_battery_low = false;
  Percentage battery_level{100};
  SensorTriple sensors;
  /// Plunger travel remaining: 100 fully retracted, 0 fully delivered.
  Percentage actuator_position{0};
  int occlusion = kDefaultOcclusionMmHg;  // mmHg
  int max_rate = kDeviceMaxRate;          // ml/h
  Decimal barrel_diameter;                // mm, from the diameter sensor
  bool key_stuck = false;
  // Injected faults, checked by the power-on self test.
  bool lcd_fault = false;
  bool led_fault = false;
  bool sensor_fault = false;

  bool operator==(const HardwareState&) const = default;
};

}  // namespace t34
