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

// LCD and LED output model. Three independently checked lines of at most
// 15 characters plus the status light.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "t34/bounded_string.hpp"
#include "t34/contracts.hpp"
#include "t34/fixed_point.hpp"
#include "t34/hardware.hpp"

namespace t34 {

inline constexpr std::size_t kLineWidth = 15;
using LcdLine = BoundedString<kLineWidth>;

enum class Light { RED, GREEN, OFF };

inline std::string_view to_string(Light l) {
  switch (l) {
    case Light::RED: return "RED";
    case Light::GREEN: return "GREEN";
    case Light::OFF: return "OFF";
  }
  return "OFF";
}

inline std::optional<Light> parse_light(std::string_view s) {
  if (s == "RED") return Light::RED;
  if (s == "GREEN") return Light::GREEN;
  if (s == "OFF") return Light::OFF;
  return std::nullopt;
}

class display_error : public precondition_error {
 public:
  using precondition_error::precondition_error;
};

struct UIState {
  LcdLine line1;  // message
  LcdLine line2;  // message
  LcdLine line3;  // instruction
  Light light = Light::OFF;
  int emphasis = 0;  // emphasized line, 1..3; 0 for none

  const LcdLine& line(int i) const { return i == 1 ? line1 : i == 2 ? line2 : line3; }
  bool blank() const { return line1.empty() && line2.empty() && line3.empty(); }
  bool operator==(const UIState&) const = default;
};

/// Output half of a transition label. Unset fields leave the screen as is.
struct UIAction {
  std::optional<std::string> line1, line2, line3;
  std::optional<Light> light;
  std::optional<int> emphasis;
  bool alert = false;

  bool empty() const {
    return !line1 && !line2 && !line3 && !light && !emphasis && !alert;
  }
  bool operator==(const UIAction&) const = default;

  /// Replaces all three lines.
  static UIAction screen(std::string l1, std::string l2, std::string l3, Light light,
                         int emphasis = 1) {
    UIAction a;
    a.line1 = std::move(l1);
    a.line2 = std::move(l2);
    a.line3 = std::move(l3);
    a.light = light;
    a.emphasis = emphasis;
    return a;
  }
  static UIAction alert_screen(std::string l1, std::string l2, std::string l3, int emphasis = 1) {
    UIAction a = screen(std::move(l1), std::move(l2), std::move(l3), Light::RED, emphasis);
    a.alert = true;
    return a;
  }
};

/// Renders a quantity for the LCD: whole numbers without a decimal part,
/// values below one with a leading zero, unit appended without a space.
inline std::string format_quantity(Decimal value, std::string_view unit) {
  if (value < Decimal{} || value >= Decimal::whole(1000)) {
    throw display_error("quantity " + value.to_string() + " outside [0, 1000)");
  }
  return value.to_string() + std::string(unit);
}

/// Applies an action; lines that do not fit are an error, never truncated.
inline UIState apply_action(UIState ui, const UIAction& action) {
  auto set = [](LcdLine& dst, const std::optional<std::string>& src, int n) {
    if (!src) return;
    if (!LcdLine::fits(*src)) {
      throw display_error("line" + std::to_string(n) + " '" + *src + "' exceeds " +
                          std::to_string(kLineWidth) + " characters");
    }
    dst = LcdLine(*src);
  };
  set(ui.line1, action.line1, 1);
  set(ui.line2, action.line2, 2);
  set(ui.line3, action.line3, 3);
  if (action.light) ui.light = *action.light;
  if (action.emphasis) {
    T34_EXPECTS(*action.emphasis >= 0 && *action.emphasis <= 3);
    ui.emphasis = *action.emphasis;
  }
  if (action.alert) {
    ui.light = Light::RED;
    if (ui.blank()) throw display_error("alert action leaves the screen blank");
  }
  return ui;
}

namespace detail {

struct Abbreviation {
  std::string_view label;
  std::string_view shortened;
};

inline constexpr std::array<Abbreviation, 3> kAbbreviations{{
    {"Occlusion", "Occl."},
    {"Battery Status", "Battery"},
    {"Max. Rate", "Max.Rate"},
}};

}  // namespace detail

/// "label value" within one LCD line. The label is shortened (known
/// abbreviation first, then truncation with a trailing '.') but the value
/// is never cut.
inline std::string fit_label(std::string_view label, const std::string& value) {
  auto join = [&](std::string_view l) { return std::string(l) + " " + value; };
  if (join(label).size() <= kLineWidth) return join(label);
  for (const auto& a : detail::kAbbreviations) {
    if (a.label == label && join(a.shortened).size() <= kLineWidth) return join(a.shortened);
  }
  if (value.size() + 2 > kLineWidth) throw display_error("value '" + value + "' does not fit");
  const std::size_t room = kLineWidth - value.size() - 2;
  std::string_view cut = label.substr(0, room);
  while (!cut.empty() && cut.back() == ' ') cut.remove_suffix(1);
  return std::string(cut) + ". " + value;
}

/// Info screen: maximum rate, occlusion limit and battery charge.
inline UIAction info_screen_action(const HardwareState& hw) {
  return UIAction::screen(fit_label("Max. Rate", format_quantity(Decimal::whole(hw.max_rate), "ml/h")),
                          fit_label("Occlusion", format_quantity(Decimal::whole(hw.occlusion), "mmHg")),
                          fit_label("Battery Status", format_quantity(Decimal::whole(hw.battery_level.value()), "%")),
                          Light::GREEN, 1);
}

inline UIState render_info_screen(const HardwareState& hw) {
  return apply_action(UIState{}, info_screen_action(hw));
}

}  // namespace t34
