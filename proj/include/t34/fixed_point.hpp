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

// Decimal fixed-point quantities. Every displayed value on the device is a
// short decimal, so volumes and rates are carried as scaled integers and
// compared exactly.

#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "t34/contracts.hpp"

namespace t34 {

namespace detail {

constexpr int digits_of_scale(std::int64_t scale) {
  int d = 0;
  while (scale > 1) {
    scale /= 10;
    ++d;
  }
  return d;
}

constexpr bool is_power_of_ten(std::int64_t v) {
  while (v > 1 && v % 10 == 0) v /= 10;
  return v == 1;
}

}  // namespace detail

/// A signed decimal with `Scale` raw units per whole unit (Scale = 10^k).
template <std::int64_t Scale>
class Fixed {
  static_assert(Scale >= 1 && detail::is_power_of_ten(Scale));

 public:
  static constexpr std::int64_t scale = Scale;
  static constexpr int fraction_digits = detail::digits_of_scale(Scale);

  constexpr Fixed() = default;

  static constexpr Fixed from_raw(std::int64_t raw) { return Fixed(raw); }
  static constexpr Fixed whole(std::int64_t units) { return Fixed(units * Scale); }

  /// Parses "12", "0.5", "15.36". More fractional digits than the scale
  /// carries is an error, never a silent rounding.
  static Fixed parse(std::string_view text) {
    T34_EXPECTS_MSG(!text.empty(), "empty decimal");
    bool negative = false;
    if (text.front() == '-') {
      negative = true;
      text.remove_prefix(1);
    }
    std::int64_t whole_part = 0;
    std::int64_t frac_part = 0;
    int frac_digits = 0;
    bool seen_dot = false;
    bool seen_digit = false;
    for (char c : text) {
      if (c == '.') {
        T34_EXPECTS_MSG(!seen_dot, std::string(text));
        seen_dot = true;
        continue;
      }
      T34_EXPECTS_MSG(c >= '0' && c <= '9', std::string(text));
      seen_digit = true;
      if (!seen_dot) {
        T34_EXPECTS_MSG(whole_part < std::numeric_limits<std::int64_t>::max() / Scale / 10,
                        "decimal out of range");
        whole_part = whole_part * 10 + (c - '0');
      } else {
        ++frac_digits;
        if (c != '0') {
          T34_EXPECTS_MSG(frac_digits <= fraction_digits,
                          "too many fractional digits: " + std::string(text));
        }
        if (frac_digits <= fraction_digits) frac_part = frac_part * 10 + (c - '0');
      }
    }
    T34_EXPECTS_MSG(seen_digit, std::string(text));
    for (int i = std::min(frac_digits, fraction_digits); i < fraction_digits; ++i) frac_part *= 10;
    const std::int64_t raw = whole_part * Scale + frac_part;
    return Fixed(negative ? -raw : raw);
  }

  constexpr std::int64_t raw() const { return raw_; }
  constexpr std::int64_t whole_units() const { return raw_ / Scale; }
  constexpr bool is_whole() const { return raw_ % Scale == 0; }

  /// Shortest exact rendering: no trailing fractional zeros, no bare ".",
  /// a leading "0" below one.
  std::string to_string() const {
    std::int64_t mag = raw_ < 0 ? -raw_ : raw_;
    std::string out = raw_ < 0 ? "-" : "";
    out += std::to_string(mag / Scale);
    std::int64_t frac = mag % Scale;
    if (frac == 0) return out;
    std::string digits = std::to_string(frac);
    digits.insert(0, static_cast<std::size_t>(fraction_digits) - digits.size(), '0');
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    return out + "." + digits;
  }

  /// Converts to a finer or equal scale; exact.
  template <std::int64_t Other>
  constexpr Fixed<Other> widen() const {
    static_assert(Other >= Scale && Other % Scale == 0);
    return Fixed<Other>::from_raw(raw_ * (Other / Scale));
  }

  /// Converts to a coarser scale, rounding half away from zero.
  template <std::int64_t Other>
  constexpr Fixed<Other> round_to() const {
    static_assert(Other <= Scale && Scale % Other == 0);
    constexpr std::int64_t div = Scale / Other;
    const std::int64_t half = div / 2;
    const std::int64_t q = raw_ >= 0 ? (raw_ + half) / div : -((-raw_ + half) / div);
    return Fixed<Other>::from_raw(q);
  }

  /// Multiplies by num/den, truncating toward zero.
  constexpr Fixed scaled(std::int64_t num, std::int64_t den) const {
    return Fixed(raw_ * num / den);
  }

  constexpr Fixed operator+(Fixed o) const { return Fixed(raw_ + o.raw_); }
  constexpr Fixed operator-(Fixed o) const { return Fixed(raw_ - o.raw_); }
  constexpr Fixed operator-() const { return Fixed(-raw_); }
  constexpr Fixed& operator+=(Fixed o) {
    raw_ += o.raw_;
    return *this;
  }
  constexpr Fixed& operator-=(Fixed o) {
    raw_ -= o.raw_;
    return *this;
  }
  constexpr auto operator<=>(const Fixed&) const = default;

 private:
  constexpr explicit Fixed(std::int64_t raw) : raw_(raw) {}
  std::int64_t raw_ = 0;
};

/// Two-decimal display quantity (every value the LCD shows).
using Decimal = Fixed<100>;

/// Volume in ml. Carried at 1e-5 ml so percentage tolerances of two-decimal
/// volumes (e.g. 1.5 % of 3.00 ml) stay exact.
using Volume = Fixed<100'000>;

inline Volume ml(std::string_view text) { return Volume::parse(text); }

}  // namespace t34
