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

#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>

#include "t34/contracts.hpp"

namespace t34 {

/// Text of exactly N characters. Shorter input is right-padded with spaces;
/// longer input is rejected.
template <std::size_t N>
class FixedString {
 public:
  FixedString() : text_(N, ' ') {}
  explicit FixedString(std::string_view s) : text_(s) {
    T34_EXPECTS_MSG(s.size() <= N, "'" + std::string(s) + "' longer than " + std::to_string(N));
    text_.resize(N, ' ');
  }

  static constexpr std::size_t size() { return N; }
  const std::string& str() const { return text_; }

  /// Without the right padding.
  std::string_view trimmed() const {
    std::string_view v = text_;
    while (!v.empty() && v.back() == ' ') v.remove_suffix(1);
    return v;
  }

  bool operator==(const FixedString&) const = default;

 private:
  std::string text_;
};

/// Text of at most N characters; construction fails instead of truncating.
template <std::size_t N>
class BoundedString {
 public:
  static constexpr std::size_t capacity = N;

  BoundedString() = default;
  BoundedString(std::string_view s) : text_(s) {  // NOLINT(google-explicit-constructor)
    T34_EXPECTS_MSG(s.size() <= N,
                    "'" + std::string(s) + "' exceeds " + std::to_string(N) + " characters");
  }
  BoundedString(const char* s) : BoundedString(std::string_view(s)) {}  // NOLINT

  static bool fits(std::string_view s) { return s.size() <= N; }

  const std::string& str() const { return text_; }
  bool empty() const { return text_.empty(); }
  std::size_t size() const { return text_.size(); }

  bool operator==(const BoundedString&) const = default;
  bool operator==(std::string_view s) const { return text_ == s; }
  bool operator==(const char* s) const { return text_ == s; }

 private:
  std::string text_;
};

template <std::size_t N>
std::ostream& operator<<(std::ostream& os, const BoundedString<N>& s) {
  return os << s.str();
}

template <std::size_t N>
std::ostream& operator<<(std::ostream& os, const FixedString<N>& s) {
  return os << s.str();
}

}  // namespace t34
