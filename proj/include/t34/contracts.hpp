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

// Runtime contract checks.
//
// `T34_EXPECTS` guards a function's inputs and throws `precondition_error`; a
// failure is a bug in the caller. `T34_ENSURES` guards results and throws
// `contract_violation`; a failure is a bug in the callee. Both stay enabled
// in release builds: the simulator is the verification target.

#pragma once

#include <stdexcept>
#include <string>

namespace t34 {

class precondition_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class contract_violation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

[[noreturn]] inline void fail_precondition(const char* cond, const char* func,
                                           const std::string& what) {
  throw precondition_error(std::string("precondition failed in ") + func +
                           ": " + cond + (what.empty() ? "" : " (" + what + ")"));
}

[[noreturn]] inline void fail_postcondition(const char* cond, const char* func,
                                            const std::string& what) {
  throw contract_violation(std::string("postcondition failed in ") + func +
                           ": " + cond + (what.empty() ? "" : " (" + what + ")"));
}

}  // namespace detail
}  // namespace t34

#define T34_EXPECTS_MSG(cond, msg)                                  \
  do {                                                              \
    if (!(cond)) ::t34::detail::fail_precondition(#cond, __func__, msg); \
  } while (false)

#define T34_ENSURES_MSG(cond, msg)                                   \
  do {                                                               \
    if (!(cond)) ::t34::detail::fail_postcondition(#cond, __func__, msg); \
  } while (false)

#define T34_EXPECTS(cond) T34_EXPECTS_MSG(cond, std::string())
#define T34_ENSURES(cond) T34_ENSURES_MSG(cond, std::string())
