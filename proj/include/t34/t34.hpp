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

// Everything except the network service, which pulls in httplib.

#pragma once

#include "t34/bounded_string.hpp"
#include "t34/contracts.hpp"
#include "t34/controller.hpp"
#include "t34/display.hpp"
#include "t34/events.hpp"
#include "t34/explorer.hpp"
#include "t34/fixed_point.hpp"
#include "t34/hardware.hpp"
#include "t34/safety_monitor.hpp"
#include "t34/sim_harness.hpp"
#include "t34/syringe_db.hpp"
