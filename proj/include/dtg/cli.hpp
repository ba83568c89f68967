// Copyright 2026 The dtg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>

#include <json.hpp>

#include "dtg/config.hpp"
#include "dtg/fock_oracle.hpp"
#include "dtg/gate.hpp"
#include "dtg/optimizer.hpp"

namespace dtg {

/// Command-line entry point. Exit status: 0 success, 1 usage or I/O error,
/// 2 physics failure or non-convergence.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

nlohmann::json to_json(const GateResult& result);
nlohmann::json to_json(const OptimizedPulse& optimized, const PhysicalConfig& config);
nlohmann::json to_json(const OracleReport& report);

}  // namespace dtg
